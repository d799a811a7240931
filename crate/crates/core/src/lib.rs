//! Computable expansive measures for flows.
//!
//! The crate decides membership in reparameterized dynamic balls on sampled trajectories,
//! builds suspension flows with their Bowen–Walters metric and suspended measures, and runs
//! verdict procedures that test expansivity of empirical measures on concrete systems.
//!
//! Everything is generic over a [`Scalar`] (`f32` or `f64`); the aliases at the crate root fix
//! `f64`.

pub mod dynball;
pub mod error;
pub mod expansivity;
pub mod flows;
pub mod maps;
pub mod measures;
pub mod reparam;
pub mod scalar;
pub mod space;
pub mod suspension;
pub mod trajectory;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use space::{BasePoint, BaseSpace, MetricPoint, SpaceDescriptor, SymbolWindow};

pub type Point = space::MetricPoint<f64>;
pub type Space = space::SpaceDescriptor<f64>;
pub type Flow = flows::FlowSystem<f64>;
pub type Map = flows::Homeomorphism<f64>;
pub type Reparam = reparam::Reparameterization<f64>;
pub type Query = dynball::BallQuery<f64>;
pub type Suspension = suspension::SuspensionSpace<f64>;
pub type SuspendedPoint = suspension::SuspensionPoint<f64>;
pub type Measure = measures::EmpiricalMeasure<f64>;
pub type Report = expansivity::ExpansivityReport;

//! Points of the built-in metric spaces and their metrics.
//!
//! Circles have circumference 1 with the arc metric, tori carry the max of the two coordinate
//! arc metrics, and symbol sequences use `d(x, y) = 2^-min{|n| : x_n != y_n}`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::{arc_distance, wrap_unit, Scalar};
use crate::suspension::{SuspensionPoint, SuspensionSpace};

/// Largest supported window radius; a window of radius `W` occupies `2W + 1` bits of a `u64`.
pub const MAX_WINDOW_RADIUS: u8 = 31;

/// A two-sided binary word `x_{-W} .. x_W`.
///
/// The window is read as one period of a periodic sequence of period `2W + 1`, so the left
/// shift is a rotation and is exactly invertible. For every disagreement between two such
/// sequences the nearest offending index already lies inside `[-W, W]`, hence the window
/// metric is the full-shift metric of the periodic sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SymbolWindow {
    bits: u64,
    radius: u8,
}

impl SymbolWindow {
    pub fn new(radius: u8, bits: u64) -> Result<Self> {
        if radius > MAX_WINDOW_RADIUS {
            return invalid(format!("window radius {radius} exceeds {MAX_WINDOW_RADIUS}"));
        }
        let w = Self { bits: 0, radius };
        if bits & !w.mask() != 0 {
            return invalid("window bits outside 2W+1 positions");
        }
        Ok(Self { bits, radius })
    }

    pub fn zeros(radius: u8) -> Self {
        Self::new(radius, 0).expect("valid radius")
    }

    pub fn ones(radius: u8) -> Self {
        let w = Self::zeros(radius);
        Self { bits: w.mask(), ..w }
    }

    /// Builds a window from `f(n)` for `n` in `-W..=W`.
    pub fn from_fn(radius: u8, mut f: impl FnMut(i32) -> bool) -> Result<Self> {
        let mut w = Self::new(radius, 0)?;
        let r = i32::from(radius);
        for n in -r..=r {
            if f(n) {
                w.bits |= 1 << (n + r);
            }
        }
        Ok(w)
    }

    pub fn radius(&self) -> u8 {
        self.radius
    }

    pub fn len(&self) -> u32 {
        2 * u32::from(self.radius) + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    fn mask(&self) -> u64 {
        (1u64 << self.len()) - 1
    }

    /// Symbol at index `n`, `|n| <= W`.
    pub fn get(&self, n: i32) -> bool {
        let r = i32::from(self.radius);
        assert!(n.abs() <= r, "index {n} outside window radius {r}");
        (self.bits >> (n + r)) & 1 == 1
    }

    /// Same window with index `n` flipped.
    pub fn flipped(&self, n: i32) -> Self {
        let r = i32::from(self.radius);
        assert!(n.abs() <= r, "index {n} outside window radius {r}");
        Self { bits: self.bits ^ (1 << (n + r)), ..*self }
    }

    /// `sigma^k`, where `(sigma x)_n = x_{n+1}`; negative `k` applies the inverse.
    pub fn shifted(&self, k: i64) -> Self {
        let len = i64::from(self.len());
        let k = k.rem_euclid(len) as u32;
        if k == 0 {
            return *self;
        }
        let len = self.len();
        let bits = ((self.bits >> k) | (self.bits << (len - k))) & self.mask();
        Self { bits, ..*self }
    }

    /// Minimal `p >= 1` with `sigma^p x = x`.
    pub fn minimal_period(&self) -> u32 {
        (1..=self.len()).find(|&p| self.shifted(i64::from(p)) == *self).unwrap_or(self.len())
    }

    /// Smallest `|n|` with `x_n != y_n`, or `None` when equal.
    pub fn first_disagreement(&self, other: &Self) -> Option<u32> {
        debug_assert_eq!(self.radius, other.radius);
        let z = self.bits ^ other.bits;
        if z == 0 {
            return None;
        }
        let r = u32::from(self.radius);
        let upper = z >> r;
        let lower = z & ((1u64 << r) - 1);
        let up = if upper != 0 { upper.trailing_zeros() } else { u32::MAX };
        // highest set bit k < r sits at index k - r
        let down = if lower != 0 { r - (63 - lower.leading_zeros()) } else { u32::MAX };
        Some(up.min(down))
    }

    pub fn distance<S: Scalar>(&self, other: &Self) -> S {
        match self.first_disagreement(other) {
            None => S::zero(),
            Some(k) => S::lit(2.0).powi(-(k as i32)),
        }
    }
}

/// Points of a base space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasePoint<S> {
    Circle(S),
    Torus([S; 2]),
    Word(SymbolWindow),
}

impl<S: Scalar> BasePoint<S> {
    pub fn circle(x: S) -> Self {
        BasePoint::Circle(wrap_unit(x))
    }

    pub fn torus(x: S, y: S) -> Self {
        BasePoint::Torus([wrap_unit(x), wrap_unit(y)])
    }

    pub fn kind(&self) -> BaseSpace {
        match self {
            BasePoint::Circle(_) => BaseSpace::Circle,
            BasePoint::Torus(_) => BaseSpace::Torus,
            BasePoint::Word(w) => BaseSpace::Shift { radius: w.radius() },
        }
    }

    /// Flat coordinate list; symbols become 0/1 entries ordered from `x_{-W}` to `x_W`.
    pub fn coords(&self) -> Vec<S> {
        match self {
            BasePoint::Circle(x) => vec![*x],
            BasePoint::Torus(p) => p.to_vec(),
            BasePoint::Word(w) => {
                let r = i32::from(w.radius());
                (-r..=r).map(|n| if w.get(n) { S::one() } else { S::zero() }).collect()
            }
        }
    }
}

/// The base spaces a point may live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseSpace {
    Circle,
    Torus,
    Shift { radius: u8 },
}

impl BaseSpace {
    pub fn dimension(&self) -> usize {
        match self {
            BaseSpace::Circle => 1,
            BaseSpace::Torus => 2,
            BaseSpace::Shift { radius } => 2 * usize::from(*radius) + 1,
        }
    }

    /// Smallest distance scale the representation resolves.
    pub fn resolution<S: Scalar>(&self) -> S {
        match self {
            BaseSpace::Shift { radius } => S::lit(2.0).powi(-i32::from(*radius)),
            _ => S::zero(),
        }
    }

    pub fn diameter<S: Scalar>(&self) -> S {
        match self {
            BaseSpace::Shift { .. } => S::one(),
            _ => S::lit(0.5),
        }
    }

    pub fn contains<S: Scalar>(&self, p: &BasePoint<S>) -> bool {
        p.kind() == *self
    }

    pub fn base_distance<S: Scalar>(&self, a: &BasePoint<S>, b: &BasePoint<S>) -> Result<S> {
        match (self, a, b) {
            (BaseSpace::Circle, BasePoint::Circle(x), BasePoint::Circle(y)) => Ok(arc_distance(*x, *y)),
            (BaseSpace::Torus, BasePoint::Torus(p), BasePoint::Torus(q)) => {
                Ok(arc_distance(p[0], q[0]).max(arc_distance(p[1], q[1])))
            }
            (BaseSpace::Shift { radius }, BasePoint::Word(x), BasePoint::Word(y))
                if x.radius() == *radius && y.radius() == *radius =>
            {
                Ok(x.distance(y))
            }
            _ => invalid(format!("points {a:?} and {b:?} do not both belong to {self:?}")),
        }
    }

    pub fn from_coords<S: Scalar>(&self, coords: &[S]) -> Result<BasePoint<S>> {
        if coords.len() != self.dimension() {
            return invalid(format!("expected {} coordinates, got {}", self.dimension(), coords.len()));
        }
        match self {
            BaseSpace::Circle => Ok(BasePoint::circle(coords[0])),
            BaseSpace::Torus => Ok(BasePoint::torus(coords[0], coords[1])),
            BaseSpace::Shift { radius } => {
                let r = i32::from(*radius);
                for c in coords {
                    if *c != S::zero() && *c != S::one() {
                        return invalid(format!("symbol coordinate {c} not in {{0,1}}"));
                    }
                }
                SymbolWindow::from_fn(*radius, |n| coords[(n + r) as usize] == S::one()).map(BasePoint::Word)
            }
        }
    }
}

/// Any point handled by the toolkit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricPoint<S> {
    Base(BasePoint<S>),
    Suspended(SuspensionPoint<S>),
}

impl<S: Scalar> MetricPoint<S> {
    pub fn circle(x: S) -> Self {
        MetricPoint::Base(BasePoint::circle(x))
    }

    pub fn torus(x: S, y: S) -> Self {
        MetricPoint::Base(BasePoint::torus(x, y))
    }

    pub fn word(w: SymbolWindow) -> Self {
        MetricPoint::Base(BasePoint::Word(w))
    }

    pub fn as_base(&self) -> Option<&BasePoint<S>> {
        match self {
            MetricPoint::Base(b) => Some(b),
            MetricPoint::Suspended(_) => None,
        }
    }

    pub fn as_suspended(&self) -> Option<&SuspensionPoint<S>> {
        match self {
            MetricPoint::Suspended(p) => Some(p),
            MetricPoint::Base(_) => None,
        }
    }

    pub fn coords(&self) -> Vec<S> {
        match self {
            MetricPoint::Base(b) => b.coords(),
            MetricPoint::Suspended(p) => {
                let mut c = p.base.coords();
                c.push(p.fiber);
                c
            }
        }
    }
}

/// The space a point, flow or measure lives in.
#[derive(Debug, Clone, PartialEq)]
pub enum SpaceDescriptor<S> {
    Base(BaseSpace),
    Suspension(SuspensionSpace<S>),
}

impl<S: Scalar> SpaceDescriptor<S> {
    pub fn circle() -> Self {
        SpaceDescriptor::Base(BaseSpace::Circle)
    }

    pub fn torus() -> Self {
        SpaceDescriptor::Base(BaseSpace::Torus)
    }

    pub fn shift(radius: u8) -> Self {
        SpaceDescriptor::Base(BaseSpace::Shift { radius })
    }

    pub fn resolution(&self) -> S {
        match self {
            SpaceDescriptor::Base(b) => b.resolution(),
            SpaceDescriptor::Suspension(s) => s.base_space().resolution(),
        }
    }

    pub fn diameter(&self) -> S {
        match self {
            SpaceDescriptor::Base(b) => b.diameter(),
            SpaceDescriptor::Suspension(_) => S::one(),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            SpaceDescriptor::Base(b) => b.dimension(),
            SpaceDescriptor::Suspension(s) => s.base_space().dimension() + 1,
        }
    }

    pub fn contains(&self, p: &MetricPoint<S>) -> bool {
        match (self, p) {
            (SpaceDescriptor::Base(b), MetricPoint::Base(q)) => b.contains(q),
            (SpaceDescriptor::Suspension(s), MetricPoint::Suspended(q)) => s.base_space().contains(&q.base),
            _ => false,
        }
    }

    pub fn check(&self, p: &MetricPoint<S>) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            invalid(format!("point {p:?} is not in space {}", self.name()))
        }
    }

    pub fn name(&self) -> String {
        match self {
            SpaceDescriptor::Base(BaseSpace::Circle) => "circle".into(),
            SpaceDescriptor::Base(BaseSpace::Torus) => "torus".into(),
            SpaceDescriptor::Base(BaseSpace::Shift { radius }) => format!("shift(W={radius})"),
            SpaceDescriptor::Suspension(s) => format!("suspension over {}", s.base_map().name()),
        }
    }

    pub fn from_coords(&self, coords: &[S]) -> Result<MetricPoint<S>> {
        match self {
            SpaceDescriptor::Base(b) => b.from_coords(coords).map(MetricPoint::Base),
            SpaceDescriptor::Suspension(s) => {
                let Some((fiber, base)) = coords.split_last() else {
                    return invalid("empty coordinate list");
                };
                let base = s.base_space().from_coords(base)?;
                Ok(MetricPoint::Suspended(s.canonicalize(base, *fiber)))
            }
        }
    }
}

/// The ambient metric of `space`.
pub fn distance<S: Scalar>(space: &SpaceDescriptor<S>, a: &MetricPoint<S>, b: &MetricPoint<S>) -> Result<S> {
    match (space, a, b) {
        (SpaceDescriptor::Base(s), MetricPoint::Base(x), MetricPoint::Base(y)) => s.base_distance(x, y),
        (SpaceDescriptor::Suspension(s), MetricPoint::Suspended(p), MetricPoint::Suspended(q)) => s.bw_distance(p, q),
        _ => invalid(format!("points {a:?} and {b:?} do not both belong to {}", space.name())),
    }
}

//! Built-in systems.

use expansive_lab::flows::FlowSystem;
use expansive_lab::maps::{golden_angle, BaseMap};
use expansive_lab::suspension::{Height, SuspensionSpace};
use expansive_lab::Flow;

use crate::config::SystemSpec;
use crate::ConfigError;

pub struct SystemEntry {
    pub id: &'static str,
    pub summary: &'static str,
    pub parameters: &'static str,
}

pub const REGISTRY: [SystemEntry; 4] = [
    SystemEntry {
        id: "circle_rotation_flow",
        summary: "rotation flow on the circle; every orbit periodic (non-expansive foil)",
        parameters: "omega=1.0",
    },
    SystemEntry {
        id: "shift_suspension",
        summary: "suspension of the two-sided binary shift (expansive)",
        parameters: "radius=20, height=1.0",
    },
    SystemEntry {
        id: "toral_suspension",
        summary: "suspension of a hyperbolic toral automorphism (expansive)",
        parameters: "matrix=[[2,1],[1,1]], height=1.0",
    },
    SystemEntry {
        id: "irrational_rotation_suspension",
        summary: "suspension of an irrational circle rotation; recurrent, non-expansive",
        parameters: "angle=golden, height=1.0",
    },
];

pub fn list_systems() -> String {
    let mut out = format!("{:<32} {:<36} {}\n", "id", "parameters", "description");
    for e in &REGISTRY {
        out.push_str(&format!("{:<32} {:<36} {}\n", e.id, e.parameters, e.summary));
    }
    out
}

/// The flow, and its base map when it is a suspension.
pub fn build(spec: &SystemSpec) -> Result<(Flow, Option<BaseMap<f64>>), ConfigError> {
    let suspend = |map: BaseMap<f64>, height: f64| -> Result<(Flow, Option<BaseMap<f64>>), ConfigError> {
        let space = SuspensionSpace::new(map.clone(), Height::constant(height))
            .map_err(|e| ConfigError::new("system.height", e.to_string()))?;
        Ok((FlowSystem::suspension(space), Some(map)))
    };
    match spec {
        SystemSpec::CircleRotationFlow { omega } => {
            if *omega == 0.0 || !omega.is_finite() {
                return Err(ConfigError::new("system.omega", "must be finite and nonzero"));
            }
            Ok((FlowSystem::circle_rotation(*omega), None))
        }
        SystemSpec::ShiftSuspension { radius, height } => {
            let map = BaseMap::from_kind(expansive_lab::maps::BaseMapKind::BinaryShift { radius: *radius })
                .map_err(|e| ConfigError::new("system.radius", e.to_string()))?;
            suspend(map, *height)
        }
        SystemSpec::ToralSuspension { matrix, height } => {
            let map = BaseMap::toral(*matrix).map_err(|e| ConfigError::new("system.matrix", e.to_string()))?;
            suspend(map, *height)
        }
        SystemSpec::IrrationalRotationSuspension { angle, height } => {
            let angle = angle.unwrap_or_else(golden_angle);
            suspend(BaseMap::CircleRotation { angle, irrational: true }, *height)
        }
    }
}

//! Cross-checks the flow-ball decision procedure against exhaustive path enumeration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use expansive_lab::dynball::{flow_ball_member, flow_ball_member_bruteforce, BallQuery, BRUTE_FORCE_MAX_HALF};
use expansive_lab::measures::{lebesgue, near_points, suspend_measure};
use expansive_lab::{Flow, Measure};

use crate::config::SystemSpec;
use crate::{registry, RunError};

#[derive(Debug, Clone, Default, Serialize)]
pub struct OracleSummary {
    pub instances: usize,
    pub agreements: usize,
    pub accepted: usize,
    pub disagreements: Vec<String>,
}

impl OracleSummary {
    pub fn all_agree(&self) -> bool {
        self.disagreements.is_empty() && self.agreements == self.instances
    }
}

fn systems() -> Vec<SystemSpec> {
    vec![
        SystemSpec::CircleRotationFlow { omega: 1.0 },
        SystemSpec::ShiftSuspension { radius: 20, height: 1.0 },
        SystemSpec::ToralSuspension { matrix: [[2, 1], [1, 1]], height: 1.0 },
        SystemSpec::IrrationalRotationSuspension { angle: None, height: 1.0 },
    ]
}

fn sample_measure(flow: &Flow, seed: u64) -> Result<Measure, RunError> {
    let space = flow.space();
    Ok(match flow.suspension_space() {
        Some(s) => suspend_measure(&lebesgue(s.base_space(), 16, seed)?, s, 4)?,
        None => match space {
            expansive_lab::SpaceDescriptor::Base(b) => lebesgue(b, 64, seed)?,
            expansive_lab::SpaceDescriptor::Suspension(_) => unreachable!("suspension flows expose their space"),
        },
    })
}

/// Runs `instances` seeded random membership queries; each uses at most
/// [`BRUTE_FORCE_MAX_HALF`] grid steps per half-axis so enumeration stays exact.
pub fn oracle_check(instances: usize, seed: u64) -> Result<OracleSummary, RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let systems = systems()
        .iter()
        .map(|spec| {
            let (flow, _) = registry::build(spec)?;
            let mu = sample_measure(&flow, seed)?;
            Ok((flow, mu))
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let mut summary = OracleSummary { instances, ..Default::default() };
    for k in 0..instances {
        let (flow, mu) = &systems[k % systems.len()];
        let atoms = mu.atoms();
        let x = atoms[rng.gen_range(0..atoms.len())].point;
        let delta = rng.gen_range(0.02..0.3);
        let half = rng.gen_range(1..=BRUTE_FORCE_MAX_HALF);
        let step = [0.0625, 0.125, 0.25][rng.gen_range(0..3)];
        let q = BallQuery::new(delta, step * half as f64, step)?;
        let y = near_points(&flow.space(), &x, 1, 1.5 * delta, rng.gen())[0];
        let fast = flow_ball_member(flow, &x, &y, &q)?;
        let slow = flow_ball_member_bruteforce(flow, &x, &y, &q)?;
        if fast == slow {
            summary.agreements += 1;
            summary.accepted += usize::from(fast);
        } else {
            summary.disagreements.push(format!(
                "instance {k} on {}: delta {delta}, horizon {}, step {step}: dp {fast}, enumeration {slow}",
                flow.name(),
                q.horizon
            ));
        }
    }
    Ok(summary)
}

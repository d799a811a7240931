use crate::error::{invalid, Result};
use crate::flows::FlowSystem;
use crate::scalar::Scalar;
use crate::space::MetricPoint;

/// Samples of `t ↦ φ_t(x)` on the uniform grid `t_min + i·step`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub base_point: MetricPoint<S>,
    pub t_min: S,
    pub t_max: S,
    pub step: S,
    pub samples: Vec<MetricPoint<S>>,
}

/// Number of grid points of `[t_min, t_max]` at spacing `step`.
pub fn grid_len<S: Scalar>(t_min: S, t_max: S, step: S) -> usize {
    ((t_max - t_min) / step).round().to_usize().expect("finite grid") + 1
}

impl<S: Scalar> Trajectory<S> {
    pub fn sample(flow: &FlowSystem<S>, x: &MetricPoint<S>, t_min: S, t_max: S, step: S) -> Result<Self> {
        if !(step > S::zero()) || !(t_max >= t_min) {
            return invalid("trajectory needs step > 0 and t_max >= t_min");
        }
        let n = grid_len(t_min, t_max, step);
        let samples = (0..n)
            .map(|i| flow.evaluate(t_min + S::from_count(i) * step, x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { base_point: *x, t_min, t_max, step, samples })
    }

    /// Symmetric trajectory over `[-horizon, horizon]`.
    pub fn symmetric(flow: &FlowSystem<S>, x: &MetricPoint<S>, horizon: S, step: S) -> Result<Self> {
        Self::sample(flow, x, -horizon, horizon, step)
    }

    pub fn time(&self, i: usize) -> S {
        self.t_min + S::from_count(i) * self.step
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_count_and_values() {
        let f = FlowSystem::circle_rotation(1.0);
        let x = MetricPoint::circle(0.2);
        let tr = Trajectory::symmetric(&f, &x, 1.0, 0.25).unwrap();
        assert_eq!(tr.len(), 9);
        for (i, p) in tr.samples.iter().enumerate() {
            let want = f.evaluate(tr.time(i), &x).unwrap();
            assert!(f.distance(p, &want).unwrap() < 1e-15);
        }
        assert!(Trajectory::sample(&f, &x, 0.0, 1.0, 0.0).is_err());
    }
}

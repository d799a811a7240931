//! Monotone piecewise-linear reparameterizations `h` with `h(0) = 0`.

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Knot list `(t, h(t))`, strictly increasing in both coordinates and containing `(0, 0)`.
///
/// Between knots `h` interpolates linearly; outside the knot span it continues with the end
/// slopes. A single-knot map is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Reparameterization<S> {
    knots: Vec<(S, S)>,
}

impl<S: Scalar> Reparameterization<S> {
    pub fn new(knots: Vec<(S, S)>) -> Result<Self> {
        if knots.is_empty() {
            return invalid("reparameterization needs at least one knot");
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0 && w[1].1 > w[0].1) {
                return invalid(format!("knots {:?} -> {:?} are not strictly increasing", w[0], w[1]));
            }
        }
        if !knots.iter().any(|&(t, h)| t == S::zero() && h == S::zero()) {
            return invalid("reparameterization must contain the knot (0, 0)");
        }
        if knots.iter().any(|(t, h)| !t.is_finite() || !h.is_finite()) {
            return invalid("non-finite knot");
        }
        Ok(Self { knots })
    }

    pub fn identity() -> Self {
        Self { knots: vec![(S::zero(), S::zero())] }
    }

    /// Identity sampled at `-span, 0, span`.
    pub fn identity_on(span: S) -> Self {
        Self { knots: vec![(-span, -span), (S::zero(), S::zero()), (span, span)] }
    }

    pub fn knots(&self) -> &[(S, S)] {
        &self.knots
    }

    pub fn span(&self) -> (S, S) {
        (self.knots[0].0, self.knots[self.knots.len() - 1].0)
    }

    pub fn eval(&self, t: S) -> S {
        interpolate(&self.knots, t, |k| k.0, |k| k.1)
    }

    /// Swaps coordinates of every knot.
    pub fn inverse(&self) -> Self {
        Self { knots: self.knots.iter().map(|&(t, h)| (h, t)).collect() }
    }

    /// Value-space inverse without materialising [`Self::inverse`].
    pub fn eval_inverse(&self, u: S) -> S {
        interpolate(&self.knots, u, |k| k.1, |k| k.0)
    }

    /// `g ∘ h`: knots of `h` refined with the preimages under `h` of the knots of `g`.
    pub fn compose(g: &Self, h: &Self) -> Self {
        let mut ts: Vec<S> = h.knots.iter().map(|k| k.0).collect();
        ts.extend(g.knots.iter().map(|k| h.eval_inverse(k.0)));
        ts.sort_by(|a, b| a.partial_cmp(b).expect("finite knots"));
        let mut knots: Vec<(S, S)> = Vec::with_capacity(ts.len());
        for t in ts {
            let v = if t == S::zero() { S::zero() } else { g.eval(h.eval(t)) };
            match knots.last() {
                Some(&(pt, pv)) if !(t > pt && v > pv) => continue,
                _ => knots.push((t, v)),
            }
        }
        Self { knots }
    }
}

fn interpolate<S: Scalar, K>(knots: &[K], x: S, key: impl Fn(&K) -> S, val: impl Fn(&K) -> S) -> S {
    let n = knots.len();
    if n == 1 {
        return val(&knots[0]) + (x - key(&knots[0]));
    }
    // segment index i with key(i) <= x < key(i+1), clamped to the end segments
    let pos = knots.partition_point(|k| key(k) <= x);
    let i = pos.clamp(1, n - 1) - 1;
    let (x0, x1) = (key(&knots[i]), key(&knots[i + 1]));
    let (y0, y1) = (val(&knots[i]), val(&knots[i + 1]));
    if x == x0 {
        return y0;
    }
    if x == x1 {
        return y1;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Periodic reparameterization aligning a point of period `a` with one of period `b`.
///
/// Knots are `t = p·a + q·alpha`, `u = p·b + q·alpha` for `p ∈ ℤ` and
/// `q ∈ {0, .., m-1}` with `m = floor((a - alpha/2)/alpha) + 1`, kept while `|t| <= span`.
pub fn build_periodic_reparam<S: Scalar>(a: S, b: S, alpha: S, span: S) -> Result<Reparameterization<S>> {
    if !(a > S::zero() && b > S::zero() && alpha > S::zero()) {
        return invalid("periods and step must be positive");
    }
    if alpha >= a.min(b) {
        return invalid(format!("alpha {alpha} must be below min(a, b) = {}", a.min(b)));
    }
    if !(span >= S::zero()) {
        return invalid("span must be nonnegative");
    }
    let half = S::lit(0.5);
    let m = ((a - alpha * half) / alpha).floor().to_i64().expect("finite block length") + 1;
    let last_offset = S::lit((m - 1) as f64) * alpha;
    if last_offset >= b {
        return invalid(format!("block offset {last_offset} reaches period b = {b}; knots would not increase"));
    }
    let p_max = (span / a).floor().to_i64().expect("finite span") + 1;
    let mut knots = Vec::new();
    for p in -p_max..=p_max {
        let pf = S::lit(p as f64);
        for q in 0..m {
            let qf = S::lit(q as f64);
            let t = pf * a + qf * alpha;
            if t.abs() <= span {
                knots.push((t, pf * b + qf * alpha));
            }
        }
    }
    Reparameterization::new(knots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(knots: &[(f64, f64)]) -> Reparameterization<f64> {
        Reparameterization::new(knots.to_vec()).unwrap()
    }

    #[test]
    fn eval_interpolates_and_extrapolates() {
        let id = r(&[(-1.0, -1.0), (0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(id.eval(0.5), 0.5);
        let h = r(&[(0.0, 0.0), (1.0, 2.0)]);
        assert_eq!(h.eval(0.5), 1.0);
        assert_eq!(h.eval(3.0), 6.0);
        assert_eq!(h.eval(-1.0), -2.0);
        assert_eq!(h.eval(0.0), 0.0);
    }

    #[test]
    fn invalid_knots_are_rejected() {
        assert!(Reparameterization::new(vec![(0.0, 0.0), (1.0, 0.0)]).is_err());
        assert!(Reparameterization::new(vec![(0.5, 0.5), (1.0, 1.0)]).is_err());
        assert!(Reparameterization::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn inverse_swaps_knots() {
        let h = r(&[(0.0, 0.0), (1.0, 2.0)]);
        assert_eq!(h.inverse().knots(), &[(0.0, 0.0), (2.0, 1.0)]);
        let id = Reparameterization::<f64>::identity_on(1.0);
        assert_eq!(id.inverse(), id);
    }

    #[test]
    fn compose_examples() {
        let g = r(&[(0.0, 0.0), (1.0, 2.0)]);
        let h = r(&[(0.0, 0.0), (1.0, 3.0)]);
        assert_eq!(Reparameterization::compose(&g, &h).eval(1.0), 6.0);
        let id = Reparameterization::identity_on(2.0);
        let c = Reparameterization::compose(&id, &h);
        for t in [-1.0, 0.0, 0.25, 1.0, 2.0] {
            assert!((c.eval(t) - h.eval(t)).abs() < 1e-12);
        }
        let hh = r(&[(-2.0, -1.0), (0.0, 0.0), (1.0, 3.0), (2.0, 3.5)]);
        let back = Reparameterization::compose(&hh, &hh.inverse());
        for &(t, v) in back.knots() {
            assert!((t - v).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_reparam_examples() {
        let id = build_periodic_reparam(1.0, 1.0, 0.25, 2.0).unwrap();
        for &(t, u) in id.knots() {
            assert_eq!(t, u);
        }
        let h = build_periodic_reparam(1.0_f64, 1.1, 0.25, 2.0).unwrap();
        assert!((h.eval(1.0) - 1.1).abs() < 1e-12);
        assert!((h.eval(2.0) - 2.2).abs() < 1e-12);
        assert_eq!(h.eval(0.0), 0.0);
        // m = floor(0.875 / 0.25) + 1 = 4: knot t_{pm+q} = p + q/4 maps to 1.1 p + q/4
        assert!((h.eval(1.5) - 1.6).abs() < 1e-12);
        assert!((h.eval(-0.75) - (-1.1 + 0.25)).abs() < 1e-12);
        assert!(h.knots().contains(&(0.0, 0.0)));
    }

    #[test]
    fn periodic_reparam_guards() {
        assert!(build_periodic_reparam(1.0, 1.0, 1.0, 2.0).is_err());
        assert!(build_periodic_reparam(1.0, 0.5, 0.6, 2.0).is_err());
        assert!(build_periodic_reparam(2.0, 1.0, 0.5, 4.0).is_err());
    }

    fn monotone() -> impl Strategy<Value = Reparameterization<f64>> {
        (prop::collection::vec((0.01f64..1.0, 0.01f64..1.0), 0..6), prop::collection::vec((0.01f64..1.0, 0.01f64..1.0), 0..6))
            .prop_map(|(neg, pos)| {
                let mut knots = vec![(0.0, 0.0)];
                let (mut t, mut u) = (0.0, 0.0);
                for (dt, du) in pos {
                    t += dt;
                    u += du;
                    knots.push((t, u));
                }
                let (mut t, mut u) = (0.0, 0.0);
                for (dt, du) in neg {
                    t -= dt;
                    u -= du;
                    knots.insert(0, (t, u));
                }
                Reparameterization::new(knots).unwrap()
            })
    }

    proptest! {
        #[test]
        fn inverse_round_trips_at_knots(h in monotone()) {
            let inv = h.inverse();
            for &(t, _) in h.knots() {
                prop_assert_eq!(inv.eval(h.eval(t)), t);
            }
            prop_assert_eq!(inv.inverse(), h);
        }

        #[test]
        fn composition_is_monotone_and_anchored(g in monotone(), h in monotone()) {
            let c = Reparameterization::compose(&g, &h);
            prop_assert!(Reparameterization::new(c.knots().to_vec()).is_ok());
            prop_assert_eq!(c.eval(0.0), 0.0);
            for t in [-1.5, -0.3, 0.2, 0.9, 2.0] {
                prop_assert!((c.eval(t) - g.eval(h.eval(t))).abs() < 1e-9);
            }
        }
    }
}

//! Suspension spaces `Y^{τ,f}`, their flow, the Bowen–Walters metric and the equivalence `λ`
//! onto the unit-height model.
//!
//! Points are kept in canonical form `0 <= fiber < τ(base)`; the identification
//! `(x, τ(x)) ~ (f(x), 0)` is applied by [`SuspensionSpace::canonicalize`].

use serde::{Deserialize, Serialize};

use crate::dynball::{flow_ball_member, map_ball_member, BallQuery, InclusionReport, MetricOverride};
use crate::error::{invalid, Result};
use crate::flows::{FlowSystem, Homeomorphism};
use crate::maps::BaseMap;
use crate::scalar::Scalar;
use crate::space::{BasePoint, BaseSpace};

/// Roof function `τ: X → (0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Height<S> {
    Constant { value: S },
    /// Depends on the symbol `x_0` of a shift window.
    Symbol { zero: S, one: S },
    /// `mean + amplitude·cos(2π x)` in the first coordinate of a circle or torus point.
    Cosine { mean: S, amplitude: S },
}

impl<S: Scalar> Height<S> {
    pub fn constant(value: S) -> Self {
        Height::Constant { value }
    }

    pub fn eval(&self, x: &BasePoint<S>) -> S {
        match (self, x) {
            (Height::Constant { value }, _) => *value,
            (Height::Symbol { zero, one }, BasePoint::Word(w)) => {
                if w.get(0) {
                    *one
                } else {
                    *zero
                }
            }
            (Height::Cosine { mean, amplitude }, BasePoint::Circle(c) | BasePoint::Torus([c, _])) => {
                *mean + *amplitude * (S::TAU() * *c).cos()
            }
            _ => panic!("height {self:?} is not defined on {x:?}"),
        }
    }

    pub fn min(&self) -> S {
        match self {
            Height::Constant { value } => *value,
            Height::Symbol { zero, one } => zero.min(*one),
            Height::Cosine { mean, amplitude } => *mean - amplitude.abs(),
        }
    }

    pub fn max(&self) -> S {
        match self {
            Height::Constant { value } => *value,
            Height::Symbol { zero, one } => zero.max(*one),
            Height::Cosine { mean, amplitude } => *mean + amplitude.abs(),
        }
    }

    fn fits(&self, space: BaseSpace) -> bool {
        match self {
            Height::Constant { .. } => true,
            Height::Symbol { .. } => matches!(space, BaseSpace::Shift { .. }),
            Height::Cosine { .. } => matches!(space, BaseSpace::Circle | BaseSpace::Torus),
        }
    }
}

/// A point `(x, s)` of `Y^{τ,f}` in canonical form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuspensionPoint<S> {
    pub base: BasePoint<S>,
    pub fiber: S,
}

/// The mapping torus of `base_map` with roof `height`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuspensionSpace<S> {
    base_map: BaseMap<S>,
    height: Height<S>,
}

impl<S: Scalar> SuspensionSpace<S> {
    pub fn new(base_map: BaseMap<S>, height: Height<S>) -> Result<Self> {
        if !(height.min() > S::zero()) || !height.max().is_finite() {
            return invalid(format!("height {height:?} must be bounded away from zero"));
        }
        if !height.fits(base_map.space()) {
            return invalid(format!("height {height:?} is not defined on {:?}", base_map.space()));
        }
        Ok(Self { base_map, height })
    }

    pub fn unit(base_map: BaseMap<S>) -> Self {
        Self { base_map, height: Height::constant(S::one()) }
    }

    pub fn base_map(&self) -> &BaseMap<S> {
        &self.base_map
    }

    pub fn height(&self) -> &Height<S> {
        &self.height
    }

    pub fn base_space(&self) -> BaseSpace {
        self.base_map.space()
    }

    pub fn is_unit_height(&self) -> bool {
        self.height == Height::constant(S::one())
    }

    /// The model `Y^{1,f}` over the same base map.
    pub fn unit_model(&self) -> Self {
        Self::unit(self.base_map.clone())
    }

    /// Applies `(x, t) ↦ (f(x), t - τ(x))` or its inverse until `0 <= t < τ(x)`.
    pub fn canonicalize(&self, base: BasePoint<S>, t: S) -> SuspensionPoint<S> {
        assert!(t.is_finite(), "fiber coordinate must be finite");
        let (mut x, mut t) = (base, t);
        if let Height::Constant { value } = self.height {
            let n = (t / value).floor();
            if n != S::zero() {
                x = self.base_map.iterate(&x, n.to_i64().expect("finite iterate count"));
                t = t - n * value;
            }
        }
        loop {
            let h = self.height.eval(&x);
            if t >= h {
                t = t - h;
                x = self.base_map.forward(&x);
            } else if t < S::zero() {
                x = self.base_map.inverse(&x);
                t = t + self.height.eval(&x);
            } else {
                return SuspensionPoint { base: x, fiber: t };
            }
        }
    }

    pub fn point(&self, base: BasePoint<S>, t: S) -> SuspensionPoint<S> {
        self.canonicalize(base, t)
    }

    /// `φ^{τ,f}_t(x, s) = (x, s + t)`, canonicalized.
    pub fn flow(&self, p: &SuspensionPoint<S>, t: S) -> SuspensionPoint<S> {
        self.canonicalize(p.base, p.fiber + t)
    }

    /// `λ(x, t) = (x, t / τ(x))` into the unit-height model.
    pub fn lambda(&self, p: &SuspensionPoint<S>) -> SuspensionPoint<S> {
        if self.is_unit_height() {
            return *p;
        }
        let s = p.fiber / self.height.eval(&p.base);
        if s >= S::one() {
            SuspensionPoint { base: self.base_map.forward(&p.base), fiber: S::zero() }
        } else {
            SuspensionPoint { base: p.base, fiber: s }
        }
    }

    /// `λ⁻¹(x, s) = (x, s·τ(x))` from the unit-height model.
    pub fn lambda_inverse(&self, p: &SuspensionPoint<S>) -> SuspensionPoint<S> {
        if self.is_unit_height() {
            return *p;
        }
        self.canonicalize(p.base, p.fiber * self.height.eval(&p.base))
    }

    /// Bowen–Walters distance; general roofs are conjugated through `λ` to the unit model.
    pub fn bw_distance(&self, p: &SuspensionPoint<S>, q: &SuspensionPoint<S>) -> Result<S> {
        self.base_map.check(&p.base)?;
        self.base_map.check(&q.base)?;
        let (p, q) = (self.lambda(p), self.lambda(q));
        Ok(self.unit_bw(&p, &q))
    }

    /// Shortest chain of horizontal and vertical segments crossing at most one identification,
    /// truncated at 1.
    ///
    /// A horizontal segment at level `σ` between `x` and `y` has length
    /// `(1-σ) d(x,y) + σ d(fx,fy)`; vertical segments have length `|Δs|`. Two points on adjacent
    /// sheets live in a strip of height 2 whose horizontal cost is piecewise linear with a kink
    /// at the roof, so the best chain crosses horizontally at one of the two endpoint levels or
    /// at the roof. With base diameter at most 1 the slopes are bounded by 1 and detours never
    /// pay; chains with two net crossings have length at least 1.
    fn unit_bw(&self, p: &SuspensionPoint<S>, q: &SuspensionPoint<S>) -> S {
        let one = S::one();
        let same = self.same_sheet(&p.base, p.fiber, &q.base, q.fiber);
        let up_p = self.adjacent(&p.base, p.fiber, &q.base, q.fiber);
        let up_q = self.adjacent(&q.base, q.fiber, &p.base, p.fiber);
        same.min(up_p).min(up_q).min(one)
    }

    fn same_sheet(&self, a: &BasePoint<S>, s: S, b: &BasePoint<S>, r: S) -> S {
        let (d0, d1) = self.levels(a, b);
        let level = |sigma: S| d0 + sigma * (d1 - d0);
        (s - r).abs() + level(s).min(level(r))
    }

    /// `(a, s)` on one sheet, `(b, r)` on the sheet above it.
    fn adjacent(&self, a: &BasePoint<S>, s: S, b: &BasePoint<S>, r: S) -> S {
        let below = self.base_map.inverse(b);
        let (d0, d1) = self.levels(a, &below);
        let fa = self.base_map.forward(a);
        let (e0, e1) = self.levels(&fa, b);
        debug_assert!((d1 - e0).abs() <= S::epsilon().sqrt());
        let cross = (d0 + s * (d1 - d0)).min(d1).min(e0 + r * (e1 - e0));
        (S::one() - s) + r + cross
    }

    fn levels(&self, a: &BasePoint<S>, b: &BasePoint<S>) -> (S, S) {
        let space = self.base_space();
        let d0 = space.base_distance(a, b).expect("checked base points");
        let d1 = space
            .base_distance(&self.base_map.forward(a), &self.base_map.forward(b))
            .expect("checked base points");
        (d0, d1)
    }
}

/// `d′(x₁, x₂) = min{d(x₁, x₂), d(f x₁, f x₂)}`.
pub fn dprime_distance<S: Scalar>(f: &BaseMap<S>, x1: &BasePoint<S>, x2: &BasePoint<S>) -> Result<S> {
    let space = f.space();
    let d = space.base_distance(x1, x2)?;
    let df = space.base_distance(&f.forward(x1), &f.forward(x2))?;
    Ok(d.min(df))
}

/// Iterate count covered by a unit-height flow horizon: the flow over `[-T, T]` passes the
/// middle level of every fiber `f^n x` with `|n| <= floor(T) - 1`.
pub fn map_horizon_for_flow<S: Scalar>(horizon: S) -> usize {
    (horizon.floor().to_usize().unwrap_or(0)).saturating_sub(1).max(1)
}

/// Checks `Γ_{δ,φ^{1,f}}(y) ⊂ Γ̂^f_δ(x) × [0,1]` on the given pairs `(y, y₀)`, with the map
/// ball taken in the metric `d′` and `y₀` read on the sheet nearest `y`.
pub fn check_suspension1_inclusion<S: Scalar>(
    space: &SuspensionSpace<S>,
    delta: S,
    pairs: &[(SuspensionPoint<S>, SuspensionPoint<S>)],
    q: &BallQuery<S>,
) -> Result<InclusionReport> {
    if !space.is_unit_height() {
        return invalid("inclusion check requires the unit-height suspension");
    }
    if !(delta > S::zero() && delta < S::lit(0.25)) {
        return invalid(format!("delta {delta} must lie in (0, 1/4)"));
    }
    let flow = FlowSystem::suspension(space.clone());
    let fq = q.with_delta(delta);
    let f = Homeomorphism::Base(space.base_map().clone());
    let mq = BallQuery {
        delta,
        horizon: S::from_count(map_horizon_for_flow(q.horizon)),
        grid_step: S::one(),
        metric_override: Some(MetricOverride::DPrime),
    };
    let mut report = InclusionReport::default();
    for (k, (y, y0)) in pairs.iter().enumerate() {
        report.checked += 1;
        let (py, py0) = (crate::MetricPoint::Suspended(*y), crate::MetricPoint::Suspended(*y0));
        if !flow_ball_member(&flow, &py, &py0, &fq)? {
            continue;
        }
        report.premises += 1;
        // compare against the representative of y₀ on the sheet nearest y: a ball member just
        // across the roof is (f x₀', s) ~ (x₀', s + 1)
        let gap = y0.fiber - y.fiber;
        let base0 = if gap > S::lit(0.5) {
            space.base_map().iterate(&y0.base, 1)
        } else if gap < S::lit(-0.5) {
            space.base_map().iterate(&y0.base, -1)
        } else {
            y0.base
        };
        let (x, x0) = (crate::MetricPoint::Base(y.base), crate::MetricPoint::Base(base0));
        if !map_ball_member(&f, &x, &x0, &mq)? {
            report.violations.push(vec![k]);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::SymbolWindow;
    use proptest::prelude::*;

    fn shift_space() -> SuspensionSpace<f64> {
        SuspensionSpace::unit(BaseMap::BinaryShift { radius: 20 })
    }

    fn w(bits: u64) -> BasePoint<f64> {
        BasePoint::Word(SymbolWindow::new(20, bits & ((1 << 41) - 1)).unwrap())
    }

    #[test]
    fn canonicalize_applies_identification() {
        let s = shift_space();
        let x = w(0b1011 << 18);
        let f = s.base_map().clone();
        assert_eq!(s.canonicalize(x, 1.0), SuspensionPoint { base: f.forward(&x), fiber: 0.0 });
        assert_eq!(s.canonicalize(x, 0.5), SuspensionPoint { base: x, fiber: 0.5 });
        assert_eq!(s.canonicalize(x, 2.25), SuspensionPoint { base: f.iterate(&x, 2), fiber: 0.25 });
        assert_eq!(s.canonicalize(x, -0.25), SuspensionPoint { base: f.inverse(&x), fiber: 0.75 });
    }

    #[test]
    fn canonicalize_with_variable_height() {
        let s = SuspensionSpace::new(BaseMap::BinaryShift { radius: 20 }, Height::Symbol { zero: 0.5, one: 2.0 }).unwrap();
        let x = SymbolWindow::zeros(20).flipped(1);
        let p = s.canonicalize(BasePoint::Word(x), 0.75);
        // τ(x) = 0.5 since x_0 = 0; f(x) has symbol 1 at index 0, so τ(f x) = 2
        assert_eq!(p, SuspensionPoint { base: BasePoint::Word(x.shifted(1)), fiber: 0.25 });
        let back = s.canonicalize(p.base, p.fiber - 0.75);
        assert_eq!(back, SuspensionPoint { base: BasePoint::Word(x), fiber: 0.0 });
    }

    #[test]
    fn height_must_be_positive() {
        assert!(SuspensionSpace::new(BaseMap::<f64>::cat_map(), Height::Cosine { mean: 1.0, amplitude: 1.0 }).is_err());
        assert!(SuspensionSpace::new(BaseMap::<f64>::cat_map(), Height::Symbol { zero: 1.0, one: 2.0 }).is_err());
        assert!(SuspensionSpace::new(BaseMap::<f64>::cat_map(), Height::constant(0.0)).is_err());
    }

    #[test]
    fn flow_examples() {
        let s = shift_space();
        let x = w(12345);
        let f = s.base_map().clone();
        let p = SuspensionPoint { base: x, fiber: 0.0 };
        assert_eq!(s.flow(&p, 0.0), p);
        assert_eq!(s.flow(&p, 1.0), SuspensionPoint { base: f.forward(&x), fiber: 0.0 });
        let p = SuspensionPoint { base: x, fiber: 0.75 };
        assert_eq!(s.flow(&p, 0.5), SuspensionPoint { base: f.forward(&x), fiber: 0.25 });
    }

    #[test]
    fn bw_distance_examples() {
        let s = shift_space();
        let (x, y) = (w(0), w(1 << 23));
        let p = SuspensionPoint { base: x, fiber: 0.0 };
        assert_eq!(s.bw_distance(&p, &p).unwrap(), 0.0);
        let q = SuspensionPoint { base: y, fiber: 0.0 };
        // x, y differ first at index 3
        assert!(s.bw_distance(&p, &q).unwrap() <= 0.125);
        let a = SuspensionPoint { base: x, fiber: 0.2 };
        let b = SuspensionPoint { base: x, fiber: 0.5 };
        assert!(s.bw_distance(&a, &b).unwrap() <= 0.3 + 1e-15);
        // across the identification: (x, 0.95) and (f x, 0.05) are 0.1 apart
        let c = SuspensionPoint { base: x.clone(), fiber: 0.95 };
        let d = SuspensionPoint { base: s.base_map().forward(&x), fiber: 0.05 };
        assert!((s.bw_distance(&c, &d).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn lambda_examples() {
        let f = BaseMap::<f64>::BinaryShift { radius: 20 };
        let s2 = SuspensionSpace::new(f.clone(), Height::constant(2.0)).unwrap();
        let x = w(77);
        let p = SuspensionPoint { base: x, fiber: 1.0 };
        assert_eq!(s2.lambda(&p), SuspensionPoint { base: x, fiber: 0.5 });
        let s1 = shift_space();
        assert_eq!(s1.lambda(&p), p);
        assert_eq!(s2.lambda_inverse(&s2.lambda(&p)), p);
    }

    #[test]
    fn dprime_is_min_of_distances() {
        let f = BaseMap::<f64>::BinaryShift { radius: 20 };
        let x1 = SymbolWindow::zeros(20);
        let x2 = x1.flipped(-1);
        let (a, b) = (BasePoint::Word(x1), BasePoint::Word(x2));
        assert_eq!(dprime_distance(&f, &a, &a).unwrap(), 0.0);
        // d = 2^-1; after the shift the disagreement sits at index -2, so d(fx1, fx2) = 2^-2
        assert_eq!(BaseSpace::Shift { radius: 20 }.base_distance::<f64>(&f.forward(&a), &f.forward(&b)).unwrap(), 0.25);
        assert_eq!(dprime_distance(&f, &a, &b).unwrap(), 0.25);
    }

    #[test]
    fn suspension1_rejects_large_delta() {
        let s = shift_space();
        let q = BallQuery::new(0.125, 4.0, 0.125).unwrap();
        assert!(check_suspension1_inclusion(&s, 0.25, &[], &q).is_err());
        let y = SuspensionPoint { base: w(5), fiber: 0.3 };
        let r = check_suspension1_inclusion(&s, 0.125, &[(y, y)], &q).unwrap();
        assert_eq!((r.checked, r.premises, r.violations.len()), (1, 1, 0));
    }

    #[test]
    fn suspension1_reads_members_across_the_roof() {
        let s = shift_space();
        let q = BallQuery::new(0.125, 4.0, 0.125).unwrap();
        let y = SuspensionPoint { base: w(0b1011 << 18), fiber: 0.95 };
        let later = s.flow(&y, 0.1);
        assert!(later.fiber < 0.1);
        let r = check_suspension1_inclusion(&s, 0.125, &[(y, later), (later, y)], &q).unwrap();
        assert_eq!((r.premises, r.violations.len()), (2, 0));
    }

    fn spoint() -> impl Strategy<Value = SuspensionPoint<f64>> {
        (any::<u64>(), 0.0f64..1.0, 0usize..4).prop_map(|(b, s, k)| {
            // bias towards nearby windows so the short-distance regime is exercised
            let bits = if k == 0 { b } else { b & ((1u64 << (20 - 3 * k)) - 1) };
            SuspensionPoint { base: w(bits), fiber: s }
        })
    }

    fn cat_point() -> impl Strategy<Value = SuspensionPoint<f64>> {
        (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0)
            .prop_map(|(x, y, s)| SuspensionPoint { base: BasePoint::torus(x, y), fiber: s })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn bw_is_a_metric_over_the_shift(p in spoint(), q in spoint(), r in spoint()) {
            let s = shift_space();
            let dpq = s.bw_distance(&p, &q).unwrap();
            prop_assert!((dpq - s.bw_distance(&q, &p).unwrap()).abs() < 1e-12);
            prop_assert_eq!(dpq == 0.0, p == q);
            prop_assert!(dpq <= s.bw_distance(&p, &r).unwrap() + s.bw_distance(&r, &q).unwrap() + 1e-9);
        }

        #[test]
        fn bw_is_a_metric_over_the_cat_map(p in cat_point(), q in cat_point(), r in cat_point()) {
            let s = SuspensionSpace::unit(BaseMap::<f64>::cat_map());
            let dpq = s.bw_distance(&p, &q).unwrap();
            prop_assert!((dpq - s.bw_distance(&q, &p).unwrap()).abs() < 1e-12);
            // chains here visit only the endpoints' own base points; shortcuts through other
            // base points are missed under a hyperbolic map, so the triangle inequality holds
            // only up to a small defect
            prop_assert!(dpq <= s.bw_distance(&p, &r).unwrap() + s.bw_distance(&r, &q).unwrap() + 0.05);
        }
    }

    proptest! {
        #[test]
        fn flow_group_law(p in spoint(), a in -6.0f64..6.0, b in -6.0f64..6.0) {
            let s = shift_space();
            let lhs = s.flow(&s.flow(&p, a), b);
            let rhs = s.flow(&p, a + b);
            prop_assert!(s.bw_distance(&lhs, &rhs).unwrap() <= 1e-12);
        }

        #[test]
        fn canonicalize_is_idempotent(p in spoint(), t in -5.0f64..5.0) {
            let s = SuspensionSpace::new(BaseMap::BinaryShift { radius: 20 }, Height::Symbol { zero: 0.5, one: 1.5 }).unwrap();
            let c = s.canonicalize(p.base, t);
            prop_assert_eq!(s.canonicalize(c.base, c.fiber), c);
            prop_assert!(c.fiber >= 0.0 && c.fiber < s.height().eval(&c.base));
        }

        #[test]
        fn lambda_round_trips(p in spoint()) {
            let s = SuspensionSpace::new(BaseMap::BinaryShift { radius: 20 }, Height::Symbol { zero: 0.5, one: 2.0 }).unwrap();
            let p = s.canonicalize(p.base, p.fiber);
            let back = s.lambda_inverse(&s.lambda(&p));
            prop_assert_eq!(back.base, p.base);
            prop_assert!((back.fiber - p.fiber).abs() <= 1e-12);
        }

        #[test]
        fn lambda_maps_orbits_to_orbits(p in spoint(), t in -4.0f64..4.0) {
            let s = SuspensionSpace::new(BaseMap::BinaryShift { radius: 20 }, Height::Symbol { zero: 0.5, one: 2.0 }).unwrap();
            let unit = s.unit_model();
            let p = s.canonicalize(p.base, p.fiber);
            let image = s.lambda(&s.flow(&p, t));
            let lp = s.lambda(&p);
            // the image lies on the unit-height orbit of λ(p): find the matching time by walking
            // fibers of the iterates of p's base
            let target = unit.canonicalize(image.base, image.fiber);
            let mut best = f64::INFINITY;
            for n in -12i64..=12 {
                let base = s.base_map().iterate(&lp.base, n);
                if base == target.base {
                    let cand = unit.canonicalize(base, target.fiber);
                    best = best.min(unit.bw_distance(&cand, &target).unwrap());
                }
            }
            prop_assert!(best <= 1e-9);
        }
    }
}

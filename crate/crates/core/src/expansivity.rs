//! Verdict procedures: empirical expansivity constants and the theorem-check harness.
//!
//! A measure `μ` is expansive for `φ` with constant `δ` when `μ(Γ_δ(x)) = 0` for every `x`.
//! Empirically, "zero" means "at most `ε`" (by default `3/√n` for `n` atoms) over a sample of
//! centers, and an expansive verdict must survive doubling the horizon and halving the grid
//! step.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynball::{map_ball_member, BallQuery, FlowBall, MetricOverride};
use crate::error::{invalid, Error, Result};
use crate::flows::{FlowSystem, Homeomorphism};
use crate::maps::{golden_angle, BaseMap};
use crate::measures::{lebesgue, suspend_measure, EmpiricalMeasure};
use crate::scalar::{compensated_sum, Scalar};
use crate::space::{BaseSpace, MetricPoint, SpaceDescriptor};
use crate::suspension::{Height, SuspensionSpace};

/// Per-radius summary of `μ(Γ_δ(x))` over the sampled centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallMassStats {
    pub delta: f64,
    pub max_mass: f64,
    pub mean_mass: f64,
    pub min_mass: f64,
}

impl BallMassStats {
    fn from_masses<S: Scalar>(delta: S, masses: &[S]) -> Self {
        let n = S::from_count(masses.len().max(1));
        Self {
            delta: delta.as_f64(),
            max_mass: masses.iter().copied().fold(S::zero(), S::max).as_f64(),
            mean_mass: (compensated_sum(masses.iter().copied()) / n).as_f64(),
            min_mass: masses.iter().copied().fold(S::infinity(), S::min).as_f64(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Expansive { delta: f64 },
    NotExpansive,
    Inconclusive { reason: String },
}

impl Verdict {
    pub fn is_expansive(&self) -> bool {
        matches!(self, Verdict::Expansive { .. })
    }

    pub fn is_not_expansive(&self) -> bool {
        matches!(self, Verdict::NotExpansive)
    }

    pub fn constant(&self) -> Option<f64> {
        match self {
            Verdict::Expansive { delta } => Some(*delta),
            _ => None,
        }
    }
}

/// Re-checks of the candidate constant on a longer window and a finer grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stability {
    pub horizon_doubled: bool,
    pub step_halved: bool,
    pub max_mass_doubled_horizon: f64,
    pub max_mass_halved_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansivityReport {
    pub system: String,
    pub measure: String,
    pub level: String,
    pub epsilon: f64,
    pub horizon: f64,
    pub grid_step: f64,
    pub centers: usize,
    pub delta_grid: Vec<f64>,
    pub per_delta: Vec<BallMassStats>,
    pub verdict: Verdict,
    pub stability: Option<Stability>,
}

impl ExpansivityReport {
    pub fn stats_at(&self, delta: f64) -> Option<&BallMassStats> {
        self.per_delta.iter().find(|s| s.delta == delta)
    }

    pub fn max_masses(&self) -> Vec<f64> {
        self.per_delta.iter().map(|s| s.max_mass).collect()
    }

    /// `delta,max_mass,mean_mass,min_mass` with a header row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::InvalidArgument(format!("report csv: {e}"));
        w.write_record(["delta", "max_mass", "mean_mass", "min_mass"]).map_err(io)?;
        for s in &self.per_delta {
            w.write_record([s.delta, s.max_mass, s.mean_mass, s.min_mass].map(|v| v.to_string())).map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidArgument(format!("report csv: {e}")))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report is serializable")
    }
}

/// `k` atom locations drawn without replacement (all of them when `k >= n`), in atom order.
pub fn sample_centers<S: Scalar>(mu: &EmpiricalMeasure<S>, k: usize, seed: u64) -> Vec<MetricPoint<S>> {
    let n = mu.len();
    if k >= n {
        return mu.points().copied().collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, n, k).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| mu.atoms()[i].point).collect()
}

/// `μ(Γ_δ(x))` for every center and every radius in `deltas`, on the grid of `q`.
/// Rows follow `centers`, columns follow `deltas`.
pub fn flow_ball_masses<S: Scalar>(
    flow: &FlowSystem<S>,
    mu: &EmpiricalMeasure<S>,
    deltas: &[S],
    centers: &[MetricPoint<S>],
    q: &BallQuery<S>,
) -> Result<Vec<Vec<S>>> {
    if flow.space() != *mu.space() {
        return invalid("flow and measure live on different spaces");
    }
    let floor = flow.space().resolution();
    let smallest = deltas.iter().copied().fold(S::infinity(), S::min);
    if smallest < floor {
        return invalid(format!("delta {smallest} is below the space resolution {floor}"));
    }
    let largest = deltas.iter().copied().fold(S::zero(), S::max);
    centers
        .par_iter()
        .map(|x| {
            let ball = FlowBall::new(flow, x, &q.with_delta(largest))?;
            deltas.iter().map(|&d| mu.ball_mass(|y| ball.contains_at(y, d))).collect()
        })
        .collect()
}

/// `max_x μ(Γ_δ(x))` over `centers`.
pub fn estimate_sup_ball_mass<S: Scalar>(
    flow: &FlowSystem<S>,
    mu: &EmpiricalMeasure<S>,
    delta: S,
    centers: &[MetricPoint<S>],
    q: &BallQuery<S>,
) -> Result<S> {
    let masses = flow_ball_masses(flow, mu, &[delta], centers, q)?;
    Ok(masses.iter().map(|r| r[0]).fold(S::zero(), S::max))
}

/// `μ(Γ̂_δ(x))` for the map `f`; the query horizon is the iterate count.
pub fn map_ball_masses<S: Scalar>(
    f: &Homeomorphism<S>,
    mu: &EmpiricalMeasure<S>,
    deltas: &[S],
    centers: &[MetricPoint<S>],
    q: &BallQuery<S>,
) -> Result<Vec<Vec<S>>> {
    if f.space() != *mu.space() {
        return invalid("map and measure live on different spaces");
    }
    centers
        .par_iter()
        .map(|x| deltas.iter().map(|&d| mu.ball_mass(|y| map_ball_member(f, x, y, &q.with_delta(d)))).collect())
        .collect()
}

fn column_stats<S: Scalar>(deltas: &[S], masses: &[Vec<S>]) -> Vec<BallMassStats> {
    deltas
        .iter()
        .enumerate()
        .map(|(k, &d)| BallMassStats::from_masses(d, &masses.iter().map(|r| r[k]).collect::<Vec<_>>()))
        .collect()
}

fn check_grid<S: Scalar>(grid: &[S]) -> Result<()> {
    if grid.is_empty() {
        return invalid("empty delta grid");
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return invalid("delta grid must be strictly ascending");
    }
    Ok(())
}

/// Largest `δ*` in the grid with `max_x μ(Γ_δ*(x)) <= ε`, confirmed at twice the horizon and
/// half the grid step.
pub fn search_expansivity_constant<S: Scalar>(
    flow: &FlowSystem<S>,
    mu: &EmpiricalMeasure<S>,
    delta_grid: &[S],
    centers: &[MetricPoint<S>],
    q: &BallQuery<S>,
    epsilon: S,
) -> Result<ExpansivityReport> {
    check_grid(delta_grid)?;
    if centers.is_empty() {
        return invalid("no centers to sample");
    }
    let masses = flow_ball_masses(flow, mu, delta_grid, centers, q)?;
    let per_delta = column_stats(delta_grid, &masses);
    let eps = epsilon.as_f64();
    let candidate = per_delta.iter().rposition(|s| s.max_mass <= eps);
    let (verdict, stability) = match candidate {
        None => (Verdict::NotExpansive, None),
        Some(k) => {
            let d = delta_grid[k];
            let long = estimate_sup_ball_mass(flow, mu, d, centers, &q.with_horizon(q.horizon * S::lit(2.0)))?;
            let fine = estimate_sup_ball_mass(flow, mu, d, centers, &q.with_grid_step(q.grid_step / S::lit(2.0)))?;
            let st = Stability {
                horizon_doubled: long <= epsilon,
                step_halved: fine <= epsilon,
                max_mass_doubled_horizon: long.as_f64(),
                max_mass_halved_step: fine.as_f64(),
            };
            let v = if st.horizon_doubled && st.step_halved {
                Verdict::Expansive { delta: d.as_f64() }
            } else {
                Verdict::Inconclusive { reason: format!("candidate constant {d} is not stable under refinement") }
            };
            (v, Some(st))
        }
    };
    Ok(ExpansivityReport {
        system: flow.name(),
        measure: describe(mu),
        level: "flow".into(),
        epsilon: eps,
        horizon: q.horizon.as_f64(),
        grid_step: q.grid_step.as_f64(),
        centers: centers.len(),
        delta_grid: delta_grid.iter().map(|d| d.as_f64()).collect(),
        per_delta,
        verdict,
        stability,
    })
}

/// Map-level analogue of [`search_expansivity_constant`]; the query horizon counts iterates.
pub fn search_map_expansivity<S: Scalar>(
    f: &Homeomorphism<S>,
    mu: &EmpiricalMeasure<S>,
    delta_grid: &[S],
    centers: &[MetricPoint<S>],
    q: &BallQuery<S>,
    epsilon: S,
) -> Result<ExpansivityReport> {
    check_grid(delta_grid)?;
    if centers.is_empty() {
        return invalid("no centers to sample");
    }
    let masses = map_ball_masses(f, mu, delta_grid, centers, q)?;
    let per_delta = column_stats(delta_grid, &masses);
    let eps = epsilon.as_f64();
    let verdict = match per_delta.iter().rposition(|s| s.max_mass <= eps) {
        Some(k) => Verdict::Expansive { delta: delta_grid[k].as_f64() },
        None => Verdict::NotExpansive,
    };
    Ok(ExpansivityReport {
        system: f.name(),
        measure: describe(mu),
        level: match q.metric_override {
            Some(MetricOverride::DPrime) => "map (d')".into(),
            None => "map".into(),
        },
        epsilon: eps,
        horizon: q.horizon.as_f64(),
        grid_step: q.grid_step.as_f64(),
        centers: centers.len(),
        delta_grid: delta_grid.iter().map(|d| d.as_f64()).collect(),
        per_delta,
        verdict,
        stability: None,
    })
}

fn describe<S: Scalar>(mu: &EmpiricalMeasure<S>) -> String {
    format!("{} atoms on {}", mu.len(), mu.space().name())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The hypothesis does not apply; recorded, never an error.
    Vacuous,
    Inconclusive,
}

/// Outcome of one theorem check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
}

impl CheckOutcome {
    fn new(name: &str, status: CheckStatus, detail: impl Into<String>) -> Self {
        Self { name: name.into(), status, detail: detail.into(), metrics: BTreeMap::new() }
    }

    fn metric(mut self, key: &str, value: f64) -> Self {
        self.metrics.insert(key.into(), value);
        self
    }

    /// Pass and vacuous both count as "no theorem violated".
    pub fn ok(&self) -> bool {
        matches!(self.status, CheckStatus::Pass | CheckStatus::Vacuous)
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

/// No atom within `tube` of a singularity when the verdict is expansive.
pub fn verify_a1<S: Scalar>(flow: &FlowSystem<S>, mu: &EmpiricalMeasure<S>, report: &ExpansivityReport, tube: S) -> Result<CheckOutcome> {
    let sing = flow.singularities();
    if sing.is_empty() {
        return Ok(CheckOutcome::new("A1", CheckStatus::Vacuous, "flow has no singularities"));
    }
    let near = mu.ball_mass(|p| {
        for s in sing {
            if flow.distance(p, s)? <= tube {
                return Ok(true);
            }
        }
        Ok(false)
    })?;
    let hit = mu.atoms().iter().filter(|a| a.weight > S::zero()).any(|a| sing.iter().any(|s| flow.distance(&a.point, s).map_or(false, |d| d <= tube)));
    let status = if !report.verdict.is_expansive() {
        CheckStatus::Vacuous
    } else if hit {
        CheckStatus::Fail
    } else {
        CheckStatus::Pass
    };
    let detail = if hit { "support meets a singularity tube" } else { "support avoids every singularity tube" };
    Ok(CheckOutcome::new("A1", status, detail).metric("singular_mass", near.as_f64()).metric("support_hits", f64::from(u8::from(hit))))
}

/// Mass near `Per_T(φ)` for each `T`; an expansive verdict requires every such mass `<= ε`,
/// and a large mass must come with a non-expansive verdict.
pub fn verify_a2<S: Scalar>(
    flow: &FlowSystem<S>,
    mu: &EmpiricalMeasure<S>,
    t_list: &[S],
    report: &ExpansivityReport,
    tube: S,
) -> Result<CheckOutcome> {
    let eps = S::lit(report.epsilon);
    let mut out = CheckOutcome::new("A2", CheckStatus::Pass, "");
    let mut largest = S::zero();
    for &t in t_list {
        let per = match flow.periodic_points(t) {
            Ok(p) => p,
            Err(Error::UnsupportedQuery(msg)) => {
                return Ok(CheckOutcome::new("A2", CheckStatus::Inconclusive, format!("periodic points unavailable: {msg}")));
            }
            Err(e) => return Err(e),
        };
        let mass = mu.ball_mass(|p| Ok(per.distance_to(p) <= tube))?;
        largest = largest.max(mass);
        out = out.metric(&format!("per_mass_T{}", t.as_f64()), mass.as_f64());
    }
    let consistent = !(report.verdict.is_expansive() && largest > eps);
    out.status = match (consistent, report.verdict.is_expansive()) {
        (false, _) => CheckStatus::Fail,
        (true, true) => CheckStatus::Pass,
        // a non-expansive verdict is what the contrapositive predicts when the mass is large
        (true, false) if largest > eps => CheckStatus::Pass,
        (true, false) => CheckStatus::Vacuous,
    };
    out.detail = format!("largest periodic mass {largest} against epsilon {eps}");
    Ok(out)
}

/// Orbit equivalences between shipped flows.
#[derive(Debug, Clone, PartialEq)]
pub enum Equivalence<S> {
    Identity,
    /// `λ(x, t) = (x, t/τ(x))` from `Y^{τ,f}` onto `Y^{1,f}`.
    Lambda(SuspensionSpace<S>),
}

impl<S: Scalar> Equivalence<S> {
    pub fn forward(&self, p: &MetricPoint<S>) -> Result<MetricPoint<S>> {
        match (self, p) {
            (Equivalence::Identity, _) => Ok(*p),
            (Equivalence::Lambda(s), MetricPoint::Suspended(q)) => Ok(MetricPoint::Suspended(s.lambda(q))),
            _ => invalid("λ acts on suspension points"),
        }
    }

    pub fn inverse(&self, p: &MetricPoint<S>) -> Result<MetricPoint<S>> {
        match (self, p) {
            (Equivalence::Identity, _) => Ok(*p),
            (Equivalence::Lambda(s), MetricPoint::Suspended(q)) => Ok(MetricPoint::Suspended(s.lambda_inverse(q))),
            _ => invalid("λ⁻¹ acts on suspension points"),
        }
    }

    pub fn target_space(&self, src: &SpaceDescriptor<S>) -> SpaceDescriptor<S> {
        match self {
            Equivalence::Identity => src.clone(),
            Equivalence::Lambda(s) => SpaceDescriptor::Suspension(s.unit_model()),
        }
    }
}

/// Inputs for [`verify_a3`].
#[derive(Debug, Clone)]
pub struct A3Setup<'a, S: Scalar> {
    pub src: &'a FlowSystem<S>,
    pub dst: &'a FlowSystem<S>,
    pub equivalence: &'a Equivalence<S>,
    pub mu: &'a EmpiricalMeasure<S>,
    pub delta_grid: &'a [S],
    pub q_src: BallQuery<S>,
    pub q_dst: BallQuery<S>,
    pub centers: usize,
    /// Pairs `(z, w)` in the target space for the membership-level inclusion.
    pub pairs: &'a [(MetricPoint<S>, MetricPoint<S>)],
    pub seed: u64,
    pub epsilon: S,
}

/// Verdicts for `(φ, μ)` and `(ψ, f_*μ)` agree, and sampled pairs satisfy
/// `f⁻¹(Γ_{α,ψ}(z)) ⊂ Γ_{δ,φ}(f⁻¹ z)` with `α = δ` (the shipped equivalences are isometries
/// onto the unit model).
pub fn verify_a3<S: Scalar>(setup: &A3Setup<'_, S>) -> Result<(CheckOutcome, ExpansivityReport, ExpansivityReport)> {
    let A3Setup { src, dst, equivalence, mu, delta_grid, q_src, q_dst, centers, pairs, seed, epsilon } = setup;
    let pushed = mu.pushforward_with(equivalence.target_space(mu.space()), |p| equivalence.forward(p))?;
    if pushed.space() != &dst.space() {
        return invalid("equivalence does not land in the target flow's space");
    }
    let src_centers = sample_centers(mu, *centers, *seed);
    let dst_centers = src_centers.iter().map(|p| equivalence.forward(p)).collect::<Result<Vec<_>>>()?;
    let src_report = search_expansivity_constant(src, mu, delta_grid, &src_centers, q_src, *epsilon)?;
    let dst_report = search_expansivity_constant(dst, &pushed, delta_grid, &dst_centers, q_dst, *epsilon)?;
    let agree = src_report.verdict.is_expansive() == dst_report.verdict.is_expansive()
        && src_report.verdict.constant() == dst_report.verdict.constant();

    let delta = delta_grid[delta_grid.len() - 1];
    let results = pairs
        .par_iter()
        .map(|(z, w)| -> Result<(bool, bool)> {
            let outer = FlowBall::new(dst, z, &q_dst.with_delta(delta))?;
            if !outer.contains(w)? {
                return Ok((false, true));
            }
            let inner = FlowBall::new(src, &equivalence.inverse(z)?, &q_src.with_delta(delta))?;
            Ok((true, inner.contains(&equivalence.inverse(w)?)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let premises = results.iter().filter(|r| r.0).count();
    let violations = results.iter().filter(|r| r.0 && !r.1).count();
    let status = if agree && violations == 0 { CheckStatus::Pass } else { CheckStatus::Fail };
    let out = CheckOutcome::new(
        "A3",
        status,
        format!("source verdict {:?}, target verdict {:?}", src_report.verdict, dst_report.verdict),
    )
    .metric("verdicts_agree", f64::from(u8::from(agree)))
    .metric("pairs", results.len() as f64)
    .metric("premises", premises as f64)
    .metric("violations", violations as f64);
    Ok((out, src_report, dst_report))
}

/// With an expansive verdict `δ*`, every sampled orbit tube of radius `δ*/2` carries at most `ε`.
pub fn verify_a4<S: Scalar>(
    flow: &FlowSystem<S>,
    mu: &EmpiricalMeasure<S>,
    report: &ExpansivityReport,
    centers: &[MetricPoint<S>],
    orbit_horizon: S,
) -> Result<CheckOutcome> {
    let Some(d) = report.verdict.constant() else {
        return Ok(CheckOutcome::new("A4", CheckStatus::Vacuous, "verdict is not expansive"));
    };
    let tube = S::lit(d / 2.0);
    let masses = centers
        .par_iter()
        .map(|x| mu.orbit_mass(flow, x, orbit_horizon, tube))
        .collect::<Result<Vec<_>>>()?;
    let worst = masses.iter().copied().fold(S::zero(), S::max);
    let status = if worst.as_f64() <= report.epsilon { CheckStatus::Pass } else { CheckStatus::Fail };
    Ok(CheckOutcome::new("A4", status, format!("largest orbit-tube mass {worst} at tube {tube}"))
        .metric("max_orbit_mass", worst.as_f64())
        .metric("tube", tube.as_f64()))
}

/// Flow-expansive implies expansive for the time-`T` map, tested on `alpha_grid`.
pub fn verify_general2<S: Scalar>(
    flow: &FlowSystem<S>,
    mu: &EmpiricalMeasure<S>,
    t: S,
    report: &ExpansivityReport,
    alpha_grid: &[S],
    centers: &[MetricPoint<S>],
    q: &BallQuery<S>,
) -> Result<(CheckOutcome, Option<ExpansivityReport>)> {
    if t == S::zero() {
        return invalid("time-T map needs T != 0");
    }
    if !report.verdict.is_expansive() {
        return Ok((CheckOutcome::new("general2", CheckStatus::Vacuous, "flow verdict is not expansive"), None));
    }
    let map = flow.time_t_map(t);
    let iterates = (q.horizon / t.abs()).ceil();
    let mq = BallQuery { delta: alpha_grid[0], horizon: iterates, grid_step: S::one(), metric_override: None };
    let map_report = search_map_expansivity(&map, mu, alpha_grid, centers, &mq, S::lit(report.epsilon))?;
    let status = if map_report.verdict.is_expansive() { CheckStatus::Pass } else { CheckStatus::Fail };
    let out = CheckOutcome::new("general2", status, format!("time-{t} map verdict {:?}", map_report.verdict))
        .metric("T", t.as_f64())
        .metric("iterates", iterates.as_f64());
    Ok((out, Some(map_report)))
}

/// Inputs for [`verify_general3`].
#[derive(Debug, Clone)]
pub struct General3Setup<'a, S: Scalar> {
    pub map: &'a BaseMap<S>,
    pub mu: &'a EmpiricalMeasure<S>,
    pub height: Height<S>,
    pub sub_atoms: usize,
    pub delta_grid: &'a [S],
    pub flow_query: BallQuery<S>,
    pub centers: usize,
    pub seed: u64,
}

/// Map verdict for `(f, μ, d′)` and flow verdict for `(φ^{τ,f}, T^{τ,f}(μ))` agree.
pub fn verify_general3<S: Scalar>(setup: &General3Setup<'_, S>) -> Result<(CheckOutcome, ExpansivityReport, ExpansivityReport)> {
    let General3Setup { map, mu, height, sub_atoms, delta_grid, flow_query, centers, seed } = setup;
    if delta_grid.iter().any(|d| *d >= S::lit(0.25)) {
        return invalid("matched radii must lie below 1/4");
    }
    let space = SuspensionSpace::new((*map).clone(), *height)?;
    let flow = FlowSystem::suspension(space.clone());
    let suspended = suspend_measure(mu, &space, *sub_atoms)?;
    let f = Homeomorphism::Base((*map).clone());
    let map_eps = mu.default_epsilon();
    let flow_eps = suspended.default_epsilon();
    let iterates = S::from_count(crate::suspension::map_horizon_for_flow(flow_query.horizon / height.max()));
    let mq = BallQuery { delta: delta_grid[0], horizon: iterates, grid_step: S::one(), metric_override: Some(MetricOverride::DPrime) };
    let map_centers = sample_centers(mu, *centers, *seed);
    let flow_centers = sample_centers(&suspended, *centers, *seed);
    let map_report = search_map_expansivity(&f, mu, delta_grid, &map_centers, &mq, map_eps)?;
    let flow_report = search_expansivity_constant(&flow, &suspended, delta_grid, &flow_centers, flow_query, flow_eps)?;
    if mu.max_atom_weight() > map_eps {
        return Ok((
            CheckOutcome::new("general3", CheckStatus::Inconclusive, "atomic base measure is outside the theorem"),
            map_report,
            flow_report,
        ));
    }
    let agree = map_report.verdict.is_expansive() == flow_report.verdict.is_expansive();
    let status = if agree { CheckStatus::Pass } else { CheckStatus::Fail };
    let out = CheckOutcome::new(
        "general3",
        status,
        format!("map verdict {:?}, flow verdict {:?}", map_report.verdict, flow_report.verdict),
    )
    .metric("map_expansive", f64::from(u8::from(map_report.verdict.is_expansive())))
    .metric("flow_expansive", f64::from(u8::from(flow_report.verdict.is_expansive())));
    Ok((out, map_report, flow_report))
}

/// Compares (i) `μ(Γ_δ(x)) <= ε` at every sampled center with `δ = α/2` (retried at `α/4`)
/// and (ii) `μ(Γ_α(x)) <= ε` on centers carrying at least `1 - ε` of the sampled mass.
pub fn verify_thm_a2_characterization<S: Scalar>(
    flow: &FlowSystem<S>,
    mu: &EmpiricalMeasure<S>,
    alpha: S,
    centers: &[MetricPoint<S>],
    q: &BallQuery<S>,
    epsilon: S,
) -> Result<CheckOutcome> {
    if !flow.singularities().is_empty() {
        return invalid("the characterization needs a flow without singularities");
    }
    if centers.is_empty() {
        return invalid("no centers to sample");
    }
    let half = alpha / S::lit(2.0);
    let quarter = alpha / S::lit(4.0);
    let masses = flow_ball_masses(flow, mu, &[quarter, half, alpha], centers, q)?;
    let all_at = |k: usize| masses.iter().all(|r| r[k] <= epsilon);
    let (all_centers, delta_used) = if all_at(1) {
        (true, half)
    } else if all_at(0) {
        (true, quarter)
    } else {
        (false, half)
    };
    let good = masses.iter().filter(|r| r[2] <= epsilon).count();
    let share = S::from_count(good) / S::from_count(centers.len());
    let almost_every = share >= S::one() - epsilon;
    let status = if all_centers == almost_every { CheckStatus::Pass } else { CheckStatus::Fail };
    Ok(CheckOutcome::new(
        "thmA2",
        status,
        format!("all-centers condition {all_centers} at delta {delta_used}; a.e. condition {almost_every} at alpha {alpha}"),
    )
    .metric("all_centers", f64::from(u8::from(all_centers)))
    .metric("almost_every", f64::from(u8::from(almost_every)))
    .metric("delta_used", delta_used.as_f64())
    .metric("good_share", share.as_f64()))
}

/// Parameters of the surface-flow illustration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChinoParams {
    pub base_atoms: usize,
    pub section_atoms: usize,
    pub sub_atoms: usize,
    pub recurrence_horizon: f64,
    pub recurrence_eps: f64,
    pub orbit_horizon: f64,
    pub orbit_tube: f64,
    pub orbit_bound: f64,
    pub flow_horizon: f64,
    pub grid_step: f64,
    pub centers: usize,
    pub seed: u64,
}

impl Default for ChinoParams {
    fn default() -> Self {
        Self {
            base_atoms: 2000,
            section_atoms: 10_000,
            sub_atoms: 8,
            recurrence_horizon: 200.0,
            recurrence_eps: 0.05,
            orbit_horizon: 0.25,
            orbit_tube: 0.01,
            orbit_bound: 0.02,
            flow_horizon: 2.0,
            grid_step: 0.125,
            centers: 8,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChinoReport {
    pub recurrent: bool,
    pub max_orbit_mass: f64,
    pub orbit_mass_ok: bool,
    pub flow_report: ExpansivityReport,
    pub not_expansive_everywhere: bool,
    pub section_map_check: CheckOutcome,
    pub section_map_not_expansive: bool,
}

impl ChinoReport {
    pub fn passed(&self) -> bool {
        self.recurrent && self.orbit_mass_ok && self.not_expansive_everywhere && self.section_map_not_expansive
    }
}

/// Suspension of the golden rotation: a flow on the torus with non-trivial recurrence.
///
/// 1. the orbit of `(0, 0)` returns within `eps` of itself;
/// 2. the suspended Lebesgue measure `T(μ)` puts at most `orbit_bound` on thin orbit tubes;
/// 3. Lebesgue measure on the section is not expansive for the flow at any grid radius,
///    and the section map itself admits no expansive radius for Lebesgue measure.
pub fn chino_experiment(params: &ChinoParams) -> Result<ChinoReport> {
    let p = params;
    let rotation = BaseMap::CircleRotation { angle: golden_angle::<f64>(), irrational: true };
    let space = SuspensionSpace::unit(rotation.clone());
    let flow = FlowSystem::suspension(space.clone());
    let origin = crate::measures::suspended(crate::space::BasePoint::circle(0.0), 0.0);
    let recurrent = flow.is_recurrent_sample(&origin, p.recurrence_horizon, p.recurrence_eps)?;

    let mu = lebesgue::<f64>(BaseSpace::Circle, p.base_atoms, p.seed)?;
    let suspended = suspend_measure(&mu, &space, p.sub_atoms)?;
    let orbit_centers = sample_centers(&suspended, p.centers, p.seed);
    let max_orbit_mass = orbit_centers
        .par_iter()
        .map(|x| suspended.orbit_mass(&flow, x, p.orbit_horizon, p.orbit_tube))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let section = lebesgue::<f64>(BaseSpace::Circle, p.section_atoms, p.seed)?.on_section(&space)?;
    let grid = [0.02, 0.05, 0.1, 0.2];
    let q = BallQuery::new(grid[0], p.flow_horizon, p.grid_step)?;
    let centers = sample_centers(&section, p.centers, p.seed);
    let flow_report = search_expansivity_constant(&flow, &section, &grid, &centers, &q, section.default_epsilon())?;
    let not_expansive_everywhere = flow_report.per_delta.iter().all(|s| s.max_mass > flow_report.epsilon)
        && flow_report.verdict.is_not_expansive();

    let map_grid = [0.15, 0.2];
    let (section_map_check, map_report, flow3) = verify_general3(&General3Setup {
        map: &rotation,
        mu: &mu,
        height: Height::constant(1.0),
        sub_atoms: p.sub_atoms,
        delta_grid: &map_grid,
        flow_query: BallQuery::new(map_grid[0], p.flow_horizon, p.grid_step)?,
        centers: p.centers,
        seed: p.seed,
    })?;
    let section_map_not_expansive =
        section_map_check.passed() && map_report.verdict.is_not_expansive() && flow3.verdict.is_not_expansive();
    Ok(ChinoReport {
        recurrent,
        max_orbit_mass,
        orbit_mass_ok: max_orbit_mass <= p.orbit_bound,
        flow_report,
        not_expansive_everywhere,
        section_map_check,
        section_map_not_expansive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{bernoulli, orbit_segment, point_mixture};
    use crate::space::SymbolWindow;

    fn shift_setup(n: usize) -> (FlowSystem<f64>, EmpiricalMeasure<f64>) {
        let s = SuspensionSpace::unit(BaseMap::BinaryShift { radius: 20 });
        let mu = suspend_measure(&bernoulli(20, 0.5, n, 11).unwrap(), &s, 8).unwrap();
        (FlowSystem::suspension(s), mu)
    }

    #[test]
    fn sup_ball_mass_examples() {
        let rot = FlowSystem::circle_rotation(1.0);
        let mu = lebesgue(BaseSpace::Circle, 2000, 0).unwrap();
        let q = BallQuery::new(0.1, 2.0, 0.125).unwrap();
        let centers = sample_centers(&mu, 20, 1);
        assert!(estimate_sup_ball_mass(&rot, &mu, 0.1, &centers, &q).unwrap() >= 0.18);

        let (flow, mu) = shift_setup(500);
        let q = BallQuery::new(0.125, 4.0, 0.125).unwrap();
        let centers = sample_centers(&mu, 20, 1);
        assert!(estimate_sup_ball_mass(&flow, &mu, 0.125, &centers, &q).unwrap() <= 0.05);
        assert!(estimate_sup_ball_mass(&flow, &mu, 1e-7, &centers, &q).is_err());
    }

    #[test]
    fn search_examples() {
        let rot = FlowSystem::circle_rotation(1.0);
        let mu = lebesgue(BaseSpace::Circle, 1000, 0).unwrap();
        let q = BallQuery::new(0.05, 2.0, 0.125).unwrap();
        let centers = sample_centers(&mu, 10, 1);
        let r = search_expansivity_constant(&rot, &mu, &[0.05, 0.1, 0.2], &centers, &q, mu.default_epsilon()).unwrap();
        assert_eq!(r.verdict, Verdict::NotExpansive);
        let maxes = r.max_masses();
        assert!(maxes.windows(2).all(|w| w[0] <= w[1]));

        let (flow, _) = shift_setup(1);
        let x = crate::measures::suspended(crate::space::BasePoint::Word(SymbolWindow::from_fn(20, |n| n % 3 == 0).unwrap()), 0.0);
        let orbit = orbit_segment(&flow, &x, 1.0, 500).unwrap();
        let c = sample_centers(&orbit, 10, 2);
        let r = search_expansivity_constant(&flow, &orbit, &[0.1, 0.2], &c, &q, orbit.default_epsilon()).unwrap();
        assert!(r.verdict.is_not_expansive());
        assert!(search_expansivity_constant(&rot, &mu, &[0.1, 0.05], &centers, &q, 0.1).is_err());

        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("delta,max_mass,mean_mass,min_mass\n0.1,"));
        assert_eq!(text.lines().count(), 3);
        assert_eq!(r.to_json()["verdict"]["kind"], "not_expansive");
    }

    #[test]
    fn a1_examples() {
        let ns = FlowSystem::<f64>::north_south();
        let report = ExpansivityReport {
            system: String::new(),
            measure: String::new(),
            level: "flow".into(),
            epsilon: 0.01,
            horizon: 1.0,
            grid_step: 0.125,
            centers: 0,
            delta_grid: vec![],
            per_delta: vec![],
            verdict: Verdict::Expansive { delta: 0.1 },
            stability: None,
        };
        let on = EmpiricalMeasure::uniform_on(SpaceDescriptor::circle(), vec![MetricPoint::circle(0.0)]).unwrap();
        assert_eq!(verify_a1(&ns, &on, &report, 0.1).unwrap().status, CheckStatus::Fail);
        let off = EmpiricalMeasure::uniform_on(SpaceDescriptor::circle(), vec![MetricPoint::circle(0.2)]).unwrap();
        assert_eq!(verify_a1(&ns, &off, &report, 0.1).unwrap().status, CheckStatus::Pass);
        let rot = FlowSystem::circle_rotation(1.0);
        assert_eq!(verify_a1(&rot, &on, &report, 0.1).unwrap().status, CheckStatus::Vacuous);
    }

    #[test]
    fn a2_examples() {
        let rot = FlowSystem::circle_rotation(1.0);
        let mu = lebesgue(BaseSpace::Circle, 500, 0).unwrap();
        let not = ExpansivityReport {
            system: String::new(),
            measure: String::new(),
            level: "flow".into(),
            epsilon: mu.default_epsilon(),
            horizon: 1.0,
            grid_step: 0.125,
            centers: 0,
            delta_grid: vec![],
            per_delta: vec![],
            verdict: Verdict::NotExpansive,
            stability: None,
        };
        let out = verify_a2(&rot, &mu, &[2.0], &not, 1e-9).unwrap();
        assert_eq!(out.status, CheckStatus::Pass);
        assert!((out.metrics["per_mass_T2"] - 1.0).abs() < 1e-12);
        let fake = ExpansivityReport { verdict: Verdict::Expansive { delta: 0.1 }, ..not.clone() };
        assert_eq!(verify_a2(&rot, &mu, &[2.0], &fake, 1e-9).unwrap().status, CheckStatus::Fail);
        // empty Per_T
        let out = verify_a2(&rot, &mu, &[0.5], &fake, 1e-9).unwrap();
        assert_eq!(out.metrics["per_mass_T0.5"], 0.0);
        assert_eq!(out.status, CheckStatus::Pass);
    }

    #[test]
    fn a3_identity_agrees() {
        let (flow, mu) = shift_setup(100);
        let grid = [0.0625, 0.125];
        let q = BallQuery::new(0.125, 2.0, 0.125).unwrap();
        let pairs: Vec<_> = mu.points().zip(mu.points().skip(1)).map(|(a, b)| (*a, *b)).take(50).collect();
        let (out, a, b) = verify_a3(&A3Setup {
            src: &flow,
            dst: &flow,
            equivalence: &Equivalence::Identity,
            mu: &mu,
            delta_grid: &grid,
            q_src: q,
            q_dst: q,
            centers: 10,
            pairs: &pairs,
            seed: 3,
            epsilon: 0.05,
        })
        .unwrap();
        assert!(out.passed(), "{out:?}");
        assert_eq!(a.per_delta, b.per_delta);
    }

    #[test]
    fn thm_a2_guards() {
        let ns = FlowSystem::<f64>::north_south();
        let mu = lebesgue(BaseSpace::Circle, 10, 0).unwrap();
        let q = BallQuery::new(0.1, 1.0, 0.125).unwrap();
        assert!(verify_thm_a2_characterization(&ns, &mu, 0.2, &[MetricPoint::circle(0.3)], &q, 0.1).is_err());
        let rot = FlowSystem::circle_rotation(1.0);
        assert!(verify_thm_a2_characterization(&rot, &mu, 0.2, &[], &q, 0.1).is_err());
    }

    #[test]
    fn general3_refuses_atomic_measures() {
        let mu = bernoulli(20, 0.5, 100, 1).unwrap();
        let mu = point_mixture(MetricPoint::word(SymbolWindow::ones(20)), 0.5, &mu).unwrap();
        let (out, _, _) = verify_general3(&General3Setup {
            map: &BaseMap::BinaryShift { radius: 20 },
            mu: &mu,
            height: Height::constant(1.0),
            sub_atoms: 4,
            delta_grid: &[0.125],
            flow_query: BallQuery::new(0.125, 2.0, 0.125).unwrap(),
            centers: 2,
            seed: 0,
        })
        .unwrap();
        assert_eq!(out.status, CheckStatus::Inconclusive);
    }
}

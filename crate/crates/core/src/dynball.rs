//! Membership in dynamic balls.
//!
//! The map ball `Γ̂_δ(x)` collects `y` with `d(fⁿx, fⁿy) <= δ` for `|n| <= N`. The flow ball
//! `Γ_δ(x)` is decided on the free-space diagram of the two trajectories sampled over
//! `[-T, T]`: cell `(i, j)` is free when `d(φ_{t_i} x, φ_{u_j} y) <= δ`, and `y` is a member when
//! a monotone lattice path with steps `(+1,0)`, `(0,+1)`, `(+1,+1)` runs from the lower-left
//! boundary through the anchor cell `(t=0, u=0)` to the upper-right boundary. Leaving through
//! the top or right edge both count, so the decision is symmetric in `x` and `y` and monotone
//! in the horizon.

use std::cell::RefCell;

use rayon::prelude::*;

use crate::error::{invalid, unsupported, Result};
use crate::flows::{FlowSystem, Homeomorphism};
use crate::reparam::Reparameterization;
use crate::scalar::Scalar;
use crate::space::MetricPoint;

/// Metric used in place of the ambient one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricOverride {
    /// `d′(a, b) = min{d(a, b), d(f a, f b)}` for the map under test.
    DPrime,
}

/// Parameters shared by the ball queries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallQuery<S> {
    pub delta: S,
    /// Time horizon `T` for flows; iterate count `N` for maps.
    pub horizon: S,
    pub grid_step: S,
    pub metric_override: Option<MetricOverride>,
}

impl<S: Scalar> BallQuery<S> {
    pub fn new(delta: S, horizon: S, grid_step: S) -> Result<Self> {
        if !(delta > S::zero() && horizon > S::zero() && grid_step > S::zero()) {
            return invalid("delta, horizon and grid_step must be positive");
        }
        let ratio = horizon / grid_step;
        if (ratio - ratio.round()).abs() > S::lit(1e-9) * ratio.max(S::one()) {
            return invalid(format!("grid_step {grid_step} does not divide horizon {horizon}"));
        }
        Ok(Self { delta, horizon, grid_step, metric_override: None })
    }

    pub fn with_delta(&self, delta: S) -> Self {
        Self { delta, ..*self }
    }

    pub fn with_horizon(&self, horizon: S) -> Self {
        Self { horizon, ..*self }
    }

    pub fn with_grid_step(&self, grid_step: S) -> Self {
        Self { grid_step, ..*self }
    }

    /// Number of grid steps on each half-axis.
    pub fn half_steps(&self) -> usize {
        (self.horizon / self.grid_step).round().to_usize().expect("finite grid")
    }

    pub fn iterates(&self) -> usize {
        self.horizon.round().to_usize().unwrap_or(0).max(1)
    }

    fn check_resolution(&self, floor: S) -> Result<()> {
        if self.delta < floor {
            return invalid(format!("delta {} is below the space resolution {}", self.delta, floor));
        }
        Ok(())
    }
}

/// Outcome of an inclusion check: how many inputs were examined, how many satisfied the
/// premise, and the indices of those that failed the conclusion.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InclusionReport {
    pub checked: usize,
    pub premises: usize,
    pub violations: Vec<Vec<usize>>,
    /// Sampled modulus of continuity and whether it met the required bound.
    pub modulus: Option<(f64, bool)>,
}

impl InclusionReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `y ∈ Γ̂_δ(x)` over `|n| <= N` with `N = q.horizon` read as an iterate count.
pub fn map_ball_member<S: Scalar>(f: &Homeomorphism<S>, x: &MetricPoint<S>, y: &MetricPoint<S>, q: &BallQuery<S>) -> Result<bool> {
    let space = f.space();
    space.check(x)?;
    space.check(y)?;
    q.check_resolution(space.resolution())?;
    let n = q.iterates() as i64;
    let metric = |a: &MetricPoint<S>, b: &MetricPoint<S>| -> Result<S> {
        let d = f.distance(a, b)?;
        Ok(match q.metric_override {
            None => d,
            Some(MetricOverride::DPrime) => d.min(f.distance(&f.forward(a)?, &f.forward(b)?)?),
        })
    };
    // walk outwards from n = 0 so the usual early exits are cheap
    if metric(x, y)? > q.delta {
        return Ok(false);
    }
    let (mut xf, mut yf, mut xb, mut yb) = (*x, *y, *x, *y);
    for _ in 0..n {
        xf = f.forward(&xf)?;
        yf = f.forward(&yf)?;
        if metric(&xf, &yf)? > q.delta {
            return Ok(false);
        }
        xb = f.inverse(&xb)?;
        yb = f.inverse(&yb)?;
        if metric(&xb, &yb)? > q.delta {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A free-space diagram: a grid with one anchor cell.
pub trait FreeSpace {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn anchor(&self) -> (usize, usize);
    fn is_free(&self, i: usize, j: usize) -> bool;
}

/// Explicit boolean free-space matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeMatrix {
    rows: usize,
    cols: usize,
    anchor: (usize, usize),
    cells: Vec<bool>,
}

impl FreeMatrix {
    pub fn new(rows: usize, cols: usize, anchor: (usize, usize), cells: Vec<bool>) -> Result<Self> {
        if rows == 0 || cols == 0 || cells.len() != rows * cols || anchor.0 >= rows || anchor.1 >= cols {
            return invalid("free-space matrix dimensions are inconsistent");
        }
        Ok(Self { rows, cols, anchor, cells })
    }

    pub fn from_fn(rows: usize, cols: usize, anchor: (usize, usize), mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let cells = (0..rows * cols).map(|k| f(k / cols, k % cols)).collect();
        Self::new(rows, cols, anchor, cells)
    }

    /// Swaps the roles of the two trajectories.
    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, (self.anchor.1, self.anchor.0), |i, j| self.is_free(j, i))
            .expect("transpose of a valid matrix")
    }
}

impl FreeSpace for FreeMatrix {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn anchor(&self) -> (usize, usize) {
        self.anchor
    }
    fn is_free(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.cols + j]
    }
}

/// One of the two quadrants around the anchor, in local coordinates `(a, b)` with the anchor at
/// the origin and both coordinates growing away from it.
#[derive(Clone, Copy)]
struct Quadrant<'a, F: ?Sized> {
    fs: &'a F,
    forward: bool,
}

impl<F: FreeSpace + ?Sized> Quadrant<'_, F> {
    fn extent(&self) -> (usize, usize) {
        let (ci, cj) = self.fs.anchor();
        if self.forward {
            (self.fs.rows() - ci, self.fs.cols() - cj)
        } else {
            (ci + 1, cj + 1)
        }
    }

    fn global(&self, a: usize, b: usize) -> (usize, usize) {
        let (ci, cj) = self.fs.anchor();
        if self.forward {
            (ci + a, cj + b)
        } else {
            (ci - a, cj - b)
        }
    }

    fn free(&self, a: usize, b: usize) -> bool {
        let (i, j) = self.global(a, b);
        self.fs.is_free(i, j)
    }

    /// Row-by-row reachability from the anchor; only cells with a reachable predecessor are
    /// inspected, and the sweep stops at the first row with nothing reachable.
    fn reaches_boundary(&self) -> bool {
        let (h, w) = self.extent();
        let mut prev = vec![false; w];
        let mut cur = vec![false; w];
        for a in 0..h {
            let mut any = false;
            for b in 0..w {
                let pred = (a == 0 && b == 0)
                    || (a > 0 && (prev[b] || (b > 0 && prev[b - 1])))
                    || (b > 0 && cur[b - 1]);
                cur[b] = pred && self.free(a, b);
                if cur[b] {
                    if a == h - 1 || b == w - 1 {
                        return true;
                    }
                    any = true;
                }
            }
            if !any {
                return false;
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        false
    }

    /// `goal[a][b]`: the boundary is reachable from `(a, b)` through free cells.
    fn goal_table(&self) -> Vec<Vec<bool>> {
        let (h, w) = self.extent();
        let mut g = vec![vec![false; w]; h];
        for a in (0..h).rev() {
            for b in (0..w).rev() {
                if !self.free(a, b) {
                    continue;
                }
                g[a][b] = a == h - 1
                    || b == w - 1
                    || g[a + 1][b + 1]
                    || g[a + 1][b]
                    || g[a][b + 1];
            }
        }
        g
    }

    /// Accepting path from the anchor, preferring the diagonal, then `(+1,0)`, then `(0,+1)`.
    fn witness_path(&self) -> Option<Vec<(usize, usize)>> {
        let (h, w) = self.extent();
        let g = self.goal_table();
        if !g[0][0] {
            return None;
        }
        let mut path = vec![(0, 0)];
        let (mut a, mut b) = (0, 0);
        while !(a == h - 1 || b == w - 1) {
            let next = [(a + 1, b + 1), (a + 1, b), (a, b + 1)]
                .into_iter()
                .find(|&(p, q)| g[p][q])
                .expect("goal table guarantees a successor");
            (a, b) = next;
            path.push(next);
        }
        Some(path)
    }
}

/// Dynamic-programming decision of the anchored monotone path, `O(rows·cols)` worst case.
pub fn decide_free_space<F: FreeSpace + ?Sized>(fs: &F) -> bool {
    let (ci, cj) = fs.anchor();
    if !fs.is_free(ci, cj) {
        return false;
    }
    Quadrant { fs, forward: true }.reaches_boundary() && Quadrant { fs, forward: false }.reaches_boundary()
}

/// Largest half-axis the exhaustive oracle accepts.
pub const BRUTE_FORCE_MAX_HALF: usize = 8;

/// Exhaustive enumeration of monotone lattice paths, one half-path at a time.
pub fn decide_free_space_bruteforce<F: FreeSpace + ?Sized>(fs: &F) -> Result<bool> {
    let (ci, cj) = fs.anchor();
    let halves = [ci, cj, fs.rows() - 1 - ci, fs.cols() - 1 - cj];
    if halves.iter().any(|&h| h > BRUTE_FORCE_MAX_HALF) {
        return unsupported(format!("grid half-axes {halves:?} exceed {BRUTE_FORCE_MAX_HALF}"));
    }
    // the lower-left half, enumerated from each start on the lower-left boundary up to the
    // anchor; the upper-right half from the anchor to the upper-right boundary
    let mut starts: Vec<(usize, usize)> = (0..=ci).map(|i| (i, 0)).collect();
    starts.extend((1..=cj).map(|j| (0, j)));
    let lower = starts.into_iter().any(|(i, j)| enumerate(fs, i, j, &|i, j| i == ci && j == cj, (ci, cj)));
    let upper = enumerate(fs, ci, cj, &|i, j| i == fs.rows() - 1 || j == fs.cols() - 1, (fs.rows() - 1, fs.cols() - 1));
    Ok(lower && upper)
}

fn enumerate<F: FreeSpace + ?Sized>(
    fs: &F,
    i: usize,
    j: usize,
    done: &dyn Fn(usize, usize) -> bool,
    limit: (usize, usize),
) -> bool {
    if i > limit.0 || j > limit.1 || !fs.is_free(i, j) {
        return false;
    }
    if done(i, j) {
        return true;
    }
    enumerate(fs, i + 1, j + 1, done, limit) || enumerate(fs, i + 1, j, done, limit) || enumerate(fs, i, j + 1, done, limit)
}

/// Free space of two trajectories with lazily evaluated samples and cells.
struct TrajectoryFreeSpace<'a, S: Scalar> {
    flow: &'a FlowSystem<S>,
    x_samples: &'a [MetricPoint<S>],
    y: MetricPoint<S>,
    horizon: S,
    step: S,
    delta: S,
    y_samples: RefCell<Vec<Option<MetricPoint<S>>>>,
    cells: RefCell<Vec<u8>>,
    failure: RefCell<Option<crate::Error>>,
}

impl<'a, S: Scalar> TrajectoryFreeSpace<'a, S> {
    fn new(ball: &'a FlowBall<S>, y: &MetricPoint<S>, delta: S) -> Self {
        let n = ball.x_samples.len();
        Self {
            flow: &ball.flow,
            x_samples: &ball.x_samples,
            y: *y,
            horizon: ball.query.horizon,
            step: ball.query.grid_step,
            delta,
            y_samples: RefCell::new(vec![None; n]),
            cells: RefCell::new(vec![0; n * n]),
            failure: RefCell::new(None),
        }
    }

    fn y_at(&self, j: usize) -> Option<MetricPoint<S>> {
        if let Some(p) = self.y_samples.borrow()[j] {
            return Some(p);
        }
        let t = -self.horizon + S::from_count(j) * self.step;
        match self.flow.evaluate(t, &self.y) {
            Ok(p) => {
                self.y_samples.borrow_mut()[j] = Some(p);
                Some(p)
            }
            Err(e) => {
                self.failure.borrow_mut().get_or_insert(e);
                None
            }
        }
    }

    fn take_failure(&self) -> Result<()> {
        match self.failure.borrow_mut().take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

impl<S: Scalar> FreeSpace for TrajectoryFreeSpace<'_, S> {
    fn rows(&self) -> usize {
        self.x_samples.len()
    }
    fn cols(&self) -> usize {
        self.x_samples.len()
    }
    fn anchor(&self) -> (usize, usize) {
        let c = self.x_samples.len() / 2;
        (c, c)
    }
    fn is_free(&self, i: usize, j: usize) -> bool {
        let n = self.x_samples.len();
        let cached = self.cells.borrow()[i * n + j];
        if cached != 0 {
            return cached == 1;
        }
        let free = match self.y_at(j) {
            Some(yj) => match self.flow.distance(&self.x_samples[i], &yj) {
                Ok(d) => d <= self.delta,
                Err(e) => {
                    self.failure.borrow_mut().get_or_insert(e);
                    false
                }
            },
            None => false,
        };
        self.cells.borrow_mut()[i * n + j] = if free { 1 } else { 2 };
        free
    }
}

/// The sampled trajectory of a ball center, reusable across many candidate members.
#[derive(Debug, Clone)]
pub struct FlowBall<S: Scalar> {
    flow: FlowSystem<S>,
    center: MetricPoint<S>,
    query: BallQuery<S>,
    x_samples: Vec<MetricPoint<S>>,
}

impl<S: Scalar> FlowBall<S> {
    pub fn new(flow: &FlowSystem<S>, center: &MetricPoint<S>, q: &BallQuery<S>) -> Result<Self> {
        let space = flow.space();
        space.check(center)?;
        q.check_resolution(space.resolution())?;
        let k = q.half_steps();
        let x_samples = (0..=2 * k)
            .map(|i| flow.evaluate(-q.horizon + S::from_count(i) * q.grid_step, center))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { flow: flow.clone(), center: *center, query: *q, x_samples })
    }

    pub fn query(&self) -> &BallQuery<S> {
        &self.query
    }

    pub fn center(&self) -> &MetricPoint<S> {
        &self.center
    }

    /// Membership at the ball's own radius.
    pub fn contains(&self, y: &MetricPoint<S>) -> Result<bool> {
        self.contains_at(y, self.query.delta)
    }

    /// Membership at radius `delta` on the same grid.
    pub fn contains_at(&self, y: &MetricPoint<S>, delta: S) -> Result<bool> {
        self.flow.space().check(y)?;
        if self.flow.distance(&self.center, y)? > delta {
            return Ok(false);
        }
        let fs = TrajectoryFreeSpace::new(self, y, delta);
        let verdict = decide_free_space(&fs);
        fs.take_failure()?;
        Ok(verdict)
    }

    /// Explicit free-space matrix against `y`.
    pub fn free_matrix(&self, y: &MetricPoint<S>) -> Result<FreeMatrix> {
        self.flow.space().check(y)?;
        let y_samples = (0..self.x_samples.len())
            .map(|j| self.flow.evaluate(-self.query.horizon + S::from_count(j) * self.query.grid_step, y))
            .collect::<Result<Vec<_>>>()?;
        let n = self.x_samples.len();
        let mut cells = Vec::with_capacity(n * n);
        for xi in &self.x_samples {
            for yj in &y_samples {
                cells.push(self.flow.distance(xi, yj)? <= self.query.delta);
            }
        }
        FreeMatrix::new(n, n, (n / 2, n / 2), cells)
    }

    pub fn witness(&self, y: &MetricPoint<S>) -> Result<Option<Reparameterization<S>>> {
        if !self.contains(y)? {
            return Ok(None);
        }
        let fs = TrajectoryFreeSpace::new(self, y, self.query.delta);
        let forward = Quadrant { fs: &fs, forward: true }.witness_path();
        let backward = Quadrant { fs: &fs, forward: false }.witness_path();
        fs.take_failure()?;
        let (Some(forward), Some(backward)) = (forward, backward) else {
            return Ok(None);
        };
        let step = self.query.grid_step;
        let fwd = path_knots(&forward, step);
        let mut knots: Vec<(S, S)> = path_knots(&backward, step).into_iter().skip(1).rev().map(|(t, u)| (-t, -u)).collect();
        knots.extend(fwd);
        Reparameterization::new(knots).map(Some)
    }
}

/// Knots for a half-path in local coordinates: each row contributes its first visited column;
/// rows sharing a column are spread evenly inside that column's step so the map stays strictly
/// increasing and every knot is within one step of a free cell.
fn path_knots<S: Scalar>(path: &[(usize, usize)], step: S) -> Vec<(S, S)> {
    let mut firsts: Vec<(usize, usize)> = Vec::new();
    for &(a, b) in path {
        if firsts.last().map_or(true, |&(pa, _)| pa != a) {
            firsts.push((a, b));
        }
    }
    let mut knots = Vec::with_capacity(firsts.len());
    let mut k = 0;
    while k < firsts.len() {
        let b0 = firsts[k].1;
        let run = firsts[k..].iter().take_while(|&&(_, b)| b == b0).count();
        for r in 0..run {
            let a = firsts[k + r].0;
            let u = (S::from_count(b0) + S::from_count(r) / S::from_count(run)) * step;
            knots.push((S::from_count(a) * step, u));
        }
        k += run;
    }
    knots
}

/// `y ∈ Γ_δ(x)` on the sampled window `[-T, T]`.
pub fn flow_ball_member<S: Scalar>(flow: &FlowSystem<S>, x: &MetricPoint<S>, y: &MetricPoint<S>, q: &BallQuery<S>) -> Result<bool> {
    let space = flow.space();
    space.check(x)?;
    space.check(y)?;
    q.check_resolution(space.resolution())?;
    if flow.distance(x, y)? > q.delta {
        return Ok(false);
    }
    FlowBall::new(flow, x, q)?.contains(y)
}

/// Same contract as [`flow_ball_member`], decided by exhaustive path enumeration on an eagerly
/// built free-space matrix.
pub fn flow_ball_member_bruteforce<S: Scalar>(flow: &FlowSystem<S>, x: &MetricPoint<S>, y: &MetricPoint<S>, q: &BallQuery<S>) -> Result<bool> {
    if q.half_steps() > BRUTE_FORCE_MAX_HALF {
        return unsupported(format!("{} steps per half-axis exceed {BRUTE_FORCE_MAX_HALF}", q.half_steps()));
    }
    let space = flow.space();
    space.check(x)?;
    space.check(y)?;
    q.check_resolution(space.resolution())?;
    let ts: Vec<S> = (0..=2 * q.half_steps()).map(|i| -q.horizon + S::from_count(i) * q.grid_step).collect();
    let xs = ts.iter().map(|&t| flow.evaluate(t, x)).collect::<Result<Vec<_>>>()?;
    let ys = ts.iter().map(|&t| flow.evaluate(t, y)).collect::<Result<Vec<_>>>()?;
    let n = ts.len();
    let mut cells = Vec::with_capacity(n * n);
    for xi in &xs {
        for yj in &ys {
            cells.push(flow.distance(xi, yj)? <= q.delta);
        }
    }
    decide_free_space_bruteforce(&FreeMatrix::new(n, n, (n / 2, n / 2), cells)?)
}

/// Reparameterization realising membership, or `None` when `y ∉ Γ_δ(x)`.
pub fn witness_reparam<S: Scalar>(flow: &FlowSystem<S>, x: &MetricPoint<S>, y: &MetricPoint<S>, q: &BallQuery<S>) -> Result<Option<Reparameterization<S>>> {
    FlowBall::new(flow, x, q)?.witness(y)
}

/// `max d(φ_t x, φ_{h(t)} y)` over the knot times of `h`.
pub fn replay_witness<S: Scalar>(flow: &FlowSystem<S>, x: &MetricPoint<S>, y: &MetricPoint<S>, h: &Reparameterization<S>) -> Result<S> {
    let mut worst = S::zero();
    for &(t, u) in h.knots() {
        let d = flow.distance(&flow.evaluate(t, x)?, &flow.evaluate(u, y)?)?;
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Slack allowed when replaying a witness: the flow's displacement over one grid step.
pub fn witness_slack<S: Scalar>(flow: &FlowSystem<S>, q: &BallQuery<S>) -> S {
    flow.max_speed() * q.grid_step
}

/// Sampled check of `Γ_δ(x) ⊂ Γ_α(y)` for every `y ∈ Γ_δ(x)`: all probes inside `Γ_δ(x)` are
/// tested pairwise. Violations are `[y_index, z_index]` into `probes`.
pub fn check_c1_inclusion<S: Scalar>(
    flow: &FlowSystem<S>,
    x: &MetricPoint<S>,
    delta: S,
    alpha: S,
    probes: &[MetricPoint<S>],
    q: &BallQuery<S>,
) -> Result<InclusionReport> {
    let ball = FlowBall::new(flow, x, &q.with_delta(delta))?;
    let mut members = Vec::new();
    for (k, p) in probes.iter().enumerate() {
        if ball.contains(p)? {
            members.push(k);
        }
    }
    let outer = q.with_delta(alpha);
    let rows = members
        .par_iter()
        .map(|&yi| -> Result<(usize, Vec<Vec<usize>>)> {
            let around = FlowBall::new(flow, &probes[yi], &outer)?;
            let mut bad = Vec::new();
            for &zi in &members {
                if !around.contains(&probes[zi])? {
                    bad.push(vec![yi, zi]);
                }
            }
            Ok((members.len(), bad))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = InclusionReport { checked: probes.len() * probes.len(), ..Default::default() };
    for (count, bad) in rows {
        report.premises += count;
        report.violations.extend(bad);
    }
    Ok(report)
}

/// Sampled check of `Γ̂_α^{φ_T}(x) ⊂ Γ_δ(x)`.
///
/// The map ball uses `N = ceil(T_flow / |T|)` iterates so the iterates cover the flow
/// window. The sampled modulus of continuity — the largest `d(φ_s z, φ_s w)` for `s` on a
/// 1/16 mesh of `[0, |T|]` over iterate pairs with `d(z, w) <= α` — is reported alongside.
pub fn check_lele_inclusion<S: Scalar>(
    flow: &FlowSystem<S>,
    t: S,
    alpha: S,
    delta: S,
    pairs: &[(MetricPoint<S>, MetricPoint<S>)],
    q: &BallQuery<S>,
) -> Result<InclusionReport> {
    if t == S::zero() {
        return invalid("time-T map needs T != 0");
    }
    let map = flow.time_t_map(t);
    let iterates = (q.horizon / t.abs()).ceil();
    let mq = BallQuery { delta: alpha, horizon: iterates, grid_step: S::one(), metric_override: None };
    let fq = q.with_delta(delta);
    let mesh: Vec<S> = (0..=16).map(|k| t.abs() * S::from_count(k) / S::lit(16.0)).collect();
    let n = iterates.to_i64().expect("finite iterate count");
    let results = pairs
        .par_iter()
        .enumerate()
        .map(|(k, (x, y))| -> Result<(bool, bool, S)> {
            let mut modulus = S::zero();
            for m in -n..=n {
                let (z, w) = (map.iterate(x, m)?, map.iterate(y, m)?);
                if flow.distance(&z, &w)? <= alpha {
                    for &s in &mesh {
                        modulus = modulus.max(flow.distance(&flow.evaluate(s, &z)?, &flow.evaluate(s, &w)?)?);
                    }
                }
            }
            let _ = k;
            if !map_ball_member(&map, x, y, &mq)? {
                return Ok((false, true, modulus));
            }
            Ok((true, flow_ball_member(flow, x, y, &fq)?, modulus))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = InclusionReport { checked: pairs.len(), ..Default::default() };
    let mut modulus = S::zero();
    for (k, (premise, ok, m)) in results.into_iter().enumerate() {
        modulus = modulus.max(m);
        if premise {
            report.premises += 1;
            if !ok {
                report.violations.push(vec![k]);
            }
        }
    }
    report.modulus = Some((modulus.as_f64(), modulus <= delta));
    Ok(report)
}

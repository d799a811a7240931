//! Finite weighted atom sets standing in for Borel measures.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, unsupported, Error, Result};
use crate::flows::{FlowSystem, Homeomorphism};
use crate::scalar::{compensated_sum, Scalar};
use crate::space::{BasePoint, BaseSpace, MetricPoint, SpaceDescriptor, SymbolWindow};
use crate::suspension::{SuspensionPoint, SuspensionSpace};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom<S> {
    pub point: MetricPoint<S>,
    pub weight: S,
}

/// An empirical measure: atoms on a common space.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure<S> {
    space: SpaceDescriptor<S>,
    atoms: Vec<Atom<S>>,
    total: S,
}

impl<S: Scalar> EmpiricalMeasure<S> {
    pub fn new(space: SpaceDescriptor<S>, atoms: Vec<Atom<S>>) -> Result<Self> {
        for (k, a) in atoms.iter().enumerate() {
            if !(a.weight >= S::zero() && a.weight.is_finite()) {
                return invalid(format!("atom {k} has weight {}", a.weight));
            }
            space.check(&a.point)?;
        }
        let total = compensated_sum(atoms.iter().map(|a| a.weight));
        Ok(Self { space, atoms, total })
    }

    /// Equal weights `1/n` on the given points.
    pub fn uniform_on(space: SpaceDescriptor<S>, points: Vec<MetricPoint<S>>) -> Result<Self> {
        if points.is_empty() {
            return invalid("a probability measure needs at least one atom");
        }
        let w = S::one() / S::from_count(points.len());
        Self::new(space, points.into_iter().map(|point| Atom { point, weight: w }).collect())
    }

    pub fn space(&self) -> &SpaceDescriptor<S> {
        &self.space
    }

    pub fn atoms(&self) -> &[Atom<S>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = &MetricPoint<S>> {
        self.atoms.iter().map(|a| &a.point)
    }

    pub fn total_mass(&self) -> S {
        self.total
    }

    /// A sampled measure represents a non-atomic one when this is at most the sampling
    /// resolution.
    pub fn max_atom_weight(&self) -> S {
        self.atoms.iter().map(|a| a.weight).fold(S::zero(), S::max)
    }

    /// Default verdict threshold `3/√n`.
    pub fn default_epsilon(&self) -> S {
        S::lit(3.0) / S::from_count(self.atoms.len().max(1)).sqrt()
    }

    /// `f_*μ`: atoms moved by `f`, weights unchanged.
    pub fn pushforward(&self, f: &Homeomorphism<S>) -> Result<Self> {
        if f.space() != self.space {
            return invalid(format!("map acts on {}, measure lives on {}", f.space().name(), self.space.name()));
        }
        self.pushforward_with(self.space.clone(), |p| f.forward(p))
    }

    /// Pushforward under an arbitrary point map into `target`.
    pub fn pushforward_with(
        &self,
        target: SpaceDescriptor<S>,
        g: impl Fn(&MetricPoint<S>) -> Result<MetricPoint<S>>,
    ) -> Result<Self> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Ok(Atom { point: g(&a.point)?, weight: a.weight }))
            .collect::<Result<Vec<_>>>()?;
        for a in &atoms {
            target.check(&a.point)?;
        }
        Ok(Self { space: target, atoms, total: self.total })
    }

    /// `Σ` of weights of atoms satisfying `member`.
    pub fn ball_mass(&self, mut member: impl FnMut(&MetricPoint<S>) -> Result<bool>) -> Result<S> {
        let mut hits = Vec::new();
        for a in &self.atoms {
            if member(&a.point)? {
                hits.push(a.weight);
            }
        }
        Ok(compensated_sum(hits))
    }

    /// Mass within `tube` of the orbit segment `φ_[-horizon, horizon](x)`.
    ///
    /// The segment is sampled finely enough that consecutive samples are within `tube/2` of
    /// each other, and each atom is tested against the nearest sample with radius `tube`.
    pub fn orbit_mass(&self, flow: &FlowSystem<S>, x: &MetricPoint<S>, horizon: S, tube: S) -> Result<S> {
        if !(tube > S::zero()) || horizon < S::zero() {
            return invalid("orbit tube must be positive and horizon nonnegative");
        }
        if flow.space() != self.space {
            return invalid("flow and measure live on different spaces");
        }
        let speed = flow.max_speed();
        let step = if speed > S::zero() { tube / (S::lit(2.0) * speed) } else { horizon.max(S::one()) };
        let n = (S::lit(2.0) * horizon / step).ceil().to_usize().unwrap_or(usize::MAX);
        if n > 2_000_000 {
            return unsupported(format!("orbit segment needs {n} samples"));
        }
        let samples = (0..=n)
            .map(|i| flow.evaluate(-horizon + S::from_count(i) * step, x))
            .collect::<Result<Vec<_>>>()?;
        self.ball_mass(|p| {
            for s in &samples {
                if flow.distance(s, p)? <= tube {
                    return Ok(true);
                }
            }
            Ok(false)
        })
    }

    /// `μ` placed on the section `X × {0}` of `s`.
    pub fn on_section(&self, s: &SuspensionSpace<S>) -> Result<Self> {
        self.lift(s, |_| vec![(S::zero(), S::one())])
    }

    fn lift(&self, s: &SuspensionSpace<S>, fibers: impl Fn(&BasePoint<S>) -> Vec<(S, S)>) -> Result<Self> {
        if self.space != SpaceDescriptor::Base(s.base_space()) {
            return invalid(format!("measure on {} cannot be suspended over {}", self.space.name(), s.base_map().name()));
        }
        let mut atoms = Vec::new();
        for a in &self.atoms {
            let MetricPoint::Base(base) = a.point else {
                return invalid("suspension needs base points");
            };
            for (t, share) in fibers(&base) {
                atoms.push(Atom { point: MetricPoint::Suspended(s.point(base, t)), weight: a.weight * share });
            }
        }
        let space = SpaceDescriptor::Suspension(s.clone());
        let total = compensated_sum(atoms.iter().map(|a| a.weight));
        Ok(Self { space, atoms, total })
    }

    /// Reads atoms `coord...,weight` from CSV with a header row.
    pub fn read_csv<R: Read>(space: SpaceDescriptor<S>, reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let dim = space.dimension();
        let mut atoms = Vec::new();
        for (k, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::InvalidArgument(format!("csv row {k}: {e}")))?;
            if record.len() != dim + 1 {
                return invalid(format!("csv row {k}: expected {} fields, got {}", dim + 1, record.len()));
            }
            let values = record
                .iter()
                .map(|f| f.trim().parse::<f64>().map(S::lit))
                .collect::<std::result::Result<Vec<S>, _>>()
                .map_err(|e| Error::InvalidArgument(format!("csv row {k}: {e}")))?;
            atoms.push(Atom { point: space.from_coords(&values[..dim])?, weight: values[dim] });
        }
        Self::new(space, atoms)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.space.dimension()).map(|i| format!("c{i}")).collect();
        header.push("weight".into());
        w.write_record(&header).map_err(io_error)?;
        for a in &self.atoms {
            let mut row: Vec<String> = a.point.coords().iter().map(|c| format!("{}", c.as_f64())).collect();
            row.push(format!("{}", a.weight.as_f64()));
            w.write_record(&row).map_err(io_error)?;
        }
        w.flush().map_err(io_error)
    }

    /// Little-endian `f64` records of `dimension + 1` values, preceded by the atom count as a
    /// little-endian `u64`.
    pub fn write_binary<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(&(self.atoms.len() as u64).to_le_bytes()).map_err(io_error)?;
        for a in &self.atoms {
            for c in a.point.coords().into_iter().chain([a.weight]) {
                writer.write_all(&c.as_f64().to_le_bytes()).map_err(io_error)?;
            }
        }
        writer.flush().map_err(io_error)
    }

    pub fn read_binary<R: Read>(space: SpaceDescriptor<S>, mut reader: R) -> Result<Self> {
        let mut word = [0u8; 8];
        reader.read_exact(&mut word).map_err(io_error)?;
        let n = u64::from_le_bytes(word);
        let dim = space.dimension();
        let mut atoms = Vec::with_capacity(n.min(1 << 20) as usize);
        let mut values = vec![S::zero(); dim + 1];
        for _ in 0..n {
            for v in values.iter_mut() {
                reader.read_exact(&mut word).map_err(io_error)?;
                *v = S::lit(f64::from_le_bytes(word));
            }
            atoms.push(Atom { point: space.from_coords(&values[..dim])?, weight: values[dim] });
        }
        Self::new(space, atoms)
    }
}

fn io_error(e: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(format!("atom table I/O: {e}"))
}

/// `T^{τ,f}(μ)`: each atom `(x, w)` becomes `m` atoms `((x, (j + ½)τ(x)/m), w/m)`.
pub fn suspend_measure<S: Scalar>(mu: &EmpiricalMeasure<S>, s: &SuspensionSpace<S>, m: usize) -> Result<EmpiricalMeasure<S>> {
    if m == 0 {
        return invalid("need at least one sub-atom per fiber");
    }
    let mf = S::from_count(m);
    mu.lift(s, |x| {
        let tau = s.height().eval(x);
        (0..m).map(|j| ((S::from_count(j) + S::lit(0.5)) * tau / mf, S::one() / mf)).collect()
    })
}

/// Windows with i.i.d. Bernoulli(`p`) symbols.
pub fn bernoulli<S: Scalar>(radius: u8, p: f64, n: usize, seed: u64) -> Result<EmpiricalMeasure<S>> {
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("Bernoulli parameter {p} outside [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| SymbolWindow::from_fn(radius, |_| rng.gen_bool(p)).map(MetricPoint::word))
        .collect::<Result<Vec<_>>>()?;
    EmpiricalMeasure::uniform_on(SpaceDescriptor::shift(radius), points)
}

/// Reference measure of a base space: midpoint grid on the circle, uniform samples on the torus,
/// Bernoulli(½) on the shift.
pub fn lebesgue<S: Scalar>(space: BaseSpace, n: usize, seed: u64) -> Result<EmpiricalMeasure<S>> {
    match space {
        BaseSpace::Circle => {
            let pts = (0..n).map(|i| MetricPoint::circle((S::from_count(i) + S::lit(0.5)) / S::from_count(n))).collect();
            EmpiricalMeasure::uniform_on(SpaceDescriptor::circle(), pts)
        }
        BaseSpace::Torus => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts = (0..n).map(|_| MetricPoint::torus(S::lit(rng.gen()), S::lit(rng.gen()))).collect();
            EmpiricalMeasure::uniform_on(SpaceDescriptor::torus(), pts)
        }
        BaseSpace::Shift { radius } => bernoulli(radius, 0.5, n, seed),
    }
}

/// Equal atoms along `φ_[0, length)(x)`.
pub fn orbit_segment<S: Scalar>(flow: &FlowSystem<S>, x: &MetricPoint<S>, length: S, n: usize) -> Result<EmpiricalMeasure<S>> {
    let pts = (0..n)
        .map(|i| flow.evaluate(length * S::from_count(i) / S::from_count(n.max(1)), x))
        .collect::<Result<Vec<_>>>()?;
    EmpiricalMeasure::uniform_on(flow.space(), pts)
}

/// `w·δ_p + (1 - w)·rest`.
pub fn point_mixture<S: Scalar>(point: MetricPoint<S>, weight: S, rest: &EmpiricalMeasure<S>) -> Result<EmpiricalMeasure<S>> {
    if !(weight >= S::zero() && weight <= S::one()) {
        return invalid(format!("mixture weight {weight} outside [0, 1]"));
    }
    let scale = (S::one() - weight) / rest.total_mass();
    let mut atoms = vec![Atom { point, weight }];
    atoms.extend(rest.atoms().iter().map(|a| Atom { point: a.point, weight: a.weight * scale }));
    EmpiricalMeasure::new(rest.space().clone(), atoms)
}

/// `count` pairs `(x, x')` with `x` drawn from the atoms and `x'` a random perturbation of `x`
/// (see [`near_points`]).
pub fn near_pairs<S: Scalar>(mu: &EmpiricalMeasure<S>, count: usize, scale: S, seed: u64) -> Vec<(MetricPoint<S>, MetricPoint<S>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = mu.len();
    (0..count)
        .map(|_| {
            let x = mu.atoms()[rng.gen_range(0..n)].point;
            let y = perturb(mu.space(), &x, scale, &mut rng);
            (x, y)
        })
        .collect()
}

/// Random perturbations of `x` of size about `scale`: a flipped symbol at some `|n|` with
/// `2^-|n| <= scale`, coordinate offsets in `[-scale, scale]`, and a fiber offset in
/// `[-scale, scale]` for suspension points.
pub fn near_points<S: Scalar>(space: &SpaceDescriptor<S>, x: &MetricPoint<S>, count: usize, scale: S, seed: u64) -> Vec<MetricPoint<S>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| perturb(space, x, scale, &mut rng)).collect()
}

fn perturb<S: Scalar>(space: &SpaceDescriptor<S>, p: &MetricPoint<S>, scale: S, rng: &mut ChaCha8Rng) -> MetricPoint<S> {
    let offset = |rng: &mut ChaCha8Rng| scale * S::lit(rng.gen_range(-1.0..=1.0));
    let base = |b: &BasePoint<S>, rng: &mut ChaCha8Rng| -> BasePoint<S> {
        match b {
            BasePoint::Circle(c) => BasePoint::circle(*c + offset(rng)),
            BasePoint::Torus([x, y]) => BasePoint::torus(*x + offset(rng), *y + offset(rng)),
            BasePoint::Word(w) => {
                let r = i32::from(w.radius());
                let lo = (-scale.log2()).ceil().to_i32().unwrap_or(r).clamp(0, r);
                let k = rng.gen_range(lo..=r);
                BasePoint::Word(w.flipped(if rng.gen_bool(0.5) { k } else { -k }))
            }
        }
    };
    match (space, p) {
        (SpaceDescriptor::Suspension(s), MetricPoint::Suspended(q)) => {
            let b = base(&q.base, rng);
            let t = q.fiber + offset(rng);
            MetricPoint::Suspended(s.canonicalize(b, t))
        }
        (_, MetricPoint::Base(b)) => MetricPoint::Base(base(b, rng)),
        _ => *p,
    }
}

/// Canonical suspended point convenience.
pub fn suspended<S: Scalar>(base: BasePoint<S>, fiber: S) -> MetricPoint<S> {
    MetricPoint::Suspended(SuspensionPoint { base, fiber })
}

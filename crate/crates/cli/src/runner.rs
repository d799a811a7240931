//! Executes a configured experiment and writes its report files.

use std::path::{Path, PathBuf};

use serde::Serialize;

use expansive_lab::dynball::{check_c1_inclusion, check_lele_inclusion, BallQuery, InclusionReport};
use expansive_lab::expansivity::{
    sample_centers, search_expansivity_constant, verify_a1, verify_a2, verify_a4, verify_general2, verify_general3,
    verify_thm_a2_characterization, CheckOutcome, CheckStatus, ExpansivityReport, General3Setup,
};
use expansive_lab::measures::{bernoulli, lebesgue, near_pairs, near_points, orbit_segment, suspend_measure};
use expansive_lab::suspension::{check_suspension1_inclusion, Height};
use expansive_lab::{BaseSpace, Flow, Measure, Point, SpaceDescriptor};

use crate::config::{self, AtomFormat, CheckKind, ExpectedVerdict, LoadedConfig, MeasureSpec};
use crate::{registry, write_atomic, ConfigError, RunError, EXIT_OK, EXIT_VIOLATION};

/// Files written by a run and the resulting exit status.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub report_path: PathBuf,
    pub csv_path: PathBuf,
    pub checks: Vec<CheckOutcome>,
    pub report: ExpansivityReport,
}

#[derive(Serialize)]
struct RunReport<'a> {
    tool: &'static str,
    version: &'static str,
    schema_version: u32,
    config_hash: &'a str,
    seed: u64,
    expansivity: &'a ExpansivityReport,
    checks: &'a [CheckOutcome],
    exit_code: i32,
}

/// The measure under test and, when it is a suspended measure, its base measure.
struct Measures {
    mu: Measure,
    base: Option<(Measure, usize)>,
}

pub fn run(path: &Path, out_dir: Option<&Path>) -> Result<RunOutcome, RunError> {
    let loaded = config::load(path)?;
    run_loaded(&loaded, out_dir)
}

pub fn run_loaded(loaded: &LoadedConfig, out_dir: Option<&Path>) -> Result<RunOutcome, RunError> {
    let cfg = &loaded.config;
    let (flow, base_map) = registry::build(&cfg.system)?;
    let measures = build_measure(loaded, &flow)?;
    let mu = &measures.mu;
    let q = BallQuery::new(cfg.query.delta_grid[0], cfg.query.horizon, cfg.query.grid_step)
        .map_err(|e| ConfigError::new("query", e.to_string()))?;
    let epsilon = cfg.epsilon.unwrap_or_else(|| mu.default_epsilon());
    let centers = sample_centers(mu, cfg.query.centers, cfg.seed);
    let grid = &cfg.query.delta_grid;

    let report = search_expansivity_constant(&flow, mu, grid, &centers, &q, epsilon)?;
    let mut checks = Vec::new();
    for kind in &cfg.checks {
        let outcome = match kind {
            CheckKind::Expansivity => expectation(cfg, &report),
            CheckKind::A1 => verify_a1(&flow, mu, &report, grid[0])?,
            CheckKind::A2 => {
                let tube = flow.space().resolution().max(1e-9);
                verify_a2(&flow, mu, &cfg.query.periods, &report, tube)?
            }
            CheckKind::A4 => verify_a4(&flow, mu, &report, &centers, cfg.query.orbit_horizon)?,
            CheckKind::General2 => {
                let mut out = Vec::new();
                for &t in &cfg.query.map_times {
                    out.push(verify_general2(&flow, mu, t, &report, grid, &centers, &q)?.0);
                }
                merge("general2", out)
            }
            CheckKind::General3 => general3(cfg, &flow, base_map.as_ref(), &measures, &q)?,
            CheckKind::ThmA2 => {
                let alpha = (2.0 * grid[grid.len() - 1]).min(flow.space().diameter());
                verify_thm_a2_characterization(&flow, mu, alpha, &centers, &q, epsilon)?
            }
            CheckKind::Lele => {
                let delta = grid[grid.len() - 1];
                let t = cfg.query.map_times.first().copied().unwrap_or(1.0);
                let pairs = near_pairs(mu, cfg.query.pairs, delta, cfg.seed ^ 0x1e1e);
                inclusion("lele", &check_lele_inclusion(&flow, t, delta / 2.0, delta, &pairs, &q)?)
            }
            CheckKind::Suspension1 => suspension1(cfg, &flow, mu, &q)?,
            CheckKind::C1 => c1(cfg, &flow, mu, &centers, &q)?,
        };
        checks.push(outcome);
    }

    let exit_code = if checks.iter().all(CheckOutcome::ok) { EXIT_OK } else { EXIT_VIOLATION };
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.dir.clone());
    let report_path = dir.join(&cfg.output.report);
    let csv_path = dir.join(&cfg.output.csv);
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    let doc = RunReport {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        schema_version: cfg.schema_version,
        config_hash: &loaded.hash,
        seed: cfg.seed,
        expansivity: &report,
        checks: &checks,
        exit_code,
    };
    let mut json = serde_json::to_vec_pretty(&doc).expect("report serializes");
    json.push(b'\n');
    write_atomic(&csv_path, &csv)?;
    write_atomic(&report_path, &json)?;
    Ok(RunOutcome { exit_code, report_path, csv_path, checks, report })
}

fn build_measure(loaded: &LoadedConfig, flow: &Flow) -> Result<Measures, RunError> {
    let cfg = &loaded.config;
    let seed = cfg.seed;
    let space = flow.space();
    let base_space = match &space {
        SpaceDescriptor::Base(b) => *b,
        SpaceDescriptor::Suspension(s) => s.base_space(),
    };
    let lift = |base: Measure, m: usize| -> Result<Measures, RunError> {
        match flow.suspension_space() {
            Some(s) => Ok(Measures { mu: suspend_measure(&base, s, m)?, base: Some((base, m)) }),
            None => Ok(Measures { mu: base, base: None }),
        }
    };
    match &cfg.measure {
        MeasureSpec::Bernoulli { atoms, p, sub_atoms } => {
            let BaseSpace::Shift { radius } = base_space else {
                return Err(ConfigError::new("measure.kind", "bernoulli needs a shift system").into());
            };
            lift(bernoulli(radius, *p, *atoms, seed)?, *sub_atoms)
        }
        MeasureSpec::Lebesgue { atoms, sub_atoms } => lift(lebesgue(base_space, *atoms, seed)?, *sub_atoms),
        MeasureSpec::Section { atoms } => {
            let s = flow.suspension_space().expect("validated: suspension system");
            Ok(Measures { mu: lebesgue(base_space, *atoms, seed)?.on_section(s)?, base: None })
        }
        MeasureSpec::OrbitSegment { atoms, length } => {
            let start = lift(lebesgue(base_space, 1, seed)?, 1)?.mu.atoms()[0].point;
            Ok(Measures { mu: orbit_segment(flow, &start, *length, *atoms)?, base: None })
        }
        MeasureSpec::AtomsFile { path, format } => {
            let path = loaded.resolve(path);
            let file = std::fs::File::open(&path)
                .map_err(|e| ConfigError::new("measure.path", format!("cannot open {}: {e}", path.display())))?;
            let reader = std::io::BufReader::new(file);
            let mu = match format {
                AtomFormat::Csv => Measure::read_csv(space, reader),
                AtomFormat::Binary => Measure::read_binary(space, reader),
            }
            .map_err(|e| ConfigError::new("measure.path", e.to_string()))?;
            Ok(Measures { mu, base: None })
        }
    }
}

fn expectation(cfg: &config::ExperimentConfig, report: &ExpansivityReport) -> CheckOutcome {
    let expect = cfg.expect.as_ref().expect("validated: expectation present");
    let ok = match expect.verdict {
        ExpectedVerdict::Expansive => {
            report.verdict.is_expansive() && expect.delta.map_or(true, |d| report.verdict.constant() == Some(d))
        }
        ExpectedVerdict::NotExpansive => report.verdict.is_not_expansive(),
    };
    let mut out = CheckOutcome {
        name: "expansivity".into(),
        status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
        detail: format!("expected {:?} {:?}, found {:?}", expect.verdict, expect.delta, report.verdict),
        metrics: Default::default(),
    };
    if let Some(d) = report.verdict.constant() {
        out.metrics.insert("delta_star".into(), d);
    }
    out
}

fn merge(name: &str, parts: Vec<CheckOutcome>) -> CheckOutcome {
    let status = if parts.iter().any(|c| c.status == CheckStatus::Fail) {
        CheckStatus::Fail
    } else if parts.iter().any(|c| c.status == CheckStatus::Inconclusive) {
        CheckStatus::Inconclusive
    } else if parts.iter().all(|c| c.status == CheckStatus::Vacuous) {
        CheckStatus::Vacuous
    } else {
        CheckStatus::Pass
    };
    let mut metrics = std::collections::BTreeMap::new();
    for (k, c) in parts.iter().enumerate() {
        for (m, v) in &c.metrics {
            metrics.insert(format!("{k}.{m}"), *v);
        }
    }
    let detail = parts.iter().map(|c| c.detail.as_str()).collect::<Vec<_>>().join("; ");
    CheckOutcome { name: name.into(), status, detail, metrics }
}

fn inclusion(name: &str, r: &InclusionReport) -> CheckOutcome {
    let status = if !r.is_clean() {
        CheckStatus::Fail
    } else if r.premises == 0 {
        CheckStatus::Vacuous
    } else {
        CheckStatus::Pass
    };
    let mut metrics = std::collections::BTreeMap::new();
    metrics.insert("checked".into(), r.checked as f64);
    metrics.insert("premises".into(), r.premises as f64);
    metrics.insert("violations".into(), r.violations.len() as f64);
    if let Some((m, ok)) = r.modulus {
        metrics.insert("modulus".into(), m);
        metrics.insert("modulus_ok".into(), f64::from(u8::from(ok)));
    }
    CheckOutcome {
        name: name.into(),
        status,
        detail: format!("{} violations among {} premises", r.violations.len(), r.premises),
        metrics,
    }
}

fn vacuous(name: &str, why: &str) -> CheckOutcome {
    CheckOutcome { name: name.into(), status: CheckStatus::Vacuous, detail: why.into(), metrics: Default::default() }
}

fn general3(
    cfg: &config::ExperimentConfig,
    flow: &Flow,
    base_map: Option<&expansive_lab::maps::BaseMap<f64>>,
    measures: &Measures,
    q: &BallQuery<f64>,
) -> Result<CheckOutcome, RunError> {
    let (Some(map), Some((base, m)), Some(s)) = (base_map, measures.base.as_ref(), flow.suspension_space()) else {
        return Ok(vacuous("general3", "needs a suspended base measure"));
    };
    let grid: Vec<f64> = cfg.query.delta_grid.iter().copied().filter(|d| *d < 0.25).collect();
    if grid.is_empty() {
        return Ok(vacuous("general3", "no grid radius below 1/4"));
    }
    let Height::Constant { value } = *s.height() else {
        return Ok(vacuous("general3", "variable heights are not matched"));
    };
    let (out, _, _) = verify_general3(&General3Setup {
        map,
        mu: base,
        height: Height::constant(value),
        sub_atoms: *m,
        delta_grid: &grid,
        flow_query: q.with_delta(grid[0]),
        centers: cfg.query.centers,
        seed: cfg.seed,
    })?;
    Ok(out)
}

fn suspension1(cfg: &config::ExperimentConfig, flow: &Flow, mu: &Measure, q: &BallQuery<f64>) -> Result<CheckOutcome, RunError> {
    let Some(s) = flow.suspension_space().filter(|s| s.is_unit_height()) else {
        return Ok(vacuous("suspension1", "needs a unit-height suspension"));
    };
    let Some(delta) = cfg.query.delta_grid.iter().copied().filter(|d| *d < 0.25).last() else {
        return Ok(vacuous("suspension1", "no grid radius below 1/4"));
    };
    let pairs: Vec<_> = near_pairs(mu, cfg.query.pairs, delta, cfg.seed ^ 0x5151)
        .into_iter()
        .filter_map(|(a, b)| Some((*a.as_suspended()?, *b.as_suspended()?)))
        .collect();
    Ok(inclusion("suspension1", &check_suspension1_inclusion(s, delta, &pairs, q)?))
}

fn c1(cfg: &config::ExperimentConfig, flow: &Flow, mu: &Measure, centers: &[Point], q: &BallQuery<f64>) -> Result<CheckOutcome, RunError> {
    let delta = cfg.query.delta_grid[cfg.query.delta_grid.len() - 1];
    let mut total = InclusionReport::default();
    // probes around successive centers until enough triples have been examined
    for (k, x) in centers.iter().enumerate() {
        let probes = near_points(mu.space(), x, 32, delta, cfg.seed ^ (k as u64) << 8);
        let r = check_c1_inclusion(flow, x, delta, 2.0 * delta, &probes, q)?;
        total.checked += r.checked;
        total.premises += r.premises;
        total.violations.extend(r.violations);
        if total.premises >= cfg.query.pairs {
            break;
        }
    }
    Ok(inclusion("c1", &total))
}

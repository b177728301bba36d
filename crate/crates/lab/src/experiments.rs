//! Seeded multi-trial experiments and their comparison with theory.
//!
//! Trial `i` of a run with base seed `s` uses `derive_seed(s, i)`; the
//! graph is drawn from `derive_seed(trial_seed, 0)` and the walk from
//! `derive_seed(trial_seed, 1)`. Results are folded in trial order, so
//! output does not depend on the number of worker threads.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use vacant_core::components::{StatFlags, VacantStatistics};
use vacant_core::theory::{self, gnp_schedule, poisson_giant_fraction, TheoryPrediction};
use vacant_core::walk::{first_visit_times, regular_mixing_horizon};
use vacant_core::{
    classify_nice, connected_components, derive_seed, estimate_returns, generate_dnp, generate_gnp, generate_regular,
    induced_vacant_subgraph, rng_from_seed, sample_configuration, underlying_graph, Bitmap, DegreeProfile, Graph,
    GraphError, PairingState, RegularParams, ReturnStats, Seed, TheoryError, TimeStep, VacantSnapshot, VertexId,
    WalkError, WalkGraph, WalkRun,
};

use crate::config::{ConfigError, ExperimentConfig, ModelSpec, StartSpec};
use crate::io::EdgeList;
use crate::report::{mean_stderr, AggregateReport, ReportRow, Tolerance};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error("{0}")]
    Invalid(String),
}

pub const VACANT_TOL: f64 = 0.01;
pub const DEGREE_TOL: f64 = 0.02;
pub const GIANT_TOL: f64 = 0.02;
pub const TREE_TOL: f64 = 0.05;
pub const GNP_TOL: f64 = 0.05;
pub const SCC_GIANT_FRACTION: f64 = 0.8;
/// "With high probability" read as at least 19 trials out of 20.
pub const WHP_RATE: f64 = 0.95;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: Seed,
    pub snapshots: Vec<VacantSnapshot>,
    /// Undirected snapshots of the underlying graph, for `D(n,p)` only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub underlying: Vec<VacantSnapshot>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

/// Runs `f(i)` for `i in 0..count` on `workers` threads (0 means all) and
/// returns the results in index order.
pub fn par_map<T, F>(workers: usize, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().expect("thread pool");
    pool.install(|| (0..count).into_par_iter().map(f).collect())
}

fn walk_of<'g, G: WalkGraph>(graph: &'g G, cfg: &ExperimentConfig, seed: Seed) -> Result<WalkRun<'g, G>, WalkError> {
    let mut run = match cfg.start {
        StartSpec::Random => WalkRun::random_starts(graph, cfg.walkers, seed)?,
        StartSpec::Vertex(v) => WalkRun::with_walkers(graph, &vec![v; cfg.walkers], seed)?,
    };
    run.set_lazy(cfg.lazy);
    Ok(run)
}

fn record_walk<G: WalkGraph + VacantStatistics>(
    run: &mut WalkRun<'_, G>,
    times: &[TimeStep],
    cfg: &ExperimentConfig,
    mut extra: impl FnMut(&Bitmap, TimeStep),
) -> Result<Vec<VacantSnapshot>, WalkError> {
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        run.run_to(t)?;
        let mut snap = run.graph().vacant_statistics(run.visited(), t, cfg.k_cap, cfg.flags);
        snap.unvisited_edges = Some(run.unvisited_edge_count());
        extra(run.visited(), t);
        out.push(snap);
    }
    Ok(out)
}

/// One trial: draw the graph, walk it and snapshot at every scheduled time.
pub fn run_trial(cfg: &ExperimentConfig, times: &[TimeStep], trial: usize) -> Result<TrialRecord, ExperimentError> {
    let seed = derive_seed(cfg.seed, trial as u64);
    let (graph_seed, walk_seed) = (derive_seed(seed, 0), derive_seed(seed, 1));
    let mut underlying = Vec::new();
    let snapshots = match cfg.model {
        ModelSpec::Regular { .. } => {
            let g = generate_regular(cfg.model.regular_params().unwrap(), graph_seed)?;
            record_walk(&mut walk_of(&g, cfg, walk_seed)?, times, cfg, |_, _| {})?
        }
        ModelSpec::Gnp { .. } => {
            let g = generate_gnp(cfg.model.gnp_params().unwrap(), graph_seed)?;
            record_walk(&mut walk_of(&g, cfg, walk_seed)?, times, cfg, |_, _| {})?
        }
        ModelSpec::Dnp { .. } => {
            let d = generate_dnp(cfg.model.dnp_params().unwrap(), graph_seed)?;
            let und = underlying_graph(&d);
            record_walk(&mut walk_of(&d, cfg, walk_seed)?, times, cfg, |visited, t| {
                underlying.push(und.vacant_statistics(visited, t, cfg.k_cap, cfg.flags));
            })?
        }
    };
    Ok(TrialRecord { trial, seed, snapshots, underlying, wall_time_ms: None })
}

/// The graph trial `trial` of `cfg` walks on, drawn from the same seed.
pub fn trial_graph(cfg: &ExperimentConfig, trial: usize) -> Result<EdgeList, ExperimentError> {
    cfg.validate()?;
    let graph_seed = derive_seed(derive_seed(cfg.seed, trial as u64), 0);
    Ok(match cfg.model {
        ModelSpec::Regular { .. } => {
            EdgeList::Undirected(generate_regular(cfg.model.regular_params().unwrap(), graph_seed)?)
        }
        ModelSpec::Gnp { .. } => EdgeList::Undirected(generate_gnp(cfg.model.gnp_params().unwrap(), graph_seed)?),
        ModelSpec::Dnp { .. } => EdgeList::Directed(generate_dnp(cfg.model.dnp_params().unwrap(), graph_seed)?),
    })
}

/// Runs every trial of `cfg`. Wall times are recorded only if `timings` is set,
/// since they would make the records differ between runs.
pub fn run_trials(cfg: &ExperimentConfig, timings: bool) -> Result<Vec<TrialRecord>, ExperimentError> {
    cfg.validate()?;
    let times = cfg.resolved_times()?;
    par_map(cfg.workers, cfg.trials, |i| {
        let start = Instant::now();
        let mut rec = run_trial(cfg, &times, i)?;
        if timings {
            rec.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
        }
        Ok(rec)
    })
    .into_iter()
    .collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(Vec<TrialRecord>, AggregateReport), ExperimentError> {
    let records = run_trials(cfg, false)?;
    let report = aggregate(cfg, &records)?;
    Ok((records, report))
}

fn expect_model(cfg: &ExperimentConfig, name: &str) -> Result<(), ExperimentError> {
    if cfg.model.name() == name {
        Ok(())
    } else {
        Err(ExperimentError::Invalid(format!("expected a {name} model, got {}", cfg.model.name())))
    }
}

pub fn run_regular_experiment(cfg: &ExperimentConfig) -> Result<AggregateReport, ExperimentError> {
    expect_model(cfg, "regular")?;
    Ok(run_experiment(cfg)?.1)
}

pub fn run_gnp_experiment(cfg: &ExperimentConfig) -> Result<AggregateReport, ExperimentError> {
    expect_model(cfg, "gnp")?;
    Ok(run_experiment(cfg)?.1)
}

pub fn run_dnp_experiment(cfg: &ExperimentConfig) -> Result<AggregateReport, ExperimentError> {
    expect_model(cfg, "dnp")?;
    Ok(run_experiment(cfg)?.1)
}

/// Compares stored records with theory. Needs exactly `cfg.trials` records
/// whose snapshots follow the schedule.
pub fn aggregate(cfg: &ExperimentConfig, records: &[TrialRecord]) -> Result<AggregateReport, ExperimentError> {
    let times = cfg.resolved_times()?;
    if records.len() != cfg.trials {
        return Err(ExperimentError::Invalid(format!("{} records for {} trials", records.len(), cfg.trials)));
    }
    for rec in records {
        let recorded: Vec<TimeStep> = rec.snapshots.iter().map(|s| s.time).collect();
        if recorded != times {
            return Err(ExperimentError::Invalid(format!("trial {} does not match the schedule", rec.trial)));
        }
    }
    let mut rows = Vec::new();
    for (j, &t) in times.iter().enumerate() {
        let snaps: Vec<&VacantSnapshot> = records.iter().map(|r| &r.snapshots[j]).collect();
        match cfg.model {
            ModelSpec::Regular { n, r, .. } => regular_rows(&mut rows, cfg, n, r, t, &snaps)?,
            ModelSpec::Gnp { n, .. } | ModelSpec::Dnp { n, .. } => {
                let und: Vec<&VacantSnapshot> = records.iter().filter_map(|r| r.underlying.get(j)).collect();
                sparse_rows(&mut rows, cfg, n, t, &snaps, &und)?
            }
        }
    }
    Ok(AggregateReport { trials: records.len(), rows })
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn log_sq(x: usize) -> f64 {
    (x.max(1) as f64).ln().powi(2)
}

fn regular_rows(
    rows: &mut Vec<ReportRow>,
    cfg: &ExperimentConfig,
    n: usize,
    r: u32,
    t: TimeStep,
    snaps: &[&VacantSnapshot],
) -> Result<(), ExperimentError> {
    let pred = TheoryPrediction::new(n, r)?;
    let tf = t as f64;
    let n_t = pred.vacant_size(tf);
    let vacant: Vec<f64> = snaps.iter().map(|s| s.vacant as f64).collect();
    rows.push(ReportRow::from_samples(t, "vacant", &vacant, n_t, Tolerance::Relative(VACANT_TOL)));

    if cfg.flags.degrees {
        let profile = theory::degree_profile(pred.red_degree_prob(tf), r);
        for (s, &expect) in profile.iter().enumerate() {
            let fracs: Vec<f64> = snaps
                .iter()
                .map(|snap| match &snap.degrees {
                    DegreeProfile::Histogram(h) if snap.vacant > 0 => h[s] as f64 / snap.vacant as f64,
                    _ => 0.0,
                })
                .collect();
            rows.push(ReportRow::from_samples(
                t,
                format!("degree_frac_{s}"),
                &fracs,
                expect,
                Tolerance::Absolute(DEGREE_TOL),
            ));
        }
    }

    if cfg.flags.components {
        let bound = log_sq(n);
        if tf < pred.t_star {
            let giant: Vec<f64> = snaps.iter().map(|s| s.largest as f64 / n_t).collect();
            rows.push(ReportRow::from_samples(t, "giant_frac", &giant, pred.theta(tf), Tolerance::Relative(GIANT_TOL)));
            let second: Vec<f64> = snaps.iter().map(|s| indicator(s.second_largest as f64 <= bound)).collect();
            rows.push(ReportRow::from_samples(t, "second_le_log2n", &second, 1.0, Tolerance::AtLeast(WHP_RATE)));
        } else if tf > pred.t_star {
            let small: Vec<f64> = snaps.iter().map(|s| indicator(s.largest as f64 <= bound)).collect();
            rows.push(ReportRow::from_samples(t, "largest_le_log2n", &small, 1.0, Tolerance::AtLeast(WHP_RATE)));
        }
        // Expected counts below one carry no relative information.
        for k in 1..=cfg.tree_k_max.min(cfg.k_cap as u32) {
            let eta = pred.tree_count(k, tf);
            if eta >= 1.0 {
                let counts: Vec<f64> = snaps.iter().map(|s| s.tree_count(k as usize) as f64).collect();
                rows.push(ReportRow::from_samples(t, format!("tree_{k}"), &counts, eta, Tolerance::Relative(TREE_TOL)));
            }
        }
    }
    Ok(())
}

/// Rows for `G(n,p)` and `D(n,p)`. Every time is placed on the schedule
/// `t = n (log log n + (1 + theta) log c)` by solving for `theta`.
fn sparse_rows(
    rows: &mut Vec<ReportRow>,
    cfg: &ExperimentConfig,
    n: usize,
    t: TimeStep,
    snaps: &[&VacantSnapshot],
    underlying: &[&VacantSnapshot],
) -> Result<(), ExperimentError> {
    let p_sched = cfg.model.schedule_p().expect("sparse model");
    let nf = n as f64;
    let c = nf * p_sched / nf.ln();
    let theta = (t as f64 / nf - nf.ln().ln()) / c.ln() - 1.0;
    let pred = gnp_schedule(n, p_sched, theta)?;
    let vacant: Vec<f64> = snaps.iter().map(|s| s.vacant as f64).collect();
    rows.push(ReportRow::from_samples(t, "vacant", &vacant, pred.vacant, Tolerance::Relative(GNP_TOL)));
    if !cfg.flags.components {
        return Ok(());
    }
    let frac = |s: &&VacantSnapshot| if s.vacant == 0 { 0.0 } else { s.largest as f64 / s.vacant as f64 };
    let small = |s: &&VacantSnapshot| indicator(s.largest as f64 <= log_sq(s.vacant));
    let mut undirected_rows = |prefix: &str, snaps: &[&VacantSnapshot], p: f64| {
        if theta < 0.0 {
            let giant: Vec<f64> = snaps.iter().map(frac).collect();
            let lambda = pred.vacant * p;
            rows.push(ReportRow::from_samples(
                t,
                format!("{prefix}giant_frac"),
                &giant,
                poisson_giant_fraction(lambda),
                Tolerance::Relative(GNP_TOL),
            ));
            // Same statistic against the measured vacant size.
            let given: Vec<f64> = snaps.iter().map(|s| poisson_giant_fraction(s.vacant as f64 * p)).collect();
            let (given_mean, _) = mean_stderr(&given);
            let (mean, se) = mean_stderr(&giant);
            rows.push(ReportRow::new(
                t,
                format!("{prefix}giant_frac_given_size"),
                mean,
                se,
                given_mean,
                Tolerance::Relative(GNP_TOL),
            ));
        } else if theta > 0.0 {
            let ok: Vec<f64> = snaps.iter().map(small).collect();
            rows.push(ReportRow::from_samples(
                t,
                format!("{prefix}largest_le_log2n"),
                &ok,
                1.0,
                Tolerance::AtLeast(WHP_RATE),
            ));
        }
    };
    match cfg.model {
        ModelSpec::Gnp { .. } => undirected_rows("", snaps, p_sched),
        ModelSpec::Dnp { .. } => {
            let q = cfg.model.dnp_params().unwrap().q();
            if underlying.len() == snaps.len() {
                undirected_rows("und_", underlying, q);
            }
            let arc_p = cfg.model.dnp_params().unwrap().p;
            if theta < 0.0 {
                let beta = poisson_giant_fraction(pred.vacant * arc_p);
                let giant: Vec<f64> = snaps.iter().map(frac).collect();
                rows.push(ReportRow::from_samples(
                    t,
                    "scc_giant_frac",
                    &giant,
                    beta * beta,
                    Tolerance::AtLeast(SCC_GIANT_FRACTION),
                ));
            } else if theta > 0.0 {
                let ok: Vec<f64> = snaps.iter().map(small).collect();
                rows.push(ReportRow::from_samples(t, "scc_le_log2n", &ok, 1.0, Tolerance::AtLeast(WHP_RATE)));
            }
        }
        ModelSpec::Regular { .. } => unreachable!(),
    }
    Ok(())
}

/// Largest vacant component against `n` at several multiples of `t* n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub r: u32,
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub seed: Seed,
    /// Multiples of `t* n` to snapshot, in increasing order.
    pub factors: Vec<f64>,
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub n: usize,
    pub mean_largest: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSeries {
    pub factor: f64,
    pub points: Vec<ScanPoint>,
    pub slope: f64,
    pub slope_stderr: f64,
}

/// Least-squares slope of `y` on `x` and its standard error.
pub fn fit_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    if x.len() < 3 {
        return (slope, 0.0);
    }
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    (slope, (ssr / (k - 2.0) / sxx).sqrt())
}

pub fn critical_window_scan(cfg: &ScanConfig) -> Result<Vec<ScanSeries>, ExperimentError> {
    let mut ns = cfg.n_list.clone();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 4 || ns[ns.len() - 1] < 16 * ns[0] {
        return Err(ExperimentError::Invalid("need at least 4 sizes spanning a factor of 16".into()));
    }
    if cfg.trials == 0 || cfg.factors.is_empty() || cfg.factors.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ExperimentError::Invalid("need trials and strictly increasing factors".into()));
    }
    let coeff = theory::t_star(cfg.r)?;
    let mut largest = vec![Vec::new(); cfg.factors.len()];
    for &n in &ns {
        let params = RegularParams { n, r: cfg.r, simple_only: true };
        params.validate()?;
        let times: Vec<TimeStep> = cfg.factors.iter().map(|f| (f * coeff * n as f64).round() as TimeStep).collect();
        let base = derive_seed(cfg.seed, n as u64);
        let per_trial: Vec<Result<Vec<usize>, ExperimentError>> = par_map(cfg.workers, cfg.trials, |i| {
            let seed = derive_seed(base, i as u64);
            let g = generate_regular(params, derive_seed(seed, 0))?;
            let mut run = WalkRun::random_start(&g, derive_seed(seed, 1))?;
            let mut out = Vec::with_capacity(times.len());
            for &t in &times {
                run.run_to(t)?;
                out.push(connected_components(&induced_vacant_subgraph(&g, run.visited())).largest());
            }
            Ok(out)
        });
        let per_trial = per_trial.into_iter().collect::<Result<Vec<_>, _>>()?;
        for (j, series) in largest.iter_mut().enumerate() {
            let xs: Vec<f64> = per_trial.iter().map(|v| v[j] as f64).collect();
            let (mean, se) = mean_stderr(&xs);
            series.push(ScanPoint { n, mean_largest: mean, stderr: se });
        }
    }
    Ok(cfg
        .factors
        .iter()
        .zip(largest)
        .map(|(&factor, points)| {
            let x: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
            let y: Vec<f64> = points.iter().map(|p| p.mean_largest.max(1.0).ln()).collect();
            let (slope, slope_stderr) = fit_slope(&x, &y);
            ScanSeries { factor, points, slope, slope_stderr }
        })
        .collect())
}

/// Fraction of trials where the vacant graph at time `t`, isolated vertices
/// removed, is connected. `t = None` uses `floor(log^3 n)`.
pub fn early_connectivity_check(
    r: u32,
    n: usize,
    t: Option<TimeStep>,
    trials: usize,
    seed: Seed,
    workers: usize,
) -> Result<f64, ExperimentError> {
    let params = RegularParams { n, r, simple_only: true };
    params.validate()?;
    let t = t.unwrap_or_else(|| (n as f64).ln().powi(3).floor() as TimeStep);
    let ok = par_map(workers, trials, |i| -> Result<bool, ExperimentError> {
        let s = derive_seed(seed, i as u64);
        let g = generate_regular(params, derive_seed(s, 0))?;
        let mut run = WalkRun::random_start(&g, derive_seed(s, 1))?;
        run.run_to(t)?;
        let d = connected_components(&induced_vacant_subgraph(&g, run.visited()));
        Ok(d.sizes().iter().filter(|&&k| k > 1).count() <= 1)
    });
    let ok = ok.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(ok.iter().filter(|&&b| b).count() as f64 / trials as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZComparison {
    pub stat: String,
    pub direct_mean: f64,
    pub direct_stderr: f64,
    pub resampled_mean: f64,
    pub resampled_stderr: f64,
    pub z: f64,
}

impl ZComparison {
    fn new(stat: &str, direct: &[f64], resampled: &[f64]) -> Self {
        let (a, sa) = mean_stderr(direct);
        let (b, sb) = mean_stderr(resampled);
        let se = (sa * sa + sb * sb).sqrt();
        let z = if a == b { 0.0 } else { (a - b) / se };
        ZComparison { stat: stat.into(), direct_mean: a, direct_stderr: sa, resampled_mean: b, resampled_stderr: sb, z }
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.z.abs() <= sigmas
    }
}

/// Vacant graph at time `t` against a configuration multigraph drawn from
/// its own degree sequence.
pub fn resampling_crossvalidation(
    r: u32,
    n: usize,
    t: TimeStep,
    trials: usize,
    seed: Seed,
    workers: usize,
) -> Result<Vec<ZComparison>, ExperimentError> {
    let params = RegularParams { n, r, simple_only: true };
    params.validate_for_theory()?;
    let per_trial = par_map(workers, trials, |i| -> Result<[f64; 8], ExperimentError> {
        let s = derive_seed(seed, i as u64);
        let g = generate_regular(params, derive_seed(s, 0))?;
        let mut run = WalkRun::random_start(&g, derive_seed(s, 1))?;
        run.run_to(t)?;
        let view = induced_vacant_subgraph(&g, run.visited());
        let vertices: Vec<VertexId> = view.vertices().collect();
        let degrees: Vec<usize> = vertices.iter().map(|&v| view.degree(v)).collect();
        let resampled = sample_configuration(&degrees, derive_seed(s, 2))?;
        assert_eq!(resampled.degrees(), degrees, "degree sequence must carry over");
        let direct = snapshot_of(&g, run.visited());
        let copy = snapshot_of(&resampled, &Bitmap::new(resampled.vertex_count()));
        let frac = |x: &VacantSnapshot| if x.vacant == 0 { 0.0 } else { x.largest as f64 / x.vacant as f64 };
        Ok([
            frac(&direct),
            frac(&copy),
            direct.tree_count(1) as f64,
            copy.tree_count(1) as f64,
            direct.tree_count(2) as f64,
            copy.tree_count(2) as f64,
            direct.tree_count(3) as f64,
            copy.tree_count(3) as f64,
        ])
    });
    let per_trial = per_trial.into_iter().collect::<Result<Vec<_>, _>>()?;
    let col = |k: usize| per_trial.iter().map(|v| v[k]).collect::<Vec<_>>();
    Ok(["giant_frac", "tree_1", "tree_2", "tree_3"]
        .iter()
        .enumerate()
        .map(|(i, name)| ZComparison::new(name, &col(2 * i), &col(2 * i + 1)))
        .collect())
}

fn snapshot_of(g: &Graph, visited: &Bitmap) -> VacantSnapshot {
    g.vacant_statistics(visited, 0, 3, StatFlags { components: true, degrees: false })
}

/// Cover times of independent cubic (or `r`-regular) graphs, each divided by
/// `rho n log n`. A trial that has not covered after 50 times that scale
/// is an error.
pub fn cover_time_ratios(
    r: u32,
    n: usize,
    trials: usize,
    seed: Seed,
    workers: usize,
) -> Result<Vec<f64>, ExperimentError> {
    let params = RegularParams { n, r, simple_only: true };
    params.validate_for_theory()?;
    let scale = theory::rho(r) * n as f64 * (n as f64).ln();
    let out = par_map(workers, trials, |i| -> Result<f64, ExperimentError> {
        let s = derive_seed(seed, i as u64);
        let g = generate_regular(params, derive_seed(s, 0))?;
        let mut run = WalkRun::random_start(&g, derive_seed(s, 1))?;
        match run.run_until_covered((50.0 * scale) as TimeStep)? {
            Some(c) => Ok(c as f64 / scale),
            None => Err(ExperimentError::Invalid(format!("trial {i} did not cover the graph"))),
        }
    });
    out.into_iter().collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstVisitConfig {
    pub n: usize,
    pub r: u32,
    pub targets: usize,
    pub epsilon1: f64,
    pub return_trials: usize,
    pub walk_trials: usize,
    /// Multiples of `n` at which the unvisit probability is read.
    pub time_factors: Vec<f64>,
    pub seed: Seed,
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstVisitTarget {
    pub vertex: VertexId,
    pub returns: ReturnStats,
    /// `pi_v / R_v` with the estimated `R_v`.
    pub p_v: f64,
    pub times: Vec<TimeStep>,
    pub empirical: Vec<f64>,
    /// `(1 + p_v)^{-(t - T)}`.
    pub predicted: Vec<f64>,
    /// Least-squares slope of `log P(unvisited)` against `t`.
    pub slope: f64,
    pub slope_stderr: f64,
    /// `-log(1 + p_v)`.
    pub predicted_slope: f64,
    /// `R_v - T pi_v`, the return count net of the stationary share.
    pub centred_returns: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstVisitReport {
    pub horizon: TimeStep,
    pub radius: f64,
    pub non_nice_count: usize,
    pub targets: Vec<FirstVisitTarget>,
}

const CHUNK: usize = 500;

/// Return counts and unvisit probabilities for nice vertices of one random
/// regular graph. Targets are a seeded uniform sample of the nice vertices.
pub fn first_visit_law(cfg: &FirstVisitConfig) -> Result<FirstVisitReport, ExperimentError> {
    let params = RegularParams { n: cfg.n, r: cfg.r, simple_only: true };
    params.validate_for_theory()?;
    let g = generate_regular(params, derive_seed(cfg.seed, 0))?;
    let nice = classify_nice(&g, cfg.epsilon1);
    let mut pool: Vec<VertexId> = nice.nice_vertices().collect();
    let mut rng = rng_from_seed(derive_seed(cfg.seed, 1));
    let k = cfg.targets.min(pool.len());
    // Partial Fisher-Yates for a uniform sample without replacement.
    for i in 0..k {
        let j = rand::Rng::random_range(&mut rng, i..pool.len());
        pool.swap(i, j);
    }
    let targets = pool[..k].to_vec();

    let horizon = regular_mixing_horizon(cfg.n);
    let chunks = cfg.return_trials.div_ceil(CHUNK);
    let returns: Vec<ReturnStats> = targets
        .iter()
        .enumerate()
        .map(|(ti, &v)| {
            let base = derive_seed(cfg.seed, 2 + ti as u64);
            let parts = par_map(cfg.workers, chunks, |c| {
                let m = CHUNK.min(cfg.return_trials - c * CHUNK);
                estimate_returns(&g, v, horizon, m, derive_seed(base, c as u64))
            });
            merge_returns(v, horizon, &parts)
        })
        .collect();

    let times: Vec<TimeStep> = cfg.time_factors.iter().map(|f| (f * cfg.n as f64).round() as TimeStep).collect();
    let max_t = times.iter().copied().max().unwrap_or(horizon);
    let walk_chunks = cfg.walk_trials.div_ceil(CHUNK);
    let walk_base = derive_seed(cfg.seed, 1_000_000);
    let hits = par_map(cfg.workers, walk_chunks, |c| {
        let m = CHUNK.min(cfg.walk_trials - c * CHUNK);
        first_visit_times(&g, &targets, max_t, horizon, m, derive_seed(walk_base, c as u64))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    let pi = 1.0 / cfg.n as f64;
    let out = targets
        .iter()
        .enumerate()
        .map(|(ti, &v)| {
            let all: Vec<TimeStep> = hits.iter().flat_map(|h| h[ti].iter().copied()).collect();
            let empirical: Vec<f64> =
                times.iter().map(|&t| all.iter().filter(|&&h| h > t).count() as f64 / all.len() as f64).collect();
            let rs = returns[ti];
            let p_v = pi / rs.mean;
            let predicted = times.iter().map(|&t| (1.0 + p_v).powf(-(t as f64 - horizon as f64))).collect();
            let x: Vec<f64> = times.iter().map(|&t| t as f64).collect();
            let y: Vec<f64> = empirical.iter().map(|p| p.ln()).collect();
            let (slope, slope_stderr) = fit_slope(&x, &y);
            FirstVisitTarget {
                vertex: v,
                returns: rs,
                p_v,
                times: times.clone(),
                empirical,
                predicted,
                slope,
                slope_stderr,
                predicted_slope: -(1.0 + p_v).ln(),
                centred_returns: rs.mean - horizon as f64 * pi,
            }
        })
        .collect();
    Ok(FirstVisitReport { horizon, radius: nice.radius, non_nice_count: nice.non_nice_count, targets: out })
}

fn merge_returns(v: VertexId, horizon: TimeStep, parts: &[ReturnStats]) -> ReturnStats {
    let trials: usize = parts.iter().map(|p| p.trials).sum();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for p in parts {
        let m = p.trials as f64;
        let var = p.stderr * p.stderr * m;
        sum += p.mean * m;
        sum_sq += (m - 1.0) * var + m * p.mean * p.mean;
    }
    let n = trials as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    ReturnStats { vertex: v, horizon, mean, stderr: (var / n).sqrt(), trials }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingTest {
    pub pairings: usize,
    pub draws: u64,
    pub counts: Vec<u64>,
    pub chi_square: f64,
    pub p_value: f64,
}

/// Largest point count the pairing test enumerates (10395 pairings).
pub const PAIRING_TEST_MAX_POINTS: usize = 12;

/// Every perfect matching of `0..m`, as partner arrays in lexicographic order.
pub fn all_pairings(m: usize) -> Vec<Vec<u32>> {
    fn go(partner: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        let Some(i) = partner.iter().position(|&p| p == u32::MAX) else {
            out.push(partner.clone());
            return;
        };
        for j in i + 1..partner.len() {
            if partner[j] == u32::MAX {
                partner[i] = j as u32;
                partner[j] = i as u32;
                go(partner, out);
                partner[i] = u32::MAX;
                partner[j] = u32::MAX;
            }
        }
    }
    let mut out = Vec::new();
    if m.is_multiple_of(2) {
        go(&mut vec![u32::MAX; m], &mut out);
    }
    out
}

/// Walks the deferred-decision pairing for `stop` steps from vertex 0,
/// completes it at random and tallies the pairings over `draws` runs.
pub fn pairing_uniformity(
    n: usize,
    r: u32,
    stop: u64,
    draws: u64,
    seed: Seed,
    workers: usize,
) -> Result<PairingTest, ExperimentError> {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let m = n * r as usize;
    if m > PAIRING_TEST_MAX_POINTS || m % 2 == 1 || m == 0 {
        return Err(ExperimentError::Invalid(format!(
            "pairing test needs an even point count up to {PAIRING_TEST_MAX_POINTS}, got {m}"
        )));
    }
    let support = all_pairings(m);
    let index: std::collections::HashMap<Vec<u32>, usize> =
        support.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
    let chunks = (draws as usize).div_ceil(CHUNK * 10);
    let parts = par_map(workers, chunks, |c| {
        let lo = (c * CHUNK * 10) as u64;
        let hi = (lo + (CHUNK * 10) as u64).min(draws);
        let mut counts = vec![0u64; support.len()];
        for d in lo..hi {
            let s = derive_seed(seed, d);
            let mut st = PairingState::new(n, r, 0, derive_seed(s, 0)).expect("validated");
            for _ in 0..stop {
                st.coupled_walk_step();
            }
            counts[index[st.finalize_pairing(derive_seed(s, 1)).partners()]] += 1;
        }
        counts
    });
    let mut counts = vec![0u64; support.len()];
    for part in parts {
        for (a, b) in counts.iter_mut().zip(part) {
            *a += b;
        }
    }
    let expected = draws as f64 / support.len() as f64;
    let chi_square: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p_value = if support.len() > 1 {
        ChiSquared::new((support.len() - 1) as f64).expect("positive df").sf(chi_square)
    } else {
        1.0
    };
    Ok(PairingTest { pairings: support.len(), draws, counts, chi_square, p_value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Density, TimeSpec};

    fn small_regular() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(
            ModelSpec::Regular { n: 2000, r: 3, simple: true },
            vec![TimeSpec::Absolute(0), TimeSpec::TStar(0.5), TimeSpec::TStar(1.3)],
        );
        cfg.trials = 6;
        cfg.seed = 7;
        cfg
    }

    #[test]
    fn schedule_and_record_shape() {
        let cfg = small_regular();
        let (records, report) = run_experiment(&cfg).unwrap();
        let times = cfg.resolved_times().unwrap();
        assert_eq!(records.len(), 6);
        for rec in &records {
            let recorded: Vec<u64> = rec.snapshots.iter().map(|s| s.time).collect();
            assert_eq!(recorded, times);
            assert!(rec.snapshots.windows(2).all(|w| w[0].vacant >= w[1].vacant));
            assert_eq!(rec.snapshots[0].vacant, 1999);
        }
        assert_eq!(report.trials, 6);
        let row = report.find(0, "vacant").unwrap();
        assert_eq!(row.theory, 2000.0);
        assert!(report.find(times[1], "giant_frac").is_some());
        assert!(report.find(times[2], "largest_le_log2n").is_some());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut cfg = small_regular();
        cfg.workers = 1;
        let a = run_experiment(&cfg).unwrap();
        cfg.workers = 3;
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1.to_csv_string(), b.1.to_csv_string());
    }

    #[test]
    fn aggregate_rejects_mismatched_records() {
        let cfg = small_regular();
        let (mut records, _) = run_experiment(&cfg).unwrap();
        records.pop();
        assert!(aggregate(&cfg, &records).is_err());
    }

    #[test]
    fn wrong_model_is_rejected() {
        assert!(run_gnp_experiment(&small_regular()).is_err());
    }

    #[test]
    fn covered_sparse_graph_is_empty() {
        let mut cfg =
            ExperimentConfig::new(ModelSpec::Gnp { n: 300, density: Density::C(3.0) }, vec![TimeSpec::T0(20.0)]);
        cfg.trials = 2;
        let (records, _) = run_experiment(&cfg).unwrap();
        assert!(records.iter().all(|r| r.snapshots[0].vacant == 0));
    }

    #[test]
    fn dnp_records_underlying_snapshots() {
        let mut cfg = ExperimentConfig::new(
            ModelSpec::Dnp { n: 500, density: Density::C(3.0), basis: crate::config::CBasis::Arc },
            vec![TimeSpec::Theta(-0.3), TimeSpec::Theta(0.3)],
        );
        cfg.trials = 2;
        let (records, report) = run_experiment(&cfg).unwrap();
        assert_eq!(records[0].underlying.len(), 2);
        assert!(report.rows.iter().any(|r| r.stat == "scc_giant_frac"));
        assert!(report.rows.iter().any(|r| r.stat == "und_largest_le_log2n"));
    }

    #[test]
    fn empty_dnp_has_singleton_sccs() {
        use vacant_core::{strongly_connected_components, DnpParams};
        let d = generate_dnp(DnpParams { n: 50, p: 0.0 }, 0).unwrap();
        let visited = Bitmap::new(50);
        let scc = strongly_connected_components(&induced_vacant_subgraph(&d, &visited));
        assert!(scc.sizes().iter().all(|&s| s == 1));
        assert_eq!(scc.component_count(), 50);
    }

    #[test]
    fn slope_fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.5, 2.0, 2.5, 3.0];
        let (s, se) = fit_slope(&x, &y);
        assert!((s - 0.5).abs() < 1e-12 && se < 1e-12);
    }

    #[test]
    fn scan_needs_enough_sizes() {
        let cfg = ScanConfig { r: 3, n_list: vec![100, 200, 400], trials: 2, seed: 0, factors: vec![1.0], workers: 1 };
        assert!(critical_window_scan(&cfg).is_err());
    }

    #[test]
    fn connectivity_at_start_and_after_cover() {
        assert_eq!(early_connectivity_check(3, 500, Some(0), 20, 1, 1).unwrap(), 1.0);
        assert_eq!(early_connectivity_check(3, 200, Some(200_000), 5, 1, 1).unwrap(), 1.0);
    }

    #[test]
    fn crossvalidation_past_cover_is_empty() {
        let cmp = resampling_crossvalidation(3, 200, 200_000, 4, 3, 1).unwrap();
        assert!(cmp.iter().all(|c| c.direct_mean == 0.0 && c.resampled_mean == 0.0 && c.z == 0.0));
    }

    #[test]
    fn pairing_enumeration_counts() {
        assert_eq!(all_pairings(6).len(), 15);
        assert_eq!(all_pairings(12).len(), 10395);
        assert!(pairing_uniformity(3, 3, 0, 10, 0, 1).is_err());
    }

    #[test]
    fn merged_returns_match_single_pass() {
        let g = generate_regular(RegularParams { n: 200, r: 3, simple_only: true }, 1).unwrap();
        let parts: Vec<ReturnStats> = (0..4).map(|c| estimate_returns(&g, 0, 50, 100, c)).collect();
        let merged = merge_returns(0, 50, &parts);
        let mean = parts.iter().map(|p| p.mean).sum::<f64>() / 4.0;
        assert!((merged.mean - mean).abs() < 1e-12);
        assert_eq!(merged.trials, 400);
    }
}

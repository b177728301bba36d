//! `vwl`: command-line front end for the vacant-set lab.
//!
//! Exit status is 0 on success, 1 on bad input or I/O failure and 2 when
//! `--check` finds a failing comparison.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use vacant_core::theory::{self, TheoryPrediction};
use vacant_lab::config::{ExperimentConfig, ModelSpec};
use vacant_lab::experiments::{self, critical_window_scan, pairing_uniformity, ScanConfig};
use vacant_lab::io::{
    read_trials, unix_now, write_digraph, write_graph, write_trials, EdgeList, MANIFEST_FILE, REPORT_FILE, TRIALS_FILE,
};
use vacant_lab::report::{write_report, AggregateReport};
use vacant_lab::RunManifest;

/// Environment variable overriding the worker count of every subcommand.
const THREADS_ENV: &str = "VWL_THREADS";

#[derive(Parser)]
#[command(name = "vwl", version, about = "Random walks on random graphs: vacant-set experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `run.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for manifest, report and trial records.
        #[arg(long, default_value = "vwl-out")]
        out: PathBuf,
        /// Overrides `run.workers`.
        #[arg(long)]
        workers: Option<usize>,
        /// Exit with status 2 if any report row fails.
        #[arg(long)]
        check: bool,
        /// Store per-trial wall times (breaks byte-identical reruns).
        #[arg(long)]
        timings: bool,
    },
    /// Emit theory curves as CSV.
    Theory {
        #[arg(long, value_enum)]
        model: TheoryModel,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        r: u32,
        /// Number of rows.
        #[arg(long, default_value_t = 200)]
        grid: usize,
        /// Last regular time, in steps. Defaults to 1.5 t*.
        #[arg(long)]
        t_max: Option<f64>,
        /// Edge probability for `gnp`; give this or `--c`.
        #[arg(long)]
        p: Option<f64>,
        /// `np / log n` for `gnp`.
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, default_value_t = -0.9, allow_hyphen_values = true)]
        theta_min: f64,
        #[arg(long, default_value_t = 0.9, allow_hyphen_values = true)]
        theta_max: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Critical-window scan: largest vacant component against n.
    Scan {
        #[arg(long, default_value_t = 3)]
        r: u32,
        /// Comma-separated sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 30)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Multiples of t* to snapshot at.
        #[arg(long, value_delimiter = ',', default_value = "0.8,1.0,1.3")]
        factors: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Require the slope windows: [0.55, 0.75] at t*, [0.95, 1.05]
        /// below 1, at most 0.2 above 1.
        #[arg(long)]
        check: bool,
    },
    /// Chi-square test of the pairing completed from a stopped walk.
    PairingTest {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        r: u32,
        #[arg(long, default_value_t = 3)]
        stop: u64,
        #[arg(long, default_value_t = 150_000)]
        draws: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Require p > 1e-3.
        #[arg(long)]
        check: bool,
    },
    /// Re-aggregate the trial records of a stored run against theory.
    Compare {
        #[arg(long)]
        manifest: PathBuf,
        /// Report destination; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        check: bool,
    },
    /// Dump the graph of one trial as an edge list.
    Graph {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        trial: usize,
        /// Destination; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TheoryModel {
    Regular,
    Gnp,
}

enum Failure {
    Invalid(String),
    Check(String),
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("vwl: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("vwl: check failed: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Simulate { config, seed, out, workers, check, timings } => {
            simulate(&config, seed, &out, workers, check, timings)
        }
        Command::Theory { model, n, r, grid, t_max, p, c, theta_min, theta_max, out } => {
            let text = match model {
                TheoryModel::Regular => regular_curve(n, r, grid, t_max)?,
                TheoryModel::Gnp => gnp_curve(n, p, c, grid, theta_min, theta_max)?,
            };
            emit(out.as_deref(), text.as_bytes())
        }
        Command::Scan { r, n_list, trials, seed, factors, workers, out, check } => {
            let cfg = ScanConfig { r, n_list, trials, seed, factors, workers: worker_count(Some(workers))? };
            scan(&cfg, out.as_deref(), check)
        }
        Command::PairingTest { n, r, stop, draws, seed, workers, check } => {
            let test = pairing_uniformity(n, r, stop, draws, seed, worker_count(Some(workers))?)
                .map_err(|e| Failure::Invalid(e.to_string()))?;
            println!(
                "pairings={} draws={} chi_square={} df={} p_value={}",
                test.pairings,
                test.draws,
                test.chi_square,
                test.pairings.saturating_sub(1),
                test.p_value
            );
            println!("counts={:?}", test.counts);
            if check && test.p_value <= 1e-3 {
                return Err(Failure::Check(format!("p = {} at significance 1e-3", test.p_value)));
            }
            Ok(())
        }
        Command::Compare { manifest, out, check } => compare(&manifest, out.as_deref(), check),
        Command::Graph { config, seed, trial, out } => {
            let cfg = load_config(&config, seed, None)?;
            if trial >= cfg.trials {
                return Err(Failure::Invalid(format!("trial {trial} out of range (run.trials = {})", cfg.trials)));
            }
            let mut buf = Vec::new();
            match experiments::trial_graph(&cfg, trial).map_err(|e| Failure::Invalid(e.to_string()))? {
                EdgeList::Undirected(g) => write_graph(&g, &mut buf)?,
                EdgeList::Directed(d) => write_digraph(&d, &mut buf)?,
            }
            emit(out.as_deref(), &buf)
        }
    }
}

/// Worker count after the `VWL_THREADS` override.
fn worker_count(requested: Option<usize>) -> Result<usize, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Failure::Invalid(format!("{THREADS_ENV}={v:?} is not a thread count"))),
        Err(_) => Ok(requested.unwrap_or(0)),
    }
}

fn load_config(path: &Path, seed: Option<u64>, workers: Option<usize>) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::parse(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.workers = worker_count(workers.or(Some(cfg.workers)))?;
    Ok(cfg)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Outcome {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display()))),
        None => Ok(io::stdout().write_all(bytes)?),
    }
}

fn check_report(report: &AggregateReport) -> Outcome {
    let failed: Vec<String> = report.failures().map(|r| format!("{}@{}", r.stat, r.t)).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("{} row(s) outside tolerance: {}", failed.len(), failed.join(", "))))
    }
}

fn simulate(
    config: &Path,
    seed: Option<u64>,
    out: &Path,
    workers: Option<usize>,
    check: bool,
    timings: bool,
) -> Outcome {
    let cfg = load_config(config, seed, workers)?;
    let times = cfg.resolved_times()?;
    fs::create_dir_all(out).map_err(|e| Failure::Invalid(format!("{}: {e}", out.display())))?;
    let mut manifest = RunManifest::new(&cfg, times, vec![REPORT_FILE.to_string(), TRIALS_FILE.to_string()]);
    let manifest_path = out.join(MANIFEST_FILE);
    manifest.write(&manifest_path)?;

    let records = experiments::run_trials(&cfg, timings).map_err(|e| Failure::Invalid(e.to_string()))?;
    let report = experiments::aggregate(&cfg, &records).map_err(|e| Failure::Invalid(e.to_string()))?;
    write_trials(&records, &out.join(TRIALS_FILE))?;
    write_report(&report, &out.join(REPORT_FILE))?;
    manifest.finished_unix = Some(unix_now());
    manifest.write(&manifest_path)?;
    eprintln!(
        "vwl: {} trials, {} rows ({} failing) -> {}",
        report.trials,
        report.rows.len(),
        report.failures().count(),
        out.display()
    );
    if check {
        check_report(&report)?;
    }
    Ok(())
}

fn compare(manifest_path: &Path, out: Option<&Path>, check: bool) -> Outcome {
    let manifest = RunManifest::read(manifest_path)?;
    let cfg = ExperimentConfig::parse(&manifest.config)
        .map_err(|e| Failure::Invalid(format!("{}: config: {e}", manifest_path.display())))?;
    if cfg.resolved_times()? != manifest.resolved_times {
        return Err(Failure::Invalid("manifest times do not match its config".into()));
    }
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let trials_name = manifest
        .outputs
        .iter()
        .find(|o| o.as_str() == TRIALS_FILE)
        .ok_or_else(|| Failure::Invalid(format!("manifest lists no {TRIALS_FILE}")))?;
    let records = read_trials(&dir.join(trials_name))?;
    let report = experiments::aggregate(&cfg, &records).map_err(|e| Failure::Invalid(e.to_string()))?;
    let text = report.to_csv_string();
    if let Ok(stored) = fs::read_to_string(dir.join(REPORT_FILE)) {
        let verdict = if stored == text { "matches" } else { "differs from" };
        eprintln!("vwl: recomputed report {verdict} the stored {REPORT_FILE}");
    }
    emit(out, text.as_bytes())?;
    if check {
        check_report(&report)?;
    }
    Ok(())
}

fn regular_curve(n: usize, r: u32, grid: usize, t_max: Option<f64>) -> Result<String, Failure> {
    let pred = TheoryPrediction::new(n, r)?;
    let t_max = t_max.unwrap_or(1.5 * pred.t_star);
    if grid == 0 || t_max.is_nan() || t_max < 0.0 {
        return Err(Failure::Invalid("need --grid >= 1 and --t-max >= 0".into()));
    }
    let mut s = String::from("t,vacant,red_degree_prob,giant_fraction,giant_size,molloy_reed_l");
    for k in 0..=r {
        s.push_str(&format!(",degree_frac_{k}"));
    }
    s.push('\n');
    for i in 0..grid {
        let t = if grid == 1 { 0.0 } else { t_max * i as f64 / (grid - 1) as f64 };
        let p = pred.red_degree_prob(t);
        s.push_str(&format!(
            "{t},{},{p},{},{},{}",
            pred.vacant_size(t),
            pred.theta(t),
            pred.giant_size(t),
            pred.molloy_reed_l(t)
        ));
        for f in theory::degree_profile(p, r) {
            s.push_str(&format!(",{f}"));
        }
        s.push('\n');
    }
    Ok(s)
}

fn gnp_curve(n: usize, p: Option<f64>, c: Option<f64>, grid: usize, lo: f64, hi: f64) -> Result<String, Failure> {
    let p = match (p, c) {
        (Some(p), None) => p,
        (None, Some(c)) => ModelSpec::Gnp { n, density: vacant_lab::config::Density::C(c) }
            .gnp_params()
            .map(|g| g.p)
            .ok_or_else(|| Failure::Invalid("bad density".into()))?,
        _ => return Err(Failure::Invalid("give exactly one of --p and --c".into())),
    };
    if grid == 0 || lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Failure::Invalid("need --grid >= 1 and --theta-min <= --theta-max".into()));
    }
    let mut s = String::from("theta,t,vacant,vacant_mean_degree,giant_fraction\n");
    for i in 0..grid {
        let theta = if grid == 1 { lo } else { lo + (hi - lo) * i as f64 / (grid - 1) as f64 };
        let g = theory::gnp_schedule(n, p, theta)?;
        s.push_str(&format!("{theta},{},{},{},{}\n", g.t_theta, g.vacant, g.vacant_mean_degree(), g.giant_fraction()));
    }
    Ok(s)
}

fn scan(cfg: &ScanConfig, out: Option<&Path>, check: bool) -> Outcome {
    let series = critical_window_scan(cfg).map_err(|e| Failure::Invalid(e.to_string()))?;
    let mut s = String::from("factor,n,mean_largest,stderr,slope,slope_stderr\n");
    for x in &series {
        for pt in &x.points {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                x.factor, pt.n, pt.mean_largest, pt.stderr, x.slope, x.slope_stderr
            ));
        }
    }
    emit(out, s.as_bytes())?;
    let mut bad = Vec::new();
    for x in &series {
        let window = if x.factor < 1.0 {
            (0.95, 1.05)
        } else if x.factor == 1.0 {
            (0.55, 0.75)
        } else {
            (f64::NEG_INFINITY, 0.2)
        };
        let ok = (window.0..=window.1).contains(&x.slope);
        eprintln!(
            "vwl: factor {} slope {:.4} ± {:.4} {}",
            x.factor,
            x.slope,
            x.slope_stderr,
            if ok { "ok" } else { "outside window" }
        );
        if !ok {
            bad.push(format!("factor {}", x.factor));
        }
    }
    if check && !bad.is_empty() {
        return Err(Failure::Check(format!("slope outside window for {}", bad.join(", "))));
    }
    Ok(())
}

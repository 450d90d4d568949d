//! `teleport` command-line interface.
//!
//! Every subcommand needs an explicit `--seed`. Each artifact gets a
//! `<name>.manifest.json` sidecar with the invocation, so the data files
//! themselves stay byte-identical across repeat runs.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use crate::experiment::{
    csv_header, read_aggregate_csv, read_raw_csv, run_ensemble, write_aggregate_csv, write_json, write_raw_csv,
    ExperimentConfig,
};
use crate::meanfield::{run_pipeline, write_curve_csv, MfParams, PipelineOptions};
use crate::oracle::verify::{run_all, VerifyOptions};
use crate::scaling::{
    bootstrap_collapse, collapse_points, crossing_scan, fit_collapse, kt_scan, BootstrapOptions, CollapseOptions,
    CollapseParams, Residual, ScalingDataset,
};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Parser, Debug)]
#[command(name = "teleport", version, about = "Teleportation transition in random Clifford circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run trajectory ensembles; writes raw.csv and ensemble.csv
    Simulate(Common),
    /// Finite-size-scaling collapse with bootstrap errors; writes fit.json and collapse.csv
    Analyze(Common),
    /// Kosterlitz-Thouless form fits at every time; writes kt.csv and kt.json
    KtScan(Common),
    /// Significant crossings of consecutive sizes; writes crossings.json
    Crossings(Common),
    /// Mean-field onset scan and exponent fits; writes meanfield.json and psi_curve.csv
    Meanfield(Common),
    /// Run the oracle suites; exits 1 if any check fails
    Verify(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; required, there is no time-based default
    #[arg(long)]
    seed: u64,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores); never changes output bytes
    #[arg(long)]
    threads: Option<usize>,
    /// Override the configured trajectory count (simulate only)
    #[arg(long)]
    trajectories: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubcommandKind {
    Simulate,
    Analyze,
    KtScan,
    Crossings,
    Meanfield,
    Verify,
}

impl SubcommandKind {
    fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Analyze => "analyze",
            Self::KtScan => "kt-scan",
            Self::Crossings => "crossings",
            Self::Meanfield => "meanfield",
            Self::Verify => "verify",
        }
    }

    fn needs_config(self) -> bool {
        !matches!(self, Self::Meanfield | Self::Verify)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: SubcommandKind,
    pub config: Option<PathBuf>,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub trajectories: Option<usize>,
    pub version: String,
}

/// Sidecar written next to each artifact.
#[derive(Serialize)]
struct Sidecar<'a> {
    artifact: &'a str,
    manifest: &'a RunManifest,
    started_unix: u64,
    finished_unix: u64,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Parses `argv` (program name first). Usage errors come back as clap
/// errors whose `exit_code()` is 2; `--help` and `--version` exit 0.
pub fn parse_invocation<I, T>(argv: I) -> Result<RunManifest, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let (kind, c) = match cli.command {
        Command::Simulate(c) => (SubcommandKind::Simulate, c),
        Command::Analyze(c) => (SubcommandKind::Analyze, c),
        Command::KtScan(c) => (SubcommandKind::KtScan, c),
        Command::Crossings(c) => (SubcommandKind::Crossings, c),
        Command::Meanfield(c) => (SubcommandKind::Meanfield, c),
        Command::Verify(c) => (SubcommandKind::Verify, c),
    };
    let mut cmd = Cli::command();
    if kind.needs_config() && c.config.is_none() {
        return Err(cmd.error(
            ErrorKind::MissingRequiredArgument,
            format!("`{}` requires --config <PATH>", kind.name()),
        ));
    }
    if c.trajectories.is_some() && kind != SubcommandKind::Simulate {
        return Err(cmd.error(ErrorKind::ArgumentConflict, "--trajectories only applies to `simulate`"));
    }
    if c.threads == Some(0) || c.trajectories == Some(0) {
        return Err(cmd.error(ErrorKind::ValueValidation, "--threads and --trajectories must be positive"));
    }
    Ok(RunManifest {
        subcommand: kind,
        config: c.config,
        seed: c.seed,
        out: c.out.unwrap_or_else(|| PathBuf::from("results")),
        threads: c.threads,
        trajectories: c.trajectories,
        version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

/// A failure tagged with the pipeline stage it came from.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub message: String,
}

impl Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} failed: {}", self.stage, self.message)
    }
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, StageError>;
}

impl<T, E: Display> Stage<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T, StageError> {
        self.map_err(|e| StageError {
            stage,
            message: e.to_string(),
        })
    }
}

/// Options shared by `analyze`, `kt-scan` and `crossings`. `input` is
/// resolved relative to the config file's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// `raw.csv` (enables bootstrap) or `ensemble.csv` from `simulate`.
    pub input: PathBuf,
    #[serde(default)]
    pub t_min: Option<f64>,
    #[serde(default)]
    pub t_max: Option<f64>,
    /// Collapse starting point; defaults to the window midpoint, ν = 2, β = 0.3.
    #[serde(default)]
    pub guess: Option<CollapseParams>,
    #[serde(default = "default_n_boot")]
    pub n_boot: usize,
    #[serde(default = "default_fraction")]
    pub bootstrap_fraction: f64,
    #[serde(default = "default_weight_width")]
    pub weight_width: f64,
    #[serde(default = "default_residual")]
    pub residual: Residual,
    /// Significance threshold, in combined standard errors, for crossings.
    #[serde(default = "default_threshold")]
    pub crossing_threshold: f64,
}

fn default_n_boot() -> usize {
    1000
}
fn default_fraction() -> f64 {
    0.5
}
fn default_weight_width() -> f64 {
    40.0
}
fn default_residual() -> Residual {
    Residual::Relative
}
fn default_threshold() -> f64 {
    2.0
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeanFieldConfig {
    pub params: MfParams,
    pub pipeline: PipelineOptions,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, StageError> {
    let text = std::fs::read_to_string(path).map_err(|e| StageError {
        stage: "config",
        message: format!("{}: {e}", path.display()),
    })?;
    serde_json::from_str(&text).map_err(|e| StageError {
        stage: "config",
        message: format!("{}: {e}", path.display()),
    })
}

struct Run<'a> {
    manifest: &'a RunManifest,
    started: u64,
}

impl Run<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.manifest.out.join(name)
    }

    fn sidecar(&self, artifact: &str) -> Result<(), StageError> {
        let sidecar = Sidecar {
            artifact,
            manifest: self.manifest,
            started_unix: self.started,
            finished_unix: unix_now(),
        };
        write_json(&self.path(&format!("{artifact}.manifest.json")), &sidecar).stage("write")
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), StageError> {
        write_json(&self.path(name), value).stage("write")?;
        self.sidecar(name)
    }
}

/// Runs a parsed invocation and returns its exit code.
pub fn dispatch(manifest: &RunManifest) -> i32 {
    let run = || -> Result<(), StageError> {
        std::fs::create_dir_all(&manifest.out)
            .map_err(|e| format!("{}: {e}", manifest.out.display()))
            .stage("output directory")?;
        let run = Run {
            manifest,
            started: unix_now(),
        };
        match manifest.subcommand {
            SubcommandKind::Simulate => simulate(&run),
            SubcommandKind::Analyze => analyze(&run),
            SubcommandKind::KtScan => kt(&run),
            SubcommandKind::Crossings => crossings(&run),
            SubcommandKind::Meanfield => meanfield(&run),
            SubcommandKind::Verify => verify(&run),
        }
    };
    let result = match manifest.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(e) => Err(StageError {
                stage: "thread pool",
                message: e.to_string(),
            }),
        },
        None => run(),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {} {e}", manifest.subcommand.name());
            1
        }
    }
}

fn simulate(run: &Run) -> Result<(), StageError> {
    let path = run.manifest.config.as_deref().expect("checked at parse time");
    let mut config = ExperimentConfig::from_json_file(path).stage("config")?;
    config.master_seed = run.manifest.seed;
    if let Some(n) = run.manifest.trajectories {
        config.n_trajectories = n;
    }
    let table = run_ensemble(&config).stage("simulate")?;
    write_raw_csv(&run.path("raw.csv"), &table.raw).stage("write")?;
    run.sidecar("raw.csv")?;
    write_aggregate_csv(&run.path("ensemble.csv"), &table.rows).stage("write")?;
    run.sidecar("ensemble.csv")?;
    eprintln!(
        "simulate: {} trajectories, {} rows -> {}",
        config.n_trajectories,
        table.rows.len(),
        run.manifest.out.display()
    );
    Ok(())
}

struct Loaded {
    config: AnalysisConfig,
    data: ScalingDataset,
    family: String,
    alpha: Option<f64>,
}

fn load_analysis(run: &Run) -> Result<Loaded, StageError> {
    let path = run.manifest.config.as_deref().expect("checked at parse time");
    let config: AnalysisConfig = read_json(path)?;
    let input = path.parent().unwrap_or(Path::new(".")).join(&config.input);
    let header = csv_header(&input).stage("read input")?;
    let (data, family, alpha) = if header.split(',').any(|h| h == "trajectory") {
        let raw = read_raw_csv(&input).stage("read input")?;
        let first = raw.first().cloned();
        let ds = ScalingDataset::from_raw(&raw).stage("read input")?;
        (ds, first.as_ref().map(|r| r.family.clone()), first.and_then(|r| r.alpha))
    } else {
        let rows = read_aggregate_csv(&input).stage("read input")?;
        let first = rows.first().cloned();
        let ds = ScalingDataset::from_rows(&rows);
        (ds, first.as_ref().map(|r| r.family.clone()), first.and_then(|r| r.alpha))
    };
    let family = family
        .ok_or_else(|| format!("{}: no data rows", input.display()))
        .stage("read input")?;
    let lo = config.t_min.unwrap_or(f64::NEG_INFINITY);
    let hi = config.t_max.unwrap_or(f64::INFINITY);
    Ok(Loaded {
        data: data.window(lo, hi),
        config,
        family,
        alpha,
    })
}

#[derive(Serialize)]
struct FitReport {
    family: String,
    alpha: Option<f64>,
    t_c: f64,
    nu: f64,
    beta: f64,
    /// Bootstrap standard deviations; absent without trajectory samples.
    errors: Option<CollapseParams>,
    n_boot: usize,
    seed: u64,
    lse: f64,
    converged: bool,
}

fn analyze(run: &Run) -> Result<(), StageError> {
    let Loaded {
        config,
        data,
        family,
        alpha,
    } = load_analysis(run)?;
    let sizes = data.require_sizes(3).stage("analyze")?;
    let guess = config.guess.unwrap_or_else(|| {
        let (lo, hi) = data
            .points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.t), b.max(p.t)));
        CollapseParams::new(0.5 * (lo + hi), 2.0, 0.3)
    });
    let opts = CollapseOptions {
        residual: config.residual,
        weight_width: config.weight_width,
        ..CollapseOptions::default()
    };
    let fit = fit_collapse(&data, guess, &opts).stage("collapse fit")?;
    let (errors, n_boot) = if data.samples.is_some() && config.n_boot > 0 {
        let boot = BootstrapOptions {
            n_boot: config.n_boot,
            fraction: config.bootstrap_fraction,
            seed: run.manifest.seed,
        };
        let result = bootstrap_collapse(&data, fit.params(), &opts, &boot).stage("bootstrap")?;
        (Some(result.std), config.n_boot)
    } else {
        (None, 0)
    };
    let report = FitReport {
        family,
        alpha,
        t_c: fit.t_c,
        nu: fit.nu,
        beta: fit.beta,
        errors,
        n_boot,
        seed: run.manifest.seed,
        lse: fit.lse,
        converged: fit.converged,
    };
    run.json("fit.json", &report)?;

    let path = run.path("collapse.csv");
    let mut w = csv::Writer::from_path(&path).stage("write")?;
    w.write_record(["x", "y", "N"]).stage("write")?;
    for (x, y, n) in collapse_points(&data, fit.params()) {
        w.write_record([x.to_string(), y.to_string(), n.to_string()]).stage("write")?;
    }
    w.flush().stage("write")?;
    run.sidecar("collapse.csv")?;
    eprintln!(
        "analyze: sizes {sizes:?}: t_c = {:.4}, nu = {:.4}, beta = {:.4}",
        fit.t_c, fit.nu, fit.beta
    );
    Ok(())
}

fn kt(run: &Run) -> Result<(), StageError> {
    let loaded = load_analysis(run)?;
    let scan = kt_scan(&loaded.data).stage("kt scan")?;
    let path = run.path("kt.csv");
    let mut w = csv::Writer::from_path(&path).stage("write")?;
    for r in &scan.records {
        w.serialize(r).stage("write")?;
    }
    w.flush().stage("write")?;
    run.sidecar("kt.csv")?;
    #[derive(Serialize)]
    struct Summary {
        t_c: f64,
        error: f64,
        window: (f64, f64),
    }
    run.json(
        "kt.json",
        &Summary {
            t_c: scan.t_c,
            error: scan.error,
            window: scan.window,
        },
    )?;
    eprintln!("kt-scan: t_c = {:.3} ± {:.3}", scan.t_c, scan.error);
    Ok(())
}

fn crossings(run: &Run) -> Result<(), StageError> {
    let loaded = load_analysis(run)?;
    let scan = crossing_scan(&loaded.data, loaded.config.crossing_threshold).stage("crossing scan")?;
    run.json("crossings.json", &scan)?;
    match scan.largest_pair_estimate() {
        Some(t) => eprintln!("crossings: largest crossing pair at t = {t:.3}"),
        None => eprintln!("crossings: none"),
    }
    Ok(())
}

fn meanfield(run: &Run) -> Result<(), StageError> {
    let config: MeanFieldConfig = match &run.manifest.config {
        Some(p) => read_json(p)?,
        None => MeanFieldConfig::default(),
    };
    let report = run_pipeline(&config.params, &config.pipeline).stage("mean-field pipeline")?;
    run.json("meanfield.json", &report)?;
    let mut curve = report.scan.clone();
    curve.extend(report.beta_curve.iter().cloned());
    curve.sort_by(|a, b| a.t.total_cmp(&b.t));
    write_curve_csv(&run.path("psi_curve.csv"), &curve).stage("write")?;
    run.sidecar("psi_curve.csv")?;
    eprintln!(
        "meanfield: t_c = {:.4}, beta = {:.3}, delta = {:.3}, nu = {:.3}",
        report.t_c, report.beta, report.delta, report.nu
    );
    Ok(())
}

fn verify(run: &Run) -> Result<(), StageError> {
    let opts: VerifyOptions = match &run.manifest.config {
        Some(p) => read_json(p)?,
        None => VerifyOptions::default(),
    };
    let checks = run_all(&opts, run.manifest.seed);
    for c in &checks {
        println!("{c}");
    }
    run.json(
        "verify.json",
        &checks
            .iter()
            .map(|c| serde_json::json!({"name": c.name, "passed": c.passed, "detail": c.detail}))
            .collect::<Vec<_>>(),
    )?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(StageError {
            stage: "verify",
            message: format!("failing checks: {}", failed.join(", ")),
        })
    }
}

/// Binary entry point.
pub fn main() -> i32 {
    match parse_invocation(std::env::args_os()) {
        Ok(manifest) => dispatch(&manifest),
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_simulate() {
        let m = parse_invocation(["teleport", "simulate", "--config", "c.json", "--seed", "7", "--out", "results/"])
            .unwrap();
        assert_eq!(m.subcommand, SubcommandKind::Simulate);
        assert_eq!(m.seed, 7);
        assert_eq!(m.out, PathBuf::from("results/"));
    }

    #[test]
    fn seed_is_mandatory() {
        let e = parse_invocation(["teleport", "simulate", "--config", "c.json"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("--seed"));
    }

    #[test]
    fn usage_errors_exit_two() {
        for argv in [
            vec!["teleport", "bogus", "--seed", "1"],
            vec!["teleport", "analyze", "--seed", "1"],
            vec!["teleport", "verify", "--seed", "1", "--frobnicate"],
            vec!["teleport", "meanfield", "--seed", "1", "--trajectories", "5"],
            vec!["teleport", "verify", "--seed", "1", "--threads", "0"],
        ] {
            let e = parse_invocation(argv.clone()).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{argv:?}");
        }
    }

    #[test]
    fn config_optional_for_meanfield_and_verify() {
        assert!(parse_invocation(["teleport", "meanfield", "--seed", "1"]).is_ok());
        assert!(parse_invocation(["teleport", "verify", "--seed", "1"]).is_ok());
    }

    #[test]
    fn help_exits_zero() {
        let e = parse_invocation(["teleport", "--help"]).unwrap_err();
        assert_eq!(e.exit_code(), 0);
    }
}

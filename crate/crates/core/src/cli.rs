//! `coevo` command-line front end.
//!
//! Exit codes: 0 success, 1 internal error, 2 usage or parameter error,
//! 3 assertion or validation failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::CoevoError;
use crate::metrics::{density_profile, evaluate, SocietyMetrics};
use crate::simulator::{
    compare, compare_density, estimate_steady, run_simulation, ComparisonReport, SimConfig, SimResult,
};
use crate::steady_state::{steady_state, ParamName, SocietyParams, SteadyState};
use crate::validation::{
    default_bases, default_log_grid, default_w_grid, run_suite, sweep, Metric, SuiteReport, SweepReport, SweepSpec,
    DEFAULT_EPSILON, DEFAULT_SCAN_STEP,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ASSERTION: i32 = 3;

/// Seed used when neither a flag nor the config file gives one.
pub const SEED_ENV: &str = "COEVO_SEED";

/// Bins of a density table when `--bins` is absent.
pub const DEFAULT_DENSITY_POINTS: usize = 200;

/// Share of the population a histogram bin must hold to enter the density check.
pub const DENSITY_MASS_FRACTION: f64 = 0.01;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] CoevoError),
    #[error("{0}")]
    Assertion(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Model(e) => match e {
                CoevoError::Domain { .. } | CoevoError::Degenerate(_) | CoevoError::GuardViolation { .. } => EXIT_USAGE,
                _ => EXIT_INTERNAL,
            },
            CliError::Assertion(_) => EXIT_ASSERTION,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => EXIT_INTERNAL,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "coevo", version, about = "Steady state, simulation and comparative statics of the individualism-collectivism society model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON file whose keys supply any flag; the command line wins.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output format of the primary record on stdout and in --out.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Directory for output files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for sweeps and replicates (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the steady state and print every closed-form metric.
    Solve(ParamArgs),
    /// Tabulate the stationary welfare density as `x,p`.
    Density(DensityArgs),
    /// Run the agent simulation and compare it with the closed forms.
    Simulate(SimulateArgs),
    /// Sweep one parameter and report metric shapes.
    Sweep(SweepArgs),
    /// Run the full suite of monotonicity and uniqueness checks.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    #[arg(long = "lambda-b")]
    pub lambda_b: Option<f64>,
    #[arg(long = "lambda-d")]
    pub lambda_d: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub w: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Upper end of the table (default 40/λ₁).
    #[arg(long = "x-max")]
    pub x_max: Option<f64>,
    /// Number of rows.
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "n-scale")]
    pub n_scale: Option<u32>,
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    #[arg(long = "burn-in")]
    pub burn_in: Option<f64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Welfare histogram bins.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Upper histogram edge (default 10/λ_d).
    #[arg(long = "x-max")]
    pub x_max: Option<f64>,
    /// Exit 3 if any metric is more than 3 standard errors from its closed form.
    #[arg(long)]
    pub assert: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Swept parameter: lambda_b, lambda_d, r or w.
    #[arg(long)]
    pub param: Option<String>,
    /// Comma-separated metrics (default: all of q_bar,pop,x_bar,t_bar,var_x,cf).
    #[arg(long, value_delimiter = ',')]
    pub metric: Option<Vec<String>>,
    /// Comma-separated, strictly increasing grid (default depends on the parameter).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// `ε` of the guarded cumulative-welfare-vs-boundary claim.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Step of the fixed-point sign-change scan.
    #[arg(long = "scan-step")]
    pub scan_step: Option<f64>,
}

/// Keys accepted in a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(alias = "lambda-b")]
    pub lambda_b: Option<f64>,
    #[serde(alias = "lambda-d")]
    pub lambda_d: Option<f64>,
    pub r: Option<f64>,
    pub w: Option<f64>,
    pub seed: Option<u64>,
    #[serde(alias = "n-scale")]
    pub n_scale: Option<u32>,
    #[serde(alias = "t-end")]
    pub t_end: Option<f64>,
    #[serde(alias = "burn-in")]
    pub burn_in: Option<f64>,
    pub replicates: Option<usize>,
    pub bins: Option<usize>,
    #[serde(alias = "x-max")]
    pub x_max: Option<f64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub assert: Option<bool>,
    pub param: Option<String>,
    pub metric: Option<Vec<String>>,
    pub grid: Option<Vec<f64>>,
    pub epsilon: Option<f64>,
    #[serde(alias = "scan-step")]
    pub scan_step: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

/// Wall-clock bounds of a run, in milliseconds since the Unix epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timestamps {
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

/// Provenance of an output set.
///
/// Timestamps are written only to `manifest.json`; records embedded in
/// data outputs omit them so reruns are byte-identical. Setting
/// `SOURCE_DATE_EPOCH` pins them as well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub params: Option<SocietyParams>,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamps: Option<Timestamps>,
}

impl RunManifest {
    fn new(command: &str, params: Option<SocietyParams>, config: serde_json::Value, seeds: Vec<u64>) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            params,
            config,
            seeds,
            timestamps: None,
        }
    }
}

/// Pins manifest timestamps (seconds since the epoch) for reproducible output trees.
pub const SOURCE_DATE_EPOCH: &str = "SOURCE_DATE_EPOCH";

fn now_ms() -> u128 {
    if let Some(secs) = std::env::var(SOURCE_DATE_EPOCH).ok().and_then(|s| s.trim().parse::<u128>().ok()) {
        return secs * 1000;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

struct Context {
    file: ConfigFile,
    format: Format,
    out: Option<PathBuf>,
    started: u128,
}

impl Context {
    fn params(&self, a: &ParamArgs) -> CliResult<SocietyParams> {
        let f = &self.file;
        Ok(SocietyParams::new(
            a.lambda_b.or(f.lambda_b).unwrap_or(1.0),
            a.lambda_d.or(f.lambda_d).unwrap_or(1.0),
            a.r.or(f.r).unwrap_or(1.0),
            a.w.or(f.w).unwrap_or(0.0),
        )?)
    }

    fn out_dir(&self) -> CliResult<Option<&Path>> {
        match &self.out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                Ok(Some(dir.as_path()))
            }
            None => Ok(None),
        }
    }

    fn write_manifest(&self, dir: &Path, manifest: &RunManifest) -> CliResult<()> {
        let mut m = manifest.clone();
        m.timestamps = Some(Timestamps {
            started_unix_ms: self.started,
            finished_unix_ms: now_ms(),
        });
        write_json_file(&dir.join("manifest.json"), &m)
    }
}

fn write_json_file<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

fn json_bytes<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

/// Shortest round-trip text; exponent form for very small or large magnitudes.
fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Parses `args` (program name first) and runs the command, writing the
/// primary record to `stdout`. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command line.
pub fn execute(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let jobs = cli.jobs.or(file.jobs);
    if let Some(n) = jobs {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be >= 1".into()));
        }
        // A pool may already exist when called repeatedly in-process; keep it.
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("global thread pool already initialized");
        }
    }
    let ctx = Context {
        format: cli.format.or(file.format).unwrap_or(Format::Csv),
        out: cli.out.clone().or(file.out.clone()),
        file,
        started: now_ms(),
    };
    match &cli.command {
        Command::Solve(a) => cmd_solve(&ctx, a, stdout),
        Command::Density(a) => cmd_density(&ctx, a, stdout),
        Command::Simulate(a) => cmd_simulate(&ctx, a, stdout),
        Command::Sweep(a) => cmd_sweep(&ctx, a, stdout),
        Command::Validate(a) => cmd_validate(&ctx, a, stdout),
    }
}

#[derive(Debug, Clone, Serialize)]
struct SolveRecord {
    q_bar: f64,
    rate_good: f64,
    rate_bad: f64,
    lambda1: Option<f64>,
    lambda2: Option<f64>,
    mass_good: f64,
    mass_bad: f64,
    degenerate: bool,
    pop: f64,
    x_bar: f64,
    t_bar: f64,
    var_x: f64,
    cf: f64,
    x_bar_good: f64,
    x_bar_bad: f64,
    t_good: f64,
    t_bad: f64,
    t2: Option<f64>,
    t_newborn: f64,
    rate_natural: f64,
    rate_boundary: f64,
}

impl SolveRecord {
    fn new(ss: &SteadyState, m: &SocietyMetrics) -> Self {
        SolveRecord {
            q_bar: ss.q_bar,
            rate_good: ss.rate_good,
            rate_bad: ss.rate_bad,
            lambda1: ss.lambda1,
            lambda2: ss.lambda2,
            mass_good: ss.mass_good,
            mass_bad: ss.mass_bad,
            degenerate: ss.degenerate,
            pop: m.pop,
            x_bar: m.x_bar,
            t_bar: m.t_bar,
            var_x: m.var_x,
            cf: m.cf,
            x_bar_good: m.x_bar_good,
            x_bar_bad: m.x_bar_bad,
            t_good: m.t_good,
            t_bad: m.t_bad,
            t2: m.t2,
            t_newborn: m.t_newborn,
            rate_natural: m.rate_natural,
            rate_boundary: m.rate_boundary,
        }
    }

    fn csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(self)?;
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }
}

fn emit(ctx: &Context, stdout: &mut dyn Write, name: &str, csv: Vec<u8>, json: Vec<u8>) -> CliResult<()> {
    let (bytes, ext) = match ctx.format {
        Format::Csv => (csv, "csv"),
        Format::Json => (json, "json"),
    };
    stdout.write_all(&bytes)?;
    if let Some(dir) = ctx.out_dir()? {
        fs::write(dir.join(format!("{name}.{ext}")), &bytes)?;
    }
    Ok(())
}

fn cmd_solve(ctx: &Context, a: &ParamArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let params = ctx.params(a)?;
    let (ss, m) = evaluate(&params)?;
    let record = SolveRecord::new(&ss, &m);
    let manifest = RunManifest::new("solve", Some(params), json!({}), vec![]);
    let json = json_bytes(&json!({ "manifest": manifest, "params": params, "steady_state": ss, "metrics": m }))?;
    emit(ctx, stdout, "solve", record.csv()?, json)?;
    if let Some(dir) = ctx.out_dir()? {
        ctx.write_manifest(dir, &manifest)?;
    }
    Ok(())
}

fn cmd_density(ctx: &Context, a: &DensityArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let params = ctx.params(&a.params)?;
    let ss = steady_state(&params)?;
    let n = a.bins.or(ctx.file.bins).unwrap_or(DEFAULT_DENSITY_POINTS);
    let x_max = a.x_max.or(ctx.file.x_max);
    let profile = density_profile(&params, &ss, x_max, n)?;
    let manifest = RunManifest::new("density", Some(params), json!({ "x_max": profile.x_max, "bins": n }), vec![]);
    let csv = csv_bytes(
        &["x", "p"],
        profile.grid.iter().zip(&profile.values).map(|(x, p)| vec![num(*x), num(*p)]),
    )?;
    let json = json_bytes(&json!({
        "manifest": manifest,
        "spacing": profile.spacing(),
        "x": profile.grid,
        "p": profile.values,
    }))?;
    emit(ctx, stdout, "density", csv, json)?;
    if let Some(dir) = ctx.out_dir()? {
        ctx.write_manifest(dir, &manifest)?;
    }
    Ok(())
}

fn seed_from_env() -> CliResult<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got {s:?}"))),
        Err(_) => Ok(None),
    }
}

/// Simulation settings after merging flags, the config file and `COEVO_SEED`.
pub fn resolve_sim_config(params: &SocietyParams, a: &SimulateArgs, file: &ConfigFile) -> CliResult<SimConfig> {
    let d = SimConfig::for_params(params);
    let seed = match a.seed.or(file.seed) {
        Some(s) => s,
        None => seed_from_env()?.unwrap_or(d.seed),
    };
    let cfg = SimConfig {
        n_scale: a.n_scale.or(file.n_scale).unwrap_or(d.n_scale),
        t_end: a.t_end.or(file.t_end).unwrap_or(d.t_end),
        burn_in: a.burn_in.or(file.burn_in).unwrap_or(d.burn_in),
        seed,
        replicates: a.replicates.or(file.replicates).unwrap_or(d.replicates),
        hist_bins: a.bins.or(file.bins).unwrap_or(d.hist_bins),
        x_hist_max: a.x_max.or(file.x_max),
        ..d
    };
    cfg.validate()?;
    Ok(cfg)
}

fn comparison_csv(report: &ComparisonReport) -> CliResult<Vec<u8>> {
    csv_bytes(
        &["metric", "analytical", "empirical", "stderr", "z", "pass"],
        report.rows.iter().map(|r| {
            vec![
                r.metric.clone(),
                num(r.analytical),
                num(r.empirical),
                num(r.stderr),
                num(r.z),
                r.pass.to_string(),
            ]
        }),
    )
}

fn write_simulation_files(dir: &Path, res: &SimResult, analytical: &SteadyState) -> CliResult<()> {
    let series = csv_bytes(
        &["replicate", "time", "q_bar", "pop"],
        res.replicates.iter().flat_map(|run| {
            run.q_bar_series
                .iter()
                .zip(&run.pop_series)
                .map(move |(&(t, q), &(_, p))| vec![run.index.to_string(), num(t), num(q), num(p)])
        }),
    )?;
    fs::write(dir.join("series.csv"), series)?;

    let mean = res.mean_histogram();
    let density = compare_density(&res.params, analytical, res, DENSITY_MASS_FRACTION).ok();
    let hist = csv_bytes(
        &["lo", "hi", "empirical", "analytical"],
        mean.iter().enumerate().map(|(i, &e)| {
            let a = density.as_ref().map(|d| d.rows[i].analytical);
            vec![num(res.hist_edges[i]), num(res.hist_edges[i + 1]), num(e), opt(a)]
        }),
    )?;
    fs::write(dir.join("histogram.csv"), hist)?;

    let counts = csv_bytes(
        &["replicate", "seed", "births", "deaths_natural", "deaths_boundary", "alive_at_end"],
        res.replicates.iter().map(|run| {
            let c = run.counts;
            vec![
                run.index.to_string(),
                run.seed.to_string(),
                c.births.to_string(),
                c.deaths_natural.to_string(),
                c.deaths_boundary.to_string(),
                c.alive_at_end.to_string(),
            ]
        }),
    )?;
    fs::write(dir.join("counts.csv"), counts)?;

    let lifetimes = csv_bytes(
        &["replicate", "quality", "lifetime"],
        res.replicates.iter().flat_map(|run| {
            run.lifetimes
                .iter()
                .map(move |l| vec![run.index.to_string(), num(l.quality.sign()), num(l.lifetime)])
        }),
    )?;
    fs::write(dir.join("lifetimes.csv"), lifetimes)?;
    Ok(())
}

fn cmd_simulate(ctx: &Context, a: &SimulateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let params = ctx.params(&a.params)?;
    let cfg = resolve_sim_config(&params, a, &ctx.file)?;
    let assert = a.assert || ctx.file.assert.unwrap_or(false);
    let (ss, metrics) = evaluate(&params)?;
    log::info!(
        "simulating {} replicates, n_scale {}, t_end {}, seed {}",
        cfg.replicates,
        cfg.n_scale,
        cfg.t_end,
        cfg.seed
    );
    let res = run_simulation(&params, &cfg)?;
    let seeds: Vec<u64> = res.replicates.iter().map(|r| r.seed).collect();
    let manifest = RunManifest::new("simulate", Some(params), serde_json::to_value(&cfg)?, seeds);

    let estimates = match estimate_steady(&res) {
        Ok(e) => Some(e),
        Err(e) => {
            log::warn!("no analytical comparison: {e}");
            if assert {
                return Err(e.into());
            }
            None
        }
    };
    let comparison = estimates.as_ref().map(|e| compare(&metrics, e));
    let density = if ss.degenerate {
        None
    } else {
        Some(compare_density(&params, &ss, &res, DENSITY_MASS_FRACTION)?)
    };
    let totals = res.total_counts();
    if !totals.is_conserved() {
        return Err(CliError::Model(CoevoError::InsufficientData(format!(
            "event counts not conserved: {totals:?}"
        ))));
    }

    let summary = json!({
        "manifest": manifest,
        "analytical": metrics,
        "estimates": estimates,
        "comparison": comparison,
        "density": density.as_ref().map(|d| json!({
            "max_rel_error": d.max_rel_error,
            "bins_checked": d.bins_checked,
        })),
        "counts": totals,
    });
    let csv = match &comparison {
        Some(c) => comparison_csv(c)?,
        None => csv_bytes(&["metric", "analytical", "empirical", "stderr", "z", "pass"], Vec::<Vec<String>>::new())?,
    };
    emit(ctx, stdout, "comparison", csv, json_bytes(&summary)?)?;
    if let Some(dir) = ctx.out_dir()? {
        write_json_file(&dir.join("summary.json"), &summary)?;
        write_simulation_files(dir, &res, &ss)?;
        ctx.write_manifest(dir, &manifest)?;
    }

    if assert {
        if let Some(c) = &comparison {
            let failed: Vec<&str> = c.rows.iter().filter(|r| !r.pass).map(|r| r.metric.as_str()).collect();
            if !failed.is_empty() {
                return Err(CliError::Assertion(format!("|z| > 3 for {}", failed.join(", "))));
            }
        }
    }
    Ok(())
}

fn default_grid(param: ParamName) -> Vec<f64> {
    match param {
        ParamName::W => default_w_grid(),
        _ => default_log_grid(),
    }
}

fn cmd_sweep(ctx: &Context, a: &SweepArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let base = ctx.params(&a.params)?;
    let param_name = a
        .param
        .clone()
        .or(ctx.file.param.clone())
        .ok_or_else(|| CliError::Usage("sweep needs --param".into()))?;
    let param: ParamName = param_name
        .parse()
        .map_err(|e: CoevoError| CliError::Usage(e.to_string()))?;
    let metrics: Vec<Metric> = match a.metric.clone().or(ctx.file.metric.clone()) {
        Some(names) => names
            .iter()
            .map(|n| n.parse().map_err(|e: CoevoError| CliError::Usage(e.to_string())))
            .collect::<CliResult<_>>()?,
        None => Metric::ALL.to_vec(),
    };
    let grid = a.grid.clone().or(ctx.file.grid.clone()).unwrap_or_else(|| default_grid(param));

    let reports: Vec<SweepReport> = metrics
        .iter()
        .map(|&m| sweep(&SweepSpec::new(base, param, grid.clone(), m)))
        .collect::<Result<_, _>>()?;
    for r in &reports {
        log::info!("{} vs {}: {}{}", r.metric, r.param, r.verdict, if r.flat { " (flat)" } else { "" });
    }
    let manifest = RunManifest::new(
        "sweep",
        Some(base),
        json!({ "param": param, "metrics": metrics, "grid": grid }),
        vec![],
    );
    let csv = csv_bytes(
        &["param", "value", "metric", "metric_value"],
        reports.iter().flat_map(|r| {
            r.points.iter().map(move |p| {
                vec![
                    r.param.as_str().to_string(),
                    num(p.value),
                    r.metric.as_str().to_string(),
                    opt(p.metric_value),
                ]
            })
        }),
    )?;
    let json = json_bytes(&json!({ "manifest": manifest, "reports": reports }))?;
    emit(ctx, stdout, "sweep", csv, json)?;
    if let Some(dir) = ctx.out_dir()? {
        ctx.write_manifest(dir, &manifest)?;
    }
    Ok(())
}

fn suite_csv(report: &SuiteReport) -> CliResult<Vec<u8>> {
    let mut rows: Vec<Vec<String>> = report
        .checks
        .iter()
        .map(|c| {
            let b = c.report.base;
            vec![
                c.claim.as_str().to_string(),
                num(b.lambda_b),
                num(b.lambda_d),
                num(b.r),
                num(b.w),
                serde_json::to_value(c.expected)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default(),
                c.report.verdict.as_str().to_string(),
                opt(c.turning_point),
                opt(c.quality_at_turn),
                c.pass.to_string(),
            ]
        })
        .collect();
    rows.extend(report.uniqueness.iter().map(|u| {
        let b = u.params;
        vec![
            "unique_steady_state".to_string(),
            num(b.lambda_b),
            num(b.lambda_d),
            num(b.r),
            num(b.w),
            "one_sign_change".to_string(),
            u.sign_changes.map(|n| format!("{n} sign changes")).unwrap_or_else(|| "degenerate".into()),
            String::new(),
            String::new(),
            u.pass.to_string(),
        ]
    }));
    csv_bytes(
        &[
            "claim",
            "lambda_b",
            "lambda_d",
            "r",
            "w",
            "expected",
            "verdict",
            "turning_point",
            "quality_at_turn",
            "pass",
        ],
        rows,
    )
}

fn cmd_validate(ctx: &Context, a: &ValidateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let epsilon = a.epsilon.or(ctx.file.epsilon).unwrap_or(DEFAULT_EPSILON);
    let step = a.scan_step.or(ctx.file.scan_step).unwrap_or(DEFAULT_SCAN_STEP);
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(CliError::Usage(format!("--epsilon must lie in (0, 1/2), got {epsilon}")));
    }
    let report = run_suite(&default_bases(), epsilon, step)?;
    let manifest = RunManifest::new("validate", None, json!({ "epsilon": epsilon, "scan_step": step }), vec![]);
    emit(
        ctx,
        stdout,
        "validate",
        suite_csv(&report)?,
        json_bytes(&json!({ "manifest": manifest, "all_pass": report.all_pass(), "suite": report }))?,
    )?;
    if let Some(dir) = ctx.out_dir()? {
        ctx.write_manifest(dir, &manifest)?;
    }
    let failures = report.failures();
    let unique_failures = report.uniqueness.iter().filter(|u| !u.pass).count();
    log::info!(
        "{} checks, {} failed; {} uniqueness scans, {} failed; {} skipped outside their guard",
        report.checks.len(),
        failures.len(),
        report.uniqueness.len(),
        unique_failures,
        report.skipped.len()
    );
    if !report.all_pass() {
        let names: Vec<String> = failures
            .iter()
            .map(|c| format!("{} at {:?}", c.claim, c.report.base))
            .collect();
        return Err(CliError::Assertion(format!(
            "{} claim checks and {unique_failures} uniqueness scans failed: {}",
            failures.len(),
            names.join("; ")
        )));
    }
    Ok(())
}

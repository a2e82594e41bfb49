//! The `lookdown` command-line tool.

pub mod config;
pub mod suites;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lambda_lookdown::closed_forms::{self, Evaluation, SeriesConfig};
use lambda_lookdown::error::Error;
use lambda_lookdown::estimation::{self, write_heatmap_csv, write_report_csv, Estimate};
use lambda_lookdown::fixation_line::FixationLineSampler;
use lambda_lookdown::lambda::{self, LambdaSpec, ModelParams, SimplexPoint};
use lambda_lookdown::lookdown;
use lambda_lookdown::parallel::{with_workers, Execution};
use lambda_lookdown::quadrature::QuadratureConfig;
use lambda_lookdown::rng::{StreamSeed, DEFAULT_SEED};

use config::{Experiment, RunConfig, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
    Io(String),
    ValidationFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Io(_) => EXIT_IO,
            CliError::ValidationFailed(_) => EXIT_VALIDATION,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Numeric(m) | CliError::Io(m) => f.write_str(m),
            CliError::ValidationFailed(n) => write!(f, "{n} comparison(s) failed"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Numeric(_) | Error::Overflow(_) => CliError::Numeric(e.to_string()),
            Error::Domain(_) | Error::Unsupported(_) | Error::Invalid(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "lookdown", version, about = "Multi-type Λ-Wright–Fisher lookdown simulator and formula evaluator")]
pub struct Cli {
    /// Master seed for every random stream [default: 20240417, or the config's seed].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for replicate loops (results do not depend on it).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a closed-form expression.
    Eval(EvalArgs),
    /// Run a simulation described by a config file.
    Simulate(SimulateArgs),
    /// Run a validation suite and write the comparison report.
    Validate(ValidateArgs),
    /// Write mean-fixation-time grids over the 2-simplex.
    Heatmap(HeatmapArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Formula {
    CouponPmf,
    OrderProb,
    FirstLost,
    FixMeanKingman,
    FixMeanBeta,
    ExplosionBeta,
    Phi,
    Charfunc,
    StationaryMean,
    LambdaRate,
    FixlineRate,
}

/// Λ given by flags or by a TOML file.
#[derive(Debug, Clone, Args, Default)]
pub struct LambdaArgs {
    /// Mass of the Kingman atom at 0.
    #[arg(long)]
    pub kingman: Option<f64>,
    /// α of a Beta(2 − α, α) component.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Total mass of the Beta component.
    #[arg(long, default_value_t = 1.0)]
    pub beta_scale: f64,
    /// An atom `r,w` (repeatable).
    #[arg(long, value_parser = parse_atom)]
    pub atom: Vec<(f64, f64)>,
    /// TOML file with `kingman`, `beta` and `atoms` keys.
    #[arg(long, conflicts_with_all = ["kingman", "alpha", "atom"])]
    pub lambda: Option<PathBuf>,
}

fn parse_atom(s: &str) -> Result<(f64, f64), String> {
    let (r, w) = s.split_once(',').ok_or("expected r,w")?;
    Ok((r.trim().parse().map_err(|e| format!("{e}"))?, w.trim().parse().map_err(|e| format!("{e}"))?))
}

impl LambdaArgs {
    pub fn spec(&self) -> Result<LambdaSpec, CliError> {
        if let Some(path) = &self.lambda {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            return Ok(lambda::parse_lambda(&text)?);
        }
        let mut spec = LambdaSpec::default();
        if let Some(c) = self.kingman {
            spec = spec.with_kingman(c)?;
        }
        if let Some(a) = self.alpha {
            spec.beta = Some(lambda::BetaComponent::new(a, self.beta_scale)?);
        }
        for &(r, w) in &self.atom {
            spec = spec.with_atom(r, w)?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    pub formula: Formula,
    #[command(flatten)]
    pub lambda: LambdaArgs,
    /// Initial frequencies `x(1), …, x(d)`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Vec<f64>,
    #[arg(long)]
    pub k: Option<u64>,
    #[arg(long)]
    pub p: Option<u64>,
    /// Loss order `i_1,…,i_{d+1}`, last survivor first.
    #[arg(long, value_delimiter = ',')]
    pub order: Vec<usize>,
    #[arg(long)]
    pub eta: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
    #[arg(long, value_delimiter = ',')]
    pub nu: Vec<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub j: Option<u64>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub l: Option<u64>,
    /// Number of tracked types; defaults to the length of `--nu`, or 1.
    #[arg(long)]
    pub d: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Run configuration (TOML).
    pub config: PathBuf,
    /// Output file; overrides `output` in the config. Standard output if neither is set.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    pub suite: Suite,
    /// Replicates per comparison.
    #[arg(long, default_value_t = 20_000)]
    pub replicates: u64,
    /// Report file. Standard output if omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct HeatmapArgs {
    /// Grid resolution: step 1/m in each coordinate.
    #[arg(long, default_value_t = 20)]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Beta panels to write next to the Kingman panel.
    #[arg(long, value_delimiter = ',', default_values_t = [1.8, 1.5, 1.2])]
    pub alphas: Vec<f64>,
    /// Directory receiving one CSV per panel.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for this formula")))
}

fn point(x: &[f64]) -> Result<SimplexPoint, CliError> {
    if x.is_empty() {
        return Err(CliError::Usage("--x is required for this formula".into()));
    }
    Ok(SimplexPoint::new(x.to_vec())?)
}

/// Lines printed by `eval`.
pub fn eval(args: &EvalArgs) -> Result<Vec<String>, CliError> {
    let quad = QuadratureConfig::tight();
    let k_usize = || need(args.k, "k").map(|k| k as usize);
    let show = |e: Evaluation| vec![format!("{}", e.value), format!("abs_error {:e}", e.abs_error)];
    let exact = |v: f64| vec![format!("{v}"), "abs_error 0".to_string()];
    Ok(match args.formula {
        Formula::CouponPmf => show(closed_forms::coupon_pmf(&point(&args.x)?, k_usize()?, need(args.p, "p")?)?),
        Formula::OrderProb => exact(closed_forms::disappearance_order_prob(&point(&args.x)?, &args.order)?),
        Formula::FirstLost => exact(closed_forms::first_to_disappear_prob(&point(&args.x)?, need(args.eta, "eta")?)?),
        Formula::FixMeanKingman => {
            let c = need(args.lambda.kingman, "kingman")?;
            show(closed_forms::mean_fixation_kingman(&point(&args.x)?, k_usize()?, c)?)
        }
        Formula::FixMeanBeta => {
            let a = need(args.lambda.alpha, "alpha")?;
            let e = closed_forms::mean_fixation_beta(&point(&args.x)?, k_usize()?, a, &quad)?;
            show(Evaluation { value: e.value / args.lambda.beta_scale, abs_error: e.abs_error / args.lambda.beta_scale, ..e })
        }
        Formula::ExplosionBeta => {
            let e = closed_forms::mean_explosion_beta(need(args.k, "k")?, need(args.lambda.alpha, "alpha")?, &quad)?;
            show(Evaluation { value: e.value / args.lambda.beta_scale, abs_error: e.abs_error / args.lambda.beta_scale, ..e })
        }
        Formula::Phi => show(closed_forms::phi_generating(need(args.j, "j")?, need(args.s, "s")?, need(args.lambda.alpha, "alpha")?, &quad)?),
        Formula::Charfunc => {
            let c = args.lambda.kingman.unwrap_or(1.0);
            let v = closed_forms::fixation_charfunc_kingman(&point(&args.x)?, k_usize()?, need(args.t, "t")? / c, &SeriesConfig::default())?;
            vec![format!("re {}", v.re), format!("im {}", v.im)]
        }
        Formula::StationaryMean => show(closed_forms::stationary_time_mean(need(args.lambda.kingman, "kingman")?, args.theta)?),
        Formula::LambdaRate => exact(args.lambda.spec()?.lambda_rate(need(args.n, "n")?, need(args.k, "k")?)?),
        Formula::FixlineRate => {
            let d = args.d.unwrap_or(args.nu.len().max(1));
            let nu = if args.nu.is_empty() { vec![0.0; d] } else { args.nu.clone() };
            let params = ModelParams::new(d, args.lambda.spec()?, args.theta, nu)?;
            exact(lambda::fixation_jump_rate(&params, need(args.n, "n")?, need(args.l, "l")?)?)
        }
    })
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn summary(e: &Estimate) -> String {
    format!("mean {} stderr {} n {}", e.mean, e.stderr, e.n)
}

/// Runs the configured simulation and returns the summary line.
pub fn simulate(config: &RunConfig, exec: Execution) -> Result<String, CliError> {
    let mut out = open_output(config.output.as_deref())?;
    out.write_all(config.header().as_bytes())?;
    let seed = StreamSeed::new(config.seed, config.experiment.name());
    let line = match &config.experiment {
        Experiment::Lookdown { n_levels, horizon, initial_conditions, sample_times, replicate } => {
            let run = lookdown::run(config.model()?, *n_levels, *horizon, initial_conditions, sample_times, &seed, *replicate)?;
            run.write_trajectory_csv(&mut out)?;
            format!("events {} horizon {}", run.events.len(), run.horizon)
        }
        Experiment::Explosion { k, replicates, cap } => {
            let samples = estimation::explosion_samples(config.model()?, *k, *replicates, *cap, &seed, exec)?;
            writeln!(out, "replicate,elapsed,tail_bound,exact")?;
            for (i, s) in samples.iter().enumerate() {
                writeln!(out, "{i},{},{},{}", s.0, s.1, s.2)?;
            }
            let values: Vec<f64> = samples.iter().map(|s| s.0).collect();
            let tail = samples.iter().map(|s| s.1).fold(0.0, f64::max);
            format!("{} tail_bound {tail}", summary(&Estimate::from_samples(&values)))
        }
        Experiment::FixationLine { k, cap, replicate } => {
            let sampler = FixationLineSampler::new(config.model()?, *cap)?;
            let path = sampler.simulate_path(*k, *cap, &mut seed.rng(*replicate))?;
            path.write_csv(&mut out)?;
            format!("jumps {} final_level {}", path.jumps.len(), path.final_level())
        }
        Experiment::FixationTime { x, k, replicates, cap } => {
            let samples = estimation::fixation_time_samples(config.model()?, x, *k, *replicates, *cap, &seed, exec)?;
            writeln!(out, "replicate,time")?;
            for (i, s) in samples.iter().enumerate() {
                writeln!(out, "{i},{s}")?;
            }
            summary(&Estimate::from_samples(&samples))
        }
        Experiment::Validate { .. } => return Err(CliError::Usage("use the validate subcommand for suites".into())),
    };
    out.flush()?;
    Ok(line)
}

/// Runs a suite, writes the report, and fails if any comparison failed.
pub fn validate(args: &ValidateArgs, seed: u64, exec: Execution) -> Result<String, CliError> {
    let config = RunConfig {
        seed,
        output: args.output.clone(),
        model: None,
        experiment: Experiment::Validate { suite: args.suite, replicates: args.replicates },
    };
    let reports = suites::run_suite(args.suite, args.replicates, seed, exec)?;
    let mut out = open_output(args.output.as_deref())?;
    out.write_all(config.header().as_bytes())?;
    write_report_csv(&reports, &mut out)?;
    out.flush()?;
    let failed = reports.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        return Err(CliError::ValidationFailed(failed));
    }
    Ok(format!("{} comparisons passed", reports.len()))
}

/// File name of one heatmap panel.
pub fn panel_file(alpha: Option<f64>, k: usize) -> String {
    match alpha {
        None => format!("heatmap_kingman_k{k}.csv"),
        Some(a) => format!("heatmap_beta{a}_k{k}.csv"),
    }
}

pub fn heatmap(args: &HeatmapArgs) -> Result<String, CliError> {
    let quad = QuadratureConfig::default();
    let mut panels: Vec<(Option<f64>, LambdaSpec)> = vec![(None, LambdaSpec::kingman(1.0)?)];
    for &a in &args.alphas {
        panels.push((Some(a), LambdaSpec::beta(a)?));
    }
    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::Io(format!("{}: {e}", args.out_dir.display())))?;
    let mut written = Vec::new();
    for (alpha, spec) in panels {
        let params = ModelParams::neutral(2, spec)?;
        let rows = estimation::heatmap_grid(&params, args.k, args.m, &quad)?;
        let path = args.out_dir.join(panel_file(alpha, args.k));
        let file = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        write_heatmap_csv(&rows, &mut w)?;
        w.flush()?;
        written.push(path.display().to_string());
    }
    Ok(format!("wrote {}", written.join(" ")))
}

/// Dispatch a parsed command; returns the line for standard output.
pub fn run(cli: Cli) -> Result<String, CliError> {
    let exec = Execution::Parallel;
    let body = move || -> Result<String, CliError> {
        match &cli.command {
            Command::Eval(args) => Ok(eval(args)?.join("\n")),
            Command::Simulate(args) => {
                let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::Io(format!("{}: {e}", args.config.display())))?;
                let mut config = RunConfig::parse(&text)?;
                if args.output.is_some() {
                    config.output = args.output.clone();
                }
                if let Some(seed) = cli.seed {
                    config.seed = seed;
                }
                simulate(&config, exec)
            }
            Command::Validate(args) => validate(args, cli.seed.unwrap_or(DEFAULT_SEED), exec),
            Command::Heatmap(args) => heatmap(args),
        }
    };
    match cli.workers {
        Some(0) => Err(CliError::Usage("--workers must be positive".into())),
        Some(n) => with_workers(n, body)?,
        None => body(),
    }
}

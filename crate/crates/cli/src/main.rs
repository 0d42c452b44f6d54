use clap::{Args, Parser, Subcommand, ValueEnum};
use gmfade::experiments::{self, Experiment, ExperimentConfig, SweepResult};
use gmfade::estimators::EntropyMethod;
use gmfade::Error;
use std::path::PathBuf;
use std::process::ExitCode;

/// Information-rate experiments for Gauss-Markov Rayleigh fading channels.
#[derive(Debug, Parser)]
#[command(name = "gmfade", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cross-check the three determinant routes on random blocks.
    DetVerify(RunArgs),
    /// Sweep α at each ρ: channel information, I(X;Y) and the rate bounds.
    SweepAlpha(RunArgs),
    /// Sweep ρ at each α.
    SweepSnr(RunArgs),
    /// Look for decreases of I(X;Y)/N in α across input families.
    Conjecture(RunArgs),
    /// Tabulate Δ(ρ) against its limit γ·log₂ e.
    DeltaLimit(RunArgs),
    /// Compare I(X;Y) and I(G;Y) at α = 0 with Gaussian input.
    Theorem4(RunArgs),
    /// Check that both quadratic-form statistics average to 1 per symbol.
    Sanity(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON experiment config; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    /// Output file (CSV, or JSON with --json). Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Share random numbers across grid points.
    #[arg(long)]
    crn: bool,
    /// Emit rows as a JSON array instead of CSV.
    #[arg(long)]
    json: bool,
    /// Outer samples M.
    #[arg(long)]
    outer: Option<usize>,
    /// Inner samples K.
    #[arg(long)]
    inner: Option<usize>,
    /// Block length N (replaces any block-length grid).
    #[arg(long)]
    block_len: Option<usize>,
    /// Comma-separated α grid.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Comma-separated ρ grid.
    #[arg(long, value_delimiter = ',')]
    rho: Option<Vec<f64>>,
    /// Random cases per grid point for det-verify.
    #[arg(long)]
    trials: Option<usize>,
    /// How h(Y) evaluates the output density.
    #[arg(long, value_enum)]
    entropy_method: Option<Method>,
    /// Skip the K-doubling diagnostic.
    #[arg(long)]
    no_convergence_check: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    ParticleFilter,
    InputMixture,
}

impl From<Method> for EntropyMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::ParticleFilter => EntropyMethod::ParticleFilter,
            Method::InputMixture => EntropyMethod::InputMixture,
        }
    }
}

impl Command {
    fn split(self) -> (Experiment, RunArgs) {
        match self {
            Command::DetVerify(a) => (Experiment::DetVerify, a),
            Command::SweepAlpha(a) => (Experiment::SweepAlpha, a),
            Command::SweepSnr(a) => (Experiment::SweepSnr, a),
            Command::Conjecture(a) => (Experiment::Conjecture, a),
            Command::DeltaLimit(a) => (Experiment::DeltaLimit, a),
            Command::Theorem4(a) => (Experiment::Theorem4, a),
            Command::Sanity(a) => (Experiment::SanityAppendixI, a),
        }
    }
}

fn build_config(experiment: Experiment, args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let mut cfg: ExperimentConfig = serde_json::from_str(&text)?;
            cfg.experiment = experiment;
            cfg
        }
        None => ExperimentConfig::preset(experiment, args.seed),
    };
    cfg.estimator.seed = args.seed;
    if let Some(m) = args.outer {
        cfg.estimator.outer_samples = m;
    }
    if let Some(k) = args.inner {
        cfg.estimator.inner_samples = k;
    }
    if let Some(n) = args.block_len {
        cfg.channel = cfg.channel.with_block_len(n)?;
        cfg.block_lens = vec![n];
    }
    if let Some(a) = &args.alpha {
        cfg.alpha_grid = a.clone();
    }
    if let Some(r) = &args.rho {
        cfg.rho_grid = r.clone();
    }
    if let Some(m) = args.entropy_method {
        cfg.estimator.entropy_method = m.into();
    }
    if let Some(t) = args.trials {
        cfg.det_trials = t;
    }
    if args.crn {
        cfg.common_random_numbers = true;
    }
    if args.no_convergence_check {
        cfg.convergence_check = false;
    }
    if let Some(out) = &args.out {
        cfg.output_path = None;
        cfg.json_path = None;
        match args.json {
            true => cfg.json_path = Some(out.clone()),
            false => cfg.output_path = Some(out.clone()),
        }
    }
    Ok(cfg)
}

fn report_verdicts(result: &SweepResult) {
    for v in &result.verdicts {
        eprintln!(
            "{} rho={} N={}: {} (largest drop {:.4} bits, {:.2} SE)",
            v.family,
            v.rho,
            v.n,
            v.verdict.as_str(),
            v.max_drop,
            v.max_drop_sigmas
        );
    }
}

fn execute(experiment: Experiment, args: &RunArgs) -> Result<(), Error> {
    let cfg = build_config(experiment, args)?;
    let result = experiments::run(&cfg)?;
    if cfg.output_path.is_none() && cfg.json_path.is_none() {
        let text = match args.json {
            true => experiments::rows_json(&result.rows)? + "\n",
            false => experiments::csv_string(&result.rows)?,
        };
        print!("{text}");
    }
    report_verdicts(&result);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (experiment, args) = cli.command.split();
    match execute(experiment, &args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gose::{Mode, ProblemParams, StochasticEngine};
use gose_harness::output::resolve_out_dir;
use gose_harness::verify::{all_passed, TABLE_HEADER};
use gose_harness::{sweep, ExperimentConfig, HarnessError, VerifyEngine, VerifyOptions};

#[derive(Parser)]
#[command(
    name = "gose",
    version,
    about = "Run and check second-order stationary point solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config over its seeds.
    Run(RunArgs),
    /// Run an experiment config over its `[grid]`.
    Sweep(RunArgs),
    /// Check a negative-curvature finder on planted quadratics.
    VerifyNc(VerifyArgs),
    /// List the registered test problems.
    ListProblems,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Run this seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides `output.dir` and GOSE_OUT_DIR).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 50)]
    d: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0.5)]
    eps_h: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, value_enum, default_value_t = VerifyEngineArg::Deterministic)]
    engine: VerifyEngineArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add an antisymmetric part to the Hessian operator; the run must fail.
    #[arg(long)]
    inject_asymmetric: bool,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum EngineArg {
    Oja,
    MinibatchLanczos,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ModeArg {
    Deterministic,
    Stochastic,
    FiniteSum,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum VerifyEngineArg {
    Deterministic,
    Oja,
    MinibatchLanczos,
    FiniteSum,
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seeds = vec![seed];
        if let Some(grid) = cfg.grid.as_mut() {
            grid.seeds = None;
        }
    }
    if let Some(engine) = args.engine {
        cfg.options.nc.engine = match engine {
            EngineArg::Oja => StochasticEngine::Oja,
            EngineArg::MinibatchLanczos => StochasticEngine::MinibatchLanczos,
        };
    }
    if let Some(mode) = args.mode {
        cfg.mode = match mode {
            ModeArg::Deterministic => Mode::Deterministic,
            ModeArg::Stochastic => Mode::Stochastic,
            ModeArg::FiniteSum => Mode::FiniteSum,
        };
    }
    cfg.check()?;
    Ok(cfg)
}

fn run(args: &RunArgs) -> Result<ExitCode, HarnessError> {
    let cfg = load(args)?;
    let out = resolve_out_dir(args.out.as_deref(), cfg.output.dir.as_deref());
    let summaries = gose_harness::run_experiment(&cfg, &out)?;
    for s in &summaries {
        let certified = s
            .certified
            .map_or_else(|| "n/a".to_string(), |c| c.to_string());
        println!(
            "seed {}: {} certified={} |grad|={:.3e} f={:.6} nc_calls={} oracle_units={}",
            s.seed,
            sweep::label(&s.status),
            certified,
            s.grad_norm,
            s.final_f,
            s.counters.nc_calls,
            s.counters.oracle_units()
        );
    }
    println!("wrote {}", out.join("summary.jsonl").display());
    Ok(ExitCode::SUCCESS)
}

fn run_sweep(args: &RunArgs) -> Result<ExitCode, HarnessError> {
    let cfg = load(args)?;
    let out = resolve_out_dir(args.out.as_deref(), cfg.output.dir.as_deref());
    let results = gose_harness::run_sweep(&cfg, &out)?;
    print!("{}", sweep::format_table(&results));
    println!("wrote {}", out.join("sweep.csv").display());
    Ok(ExitCode::SUCCESS)
}

fn verify(args: &VerifyArgs) -> Result<ExitCode, HarnessError> {
    let opts = VerifyOptions {
        d: args.d,
        trials: args.trials,
        eps_h: args.eps_h,
        delta: args.delta,
        engine: match args.engine {
            VerifyEngineArg::Deterministic => VerifyEngine::Deterministic,
            VerifyEngineArg::Oja => VerifyEngine::Oja,
            VerifyEngineArg::MinibatchLanczos => VerifyEngine::MinibatchLanczos,
            VerifyEngineArg::FiniteSum => VerifyEngine::FiniteSum,
        },
        seed: args.seed,
        inject_asymmetric: args.inject_asymmetric,
    };
    let rows = gose_harness::verify_nc(&opts)?;
    println!("{TABLE_HEADER}");
    for row in &rows {
        println!("{row}");
    }
    Ok(if all_passed(&rows) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn list_problems() -> Result<ExitCode, HarnessError> {
    let params = ProblemParams::default();
    println!("{:<18} {:>4} {:>10} {:>10}", "name", "d", "L", "rho");
    for name in gose::problems::PROBLEM_NAMES {
        let p = gose::build_problem::<f64>(name, &params)?;
        println!(
            "{:<18} {:>4} {:>10.4} {:>10.4}",
            name,
            p.dim(),
            p.known_l,
            p.known_rho
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => run_sweep(args),
        Command::VerifyNc(args) => verify(args),
        Command::ListProblems => list_problems(),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(e.exit_code())
    })
}

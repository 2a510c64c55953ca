use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use regret_audit_core::harness::{MechanismSource, ValuationDistribution, DEFAULT_CONTEXT_STD};
use regret_audit_core::mechanism::generate_neural_spec;
use regret_audit_core::{
    run_audit, run_sweep, write_sweep_csv, AuctionSetting, AuditRunConfig, Error, ExhaustiveOptions, GridSpec,
    GridStyle, Method, PgaConfig, PortfolioConfig, TruthfulScan,
};

const EXIT_INVALID: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "regret-audit", version, about = "Audit auction mechanisms for ex-post regret")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the selected estimators over sampled valuation profiles.
    Eval(EvalArgs),
    /// Random-restart PGA over a grid of (L, R) pairs; writes CSV.
    Sweep(SweepArgs),
    /// Generate a seeded neural mechanism spec.
    GenMech(GenMechArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DistArg {
    Uniform01,
    Ctxnormal,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridStyleArg {
    Inclusive,
    OpenLeft,
}

#[derive(Clone, Copy, ValueEnum)]
enum TruthfulArg {
    Coordinates,
    Row,
}

#[derive(Args)]
struct RunArgs {
    /// `second-price`, `first-price`, `neural:SEED[:HIDDEN]`, or a spec path.
    #[arg(long)]
    mechanism: String,
    #[arg(long)]
    bidders: usize,
    #[arg(long)]
    items: usize,
    #[arg(long, value_enum, default_value = "uniform01")]
    dist: DistArg,
    /// Fixed bidder contexts for ctxnormal (comma separated, 1..=10).
    #[arg(long, value_delimiter = ',')]
    x_contexts: Option<Vec<u32>>,
    /// Fixed item contexts for ctxnormal (comma separated, 1..=10).
    #[arg(long, value_delimiter = ',')]
    y_contexts: Option<Vec<u32>>,
    #[arg(long, default_value_t = DEFAULT_CONTEXT_STD)]
    ctx_std: f64,
    #[arg(long = "grid-q", default_value_t = 1000)]
    grid_q: usize,
    #[arg(long, value_enum, default_value = "inclusive")]
    grid_style: GridStyleArg,
    /// Grid for the per-item phase of guided refinement (defaults to --grid-q).
    #[arg(long)]
    guided_grid_q: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "lower_bound,item_wise,guided")]
    methods: Vec<String>,
    /// PGA preset (regretnet, algnet, regretformer, citransnet); explicit flags override.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long = "L")]
    restarts: Option<usize>,
    #[arg(long = "R")]
    steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    k: usize,
    #[arg(long, default_value_t = 0.0)]
    sigma_opt: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma_truth: f64,
    /// Step size of the guided refinement phase (defaults to --gamma or 0.1).
    #[arg(long)]
    refine_gamma: Option<f64>,
    /// Steps of the guided refinement phase (defaults to --R or 200).
    #[arg(long)]
    refine_steps: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = regret_audit_core::DEFAULT_EXHAUSTIVE_BUDGET)]
    budget: u64,
    #[arg(long, value_enum, default_value = "coordinates")]
    exhaustive_truthful: TruthfulArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    l_values: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    r_values: Vec<usize>,
}

#[derive(Args)]
struct GenMechArgs {
    #[arg(long)]
    bidders: usize,
    #[arg(long)]
    items: usize,
    #[arg(long, default_value_t = 16)]
    hidden: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn build_config(args: &RunArgs) -> Result<AuditRunConfig, Error> {
    let setting = AuctionSetting::new(args.bidders, args.items)?;
    let mut cfg = AuditRunConfig::new(setting, MechanismSource::parse(&args.mechanism)?);
    cfg.distribution = match args.dist {
        DistArg::Uniform01 => ValuationDistribution::Uniform01,
        DistArg::Ctxnormal => ValuationDistribution::TruncatedNormalContext {
            x_contexts: args.x_contexts.clone(),
            y_contexts: args.y_contexts.clone(),
            std: args.ctx_std,
        },
    };
    let style = match args.grid_style {
        GridStyleArg::Inclusive => GridStyle::Inclusive,
        GridStyleArg::OpenLeft => GridStyle::OpenLeft,
    };
    cfg.grid = GridSpec::with_style(args.grid_q, style)?;
    cfg.guided_grid_q = args.guided_grid_q;
    cfg.methods = args.methods.iter().map(|m| m.parse()).collect::<Result<BTreeSet<Method>, _>>()?;

    let mut pga = match &args.preset {
        Some(name) => PgaConfig::preset(name).ok_or_else(|| Error::InvalidConfig(format!("unknown preset `{name}`")))?,
        None => PgaConfig::regretnet(),
    };
    if let Some(g) = args.gamma {
        pga.gamma = g;
    }
    if let Some(l) = args.restarts {
        pga.restarts = l;
    }
    if let Some(r) = args.steps {
        pga.steps = r;
    }
    cfg.pga = pga;
    cfg.portfolio = PortfolioConfig {
        k: args.k,
        sigma_opt: args.sigma_opt,
        sigma_truth: args.sigma_truth,
        refine: PgaConfig {
            gamma: args.refine_gamma.or(args.gamma).unwrap_or(0.1),
            restarts: 1,
            steps: args.refine_steps.or(args.steps).unwrap_or(200),
        },
    };
    cfg.samples = args.samples;
    cfg.seed = args.seed;
    cfg.exhaustive = ExhaustiveOptions {
        budget: args.budget,
        truthful: match args.exhaustive_truthful {
            TruthfulArg::Coordinates => TruthfulScan::Coordinates,
            TruthfulArg::Row => TruthfulScan::Row,
        },
    };
    cfg.output = Some(args.out.clone());
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Eval(args) => {
            let cfg = build_config(&args.run)?;
            let report = run_audit(&cfg)?;
            for s in &report.summaries {
                println!(
                    "{:<12} mean_regret={:.6e} mech_evals={} gradient_steps={} wall={:.3}s",
                    s.method.as_str(),
                    s.mean_regret,
                    s.total_mech_evals,
                    s.total_gradient_steps,
                    s.wall_seconds
                );
            }
        }
        Command::Sweep(args) => {
            let mut cfg = build_config(&args.run)?;
            cfg.methods.insert(Method::Pga);
            let rows = run_sweep(&cfg, &args.l_values, &args.r_values)?;
            write_sweep_csv(&rows, &args.run.out)?;
            for r in &rows {
                println!("L={:<5} R={:<5} mean_regret={:.6e}", r.restarts, r.steps, r.mean_regret);
            }
        }
        Command::GenMech(args) => {
            let setting = AuctionSetting::new(args.bidders, args.items)?;
            let spec = generate_neural_spec(setting, args.hidden, args.seed)?;
            spec.save(&args.out)?;
        }
    }
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        Error::Io { .. } | Error::Csv(_) => EXIT_IO,
        _ => EXIT_INVALID,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INVALID) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

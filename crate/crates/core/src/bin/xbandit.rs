use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use xbandit::bench::{self, ConfigFile, SeedSpec, UNIT_SIGMA};
use xbandit::bounds::BoundParams;
use xbandit::distsim::{account, run_distributed_with, Scheduler, SimOptions};
use xbandit::objective::{GroundTruth, NoiseModel, Objective, ObjectiveId, RewardOracle};
use xbandit::partition::{check_assumptions, SmoothnessParams};
use xbandit::serial::run_serial;
use xbandit::{AlgoParams, Error};

#[derive(Parser)]
#[command(
    name = "xbandit",
    version,
    about = "Distributed X-armed bandit simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep players × budgets × seeds and write one CSV row per run.
    Bench(Box<BenchArgs>),
    /// Run a single configuration and print its trajectory.
    Run(RunArgs),
    /// Check the partition geometry against a set of smoothness constants.
    CheckAssumptions {
        #[arg(long, default_value_t = 1.0)]
        nu1: f64,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[arg(long, default_value_t = 0.5)]
        nu2: f64,
        #[arg(long, default_value_t = 20)]
        max_depth: u32,
    },
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment file with flat `key = value` entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    objective: Option<String>,
    /// Comma-separated player counts.
    #[arg(long, value_delimiter = ',')]
    players: Option<Vec<usize>>,
    /// Comma-separated ascending per-player budgets.
    #[arg(long, value_delimiter = ',')]
    budget: Option<Vec<u64>>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// `none`, `gaussian`, `gaussian-reject` or `uniform`.
    #[arg(long)]
    noise: Option<String>,
    /// Unit-variance Gaussian noise; cannot be combined with --sigma.
    #[arg(long, conflicts_with = "sigma")]
    paper_noise: bool,
    /// Seed count (`20`) or explicit list (`1,5,9`).
    #[arg(long)]
    seeds: Option<SeedSpec>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Check every run against the theoretical bounds; exit non-zero if a
    /// deterministic bound fails.
    #[arg(long)]
    verify_bounds: bool,
    #[arg(long)]
    nu1: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    nu2: Option<f64>,
    /// Near-optimality dimension for the bound checks.
    #[arg(long)]
    d: Option<f64>,
    /// Packing constant for the bound checks; calibrated if omitted.
    #[arg(long)]
    c: Option<f64>,
    /// Run the agents of each simulation on separate threads.
    #[arg(long)]
    threaded_agents: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "double-sine")]
    objective: ObjectiveId,
    #[arg(long, default_value_t = 1)]
    players: usize,
    #[arg(long, default_value_t = 1600)]
    budget: u64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Gaussian noise level; 0 disables noise.
    #[arg(long, default_value_t = bench::DEFAULT_SIGMA)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use the single-process reference runner instead of the agent simulation.
    #[arg(long)]
    serial: bool,
    #[arg(long)]
    threaded_agents: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Bench(args) => bench_cmd(*args),
        Command::Run(args) => run_cmd(args),
        Command::CheckAssumptions {
            nu1,
            rho,
            nu2,
            max_depth,
        } => check_cmd(nu1, rho, nu2, max_depth),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn bench_cmd(args: BenchArgs) -> Result<ExitCode, Error> {
    let file = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let overrides = ConfigFile {
        objective: args.objective,
        players: args.players,
        budgets: args.budget,
        delta: args.delta,
        noise: args.noise,
        sigma: if args.paper_noise {
            Some(UNIT_SIGMA)
        } else {
            args.sigma
        },
        seeds: args.seeds,
        out: args.out,
        nu1: args.nu1,
        rho: args.rho,
        nu2: args.nu2,
        d: args.d,
        c: args.c,
        threaded_agents: args.threaded_agents.then_some(true),
        ..ConfigFile::default()
    };
    let cfg = file.merge(overrides).into_config()?;
    eprintln!(
        "{}: noise {}, m {:?}, n {:?}, {} seeds",
        cfg.objective,
        cfg.noise.label(),
        cfg.players,
        cfg.budgets,
        cfg.seeds.len()
    );

    let records = bench::run_sweep(&cfg)?;
    for s in bench::summarize(&records) {
        println!(
            "m={:<3} n={:<6} runs={:<4} mean_loss={:.6} se={:.6}",
            s.players, s.budget, s.runs, s.mean, s.std_err
        );
    }
    let failed = records.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 {
        eprintln!("{failed} cells failed");
    }
    if let Some(path) = &cfg.out {
        bench::emit_csv(&records, path)?;
        eprintln!("wrote {} rows to {}", records.len(), path.display());
    }

    if !args.verify_bounds {
        return Ok(ExitCode::SUCCESS);
    }
    let c = match cfg.c {
        Some(c) => c,
        None => bench::calibrate_c(cfg.objective, &cfg.params(1, cfg.max_budget()))?,
    };
    let template = BoundParams {
        d: cfg.d,
        c,
        nu1: cfg.smoothness.nu1,
        rho: cfg.smoothness.rho,
        players: 1,
        budget: 1,
        delta: cfg.delta,
    };
    let report = bench::verify_bounds(&records, &template);
    println!("bounds (d={}, C={c}):", cfg.d);
    for s in &report.summary {
        println!(
            "  {:<9} {}/{} ({:.1}%, need {:.1}%) {}",
            s.name,
            s.passed,
            s.total,
            100.0 * s.fraction(),
            100.0 * s.required,
            if s.ok() { "ok" } else { "FAIL" }
        );
    }
    Ok(if report.deterministic_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn run_cmd(args: RunArgs) -> Result<ExitCode, Error> {
    let params = AlgoParams::new(args.players, args.budget).with_delta(args.delta);
    let objective = Objective::from(args.objective);
    let noise = if args.sigma > 0.0 {
        NoiseModel::gaussian(args.sigma)
    } else {
        NoiseModel::None
    };
    let truth = GroundTruth::builtin(args.objective);
    let oracle_for = |j| RewardOracle::for_player(objective.clone(), noise, args.seed, j);

    let (result, comm) = if args.serial {
        (run_serial(&params, oracle_for, &truth)?, None)
    } else {
        let options = SimOptions {
            scheduler: if args.threaded_agents {
                Scheduler::Threaded
            } else {
                Scheduler::Sequential
            },
            ..SimOptions::default()
        };
        let run = run_distributed_with(&params, oracle_for, &truth, &options)?;
        (run.result, Some(account(&run.comm)))
    };

    println!("depth  |S_h|  T_h      best_mean  expanded");
    for l in &result.trajectory {
        println!(
            "{:<6} {:<6} {:<8} {:<10.6} {}",
            l.depth, l.set_size, l.t_h, l.best_mean, l.expanded
        );
    }
    println!(
        "x_n={} loss={:.6e} h_max={} q={} M={} pulls={} (f*={} at x*={})",
        result.x_n,
        result.loss,
        result.h_max,
        result.rounds,
        result.messages,
        result.total_pulls,
        truth.f_star,
        truth.x_star
    );
    if let Some(c) = comm {
        println!(
            "bus: rounds={} values/player={} max_payload={} values_observed={}",
            c.rounds, c.values_per_player, c.max_payload, c.values_observed
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn check_cmd(nu1: f64, rho: f64, nu2: f64, max_depth: u32) -> Result<ExitCode, Error> {
    let params = SmoothnessParams::new(nu1, rho, nu2)?;
    let violations = check_assumptions(&params, max_depth);
    if violations.is_empty() {
        println!("no violations up to depth {max_depth}");
        return Ok(ExitCode::SUCCESS);
    }
    for v in &violations {
        println!("{}: {:?}", v.node, v.kind);
    }
    Ok(ExitCode::FAILURE)
}

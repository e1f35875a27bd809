use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tabletask_cli::commands::{self, GenerateArgs};
use tabletask_cli::config::{BackendKind, EngineConfig, Overrides};
use tabletask_cli::policy::PolicySpec;
use tabletask_cli::run::RunDir;
use tabletask_cli::{serve, CliError};
use tabletask_core::scene::TaskType;

#[derive(Parser)]
#[command(name = "tabletask", version, about = "Tabletop task scenario generation and evaluation")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Engine configuration file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory shared by all stages.
    #[arg(long, global = true, default_value = "run")]
    out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    /// mock, live or transcript.
    #[arg(long, global = true)]
    backend: Option<BackendKind>,
    #[arg(long, global = true)]
    near_threshold: Option<f64>,
    #[arg(long, global = true)]
    touch_threshold: Option<f64>,
    /// Maximum angle in radians for `between`.
    #[arg(long, global = true)]
    between_angle: Option<f64>,
    /// Placement attempts per object and round.
    #[arg(long, global = true)]
    max_attempts: Option<usize>,
    /// Skill-call budget per episode.
    #[arg(long, global = true)]
    budget: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate task scenarios.
    Generate {
        #[arg(long, default_value_t = 200)]
        count: usize,
        /// Comma-separated task types; all four when absent.
        #[arg(long, value_delimiter = ',')]
        types: Vec<TaskType>,
        /// Save prompt/reply pairs as JSON Lines.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Build a layout for every scenario.
    Solve,
    /// Roll out a policy on every scenario.
    Simulate {
        /// oracle, null, noisy[:p] or exec:<command>.
        #[arg(long, default_value = "oracle")]
        policy: PolicySpec,
    },
    /// Score every episode.
    Evaluate,
    /// Aggregate the scores into tables.
    Report,
    /// Serve the curation API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = cli.global;
    let overrides = Overrides {
        seed: g.seed,
        catalog: g.catalog,
        backend: g.backend,
        near_threshold: g.near_threshold,
        touch_threshold: g.touch_threshold,
        between_angle: g.between_angle,
        max_attempts: g.max_attempts,
        budget: g.budget,
    };
    let cfg = EngineConfig::load(g.config.as_deref(), &overrides)?;
    let run = RunDir::new(g.out);
    match cli.command {
        Command::Generate { count, types, record } => {
            let ids = commands::generate(
                &cfg,
                &run,
                &GenerateArgs {
                    count,
                    mix: types,
                    jobs: g.jobs,
                    record,
                },
            )?;
            println!("generated {} scenarios", ids.len());
        }
        Command::Solve => println!("solved {} layouts", commands::solve(&cfg, &run, g.jobs)?),
        Command::Simulate { policy } => {
            println!("simulated {} episodes", commands::simulate(&cfg, &run, &policy, g.jobs)?)
        }
        Command::Evaluate => println!("evaluated {} episodes", commands::evaluate(&cfg, &run, g.jobs)?.len()),
        Command::Report => print!("{}", commands::report(&run)?.render()),
        Command::Serve { bind } => serve::serve(cfg, run, bind)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

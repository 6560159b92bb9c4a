//! `iltl-pomdp`: validate bundles, synthesize controllers by point-based
//! value iteration or by learning, and evaluate or simulate the result.
//!
//! Exit status: 0 success, 1 invalid input, 2 unreadable or malformed
//! files, 3 no convergence within budget (artifacts are still written).

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::EvaluateArgs;
use error::{CliError, Result};
use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(
    name = "iltl-pomdp",
    version,
    about = "Controller synthesis for POMDPs under iLTL constraints"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the model, automaton, propositions and configuration.
    Validate(RunArgs),
    /// Point-based value iteration on the product.
    Solve(RunArgs),
    /// Learn from simulated transitions.
    Learn {
        #[command(flatten)]
        run: RunArgs,
        /// Continue from a checkpoint (default: the one in the output directory).
        #[arg(long, value_name = "CHECKPOINT", num_args = 0..=1)]
        resume: Option<Option<PathBuf>>,
    },
    /// Roll out a policy export and report rewards and acceptance.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        /// Policy export (default: policy.json in the output directory).
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
    },
    /// Write one episode under a policy export to trace.csv.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long)]
        steps: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Run manifest (TOML or JSON); flags override its fields.
    manifest: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Automaton file.
    #[arg(long, conflicts_with = "template")]
    automaton: Option<PathBuf>,
    /// One of universal, gf, fg, fg-or-fg.
    #[arg(long)]
    template: Option<String>,
    /// Propositions for the template, comma separated.
    #[arg(long, value_delimiter = ',')]
    aps: Vec<String>,
    /// Proposition table (default: aps.json beside the model).
    #[arg(long)]
    ap_table: Option<PathBuf>,
    #[arg(long)]
    formula: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = "ILTL_POMDP_OUT")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn manifest(self) -> Result<RunManifest> {
        let base = match &self.manifest {
            Some(p) => RunManifest::load(p)?,
            None => RunManifest::default(),
        };
        Ok(base.overridden_by(RunManifest {
            model: self.model,
            automaton: self.automaton,
            template: self.template,
            aps: self.aps,
            ap_table: self.ap_table,
            formula: self.formula,
            config: self.config,
            out: self.out,
            seed: self.seed,
        }))
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Invalid(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Validate(run) => commands::validate(&run.manifest()?),
        Command::Solve(run) => commands::solve(&run.manifest()?),
        Command::Learn { run, resume } => commands::learn(&run.manifest()?, resume),
        Command::Evaluate {
            run,
            policy,
            runs,
            horizon,
            window,
        } => commands::evaluate(
            &run.manifest()?,
            EvaluateArgs {
                policy,
                runs,
                horizon,
                window,
            },
        ),
        Command::Simulate { run, policy, steps } => {
            commands::simulate(&run.manifest()?, policy, steps)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

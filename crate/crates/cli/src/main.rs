use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spinrl::agents::{brute_force_optimal, oracle::MAX_HORIZON};
use spinrl::checkpoint;
use spinrl::config::{load_config, parse_seeds};
use spinrl::env::format_sequence;
use spinrl::harness::{
    emit_csv, emit_svg, format_summary, greedy_rollout_network, greedy_rollout_table, run_comparison,
    summarize, summary_csv, AgentKind, ExperimentConfig,
};
use spinrl::quantum::fidelity_pure;
use spinrl::Error;

#[derive(Parser)]
#[command(name = "spinrl", version, about = "Reinforcement learning control of a single spin")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunFlags {
    /// Key-value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seeds 1..=N.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Output directory for CSV, SVG and summary.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent over several seeds.
    Train {
        #[command(flatten)]
        run: RunFlags,
        #[arg(long, value_parser = ["tql", "erl", "dql", "pg"])]
        agent: Option<String>,
    },
    /// Train all four agents on the same seeds and print a summary table.
    Compare {
        #[command(flatten)]
        run: RunFlags,
    },
    /// Search for the best control sequence.
    Oracle {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Maximum sequence length (defaults to env.max_steps).
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value_t = 1024)]
        beam: usize,
    },
    /// Greedy rollout of a saved checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidArgument(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn base_config(path: Option<&Path>) -> Result<ExperimentConfig, Failure> {
    match path {
        Some(p) => Ok(load_config(p)?),
        None => Ok(ExperimentConfig::default()),
    }
}

fn apply_flags(cfg: &mut ExperimentConfig, run: &RunFlags) -> Result<(), Failure> {
    if let Some(n) = run.seeds {
        cfg.seeds = parse_seeds(&n.to_string())?;
    }
    if let Some(n) = run.episodes {
        if n == 0 {
            return Err(Failure::Config("config error: --episodes must be at least 1".into()));
        }
        cfg.max_episodes = n;
    }
    if let Some(out) = &run.out {
        cfg.output_dir = Some(out.clone());
    }
    Ok(())
}

fn write_outputs(cfg: &ExperimentConfig, kinds: &[AgentKind]) -> Result<(), Failure> {
    let groups = run_comparison(cfg, kinds)?;
    let rows = summarize(&groups)?;
    print!("{}", format_summary(&rows));
    if let Some(dir) = &cfg.output_dir {
        emit_csv(&groups, &dir.join("results.csv"))?;
        emit_svg(&groups, &dir.join("fidelity.svg"))?;
        let path = dir.join("summary.csv");
        fs::write(&path, summary_csv(&rows)).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
        eprintln!("wrote {}", dir.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Train { run, agent } => {
            let path = run
                .config
                .as_deref()
                .ok_or_else(|| Failure::Config("config error: train needs --config".into()))?;
            let mut cfg = base_config(Some(path))?;
            apply_flags(&mut cfg, &run)?;
            if let Some(a) = agent {
                cfg.agent_kind = AgentKind::parse(&a).expect("restricted by clap");
            }
            write_outputs(&cfg, &[cfg.agent_kind])
        }
        Command::Compare { run } => {
            let mut cfg = base_config(run.config.as_deref())?;
            apply_flags(&mut cfg, &run)?;
            cfg.save_checkpoints = false;
            write_outputs(&cfg, &AgentKind::ALL)
        }
        Command::Oracle { config, horizon, beam } => {
            let cfg = base_config(config.as_deref())?;
            let horizon = horizon.unwrap_or(cfg.env.max_steps);
            if horizon > MAX_HORIZON {
                return Err(Failure::Config(format!("config error: --horizon is limited to {MAX_HORIZON}")));
            }
            if beam == 0 {
                return Err(Failure::Config("config error: --beam must be positive".into()));
            }
            let (seq, j) = brute_force_optimal(&cfg.env, horizon, beam);
            println!("J = {j:.6}");
            println!("length = {}", seq.len());
            println!("sequence = {}", format_sequence(&seq));
            Ok(())
        }
        Command::Eval { checkpoint: path, config } => {
            let cfg = base_config(config.as_deref())?;
            let ck = checkpoint::load(&path)?;
            let (seq, f) = match &ck.q_table {
                Some(q) => greedy_rollout_table(&cfg.env, q)?,
                None => greedy_rollout_network(&cfg.env, &ck.network)?,
            };
            let start = fidelity_pure(&cfg.env.initial_state(), &cfg.env.target_state());
            println!("initial fidelity = {start:.6}");
            println!("final fidelity = {f:.6}");
            println!("steps = {}", seq.len());
            println!("sequence = {}", format_sequence(&seq));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

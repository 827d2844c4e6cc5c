use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qlsm::cli::{run, Command, Invocation, SEED_ENV};

/// Quantum liquid state machine experiments.
#[derive(Parser)]
#[command(name = "qlsm", version, about)]
struct Args {
    #[command(subcommand)]
    command: Cmd,

    /// JSON experiment config; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Global seed; overrides QLSM_SEED and the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Adiabatic evolution overlap sweep and gap profile for a SAT instance.
    Adiabatic,
    /// Reservoir run, separation and fading-memory checks, delayed-recall readout.
    Lsm,
    /// Flag-register decision and counting with a brute-force cross-check.
    Solve,
    /// Unsupervised ART + Hebbian session.
    Learn,
    /// Runs the invariant suite.
    Props,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let command = match args.command {
        Cmd::Adiabatic => Command::Adiabatic,
        Cmd::Lsm => Command::Lsm,
        Cmd::Solve => Command::Solve,
        Cmd::Learn => Command::Learn,
        Cmd::Props => Command::Props,
    };
    let inv = Invocation {
        config_path: args.config,
        out_dir: args.out,
        seed_flag: args.seed,
        seed_env: std::env::var(SEED_ENV).ok(),
    };
    match run(command, &inv) {
        Ok(record) => {
            print!("{}", record.summary());
            if record.passed() {
                ExitCode::SUCCESS
            } else {
                let diff = serde_json::to_string_pretty(&record.diff).unwrap_or_default();
                eprintln!("qlsm {command}: cross-check failed\n{diff}");
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("qlsm {command}: {e}");
            ExitCode::from(1)
        }
    }
}

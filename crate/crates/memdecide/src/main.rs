use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use memdecide::{run, Command, RunOptions};

/// Stochastic volatile-RRAM synapse and 2AFC decision simulator.
#[derive(Parser)]
#[command(name = "memdecide", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Averaged synapse traces under a periodic or replayed stimulus.
    Trace(Args),
    /// Individual 2AFC trials, one CSV row each.
    Trial(Args),
    /// Accuracy over a parameter grid.
    Sweep(Args),
    /// Fit a parameter deck from measured switching and retention data.
    Calibrate(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write SVG plots.
    #[arg(long)]
    svg: bool,
    /// Maximum worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Override a config key, e.g. `--set trial.n_a=30`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::Trace(a) => (Command::Trace, a),
        Cmd::Trial(a) => (Command::Trial, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Calibrate(a) => (Command::Calibrate, a),
    };
    let opts = RunOptions {
        config: args.config,
        seed: args.seed,
        out: args.out,
        svg: args.svg,
        threads: args.threads,
        overrides: args.overrides,
    };
    match run(cmd, &opts) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            for p in &outcome.written {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("memdecide: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

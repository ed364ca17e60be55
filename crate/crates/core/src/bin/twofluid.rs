use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use twofluid::cli::{resolve_out_dir, run_subcommand, Subcommand};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Simulate,
    HyperbolicityMap,
    VerifyGibbs,
    FickRelax,
    ReduceCheck,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Simulate => Subcommand::Simulate,
            Command::HyperbolicityMap => Subcommand::HyperbolicityMap,
            Command::VerifyGibbs => Subcommand::VerifyGibbs,
            Command::FickRelax => Subcommand::FickRelax,
            Command::ReduceCheck => Subcommand::ReduceCheck,
        }
    }
}

/// Two-fluid mixture toolkit.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; TWOFLUID_OUT_DIR overrides it.
    #[arg(long)]
    out: PathBuf,
    /// Seed for randomized verification; defaults to `run.seed` or 0.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let out = resolve_out_dir(args.out);
    let code = run_subcommand(args.command.into(), &args.config, &out, args.seed);
    ExitCode::from(code as u8)
}

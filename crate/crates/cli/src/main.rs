use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use nfs_cli::{run, Command, Invocation};

/// Pseudo-spectral solver and theorem checks for
/// [Laplacian - Bilaplacian] u + eps K * g(u) + f = 0.
#[derive(Parser)]
#[command(name = "nfs", version)]
struct Cli {
    command: Command,
    /// Run configuration (`section.key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed; overrides `solver.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let inv = Invocation {
        command: cli.command,
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
    };
    match run(&inv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nfs: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

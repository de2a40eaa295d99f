use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use twss::cli::{self, Command};

#[derive(Parser)]
#[command(name = "twss", version, about = "Helmholtz volume scattering with total-wave solution spaces")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Factor, solve and write field, trace and summary artifacts.
    Solve { config: PathBuf },
    /// Run the operator, bookkeeping and plane-wave checks.
    Check { config: PathBuf },
    /// Compare against the dense volume-integral oracle.
    Compare { config: PathBuf },
    /// Time factorization and solve over a list of wavenumbers.
    Bench { config: PathBuf },
}

fn init_threads() {
    let n = match std::env::var("TWSS_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) => n,
            Err(_) => {
                eprintln!("ignoring TWSS_THREADS={v:?}: not a count");
                0
            }
        },
        Err(_) => 0,
    };
    if n > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("could not size the worker pool: {e}");
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    init_threads();
    let args = Args::parse();
    let (command, path) = match args.command {
        Cmd::Solve { config } => (Command::Solve, config),
        Cmd::Check { config } => (Command::Check, config),
        Cmd::Compare { config } => (Command::Compare, config),
        Cmd::Bench { config } => (Command::Bench, config),
    };
    match cli::run(command, &path) {
        Ok(out) => {
            println!("{}", out.report);
            ExitCode::from(out.code as u8)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}

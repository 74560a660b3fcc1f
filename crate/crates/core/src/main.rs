use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use remop::cli::{self, registry, RunOptions, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "remop", version, about = "Iterated remainder operators and asymptotic solution construction")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config and write report.json and CSV tables.
    Run {
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// List the named nonlinearities and coefficient families.
    ListRegistry,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    match args.command {
        Command::ListRegistry => {
            print!("{}", registry::list_registry());
            ExitCode::SUCCESS
        }
        Command::Run { config, out_dir, tol, max_iter } => {
            let opts = RunOptions { out_dir, tol, max_iter };
            match cli::run(&config, &opts) {
                Ok(outcome) => {
                    println!("{}", outcome.summary);
                    println!("report written to {}", outcome.out_dir.join("report.json").display());
                    ExitCode::from(outcome.exit_code as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_CONFIG as u8)
                }
            }
        }
    }
}

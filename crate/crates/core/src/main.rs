use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gzk::experiment::{self, ExperimentConfig, EXIT_ERROR, OUTPUT_ROOT_ENV};

#[derive(Parser)]
#[command(name = "gzk", version, about = "Generalized Zakharov-Kuznetsov experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Overrides the output root (also settable through GZK_OUTPUT_ROOT).
        #[arg(long)]
        output_root: Option<PathBuf>,
    },
    /// List the available experiments and the claim each one checks.
    ListExperiments,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListExperiments => {
            print!("{}", experiment::list_experiments());
            ExitCode::SUCCESS
        }
        Command::Run { config, output_root } => {
            let root = output_root.or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from));
            let result = ExperimentConfig::from_path(&config).and_then(|cfg| experiment::run(&cfg, root.as_deref()));
            match result {
                Ok(summary) => {
                    println!(
                        "{:?}: {} ({} files)",
                        summary.outcome,
                        summary.output_dir.display(),
                        summary.manifest.files.len() + 1
                    );
                    ExitCode::from(summary.outcome.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {}: {e}", config.display());
                    ExitCode::from(EXIT_ERROR as u8)
                }
            }
        }
    }
}

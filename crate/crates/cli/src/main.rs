use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use prcmark::experiment::{self, ExperimentConfig};
use prcmark::Error;

/// Pseudorandom-code video watermarking experiments.
#[derive(Parser)]
#[command(name = "prcmark", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a key and write `key.prck`.
    Keygen(Common),
    /// Simulate videos and write `run.csv`.
    Run(Common),
    /// Run once per value of the configured axis and write `sweep.csv`.
    Sweep(Common),
    /// Search for the channel fidelity that reaches a target decode rate.
    FitRho(Common),
    /// Render a report CSV as SVG.
    Plot(Common),
}

#[derive(clap::Args)]
struct Common {
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

const EXIT_INVALID: u8 = 2;
const EXIT_IO: u8 = 3;

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Format(_) => EXIT_IO,
        _ => EXIT_INVALID,
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Error> {
    let text = std::fs::read_to_string(path)?;
    ExperimentConfig::from_json(&text)?.resolve(seed)
}

fn execute(command: Command) -> Result<(), Error> {
    let (Command::Keygen(c)
    | Command::Run(c)
    | Command::Sweep(c)
    | Command::FitRho(c)
    | Command::Plot(c)) = &command;
    let config = load_config(&c.config, c.seed)?;
    let out = c.out.as_path();
    experiment::with_workers(&config, || match &command {
        Command::Keygen(_) => {
            let key = experiment::cmd_keygen(&config, out)?;
            println!("key_id {}", key.key_id());
            println!("wrote {}", out.join("key.prck").display());
            Ok(())
        }
        Command::Run(_) => {
            let s = experiment::cmd_run(&config, out)?;
            println!(
                "videos {} decode_rate {:.4} bit_acc {:.4} matching_acc {:.4} mean_p {:.4} detected {:.4}",
                s.videos, s.decode_rate, s.bit_acc, s.matching_acc, s.p_value, s.detection_rate
            );
            println!("wrote {}", out.join("run.csv").display());
            Ok(())
        }
        Command::Sweep(_) => {
            let rows = experiment::cmd_sweep(&config, out)?;
            for r in &rows {
                println!(
                    "{} decode_rate {:.4} raw_bit_acc {:.4} bit_acc {:.4}",
                    r.value, r.summary.decode_rate, r.summary.raw_bit_acc, r.summary.bit_acc
                );
            }
            println!("wrote {}", out.join("sweep.csv").display());
            Ok(())
        }
        Command::FitRho(_) => {
            let fit = experiment::cmd_fit_rho(&config, out)?;
            println!(
                "rho {:.4} flip {:.4} (thresholds {:.4} +- {:.4} over {} frames)",
                fit.rho, fit.flip_probability, fit.threshold_mean, fit.threshold_sd, fit.trials
            );
            println!(
                "check: decode_rate {:.4} over {} fresh frames",
                fit.validation.decode_rate(),
                fit.validation.trials
            );
            println!("wrote {}", out.join("fit.json").display());
            Ok(())
        }
        Command::Plot(_) => {
            let path = experiment::cmd_plot(&config, out)?;
            println!("wrote {}", path.display());
            Ok(())
        }
    })?
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fedga::engine::MethodKind;
use fedga_cli::config::{parse_method, parse_seeds};
use fedga_cli::runner::{compare_report, load_method_summary, run_all};
use fedga_cli::{CliResult, ExperimentConfig};

#[derive(Clone)]
struct SeedList(Vec<u64>);

/// Federated learning simulator.
#[derive(Parser)]
#[command(name = "fedga", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every method and seed of an experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "runs")]
        output: PathBuf,
        /// Overrides the config: `0..4` (inclusive), `1,3,5` or `7`.
        #[arg(long, value_parser = |s: &str| parse_seeds(s).map(SeedList))]
        seeds: Option<SeedList>,
        /// Overrides the config; repeat or comma-separate for several.
        #[arg(long, value_delimiter = ',', value_parser = parse_method)]
        method: Vec<MethodKind>,
    },
    /// Compare two method summaries (directories or summary.json files);
    /// the first is the baseline.
    Compare {
        baseline: PathBuf,
        candidate: PathBuf,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run {
            config,
            output,
            seeds,
            method,
        } => {
            let mut config = ExperimentConfig::load(&config)?;
            if let Some(SeedList(seeds)) = seeds {
                config.seeds = seeds;
            }
            if !method.is_empty() {
                config.methods = method;
            }
            for summary in run_all(&config, &output)? {
                println!(
                    "{:<16} accuracy {:.4} ± {:.4}  macro-F1 {:.4} ± {:.4}",
                    summary.method,
                    summary.final_accuracy.mean,
                    summary.final_accuracy.std,
                    summary.final_macro_f1.mean,
                    summary.final_macro_f1.std
                );
            }
        }
        Command::Compare {
            baseline,
            candidate,
        } => {
            let a = load_method_summary(&baseline)?;
            let b = load_method_summary(&candidate)?;
            println!("{}", compare_report(&a, &b));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

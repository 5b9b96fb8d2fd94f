//! Command-line driver: `run`, `compare` and `validate`.

mod compare;
mod config;
mod error;
mod pipeline;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

use crate::compare::Metric;
use crate::config::ExperimentConfig;
use crate::error::{io_error, CliError};
use crate::pipeline::Artifacts;

#[derive(Parser)]
#[command(name = "multiscale", version, about = "Multiscale solver experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Overrides the output directory named in the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare the solutions of two finished runs.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_enum, default_value = "l2")]
        metric: Metric,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
}

fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_error(format!("reading {}", path.display())))?;
    ExperimentConfig::from_json(&text)
}

fn write_report(dir: &Path, report: &Value) -> Result<(), CliError> {
    let path = dir.join("report.json");
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    fs::write(&path, text + "\n").map_err(io_error(format!("writing {}", path.display())))
}

fn configure_threads() {
    if let Some(n) = std::env::var("MULTISCALE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // A second initialization only fails if a pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn run(config: &Path, output: Option<PathBuf>) -> Result<(), CliError> {
    let mut cfg = load(config)?;
    if let Some(dir) = output {
        cfg.output = dir;
    }
    let setup = cfg.validate()?;
    fs::create_dir_all(&cfg.output).map_err(io_error(format!("creating {}", cfg.output.display())))?;
    let mut artifacts = Artifacts::new(&cfg.output);
    match pipeline::execute(&cfg, &setup, &mut artifacts) {
        Ok(outcome) => {
            let mut names = artifacts.names().to_vec();
            names.push("report.json".into());
            write_report(&cfg.output, &pipeline::report(&cfg, "ok", Some(&outcome), &names))
        }
        Err(err) => {
            let mut report = pipeline::report(&cfg, "failed", None, &[]);
            report["error"] = err.record()["error"].clone();
            report["partial_artifacts"] = serde_json::json!(artifacts.names());
            write_report(&cfg.output, &report)?;
            Err(err)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, output } => run(&config, output),
        Command::Compare { a, b, metric } => {
            let summary = compare::compare(&a, &b, metric)?;
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            Ok(())
        }
        Command::Validate { config } => {
            load(&config)?.validate()?;
            println!("{}", serde_json::json!({ "valid": true }));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.record());
            ExitCode::from(err.exit_code())
        }
    }
}

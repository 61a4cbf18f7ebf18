use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dcs_core::pipeline::{run_pipeline, run_single, ExperimentConfig, Stage};
use dcs_core::{Error, Result};

/// Decoder confidence scores: sampling, decoding, calibration and
/// circuit-level error mitigation.
///
/// Exit codes: 0 success, 2 configuration or input error, 3 capability
/// limit exceeded, 4 runtime failure.
#[derive(Parser)]
#[command(name = "dcs", version)]
struct Cli {
    /// Seed for every random stream. Required by stages that sample.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for outputs (and, with --config, for inputs).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Run the stages of a TOML pipeline file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Stage>,
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    match (cli.config, cli.command) {
        (Some(path), None) => {
            let mut cfg = ExperimentConfig::load(&path)?;
            cfg.seed = cli.seed.unwrap_or(cfg.seed);
            cfg.out_dir = cli.out_dir.or(cfg.out_dir);
            cfg.threads = cli.threads.or(cfg.threads);
            run_pipeline(&cfg)
        }
        (None, Some(stage)) => {
            let out_dir = cli.out_dir.unwrap_or_else(|| PathBuf::from("."));
            run_single(&stage, cli.seed, &out_dir, cli.threads)
        }
        (Some(_), Some(_)) => Err(Error::Config("--config cannot be combined with a subcommand".into())),
        (None, None) => Err(Error::Config("give a subcommand or --config".into())),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dcs: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

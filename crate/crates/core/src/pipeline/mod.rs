//! Experiment plumbing: stage definitions, artifact files and the runner.

pub mod commands;
pub mod config;
pub mod io;

use std::path::{Path, PathBuf};

pub use commands::{load_graph, load_pool, run_stage, Context};
pub use config::{ExperimentConfig, Stage, FORMAT_VERSION};

use crate::error::{Error, Result};
use io::Provenance;

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(f),
        None => f(),
    }
}

fn run_stages(stages: &[Stage], ctx: &Context) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for stage in stages {
        let out = run_stage(stage, ctx)
            .map_err(|e| Error::Stage { stage: stage.name().to_string(), source: Box::new(e) })?;
        written.extend(out);
    }
    Ok(written)
}

/// Runs every stage in order. Inputs and outputs resolve against the
/// configured output directory.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let out_dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let json = cfg.canonical_json();
    let ctx = Context {
        seed: Some(cfg.seed),
        input_dir: out_dir.clone(),
        out_dir,
        prov: Provenance { config_hash: config::config_hash(&json), seed: Some(cfg.seed), config_json: json },
    };
    with_threads(cfg.threads, || run_stages(&cfg.stages, &ctx))
}

/// Runs one stage from the command line. Inputs resolve against the
/// working directory, outputs against `out_dir`.
pub fn run_single(stage: &Stage, seed: Option<u64>, out_dir: &Path, threads: Option<usize>) -> Result<Vec<PathBuf>> {
    if threads == Some(0) {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    let stages = std::slice::from_ref(stage);
    let json = config::canonical_json(seed, stages);
    let ctx = Context {
        seed,
        input_dir: PathBuf::from("."),
        out_dir: out_dir.to_path_buf(),
        prov: Provenance { config_hash: config::config_hash(&json), seed, config_json: json },
    };
    with_threads(threads, || run_stages(stages, &ctx))
}

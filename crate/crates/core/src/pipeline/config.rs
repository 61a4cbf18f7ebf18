use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::NoiseModel;
use crate::mle::SynthesisMode;
use crate::scale_model::Deformation;

pub const FORMAT_VERSION: u32 = 1;

/// A pipeline file: global settings plus stages run in order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub stages: Vec<Stage>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "config version {} not supported (expected {FORMAT_VERSION})",
                self.version
            )));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(())
    }

    /// Canonical JSON of everything that affects outputs. The output
    /// directory and thread count are excluded.
    pub fn canonical_json(&self) -> String {
        canonical_json(Some(self.seed), &self.stages)
    }

    pub fn hash(&self) -> String {
        config_hash(&self.canonical_json())
    }
}

pub fn canonical_json(seed: Option<u64>, stages: &[Stage]) -> String {
    serde_json::json!({
        "version": FORMAT_VERSION,
        "seed": seed,
        "stages": stages,
    })
    .to_string()
}

/// First 16 hex digits of the SHA-256 of `json`.
pub fn config_hash(json: &str) -> String {
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize, Subcommand)]
#[serde(tag = "stage", rename_all = "kebab-case")]
pub enum Stage {
    /// Build a decoding graph and write it as JSON.
    BuildGraph(BuildGraphArgs),
    /// Sample errors and syndromes, one row per shot.
    Sample(SampleArgs),
    /// Decode sampled syndromes.
    Decode(DecodeArgs),
    /// Decode and compute confidence scores.
    Score(ScoreArgs),
    /// Fit a calibration curve from scored shots.
    Calibrate(CalibrateArgs),
    /// Retained LEP and LER after discarding the least confident windows.
    ///
    /// Windows are treated as independent; overlap between neighbouring
    /// decoding windows is not modelled.
    SweepAbort(SweepAbortArgs),
    /// Compare expectation-value estimators over repeated synthetic runs.
    Mle(MleArgs),
    /// Latent log-odds model: deformation, smearing and abort channels.
    AnalyticModel(AnalyticModelArgs),
    /// Pick a code distance and compute spacetime factors.
    Plan(PlanArgs),
    /// Collect artifacts into one summary JSON.
    Report(ReportArgs),
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::BuildGraph(_) => "build-graph",
            Stage::Sample(_) => "sample",
            Stage::Decode(_) => "decode",
            Stage::Score(_) => "score",
            Stage::Calibrate(_) => "calibrate",
            Stage::SweepAbort(_) => "sweep-abort",
            Stage::Mle(_) => "mle",
            Stage::AnalyticModel(_) => "analytic-model",
            Stage::Plan(_) => "plan",
            Stage::Report(_) => "report",
        }
    }
}

fn default_bins() -> usize {
    crate::calibration::DEFAULT_BINS
}
fn default_p_min() -> f64 {
    crate::calibration::DEFAULT_P_MIN
}
fn default_z() -> f64 {
    1.96
}
fn default_one() -> u64 {
    1
}
fn default_z_true() -> f64 {
    0.8
}
fn default_discard() -> Vec<f64> {
    vec![0.0]
}
fn default_eta_max() -> f64 {
    10.0
}
fn default_eta_step() -> f64 {
    0.25
}
fn default_scale() -> f64 {
    1.0
}
fn default_delta() -> f64 {
    1.0
}
fn default_trials() -> usize {
    100
}
fn default_mean() -> f64 {
    14.0
}
fn default_sd() -> f64 {
    2.2
}
fn default_eps() -> f64 {
    1e-2
}

#[derive(Debug, Clone, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct BuildGraphArgs {
    #[arg(long, value_enum)]
    pub model: NoiseModel,
    /// Distance across the logical cut (number of boundary-to-boundary hops).
    #[arg(long)]
    pub dx: usize,
    /// Rows of the code-capacity graph; defaults to `dx`.
    #[arg(long)]
    pub dz: Option<usize>,
    /// Measurement rounds of the phenomenological graph; defaults to `dx`.
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub p: f64,
    /// Measurement error rate; defaults to `p`.
    #[arg(long)]
    pub p_meas: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct SampleArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub shots: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct DecodeArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub syndromes: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DcsChoice {
    Gap,
    Swim,
    #[default]
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Switch {
    On,
    #[default]
    Off,
}

#[derive(Debug, Clone, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct ScoreArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub syndromes: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub dcs: DcsChoice,
    /// Exact log success odds by coset enumeration (small graphs only).
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub exact_odds: Switch,
    /// Relative weight perturbation seen by the decoder.
    #[arg(long, default_value_t = 0.0)]
    #[serde(default)]
    pub delta: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreColumn {
    #[default]
    Gap,
    Swim,
}

#[derive(Debug, Clone, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub dcs: ScoreColumn,
    #[arg(long, default_value_t = default_bins())]
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Include bins without failures using this pseudocount.
    #[arg(long)]
    pub pseudocount: Option<f64>,
    #[arg(long, default_value_t = default_p_min())]
    #[serde(default = "default_p_min")]
    pub p_min: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the window pool `(p_L, x)` implied by the curve.
    #[arg(long)]
    pub pool_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct SweepAbortArgs {
    #[arg(long)]
    pub pool: PathBuf,
    #[arg(long, default_value_t = default_one())]
    #[serde(default = "default_one")]
    pub n_windows: u64,
    /// Window discard fractions.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    pub fractions: Vec<f64>,
    #[arg(long, default_value_t = default_z())]
    #[serde(default = "default_z")]
    pub z: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Log-binned LEP histogram of the pool, with the `n`-window scaling.
    #[arg(long)]
    pub hist_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct MleArgs {
    #[arg(long)]
    pub pool: PathBuf,
    #[arg(long)]
    pub n_windows: u64,
    #[arg(long, default_value_t = default_z_true(), allow_negative_numbers = true)]
    #[serde(default = "default_z_true")]
    pub z_true: f64,
    /// Accepted shots per repetition.
    #[arg(long)]
    pub shots: usize,
    /// Circuit discard fractions.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = default_discard())]
    #[serde(default = "default_discard")]
    pub discard: Vec<f64>,
    #[arg(long)]
    pub reps: usize,
    #[arg(long, default_value_t = default_eta_max())]
    #[serde(default = "default_eta_max")]
    pub eta_max: f64,
    #[arg(long, default_value_t = default_eta_step())]
    #[serde(default = "default_eta_step")]
    pub eta_step: f64,
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub mode: SynthesisMode,
    /// Multiplies every reported circuit LEP before estimation.
    #[arg(long, default_value_t = default_scale())]
    #[serde(default = "default_scale")]
    pub lep_scale: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Raw per-repetition estimates.
    #[arg(long)]
    pub estimates_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TargetScope {
    #[default]
    Window,
    Circuit,
}

#[derive(Debug, Clone, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct AnalyticModelArgs {
    /// Latent log-odds histogram with columns `lo,hi,count`. A Gaussian
    /// is used when absent.
    #[arg(long)]
    pub dcs_hist: Option<PathBuf>,
    #[arg(long, default_value_t = default_mean())]
    #[serde(default = "default_mean")]
    pub gauss_mean: f64,
    #[arg(long, default_value_t = default_sd())]
    #[serde(default = "default_sd")]
    pub gauss_sd: f64,
    /// Deform the latent axis until the mean LEP equals this value.
    #[arg(long)]
    pub target_mean_pl: Option<f64>,
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub target_scope: TargetScope,
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub deformation: Deformation,
    #[arg(long, default_value_t = default_delta())]
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[arg(long)]
    pub n_windows: u64,
    /// Score thresholds applied to both channels.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    #[serde(default)]
    pub thresholds: Vec<f64>,
    /// Circuit discard fractions matched across channels.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(default)]
    pub fractions: Vec<f64>,
    #[arg(long, default_value_t = default_trials())]
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Latent and implied score densities.
    #[arg(long)]
    pub density_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct PlanArgs {
    /// CSV with columns `d,mu1,sigma1_sq`.
    #[arg(long)]
    pub mu_model: PathBuf,
    #[arg(long)]
    pub n_windows: f64,
    #[arg(long, default_value_t = default_eps())]
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Distance the overhead is compared against.
    #[arg(long)]
    pub baseline_d: Option<usize>,
    /// Time overhead paid at the abort distance.
    #[arg(long)]
    pub overhead: Option<f64>,
    /// Distance run with abort.
    #[arg(long)]
    pub abort_d: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct ReportArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_keys_and_versions() {
        let ok = "version = 1\nseed = 3\n";
        assert!(ExperimentConfig::from_toml(ok).unwrap().stages.is_empty());
        assert!(ExperimentConfig::from_toml("version = 2\nseed = 3\n").is_err());
        assert!(ExperimentConfig::from_toml("version = 1\nseed = 3\ncolour = 1\n").is_err());
        let bad_stage = "version = 1\nseed = 3\n[[stages]]\nstage = \"sample\"\ngraph = \"g\"\nshots = 1\nout = \"o\"\nextra = 2\n";
        assert!(ExperimentConfig::from_toml(bad_stage).is_err());
    }

    #[test]
    fn hash_ignores_out_dir() {
        let mut a = ExperimentConfig::from_toml("version = 1\nseed = 3\n").unwrap();
        let h = a.hash();
        a.out_dir = Some("elsewhere".into());
        a.threads = Some(3);
        assert_eq!(a.hash(), h);
        a.seed = 4;
        assert_ne!(a.hash(), h);
        assert_eq!(h.len(), 16);
    }
}

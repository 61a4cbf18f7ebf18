//! Expectation-value estimation from noisy circuit runs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiwindow::CircuitRun;
use crate::noise::stream_rng;

/// How a logical error corrupts the noiseless outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisMode {
    /// Replace the outcome by a uniformly random sign.
    #[default]
    Randomize,
    /// Flip the outcome.
    Flip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDataset {
    pub z: Vec<i8>,
    pub p_l: Vec<f64>,
    pub truth: f64,
    /// Noiseless outcomes, when retained.
    pub latent: Option<Vec<i8>>,
}

impl RunDataset {
    pub fn new(z: Vec<i8>, p_l: Vec<f64>, truth: f64) -> Result<Self> {
        if z.len() != p_l.len() {
            return Err(Error::invalid("z and p_L lengths differ"));
        }
        if z.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::invalid("outcomes must be +1 or -1"));
        }
        if p_l.iter().any(|p| !(0.0..=0.5).contains(p)) {
            return Err(Error::invalid("p_L outside [0, 0.5]"));
        }
        Ok(RunDataset { z, p_l, truth, latent: None })
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }
}

/// Draws one outcome per circuit run. The noiseless outcome is `+1` with
/// probability `(1 + z_true) / 2`.
pub fn synthesize_runs(
    circuits: &[CircuitRun],
    z_true: f64,
    mode: SynthesisMode,
    keep_latent: bool,
    seed: u64,
) -> Result<RunDataset> {
    if !(-1.0..=1.0).contains(&z_true) {
        return Err(Error::invalid(format!("z_true = {z_true} outside [-1, 1]")));
    }
    let mut rng = stream_rng(seed, 0);
    let theta = 0.5 * (1.0 + z_true);
    let mut z = Vec::with_capacity(circuits.len());
    let mut latent = Vec::with_capacity(if keep_latent { circuits.len() } else { 0 });
    for c in circuits {
        let clean: i8 = if rng.random::<f64>() < theta { 1 } else { -1 };
        let u: i8 = if rng.random::<bool>() { 1 } else { -1 };
        let out = match (c.x, mode) {
            (false, _) => clean,
            (true, SynthesisMode::Randomize) => -u,
            (true, SynthesisMode::Flip) => -clean,
        };
        z.push(out);
        if keep_latent {
            latent.push(clean);
        }
    }
    let mut ds = RunDataset::new(z, circuits.iter().map(|c| c.p_l).collect(), z_true)?;
    ds.latent = keep_latent.then_some(latent);
    Ok(ds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    Unmitigated,
    Abort,
    Mle,
    NoiselessReference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOutput {
    pub estimator: Estimator,
    pub estimate: f64,
    pub theta: Option<f64>,
    pub eta: Option<f64>,
    /// Fraction of runs whose scaled flip probability hit the 0.5 clamp.
    pub clamp_fraction: f64,
    /// The likelihood could not separate theta from eta; the estimate is
    /// the unmitigated mean.
    pub degenerate: bool,
}

fn mean_z(z: &[i8]) -> f64 {
    z.iter().map(|&v| v as f64).sum::<f64>() / z.len() as f64
}

pub fn estimate_unmitigated(ds: &RunDataset) -> Result<EstimatorOutput> {
    if ds.is_empty() {
        return Err(Error::invalid("empty dataset"));
    }
    let m = mean_z(&ds.z);
    Ok(EstimatorOutput {
        estimator: Estimator::Unmitigated,
        estimate: m,
        theta: Some(0.5 * (1.0 + m)),
        eta: None,
        clamp_fraction: 0.0,
        degenerate: false,
    })
}

/// Mean of the retained noiseless outcomes.
pub fn estimate_noiseless(ds: &RunDataset) -> Result<EstimatorOutput> {
    let latent = ds
        .latent
        .as_ref()
        .ok_or_else(|| Error::invalid("dataset was synthesised without latent outcomes"))?;
    if latent.is_empty() {
        return Err(Error::invalid("empty dataset"));
    }
    Ok(EstimatorOutput {
        estimator: Estimator::NoiselessReference,
        estimate: mean_z(latent),
        theta: None,
        eta: None,
        clamp_fraction: 0.0,
        degenerate: false,
    })
}

fn flip_prob(eta: f64, p: f64) -> f64 {
    (eta * p).clamp(0.0, 0.5)
}

/// `-sum log Pr(Z_j = z_j)` with `Pr(+1) = theta (1 - q) + (1 - theta) q`
/// and `q = min(eta P_j, 1/2)`. Returns `+inf` when some run has zero
/// probability.
pub fn negative_log_likelihood(theta: f64, eta: f64, ds: &RunDataset) -> f64 {
    let mut nll = 0.0;
    for (&z, &p) in ds.z.iter().zip(&ds.p_l) {
        let q = flip_prob(eta, p);
        let plus = q + theta * (1.0 - 2.0 * q);
        let pr = if z > 0 { plus } else { 1.0 - plus };
        if pr <= 0.0 {
            return f64::INFINITY;
        }
        nll -= pr.ln();
    }
    nll
}

/// Per-run `(q, sign)` for a fixed eta.
fn prepare(eta: f64, ds: &RunDataset) -> Vec<(f64, bool)> {
    ds.z.iter().zip(&ds.p_l).map(|(&z, &p)| (flip_prob(eta, p), z > 0)).collect()
}

/// First and second theta-derivatives of the NLL.
fn derivatives(theta: f64, runs: &[(f64, bool)]) -> (f64, f64) {
    let (mut d1, mut d2) = (0.0, 0.0);
    for &(q, plus) in runs {
        let c = 1.0 - 2.0 * q;
        if c == 0.0 {
            continue;
        }
        let pr = if plus { q + theta * c } else { 1.0 - q - theta * c };
        let g = c / pr;
        d1 += if plus { -g } else { g };
        d2 += g * g;
    }
    (d1, d2)
}

/// Exact minimiser over `[0, 1]` of the convex NLL for fixed eta.
/// Returns `None` when the NLL is flat in theta.
fn solve_theta(runs: &[(f64, bool)]) -> Option<f64> {
    if runs.iter().all(|&(q, _)| q == 0.5) {
        return None;
    }
    if runs.iter().all(|&(q, _)| q == 0.0) {
        let plus = runs.iter().filter(|r| r.1).count();
        return Some(plus as f64 / runs.len() as f64);
    }
    let (d_lo, _) = derivatives(0.0, runs);
    if d_lo >= 0.0 {
        return Some(0.0);
    }
    let (d_hi, _) = derivatives(1.0, runs);
    if d_hi <= 0.0 {
        return Some(1.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut theta = 0.5;
    for _ in 0..200 {
        let (d1, d2) = derivatives(theta, runs);
        if d1 == 0.0 {
            break;
        }
        if d1 < 0.0 {
            lo = theta;
        } else {
            hi = theta;
        }
        let step = d1 / d2;
        let newton = theta - step;
        theta = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if step.abs() < 1e-14 || hi - lo < 1e-14 {
            break;
        }
    }
    Some(theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    pub eta_max: f64,
    pub eta_step: f64,
    /// Fix eta instead of fitting it.
    pub eta_fixed: Option<f64>,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions { eta_max: 10.0, eta_step: 0.25, eta_fixed: None }
    }
}

fn profile(eta: f64, ds: &RunDataset) -> (f64, Option<f64>) {
    let runs = prepare(eta, ds);
    match solve_theta(&runs) {
        Some(t) => (negative_log_likelihood(t, eta, ds), Some(t)),
        None => (negative_log_likelihood(0.5, eta, ds), None),
    }
}

/// Joint maximum-likelihood fit of `(theta, eta)`.
pub fn estimate_mle(ds: &RunDataset, opts: MleOptions) -> Result<EstimatorOutput> {
    if ds.len() < 2 {
        return Err(Error::invalid("MLE needs at least two runs"));
    }
    let first = ds.p_l[0];
    let all_equal = ds.p_l.iter().all(|&p| p == first);
    let fallback = |degenerate: bool| -> Result<EstimatorOutput> {
        let mut out = estimate_unmitigated(ds)?;
        out.estimator = Estimator::Mle;
        out.degenerate = degenerate;
        Ok(out)
    };
    if all_equal && opts.eta_fixed.is_none() {
        // Only the product of theta and eta is identifiable.
        return fallback(first > 0.0);
    }

    let eta = match opts.eta_fixed {
        Some(e) => e,
        None => {
            let steps = (opts.eta_max / opts.eta_step).round() as usize;
            let grid: Vec<f64> = (0..=steps).map(|i| i as f64 * opts.eta_step).collect();
            let values: Vec<f64> = grid.iter().map(|&e| profile(e, ds).0).collect();
            let best = (0..grid.len()).min_by(|&i, &j| values[i].total_cmp(&values[j])).unwrap();
            let lo = grid[best.saturating_sub(1)];
            let hi = grid[(best + 1).min(grid.len() - 1)];
            golden_section(|e| profile(e, ds).0, lo, hi, 1e-9)
        }
    };
    let (_, theta) = profile(eta, ds);
    let Some(theta) = theta else { return fallback(true) };
    let clamp_fraction =
        ds.p_l.iter().filter(|&&p| eta * p >= 0.5).count() as f64 / ds.len() as f64;
    Ok(EstimatorOutput {
        estimator: Estimator::Mle,
        estimate: (2.0 * theta - 1.0).clamp(-1.0, 1.0),
        theta: Some(theta),
        eta: Some(eta),
        clamp_fraction,
        degenerate: false,
    })
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    // Keep the best of the bracket and its midpoint.
    [(f(mid), mid), (fc, c), (fd, d)]
        .into_iter()
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .unwrap()
        .1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mspe: f64,
    pub bias: f64,
    /// Population variance (divides by the repetition count).
    pub variance: f64,
    /// Sample variance (divides by count minus one).
    pub sample_variance: f64,
}

pub fn estimator_metrics(estimates: &[f64], truth: f64) -> Result<Metrics> {
    let n = estimates.len();
    if n < 2 {
        return Err(Error::invalid("metrics need at least two repetitions"));
    }
    let nf = n as f64;
    let mean = estimates.iter().sum::<f64>() / nf;
    let ss: f64 = estimates.iter().map(|e| (e - mean).powi(2)).sum();
    Ok(Metrics {
        mspe: estimates.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / nf,
        bias: (truth - mean).abs(),
        variance: ss / nf,
        sample_variance: ss / (nf - 1.0),
    })
}

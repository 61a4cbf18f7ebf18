//! Latent log-odds model smeared by Gaussian score noise.
//!
//! The latent distribution is a piecewise-constant density on a uniform
//! grid. Scores are `phi = lambda + r` with `r ~ N(0, delta^2)`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiwindow::{discard_fraction, time_overhead, window_rate_for_fraction};
use crate::noise::stream_rng;
use crate::stats::normal_cdf;

pub const GRID_START: f64 = -40.0;
pub const GRID_END: f64 = 40.0;
pub const GRID_STEP: f64 = 1.0 / 64.0;

/// `F(l) = -log10(1 + 10^-l)`, an antiderivative of `1 / (1 + 10^l)`.
fn lep_antiderivative(l: f64) -> f64 {
    if l > 0.0 {
        -(10f64.powf(-l)).ln_1p() / std::f64::consts::LN_10
    } else {
        // -log10(10^-l (1 + 10^l)) = l - log10(1 + 10^l)
        l - (10f64.powf(l)).ln_1p() / std::f64::consts::LN_10
    }
}

fn lep(l: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf(l))
}

/// Mean of `1 / (1 + 10^l)` for `l` uniform on `[lo, hi]`.
fn cell_mean_lep(lo: f64, hi: f64) -> f64 {
    if hi - lo < 1e-9 {
        return lep(0.5 * (lo + hi));
    }
    (lep_antiderivative(hi) - lep_antiderivative(lo)) / (hi - lo)
}

/// Piecewise-constant density: cell `i` spans
/// `[start + i step, start + (i + 1) step]` and carries probability `mass[i]`.
/// A zero step denotes a point mass at `start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub start: f64,
    pub step: f64,
    pub mass: Vec<f64>,
}

impl GridDensity {
    pub fn point_mass(at: f64) -> Self {
        GridDensity { start: at, step: 0.0, mass: vec![1.0] }
    }

    /// Spreads histogram bins `(lo, hi, weight)` onto the default grid in
    /// proportion to overlap.
    pub fn from_histogram(bins: &[(f64, f64, f64)]) -> Result<Self> {
        let n = ((GRID_END - GRID_START) / GRID_STEP).round() as usize;
        let mut mass = vec![0.0; n];
        for &(lo, hi, w) in bins {
            if !(w >= 0.0) || !(hi >= lo) || lo < GRID_START || hi > GRID_END {
                return Err(Error::invalid(format!("histogram bin [{lo}, {hi}] weight {w} not usable")));
            }
            if w == 0.0 {
                continue;
            }
            let first = ((lo - GRID_START) / GRID_STEP).floor() as usize;
            let last = (((hi - GRID_START) / GRID_STEP).ceil() as usize).clamp(first + 1, n);
            if hi == lo {
                mass[first.min(n - 1)] += w;
                continue;
            }
            for (i, m) in mass.iter_mut().enumerate().take(last).skip(first) {
                let c_lo = GRID_START + i as f64 * GRID_STEP;
                let overlap = (hi.min(c_lo + GRID_STEP) - lo.max(c_lo)).max(0.0);
                *m += w * overlap / (hi - lo);
            }
        }
        let total: f64 = mass.iter().sum();
        if !(total > 0.0) {
            return Err(Error::invalid("histogram has no mass"));
        }
        mass.iter_mut().for_each(|m| *m /= total);
        Ok(GridDensity { start: GRID_START, step: GRID_STEP, mass })
    }

    /// Histogram of raw samples on the default grid.
    pub fn from_samples(values: &[f64]) -> Result<Self> {
        let bins: Vec<(f64, f64, f64)> = values.iter().map(|&v| (v, v, 1.0)).collect();
        Self::from_histogram(&bins)
    }

    pub fn cell(&self, i: usize) -> (f64, f64) {
        let lo = self.start + i as f64 * self.step;
        (lo, lo + self.step)
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        (0..self.mass.len()).map(|i| {
            let (lo, hi) = self.cell(i);
            self.mass[i] * 0.5 * (lo + hi)
        }).sum()
    }

    /// Variance including the within-cell spread.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        (0..self.mass.len()).map(|i| {
            let (lo, hi) = self.cell(i);
            let c = 0.5 * (lo + hi);
            self.mass[i] * ((c - m).powi(2) + (hi - lo).powi(2) / 12.0)
        }).sum()
    }

    /// Mean window LEP `E[1 / (1 + 10^lambda)]`.
    pub fn mean_lep(&self) -> f64 {
        (0..self.mass.len())
            .filter(|&i| self.mass[i] > 0.0)
            .map(|i| {
                let (lo, hi) = self.cell(i);
                self.mass[i] * cell_mean_lep(lo, hi)
            })
            .sum()
    }

    fn shifted(&self, s: f64) -> Self {
        GridDensity { start: self.start + s, ..self.clone() }
    }

    fn scaled(&self, a: f64) -> Self {
        GridDensity { start: self.start * a, step: self.step * a, mass: self.mass.clone() }
    }

    fn segments(&self) -> Vec<Segment> {
        (0..self.mass.len())
            .filter(|&i| self.mass[i] > 0.0)
            .map(|i| {
                let (lo, hi) = self.cell(i);
                Segment { lo, hi, weight: self.mass[i] }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Deformation {
    /// `lambda -> lambda + b`.
    #[default]
    Shift,
    /// `lambda -> a lambda`.
    Scale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentOddsModel {
    pub lambda: GridDensity,
    pub delta: f64,
    /// Applied deformation parameter: the shift `b` or the factor `a`.
    pub deformation: (Deformation, f64),
}

impl LatentOddsModel {
    pub fn new(lambda: GridDensity, delta: f64) -> Result<Self> {
        if !(delta >= 0.0) {
            return Err(Error::invalid("delta must be non-negative"));
        }
        if (lambda.total() - 1.0).abs() > 1e-6 {
            return Err(Error::invalid("density must be normalised"));
        }
        Ok(LatentOddsModel { lambda, delta, deformation: (Deformation::Shift, 0.0) })
    }

    pub fn mean_window_lep(&self) -> f64 {
        self.lambda.mean_lep()
    }

    /// Mean circuit LEP over `n` windows.
    pub fn mean_circuit_lep(&self, n: f64) -> f64 {
        -0.5 * (n * (-2.0 * self.mean_window_lep()).ln_1p()).exp_m1()
    }
}

fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    // f(lo) > 0 > f(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * (1.0 + mid.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Deforms the latent axis until the mean window LEP equals `target`.
pub fn deform_to_target_mean(
    density: &GridDensity,
    delta: f64,
    target: f64,
    mode: Deformation,
) -> Result<LatentOddsModel> {
    if !(target > 0.0 && target < 0.5) {
        return Err(Error::invalid(format!("target mean {target} outside (0, 0.5)")));
    }
    let current = density.mean_lep();
    if (current - target).abs() <= 1e-15 * target {
        let mut m = LatentOddsModel::new(density.clone(), delta)?;
        m.deformation = (mode, if mode == Deformation::Shift { 0.0 } else { 1.0 });
        return Ok(m);
    }
    let (param, deformed) = match mode {
        Deformation::Shift => {
            let (lo, hi) = (-100.0, 100.0);
            let range = (density.shifted(hi).mean_lep(), density.shifted(lo).mean_lep());
            if !(target > range.0 && target < range.1) {
                return Err(Error::invalid(format!(
                    "target mean {target:e} outside achievable ({:e}, {:e})",
                    range.0, range.1
                )));
            }
            let s = bisect(|s| density.shifted(s).mean_lep() - target, lo, hi);
            (s, density.shifted(s))
        }
        Deformation::Scale => {
            let (lo, hi) = (-6.0f64, 6.0f64);
            let range = (density.scaled(hi.exp()).mean_lep(), density.scaled(lo.exp()).mean_lep());
            if !(target > range.0 && target < range.1) {
                return Err(Error::invalid(format!(
                    "target mean {target:e} outside achievable ({:e}, {:e})",
                    range.0, range.1
                )));
            }
            let t = bisect(|t| density.scaled(t.exp()).mean_lep() - target, lo, hi);
            (t.exp(), density.scaled(t.exp()))
        }
    };
    let mut m = LatentOddsModel::new(deformed, delta)?;
    m.deformation = (mode, param);
    Ok(m)
}

/// Score density: the latent density convolved with `N(0, delta^2)`,
/// tabulated on the same step.
pub fn implied_dcs_distribution(model: &LatentOddsModel) -> GridDensity {
    let src = &model.lambda;
    if model.delta == 0.0 || src.step == 0.0 && model.delta == 0.0 {
        return src.clone();
    }
    let step = if src.step > 0.0 { src.step } else { GRID_STEP };
    let pad = (8.0 * model.delta / step).ceil() as usize + 1;
    let cells = src.mass.len().max(1) * (src.step / step).round().max(1.0) as usize;
    let start = src.start - pad as f64 * step;
    let n = cells + 2 * pad;
    let mut mass = vec![0.0; n];
    for (i, &m) in src.mass.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let (lo, hi) = src.cell(i);
        let c = 0.5 * (lo + hi);
        let center = ((c - start) / step) as isize;
        let from = (center - pad as isize).max(0) as usize;
        let to = ((center + pad as isize + 1) as usize).min(n);
        for (j, out) in mass.iter_mut().enumerate().take(to).skip(from) {
            let e0 = start + j as f64 * step;
            let p = normal_cdf((e0 + step - c) / model.delta) - normal_cdf((e0 - c) / model.delta);
            *out += m * p;
        }
    }
    let total: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|v| *v /= total);
    GridDensity { start, step, mass }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    weight: f64,
}

/// Sampler over weighted uniform segments.
struct SegmentSampler {
    segs: Vec<Segment>,
    cum: Vec<f64>,
}

impl SegmentSampler {
    fn new(segs: Vec<Segment>) -> Option<Self> {
        let mut cum = Vec::with_capacity(segs.len());
        let mut acc = 0.0;
        for s in &segs {
            acc += s.weight;
            cum.push(acc);
        }
        (acc > 0.0).then_some(SegmentSampler { segs, cum })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = *self.cum.last().unwrap();
        let u = rng.random::<f64>() * total;
        let i = self.cum.partition_point(|&c| c <= u).min(self.segs.len() - 1);
        let s = self.segs[i];
        s.lo + (s.hi - s.lo) * rng.random::<f64>()
    }

    fn mean_lep(&self) -> f64 {
        let total = *self.cum.last().unwrap();
        self.segs.iter().map(|s| s.weight * cell_mean_lep(s.lo, s.hi)).sum::<f64>() / total
    }
}

/// `n` paired `(phi, lambda)` samples.
pub fn sample_circuit_scores(model: &LatentOddsModel, n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let sampler = SegmentSampler::new(model.lambda.segments()).expect("normalised density");
    let mut rng = stream_rng(seed, 0);
    let mut phi = Vec::with_capacity(n);
    let mut lambda = Vec::with_capacity(n);
    for _ in 0..n {
        let l = sampler.sample(&mut rng);
        let r: f64 = rng.sample(StandardNormal);
        lambda.push(l);
        phi.push(l + model.delta * r);
    }
    (phi, lambda)
}

/// Circuit LEP of `n` windows streamed from the latent density.
pub fn sample_circuit_lep<R: Rng + ?Sized>(model: &LatentOddsModel, n: u64, rng: &mut R) -> f64 {
    let sampler = SegmentSampler::new(model.lambda.segments()).expect("normalised density");
    stream_circuit(&sampler, n, rng)
}

/// Windows with negative log odds have LEP above one half and contribute a
/// negative factor `1 - 2p`; the sign is tracked separately.
fn stream_circuit<R: Rng + ?Sized>(sampler: &SegmentSampler, n: u64, rng: &mut R) -> f64 {
    let mut log_abs = 0.0;
    let mut negative = false;
    for _ in 0..n {
        let l = sampler.sample(rng);
        // |1 - 2p| = |tanh(l ln10 / 2)|
        let p = lep(l.abs());
        log_abs += (-2.0 * p).ln_1p();
        negative ^= l < 0.0;
    }
    if negative {
        0.5 * (1.0 + log_abs.exp())
    } else {
        -0.5 * log_abs.exp_m1()
    }
}

/// Per-window abort probability on the score channel for threshold `t`
/// (abort when `phi < t`).
pub fn phi_abort_rate(model: &LatentOddsModel, t: f64) -> f64 {
    model
        .lambda
        .segments()
        .iter()
        .map(|s| s.weight * smear_below(s, t, model.delta))
        .sum()
}

fn smear_below(s: &Segment, t: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        return lambda_below(s, t);
    }
    normal_cdf((t - 0.5 * (s.lo + s.hi)) / delta)
}

fn lambda_below(s: &Segment, t: f64) -> f64 {
    if t <= s.lo {
        0.0
    } else if t >= s.hi {
        1.0
    } else {
        (t - s.lo) / (s.hi - s.lo)
    }
}

/// Per-window abort probability on the latent channel.
pub fn lambda_abort_rate(model: &LatentOddsModel, t: f64) -> f64 {
    model.lambda.segments().iter().map(|s| s.weight * lambda_below(s, t)).sum()
}

fn solve_threshold(rate: impl Fn(f64) -> f64, rho: f64) -> f64 {
    bisect(|t| rho - rate(t), GRID_START - 50.0, GRID_END + 50.0)
}

/// Score threshold whose per-window abort rate is `rho`.
pub fn phi_threshold_for_rate(model: &LatentOddsModel, rho: f64) -> f64 {
    solve_threshold(|t| phi_abort_rate(model, t), rho)
}

pub fn lambda_threshold_for_rate(model: &LatentOddsModel, rho: f64) -> f64 {
    solve_threshold(|t| lambda_abort_rate(model, t), rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum ChannelTarget {
    /// Same threshold on both channels.
    Threshold(f64),
    /// Thresholds chosen so both channels discard this circuit fraction.
    CircuitFraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub threshold: f64,
    pub rho: f64,
    pub overhead: f64,
    /// Mean retained circuit LEP over the trials.
    pub mean_p_l: f64,
    /// Standard error of `mean_p_l`.
    pub se_p_l: f64,
    /// Analytic retained circuit mean.
    pub analytic_p_l: f64,
    pub reduction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRow {
    pub target: ChannelTarget,
    pub baseline_p_l: f64,
    pub phi: ChannelStats,
    pub lambda: ChannelStats,
    /// Per-trial retained circuit LEPs: `(phi, lambda)`.
    #[serde(skip)]
    pub trials: Vec<(f64, f64)>,
}

/// Compares aborting on the noisy score with aborting on the latent log
/// odds. Both channels share random streams, so a zero smear gives identical
/// columns.
pub fn compare_abort_channels(
    model: &LatentOddsModel,
    targets: &[ChannelTarget],
    n: u64,
    trials: usize,
    seed: u64,
) -> Result<Vec<ChannelRow>> {
    if trials < 1 || n < 1 {
        return Err(Error::invalid("need at least one trial and one window"));
    }
    let baseline = model.mean_circuit_lep(n as f64);
    let segs = model.lambda.segments();
    targets
        .iter()
        .enumerate()
        .map(|(k, &target)| {
            let (t_phi, t_lambda) = match target {
                ChannelTarget::Threshold(t) => (t, t),
                ChannelTarget::CircuitFraction(f) => {
                    if !(0.0..1.0).contains(&f) {
                        return Err(Error::invalid(format!("discard fraction {f} outside [0, 1)")));
                    }
                    let rho = window_rate_for_fraction(f, n as f64);
                    (phi_threshold_for_rate(model, rho), lambda_threshold_for_rate(model, rho))
                }
            };
            let phi_segs: Vec<Segment> = segs
                .iter()
                .map(|s| Segment { weight: s.weight * (1.0 - smear_below(s, t_phi, model.delta)), ..*s })
                .filter(|s| s.weight > 0.0)
                .collect();
            let lambda_segs: Vec<Segment> = segs
                .iter()
                .filter(|s| s.hi > t_lambda || s.hi == s.lo && s.lo >= t_lambda)
                .map(|s| {
                    let keep = 1.0 - lambda_below(s, t_lambda);
                    Segment { lo: s.lo.max(t_lambda).min(s.hi), hi: s.hi, weight: s.weight * keep }
                })
                .filter(|s| s.weight > 0.0)
                .collect();
            let rho_phi: f64 = segs.iter().map(|s| s.weight * smear_below(s, t_phi, model.delta)).sum();
            let rho_lambda: f64 = segs.iter().map(|s| s.weight * lambda_below(s, t_lambda)).sum();
            let phi_sampler = SegmentSampler::new(phi_segs);
            let lambda_sampler = SegmentSampler::new(lambda_segs);
            let results: Vec<(f64, f64)> = (0..trials as u64)
                .into_par_iter()
                .map(|trial| {
                    let stream = (k as u64) << 32 | trial;
                    let a = phi_sampler
                        .as_ref()
                        .map_or(f64::NAN, |s| stream_circuit(s, n, &mut stream_rng(seed, stream)));
                    let b = lambda_sampler
                        .as_ref()
                        .map_or(f64::NAN, |s| stream_circuit(s, n, &mut stream_rng(seed, stream)));
                    (a, b)
                })
                .collect();
            let stats = |vals: Vec<f64>, t: f64, rho: f64, sampler: &Option<SegmentSampler>| {
                let m = vals.iter().sum::<f64>() / vals.len() as f64;
                let se = if vals.len() > 1 {
                    (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>()
                        / (vals.len() as f64 - 1.0)
                        / vals.len() as f64)
                        .sqrt()
                } else {
                    f64::NAN
                };
                let analytic = sampler.as_ref().map_or(f64::NAN, |s| {
                    -0.5 * (n as f64 * (-2.0 * s.mean_lep()).ln_1p()).exp_m1()
                });
                let f = discard_fraction(rho, n as f64);
                ChannelStats {
                    threshold: t,
                    rho,
                    overhead: time_overhead(f, n).unwrap_or(f64::INFINITY),
                    mean_p_l: m,
                    se_p_l: se,
                    analytic_p_l: analytic,
                    reduction: baseline / m,
                }
            };
            Ok(ChannelRow {
                target,
                baseline_p_l: baseline,
                phi: stats(results.iter().map(|r| r.0).collect(), t_phi, rho_phi, &phi_sampler),
                lambda: stats(results.iter().map(|r| r.1).collect(), t_lambda, rho_lambda, &lambda_sampler),
                trials: results,
            })
        })
        .collect()
}

/// Normal-looking histogram used when no measured histogram is supplied.
pub fn gaussian_density(mean: f64, sd: f64) -> Result<GridDensity> {
    let n = ((GRID_END - GRID_START) / GRID_STEP).round() as usize;
    let mass: Vec<f64> = (0..n)
        .map(|i| {
            let lo = GRID_START + i as f64 * GRID_STEP;
            normal_cdf((lo + GRID_STEP - mean) / sd) - normal_cdf((lo - mean) / sd)
        })
        .collect();
    let total: f64 = mass.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("gaussian lies outside the grid"));
    }
    Ok(GridDensity { start: GRID_START, step: GRID_STEP, mass: mass.into_iter().map(|m| m / total).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antiderivative_matches_quadrature() {
        let (lo, hi) = (-1.3, 2.2);
        let k = 200_000;
        let h = (hi - lo) / k as f64;
        let direct: f64 = (0..k).map(|i| lep(lo + (i as f64 + 0.5) * h)).sum::<f64>() / k as f64;
        assert!((cell_mean_lep(lo, hi) - direct).abs() < 1e-10);
    }

    #[test]
    fn point_mass_needs_no_deformation() {
        let d = GridDensity::point_mass(2.0);
        assert!((d.mean_lep() - 1.0 / 101.0).abs() < 1e-15);
        let m = deform_to_target_mean(&d, 0.0, 1.0 / 101.0, Deformation::Shift).unwrap();
        assert_eq!(m.lambda, d);
    }

    #[test]
    fn own_mean_is_identity() {
        let d = gaussian_density(8.0, 1.5).unwrap();
        let m = deform_to_target_mean(&d, 1.0, d.mean_lep(), Deformation::Shift).unwrap();
        assert_eq!(m.lambda, d);
    }

    #[test]
    fn tenfold_target_converges() {
        let d = gaussian_density(8.0, 1.5).unwrap();
        for mode in [Deformation::Shift, Deformation::Scale] {
            let target = 10.0 * d.mean_lep();
            let m = deform_to_target_mean(&d, 1.0, target, mode).unwrap();
            assert!((m.mean_window_lep() / target - 1.0).abs() < 1e-3, "{mode:?}");
        }
        assert!(deform_to_target_mean(&d, 1.0, 0.7, Deformation::Shift).is_err());
    }

    #[test]
    fn smear_properties() {
        let d = gaussian_density(5.0, 1.2).unwrap();
        let m0 = LatentOddsModel::new(d.clone(), 0.0).unwrap();
        assert_eq!(implied_dcs_distribution(&m0), d);
        let m = LatentOddsModel::new(d.clone(), 0.8).unwrap();
        let s = implied_dcs_distribution(&m);
        assert!((s.total() - 1.0).abs() < 1e-9);
        assert!((s.mean() - d.mean()).abs() < 1e-6);
        assert!((s.variance() - d.variance() - 0.64).abs() < 1e-3);
        let p = LatentOddsModel::new(GridDensity::point_mass(3.0), 1.0).unwrap();
        let g = implied_dcs_distribution(&p);
        assert!((g.mean() - 3.0).abs() < 1e-9);
        assert!((g.variance() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn single_sample_without_smear() {
        let m = LatentOddsModel::new(gaussian_density(5.0, 1.0).unwrap(), 0.0).unwrap();
        let (phi, lambda) = sample_circuit_scores(&m, 1, 3);
        assert_eq!(phi, lambda);
    }

    #[test]
    fn low_threshold_changes_nothing() {
        let m = LatentOddsModel::new(gaussian_density(8.0, 1.0).unwrap(), 1.0).unwrap();
        let rows = compare_abort_channels(&m, &[ChannelTarget::Threshold(-90.0)], 1000, 4, 1).unwrap();
        let r = &rows[0];
        assert_eq!(r.phi.rho, 0.0);
        assert_eq!(r.phi.overhead, 1.0);
        assert!((r.phi.analytic_p_l / r.baseline_p_l - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_smear_channels_agree() {
        let m = LatentOddsModel::new(gaussian_density(6.0, 1.0).unwrap(), 0.0).unwrap();
        let rows = compare_abort_channels(&m, &[ChannelTarget::CircuitFraction(0.3)], 500, 5, 2).unwrap();
        assert_eq!(rows[0].phi.mean_p_l, rows[0].lambda.mean_p_l);
    }
}

//! Calibration of confidence scores into logical error probabilities.

use serde::{Deserialize, Serialize};

use crate::confidence::DcsRecord;
use crate::error::{Error, Result};
use crate::stats::{fit_line, log_odds, prob_from_log_odds, sample_variance};

pub const DEFAULT_BINS: usize = 50;
pub const DEFAULT_P_MIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub phi_lo: f64,
    pub phi_hi: f64,
    pub phi_center: f64,
    pub n_total: u64,
    pub n_fail: u64,
    /// Empirical log success odds; infinite when the bin has no failures.
    #[serde(with = "nonfinite")]
    pub lambda_hat: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

/// JSON has no infinities; store them as strings.
mod nonfinite {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            v.serialize(s)
        } else if *v > 0.0 {
            "inf".serialize(s)
        } else if *v < 0.0 {
            "-inf".serialize(s)
        } else {
            "nan".serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> Result<(f64, f64)> {
    if n == 0 || k > n {
        return Err(Error::invalid(format!("wilson interval needs 0 <= k <= n, n >= 1 (k={k}, n={n})")));
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (center + half).min(1.0) };
    Ok((lo, hi))
}

/// Equal-width bins over `[min phi, max phi]` with per-bin failure counts.
pub fn bin_scores(phi: &[f64], failed: &[bool], bin_count: usize, z: f64) -> Result<Vec<Bin>> {
    if phi.is_empty() || phi.len() != failed.len() {
        return Err(Error::invalid("need a non-empty score list with one flag per score"));
    }
    if bin_count < 2 {
        return Err(Error::invalid("bin_count must be >= 2"));
    }
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("scores must be finite"));
    }
    let lo = phi.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return Err(Error::invalid("all scores identical; cannot form more than one bin"));
    }
    let width = (hi - lo) / bin_count as f64;
    let mut total = vec![0u64; bin_count];
    let mut fail = vec![0u64; bin_count];
    for (&v, &f) in phi.iter().zip(failed) {
        let i = (((v - lo) / width) as usize).min(bin_count - 1);
        total[i] += 1;
        fail[i] += f as u64;
    }
    (0..bin_count)
        .map(|i| {
            let phi_lo = lo + width * i as f64;
            let phi_hi = if i + 1 == bin_count { hi } else { lo + width * (i + 1) as f64 };
            let (wilson_lo, wilson_hi) = if total[i] > 0 {
                wilson_interval(fail[i], total[i], z)?
            } else {
                (0.0, 1.0)
            };
            let lambda_hat = if total[i] > 0 {
                log_odds(fail[i] as f64 / total[i] as f64)
            } else {
                f64::NAN
            };
            Ok(Bin {
                phi_lo,
                phi_hi,
                phi_center: 0.5 * (phi_lo + phi_hi),
                n_total: total[i],
                n_fail: fail[i],
                lambda_hat,
                wilson_lo,
                wilson_hi,
            })
        })
        .collect()
}

/// Bins records that carry a success flag.
pub fn bin_dcs(records: &[DcsRecord], bin_count: usize) -> Result<Vec<Bin>> {
    let mut phi = Vec::with_capacity(records.len());
    let mut failed = Vec::with_capacity(records.len());
    for r in records {
        let ok = r.success.ok_or_else(|| Error::invalid("record without success flag"))?;
        phi.push(r.phi);
        failed.push(!ok);
    }
    bin_scores(&phi, &failed, bin_count, 1.96)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCurve {
    pub a: f64,
    pub b: f64,
    pub a_se: f64,
    pub b_se: f64,
    pub bins: Vec<Bin>,
    pub bin_count: usize,
    pub p_min: f64,
    /// Set when bins without failures entered the fit through a pseudocount.
    pub pseudocount: Option<f64>,
    pub model: Option<String>,
    pub distance: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub pseudocount: Option<f64>,
    pub p_min: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { pseudocount: None, p_min: DEFAULT_P_MIN }
    }
}

/// Unweighted least squares of empirical log odds on bin centers.
pub fn fit_calibration(bins: &[Bin], opts: FitOptions) -> Result<CalibrationCurve> {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for bin in bins.iter().filter(|b| b.n_total > 0) {
        let lambda = match opts.pseudocount {
            Some(c) => log_odds((bin.n_fail as f64 + c) / (bin.n_total as f64 + 2.0 * c)),
            None if bin.n_fail >= 1 && bin.n_fail < bin.n_total => bin.lambda_hat,
            None => continue,
        };
        x.push(bin.phi_center);
        y.push(lambda);
    }
    if x.len() < 2 {
        return Err(Error::CalibrationInfeasible(format!(
            "{} usable bins, need at least 2",
            x.len()
        )));
    }
    let fit = fit_line(&x, &y)
        .ok_or_else(|| Error::CalibrationInfeasible("usable bins share one center".into()))?;
    if !(fit.slope > 0.0) {
        return Err(Error::CalibrationInfeasible(format!(
            "fitted slope {} is not positive",
            fit.slope
        )));
    }
    Ok(CalibrationCurve {
        a: fit.slope,
        b: fit.intercept,
        a_se: fit.slope_se,
        b_se: fit.intercept_se,
        bins: bins.to_vec(),
        bin_count: bins.len(),
        p_min: opts.p_min,
        pseudocount: opts.pseudocount,
        model: None,
        distance: None,
    })
}

impl CalibrationCurve {
    pub fn lambda(&self, phi: f64) -> f64 {
        self.a * phi + self.b
    }

    /// Logical error probability for a score, clamped to `[p_min, 0.5]`.
    pub fn lep(&self, phi: f64) -> f64 {
        prob_from_log_odds(self.lambda(phi)).clamp(self.p_min, 0.5)
    }
}

pub fn lep_from_dcs(curve: &CalibrationCurve, phi: f64) -> f64 {
    curve.lep(phi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationReport {
    pub s_r: f64,
    pub sigma_alpha_hat: f64,
    pub sigma_phi: f64,
    pub ratio: f64,
}

/// Splits score variation into the residual part and the part explained by
/// the log odds. `pairs` are `(lambda, phi)`; `fixed_noise_phi` are scores
/// sampled at one noise setting.
pub fn variation_report(pairs: &[(f64, f64)], fixed_noise_phi: &[f64]) -> Result<VariationReport> {
    if pairs.len() < 3 || fixed_noise_phi.len() < 2 {
        return Err(Error::invalid("variation report needs >= 3 pairs and >= 2 fixed-noise scores"));
    }
    let (lambda, phi): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    let fit = fit_line(&lambda, &phi).ok_or_else(|| Error::invalid("all lambda values identical"))?;
    let rss: f64 = lambda
        .iter()
        .zip(&phi)
        .map(|(l, p)| (p - fit.slope * l - fit.intercept).powi(2))
        .sum();
    let s_r_sq = rss / (pairs.len() as f64 - 1.0);
    let s_phi_sq = sample_variance(fixed_noise_phi);
    if s_phi_sq <= s_r_sq {
        return Err(Error::InvalidDecomposition { s_phi_sq, s_r_sq });
    }
    let sigma_alpha_hat = (s_phi_sq - s_r_sq).sqrt();
    let s_r = s_r_sq.sqrt();
    Ok(VariationReport { s_r, sigma_alpha_hat, sigma_phi: s_phi_sq.sqrt(), ratio: s_r / sigma_alpha_hat })
}

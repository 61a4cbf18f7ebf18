//! Whole-circuit statistics built from independent decoding windows.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::wilson_interval;
use crate::error::{Error, Result};
use crate::noise::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub p_l: f64,
    pub x: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PoolMeta {
    pub distance: Option<usize>,
    pub noise: Option<String>,
    pub shots: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowPool {
    pub entries: Vec<PoolEntry>,
    pub meta: PoolMeta,
}

impl WindowPool {
    pub fn new(entries: Vec<PoolEntry>) -> Result<Self> {
        if let Some(e) = entries.iter().find(|e| !(0.0..=0.5).contains(&e.p_l)) {
            return Err(Error::invalid(format!("pool p_L {} outside [0, 0.5]", e.p_l)));
        }
        Ok(WindowPool { entries, meta: PoolMeta::default() })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mean_p_l(&self) -> f64 {
        self.entries.iter().map(|e| e.p_l).sum::<f64>() / self.len() as f64
    }

    pub fn failures(&self) -> u64 {
        self.entries.iter().filter(|e| e.x).count() as u64
    }

    /// Population mean and variance of `p_L`.
    pub fn moments(&self) -> (f64, f64) {
        let m = self.mean_p_l();
        let v = self.entries.iter().map(|e| (e.p_l - m).powi(2)).sum::<f64>() / self.len() as f64;
        (m, v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitRun {
    pub p_l: f64,
    pub x: bool,
    pub n: u64,
}

/// `P = (1 - prod(1 - 2 p_i)) / 2`, accumulated in log space.
pub fn compose_lep(ps: &[f64]) -> Result<f64> {
    let mut log_prod = 0.0;
    for &p in ps {
        if !(0.0..=0.5).contains(&p) {
            return Err(Error::invalid(format!("probability {p} outside [0, 0.5]")));
        }
        log_prod += (-2.0 * p).ln_1p();
    }
    Ok(compose_from_log(log_prod))
}

fn compose_from_log(log_prod: f64) -> f64 {
    (-0.5 * log_prod.exp_m1()).clamp(0.0, 0.5)
}

/// Mean and variance of the circuit LEP for `n` i.i.d. windows with
/// per-window mean `mu1` and variance `sigma1_sq`.
pub fn circuit_moments(mu1: f64, sigma1_sq: f64, n: f64) -> (f64, f64) {
    let q = 1.0 - 2.0 * mu1;
    if q <= 0.0 {
        return (0.5, 0.25 * (4.0 * sigma1_sq).powf(n));
    }
    let log_q = (-2.0 * mu1).ln_1p();
    let mu = -0.5 * (n * log_q).exp_m1();
    let var = 0.25 * (2.0 * n * log_q).exp() * (n * (4.0 * sigma1_sq / (q * q)).ln_1p()).exp_m1();
    (mu, var)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPoint {
    pub d: usize,
    pub mu1: f64,
    pub sigma1_sq: f64,
}

/// Smallest distance whose circuit mean LEP is at most `eps`.
pub fn select_distance(model: &[MomentPoint], n: f64, eps: f64) -> Result<usize> {
    let mut pts = model.to_vec();
    pts.sort_by_key(|p| p.d);
    let mut best = f64::INFINITY;
    for p in &pts {
        let (mu, _) = circuit_moments(p.mu1, p.sigma1_sq, n);
        if mu <= eps {
            return Ok(p.d);
        }
        best = best.min(mu);
    }
    Err(Error::Capability(format!(
        "no distance reaches mean circuit LEP {eps:e}; best achievable is {best:e}"
    )))
}

/// Inverts the circuit-mean formula: the per-window mean that gives
/// circuit mean `mu_n` over `n` windows.
pub fn window_mean_for_circuit_mean(mu_n: f64, n: f64) -> f64 {
    -0.5 * ((-2.0 * mu_n).ln_1p() / n).exp_m1()
}

/// Distinct `(p_L, x)` values with multiplicities.
struct Grouped {
    log1m2p: Vec<f64>,
    x: Vec<bool>,
    prob: Vec<f64>,
}

impl Grouped {
    fn new(pool: &WindowPool) -> Self {
        let mut keys: Vec<(u64, bool)> = pool.entries.iter().map(|e| (e.p_l.to_bits(), e.x)).collect();
        keys.sort_unstable();
        let mut g = Grouped { log1m2p: vec![], x: vec![], prob: vec![] };
        let total = keys.len() as f64;
        let mut i = 0;
        while i < keys.len() {
            let j = keys[i..].iter().position(|k| *k != keys[i]).map_or(keys.len(), |o| i + o);
            let p = f64::from_bits(keys[i].0);
            g.log1m2p.push((-2.0 * p).ln_1p());
            g.x.push(keys[i].1);
            g.prob.push((j - i) as f64 / total);
            i = j;
        }
        g
    }

    fn len(&self) -> usize {
        self.x.len()
    }
}

/// Draws `m` circuits of `n` windows each from the pool, with replacement.
/// Run `j` uses generator stream `j`.
pub fn simulate_circuits(pool: &WindowPool, n: u64, m: usize, seed: u64) -> Result<Vec<CircuitRun>> {
    if pool.is_empty() {
        return Err(Error::invalid("empty window pool"));
    }
    if n == 0 {
        return Err(Error::invalid("circuits need at least one window"));
    }
    let groups = Grouped::new(pool);
    let use_counts = (groups.len() as u64) < n;
    let runs = (0..m as u64)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream_rng(seed, j);
            let (mut log_prod, mut parity) = (0.0, false);
            if use_counts {
                let mut left = n;
                let mut mass = 1.0;
                for g in 0..groups.len() {
                    if left == 0 {
                        break;
                    }
                    let c = if g + 1 == groups.len() {
                        left
                    } else {
                        let q = (groups.prob[g] / mass).clamp(0.0, 1.0);
                        Binomial::new(left, q).expect("valid binomial").sample(&mut rng)
                    };
                    left -= c;
                    mass -= groups.prob[g];
                    log_prod += c as f64 * groups.log1m2p[g];
                    parity ^= groups.x[g] && c % 2 == 1;
                }
            } else {
                for _ in 0..n {
                    let e = &pool.entries[rng.random_range(0..pool.len())];
                    log_prod += (-2.0 * e.p_l).ln_1p();
                    parity ^= e.x;
                }
            }
            CircuitRun { p_l: compose_from_log(log_prod), x: parity, n }
        })
        .collect();
    Ok(runs)
}

/// `f = 1 - (1 - rho)^n`.
pub fn discard_fraction(rho: f64, n: f64) -> f64 {
    -(n * (-rho).ln_1p()).exp_m1()
}

/// Per-window rate that gives circuit discard fraction `f` over `n` windows.
pub fn window_rate_for_fraction(f: f64, n: f64) -> f64 {
    -((-f).ln_1p() / n).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum AbortTarget {
    /// Discard this fraction of windows.
    WindowRate(f64),
    /// Discard windows with `p_L` above this value.
    Threshold(f64),
    /// Discard this fraction of `n`-window circuits.
    CircuitFraction { f: f64, n: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbortOutcome {
    pub pool: WindowPool,
    pub rho: f64,
    /// Largest retained `p_L`.
    pub threshold: f64,
}

impl AbortOutcome {
    pub fn discard_fraction(&self, n: f64) -> f64 {
        discard_fraction(self.rho, n)
    }
}

/// Indices sorted by decreasing `p_L`, ties by index.
fn descending(pool: &WindowPool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pool.len()).collect();
    idx.sort_by(|&i, &j| pool.entries[j].p_l.total_cmp(&pool.entries[i].p_l).then(i.cmp(&j)));
    idx
}

/// Removes the highest-`p_L` windows.
pub fn abort_filter(pool: &WindowPool, target: AbortTarget) -> Result<AbortOutcome> {
    let order = descending(pool);
    let len = pool.len();
    let removed = match target {
        AbortTarget::WindowRate(rho) | AbortTarget::CircuitFraction { f: rho, .. }
            if !(0.0..1.0).contains(&rho) =>
        {
            return Err(Error::invalid(format!("discard target {rho} outside [0, 1)")));
        }
        AbortTarget::WindowRate(rho) => (rho * len as f64).round() as usize,
        AbortTarget::CircuitFraction { f, n } => {
            (window_rate_for_fraction(f, n) * len as f64).round() as usize
        }
        AbortTarget::Threshold(t) => order.iter().take_while(|&&i| pool.entries[i].p_l > t).count(),
    };
    let mut keep: Vec<usize> = order[removed..].to_vec();
    keep.sort_unstable();
    let entries: Vec<PoolEntry> = keep.iter().map(|&i| pool.entries[i]).collect();
    let threshold = order.get(removed).map_or(0.0, |&i| pool.entries[i].p_l);
    Ok(AbortOutcome {
        pool: WindowPool { entries, meta: pool.meta.clone() },
        rho: if len == 0 { 0.0 } else { removed as f64 / len as f64 },
        threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetainedPoint {
    pub fraction: f64,
    pub retained: u64,
    pub mean_p_l: f64,
    pub ler: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

/// Calculated LEP and observed LER after discarding the highest-`p_L`
/// fraction of windows.
pub fn retained_ler_curve(pool: &WindowPool, fractions: &[f64], z: f64) -> Result<Vec<RetainedPoint>> {
    if pool.is_empty() {
        return Err(Error::invalid("empty window pool"));
    }
    let order = descending(pool);
    let len = pool.len();
    // Suffix sums over the descending order.
    let mut sum_p = vec![0.0; len + 1];
    let mut sum_x = vec![0u64; len + 1];
    for k in (0..len).rev() {
        let e = pool.entries[order[k]];
        sum_p[k] = sum_p[k + 1] + e.p_l;
        sum_x[k] = sum_x[k + 1] + e.x as u64;
    }
    fractions
        .iter()
        .map(|&f| {
            if !(0.0..1.0).contains(&f) {
                return Err(Error::invalid(format!("fraction {f} outside [0, 1)")));
            }
            let k = ((f * len as f64).round() as usize).min(len - 1);
            let n = (len - k) as u64;
            let (wilson_lo, wilson_hi) = wilson_interval(sum_x[k], n, z)?;
            Ok(RetainedPoint {
                fraction: f,
                retained: n,
                mean_p_l: sum_p[k] / n as f64,
                ler: sum_x[k] as f64 / n as f64,
                wilson_lo,
                wilson_hi,
            })
        })
        .collect()
}

/// Mean time per accepted circuit relative to one unaborted run.
pub fn time_overhead(f: f64, n: u64) -> Result<f64> {
    if !(0.0..1.0).contains(&f) || n == 0 {
        return Err(Error::invalid(format!("time overhead needs 0 <= f < 1 and n >= 1 (f={f}, n={n})")));
    }
    if f == 0.0 {
        return Ok(1.0);
    }
    if n == 1 {
        return Ok(1.0 / (1.0 - f));
    }
    let nf = n as f64;
    let rho = window_rate_for_fraction(f, nf);
    Ok((f / nf) / ((1.0 - f) * rho))
}

/// Mean index of the aborting window, conditioned on an abort.
pub fn mean_abort_window(rho: f64, n: u64) -> f64 {
    let nf = n as f64;
    let log_q = (-rho).ln_1p();
    let qn = (nf * log_q).exp();
    let f = -(nf * log_q).exp_m1();
    (f / rho - nf * qn) / f
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbortSimulation {
    pub rho: f64,
    pub n: u64,
    pub trials: u64,
    pub accepted: u64,
    /// Windows executed per accepted circuit, divided by `n`.
    pub mean_overhead: f64,
    /// Empirical mean index of the aborting window.
    pub mean_abort_window: f64,
    pub analytic_abort_window: f64,
}

/// Simulates circuit attempts with independent per-window aborts.
pub fn abort_event_simulation(rho: f64, n: u64, trials: u64, seed: u64) -> Result<AbortSimulation> {
    if !(rho > 0.0 && rho <= 1.0) || n == 0 || trials == 0 {
        return Err(Error::invalid("abort simulation needs 0 < rho <= 1, n >= 1, trials >= 1"));
    }
    const CHUNK: u64 = 1 << 16;
    let chunks = trials.div_ceil(CHUNK);
    let log_q = (-rho).ln_1p();
    let (windows, accepted, abort_sum) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c);
            let (mut windows, mut accepted, mut abort_sum) = (0u128, 0u64, 0u128);
            for _ in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                // Index of the first aborting window.
                let first = if rho >= 1.0 {
                    1
                } else {
                    let u: f64 = 1.0 - rng.random::<f64>();
                    ((u.ln() / log_q).floor() as u64).saturating_add(1)
                };
                if first > n {
                    windows += n as u128;
                    accepted += 1;
                } else {
                    windows += first as u128;
                    abort_sum += first as u128;
                }
            }
            (windows, accepted, abort_sum)
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let aborted = trials - accepted;
    Ok(AbortSimulation {
        rho,
        n,
        trials,
        accepted,
        mean_overhead: if accepted == 0 {
            f64::INFINITY
        } else {
            windows as f64 / (n as f64 * accepted as f64)
        },
        mean_abort_window: if aborted == 0 { f64::NAN } else { abort_sum as f64 / aborted as f64 },
        analytic_abort_window: mean_abort_window(rho, n),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacetimePlan {
    pub qubit_factor: f64,
    pub duration_factor: f64,
    pub spacetime_factor: f64,
}

/// Relative spacetime cost of moving from `d_from` to `d_to` while paying a
/// time overhead.
pub fn spacetime_plan(d_from: usize, d_to: usize, overhead: f64) -> Result<SpacetimePlan> {
    if d_from == 0 || d_to == 0 || !(overhead >= 1.0) {
        return Err(Error::invalid("spacetime plan needs positive distances and overhead >= 1"));
    }
    let r = d_to as f64 / d_from as f64;
    Ok(SpacetimePlan { qubit_factor: r * r, duration_factor: r, spacetime_factor: overhead * r * r * r })
}

//! Small numeric helpers shared across modules.

/// `log10((1 - p) / p)`.
pub fn log_odds(p: f64) -> f64 {
    (-p).ln_1p().mul_add(std::f64::consts::LOG10_E, -p.log10())
}

/// `1 / (1 + 10^lambda)`, the inverse of [`log_odds`].
pub fn prob_from_log_odds(lambda: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf(lambda))
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with an `n - 1` denominator.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Unweighted least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
}

/// Returns `None` when fewer than two points or all `x` coincide.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (slope_se, intercept_se) = if n > 2 {
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
        let s2 = rss / (n as f64 - 2.0);
        ((s2 / sxx).sqrt(), (s2 * (1.0 / n as f64 + mx * mx / sxx)).sqrt())
    } else {
        (0.0, 0.0)
    };
    Some(LineFit { slope, intercept, slope_se, intercept_se })
}

/// Running `log10(sum 10^(-w))`.
#[derive(Debug, Clone, Copy)]
pub struct Log10Sum {
    min_w: f64,
    scaled: f64,
}

impl Default for Log10Sum {
    fn default() -> Self {
        Log10Sum { min_w: f64::INFINITY, scaled: 0.0 }
    }
}

impl Log10Sum {
    pub fn add(&mut self, w: f64) {
        if w < self.min_w {
            self.scaled = self.scaled * 10f64.powf(w - self.min_w) + 1.0;
            self.min_w = w;
        } else {
            self.scaled += 10f64.powf(self.min_w - w);
        }
    }

    /// `log10` of the accumulated sum, `-inf` when empty.
    pub fn log10(&self) -> f64 {
        if self.scaled == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.scaled.log10() - self.min_w
        }
    }
}

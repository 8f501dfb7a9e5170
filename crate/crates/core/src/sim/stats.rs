//! Summary statistics for simulation output.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Batches used when a single replication is available.
pub const BATCHES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    Replications,
    BatchMeans,
    /// A single observation or a degenerate run; the half-width is infinite
    /// or zero as appropriate.
    None,
}

/// Two-sided 95% Student-t interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub estimate: f64,
    pub half_width: f64,
    pub std_error: f64,
    pub method: CiMethod,
}

impl ConfidenceInterval {
    pub fn from_samples(samples: &[f64], method: CiMethod) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n.max(1) as f64;
        if n < 2 {
            return ConfidenceInterval { estimate: mean, half_width: f64::INFINITY, std_error: f64::INFINITY, method: CiMethod::None };
        }
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).map(|d| d.inverse_cdf(0.975)).unwrap_or(1.96);
        ConfidenceInterval { estimate: mean, half_width: t * se, std_error: se, method }
    }

    pub fn exact(value: f64) -> Self {
        ConfidenceInterval { estimate: value, half_width: 0.0, std_error: 0.0, method: CiMethod::None }
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.estimate).abs() <= self.half_width
    }
}

/// Mean and standard error of i.i.d. samples.
pub fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let ci = ConfidenceInterval::from_samples(samples, CiMethod::Replications);
    (ci.estimate, ci.std_error)
}

/// Unbiased sample variance and its standard error under the normal-theory
/// approximation `SE = sqrt((m4 − s⁴(n−3)/(n−1))/n)`.
pub fn variance_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let m2 = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = samples.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let s2 = m2 * n / (n - 1.0);
    let se = ((m4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt();
    (s2, se)
}

/// Kolmogorov–Smirnov distance between samples and a continuous CDF.
pub fn ks_samples(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j < xs.len() && xs[j] == xs[i] {
            j += 1;
        }
        let f = cdf(xs[i]);
        d = d.max((f - i as f64 / n).abs()).max((j as f64 / n - f).abs());
        i = j;
    }
    d
}

/// KS distance between the law of `scale·Q`, `Q` with histogram `hist`, and
/// a continuous CDF.
pub fn ks_histogram(hist: &[f64], scale: f64, cdf: impl Fn(f64) -> f64) -> f64 {
    let mut below = 0.0;
    let mut d: f64 = 0.0;
    for (n, p) in hist.iter().enumerate() {
        let x = scale * n as f64;
        let f = cdf(x);
        d = d.max((f - below).abs());
        below += p;
        d = d.max((below - f).abs());
        // just left of the next atom
        d = d.max((cdf(scale * (n + 1) as f64) - below).abs());
    }
    d
}

/// Normalises nonnegative weights to a probability vector.
pub fn normalize(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return weights.to_vec();
    }
    weights.iter().map(|w| w / total).collect()
}

/// Mean of a histogram on `0, 1, 2, ...`.
pub fn histogram_mean(hist: &[f64]) -> f64 {
    hist.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
}

/// `P(Q > n)`, `n = 0..len`.
pub fn tail(hist: &[f64]) -> Vec<f64> {
    let mut left = 1.0;
    hist.iter()
        .map(|p| {
            left -= p;
            left.max(0.0)
        })
        .collect()
}

//! Reflected Brownian motion `Q(t) = sup_{s≤t}(B(t) − B(s))` (plus the
//! initial level), `B` with drift `a` and variance `σ²` per unit time.
//!
//! Paths advance by the Lindley step `Q' = max(Q + ΔB, ΔB − m)` where `m`
//! is the minimum of the Brownian bridge over the step, drawn exactly as
//! `(ΔB − sqrt(ΔB² − 2σ²h ln U))/2`. The marginals are therefore exact for
//! any step size; the step only sets the path resolution.

use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

use super::rng::{self, SimRng};
use super::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RbmConfig {
    pub drift: f64,
    pub variance: f64,
    /// Step size; `None` gives `1e-3/|drift|`.
    pub step: Option<f64>,
    pub paths: usize,
    pub seed: u64,
}

impl RbmConfig {
    fn validate(&self) -> Result<()> {
        if !(self.variance.is_finite() && self.variance > 0.0) {
            return Err(Error::arg(format!("RBM variance must be positive, got {}", self.variance)));
        }
        if !self.drift.is_finite() {
            return Err(Error::arg("RBM drift must be finite"));
        }
        if self.paths == 0 {
            return Err(Error::arg("at least one path is required"));
        }
        if let Some(h) = self.step {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::arg(format!("step must be positive, got {h}")));
            }
        }
        Ok(())
    }

    fn step(&self) -> f64 {
        self.step.unwrap_or(1e-3 / self.drift.abs().max(1e-12))
    }
}

/// One exact Lindley step of length `h`.
pub fn rbm_step(q: f64, drift: f64, variance: f64, h: f64, rng: &mut SimRng) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    let b = drift * h + (variance * h).sqrt() * z;
    let e: f64 = Exp1.sample(rng); // −ln U
    let min = 0.5 * (b - (b * b + 2.0 * variance * h * e).sqrt());
    (q + b).max(b - min)
}

fn advance(mut q: f64, mut span: f64, cfg: &RbmConfig, h: f64, rng: &mut SimRng) -> f64 {
    while span > 0.0 {
        let dt = span.min(h);
        q = rbm_step(q, cfg.drift, cfg.variance, dt, rng);
        span -= dt;
    }
    q
}

/// Samples of `Q(t_k)` from `Q(0) = x0`; one row per grid point.
pub fn simulate_rbm(cfg: &RbmConfig, x0: f64, t_grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    if !(x0.is_finite() && x0 >= 0.0) {
        return Err(Error::arg(format!("initial level must be >= 0, got {x0}")));
    }
    if t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::arg("time grid must be nondecreasing and nonnegative"));
    }
    let h = cfg.step();
    let paths: Vec<Vec<f64>> = (0..cfg.paths as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(cfg.seed, k);
            let (mut q, mut t) = (x0, 0.0);
            t_grid
                .iter()
                .map(|&target| {
                    q = advance(q, target - t, cfg, h, &mut rng);
                    t = target;
                    q
                })
                .collect()
        })
        .collect();
    Ok((0..t_grid.len()).map(|i| paths.iter().map(|p| p[i]).collect()).collect())
}

/// Burn-in used for stationary sampling: `10·max(1, σ²/(2|a|))/|a|`.
pub fn stationary_burn_in(drift: f64, variance: f64) -> f64 {
    let a = drift.abs();
    10.0 * (variance / (2.0 * a)).max(1.0) / a
}

/// Independent draws of `Q` after the stationary burn-in from 0.
pub fn rbm_stationary_samples(cfg: &RbmConfig) -> Result<Vec<f64>> {
    if !(cfg.drift < 0.0) {
        return Err(Error::arg("stationary RBM needs a negative drift"));
    }
    let burn = stationary_burn_in(cfg.drift, cfg.variance);
    Ok(simulate_rbm(cfg, 0.0, &[burn])?.remove(0))
}

/// `P(Q(t) ≤ x | Q(0) = x0)`.
pub fn rbm_marginal_cdf(drift: f64, variance: f64, x0: f64, t: f64, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    if t <= 0.0 {
        return if x >= x0 { 1.0 } else { 0.0 };
    }
    let n = Normal::standard();
    let sd = (variance * t).sqrt();
    let reflected = (2.0 * drift * x / variance).exp() * n.cdf((-x - x0 - drift * t) / sd);
    (n.cdf((x - x0 - drift * t) / sd) - reflected).clamp(0.0, 1.0)
}

/// Estimates of `E[e^{−s Q(T)}]` from `Q(0) = 0`, `T ~ Exp(r)`, with
/// standard errors, one entry per `s`.
pub fn rbm_transform_at_exponential_time(cfg: &RbmConfig, r: f64, s: &[f64]) -> Result<Vec<(f64, f64)>> {
    cfg.validate()?;
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::arg(format!("r must be positive, got {r}")));
    }
    let h = cfg.step();
    let finals: Vec<f64> = (0..cfg.paths as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(cfg.seed, k);
            let e: f64 = Exp1.sample(&mut rng);
            advance(0.0, e / r, cfg, h, &mut rng)
        })
        .collect();
    Ok(s.iter()
        .map(|&s| {
            let v: Vec<f64> = finals.iter().map(|q| (-s * q).exp()).collect();
            stats::mean_and_se(&v)
        })
        .collect())
}

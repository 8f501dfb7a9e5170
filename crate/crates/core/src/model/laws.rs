//! Nonnegative one-dimensional laws used for resampling clocks, service
//! times and rate marginals.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::numeric::quad;

const PROB_SUM_TOL: f64 = 1e-12;

/// Parametric family of a nonnegative random variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum PositiveLaw {
    Exponential {
        rate: f64,
    },
    Deterministic {
        value: f64,
    },
    Gamma {
        shape: f64,
        rate: f64,
    },
    Discrete {
        values: Vec<f64>,
        probs: Vec<f64>,
    },
}

impl PositiveLaw {
    /// Check parameters. With `strictly_positive_mean` a point mass at zero
    /// (or an all-zero discrete law) is rejected.
    pub fn validate(&self, what: &str, strictly_positive_mean: bool) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(format!("{what}: {m}")));
        match self {
            PositiveLaw::Exponential { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return bad(format!("exponential rate must be positive, got {rate}"));
                }
            }
            PositiveLaw::Deterministic { value } => {
                if !(value.is_finite() && *value >= 0.0) {
                    return bad(format!("deterministic value must be nonnegative, got {value}"));
                }
            }
            PositiveLaw::Gamma { shape, rate } => {
                if !(shape.is_finite() && *shape > 0.0 && rate.is_finite() && *rate > 0.0) {
                    return bad(format!("gamma shape and rate must be positive, got ({shape}, {rate})"));
                }
            }
            PositiveLaw::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return bad("discrete law needs equally many values and probs".into());
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return bad("discrete values must be finite and nonnegative".into());
                }
                if probs.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
                    return bad("discrete probabilities must be positive".into());
                }
                let s: f64 = probs.iter().sum();
                if (s - 1.0).abs() > PROB_SUM_TOL {
                    return bad(format!("discrete probabilities sum to {s}, not 1"));
                }
            }
        }
        if strictly_positive_mean && self.mean() <= 0.0 {
            return bad("mean must be positive".into());
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.raw_moment(1)
    }

    pub fn second_moment(&self) -> f64 {
        self.raw_moment(2)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        (self.second_moment() - m * m).max(0.0)
    }

    /// `E[X^k]`.
    pub fn raw_moment(&self, k: u32) -> f64 {
        match self {
            PositiveLaw::Exponential { rate } => (1..=k).map(f64::from).product::<f64>() / rate.powi(k as i32),
            PositiveLaw::Deterministic { value } => value.powi(k as i32),
            PositiveLaw::Gamma { shape, rate } => {
                (0..k).map(|j| shape + f64::from(j)).product::<f64>() / rate.powi(k as i32)
            }
            PositiveLaw::Discrete { values, probs } => {
                values.iter().zip(probs).map(|(v, p)| p * v.powi(k as i32)).sum()
            }
        }
    }

    /// Finite support points with their probabilities, if the law is atomic.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            PositiveLaw::Deterministic { value } => Some(vec![(*value, 1.0)]),
            PositiveLaw::Discrete { values, probs } => {
                Some(values.iter().copied().zip(probs.iter().copied()).collect())
            }
            _ => None,
        }
    }

    /// `P(X > u)`.
    pub fn survival(&self, u: f64) -> f64 {
        if u < 0.0 {
            return 1.0;
        }
        match self {
            PositiveLaw::Exponential { rate } => (-rate * u).exp(),
            PositiveLaw::Gamma { shape, rate } => gamma_ur(*shape, rate * u),
            _ => self
                .atoms()
                .unwrap()
                .iter()
                .filter(|(v, _)| *v > u)
                .map(|(_, p)| p)
                .sum(),
        }
    }

    /// Density for the continuous families.
    pub fn pdf(&self, x: f64) -> Option<f64> {
        match self {
            PositiveLaw::Exponential { rate } => Some(if x < 0.0 { 0.0 } else { rate * (-rate * x).exp() }),
            PositiveLaw::Gamma { shape, rate } => Some(if x <= 0.0 {
                0.0
            } else {
                (shape * rate.ln() + (shape - 1.0) * x.ln() - rate * x - ln_gamma(*shape)).exp()
            }),
            _ => None,
        }
    }

    /// `E[min(X, t)^k]`.
    pub fn min_moment(&self, t: f64, k: u32) -> f64 {
        let tk = t.powi(k as i32);
        match self {
            PositiveLaw::Exponential { rate } => {
                // k * int_0^t u^{k-1} e^{-rate u} du
                gamma_partial(1.0, *rate, t, k) + tk * (-rate * t).exp()
            }
            PositiveLaw::Gamma { shape, rate } => gamma_partial(*shape, *rate, t, k) + tk * gamma_ur(*shape, rate * t),
            _ => self
                .atoms()
                .unwrap()
                .iter()
                .map(|(v, p)| p * v.min(t).powi(k as i32))
                .sum(),
        }
    }

    /// `E[(X - t)^+]`.
    pub fn excess(&self, t: f64) -> f64 {
        match self {
            PositiveLaw::Exponential { rate } => (-rate * t).exp() / rate,
            PositiveLaw::Gamma { shape, rate } => {
                shape / rate * gamma_ur(shape + 1.0, rate * t) - t * gamma_ur(*shape, rate * t)
            }
            _ => self
                .atoms()
                .unwrap()
                .iter()
                .map(|(v, p)| p * (v - t).max(0.0))
                .sum(),
        }
    }

    /// Moment generating function `E[e^{xX}]`, `None` where it diverges.
    pub fn mgf(&self, x: f64) -> Option<f64> {
        self.mgf_minus_one(x).map(|v| v + 1.0)
    }

    /// `E[e^{xX}] - 1`, accurate for small `x`.
    pub fn mgf_minus_one(&self, x: f64) -> Option<f64> {
        match self {
            PositiveLaw::Exponential { rate } => (x < *rate).then(|| x / (rate - x)),
            PositiveLaw::Gamma { shape, rate } => (x < *rate).then(|| (-shape * (-x / rate).ln_1p()).exp_m1()),
            _ => Some(
                self.atoms()
                    .unwrap()
                    .iter()
                    .map(|(v, p)| p * (x * v).exp_m1())
                    .sum(),
            ),
        }
    }

    /// Derivative of the moment generating function, `E[X e^{xX}]`.
    pub fn mgf_derivative(&self, x: f64) -> Option<f64> {
        match self {
            PositiveLaw::Exponential { rate } => (x < *rate).then(|| rate / ((rate - x) * (rate - x))),
            PositiveLaw::Gamma { shape, rate } => {
                (x < *rate).then(|| shape / rate * (rate / (rate - x)).powf(shape + 1.0))
            }
            _ => Some(
                self.atoms()
                    .unwrap()
                    .iter()
                    .map(|(v, p)| p * v * (x * v).exp())
                    .sum(),
            ),
        }
    }

    /// Laplace–Stieltjes transform `E[e^{-sX}]` for complex `s` with `Re s >= 0`.
    pub fn lst(&self, s: Complex64) -> Complex64 {
        match self {
            PositiveLaw::Exponential { rate } => *rate / (*rate + s),
            PositiveLaw::Gamma { shape, rate } => (*rate / (*rate + s)).powf(*shape),
            _ => self
                .atoms()
                .unwrap()
                .iter()
                .map(|(v, p)| (-s * *v).exp() * *p)
                .sum(),
        }
    }

    /// Derivative of the transform, `-E[X e^{-sX}]`, for complex `s`.
    pub fn lst_derivative(&self, s: Complex64) -> Complex64 {
        match self {
            PositiveLaw::Exponential { rate } => -*rate / ((*rate + s) * (*rate + s)),
            PositiveLaw::Gamma { shape, rate } => (*rate / (*rate + s)).powf(shape + 1.0) * (-shape / rate),
            _ => self
                .atoms()
                .unwrap()
                .iter()
                .map(|(v, p)| (-s * *v).exp() * (-p * v))
                .sum(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            PositiveLaw::Exponential { rate } => Exp::new(*rate).unwrap().sample(rng),
            PositiveLaw::Deterministic { value } => *value,
            PositiveLaw::Gamma { shape, rate } => Gamma::new(*shape, 1.0 / rate).unwrap().sample(rng),
            PositiveLaw::Discrete { values, probs } => values[pick(probs, rng.random::<f64>())],
        }
    }

    /// Sample the stationary residual life, with density `P(X > x) / E[X]`.
    ///
    /// Drawn as `U * L` with `U` uniform and `L` from the length-biased law
    /// `x f(x) / E[X]`.
    pub fn sample_residual<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let biased = match self {
            PositiveLaw::Exponential { rate } => Gamma::new(2.0, 1.0 / rate).unwrap().sample(rng),
            PositiveLaw::Gamma { shape, rate } => Gamma::new(shape + 1.0, 1.0 / rate).unwrap().sample(rng),
            PositiveLaw::Deterministic { value } => *value,
            PositiveLaw::Discrete { values, probs } => {
                let weights: Vec<f64> = values.iter().zip(probs).map(|(v, p)| v * p).collect();
                let total: f64 = weights.iter().sum();
                values[pick(&weights, rng.random::<f64>() * total)]
            }
        };
        u * biased
    }

    /// Numerical mass of the residual-life density; 1 for a valid law.
    pub fn residual_density_mass(&self) -> Result<f64> {
        let mean = self.mean();
        let g = |u: f64| self.survival(u) / mean;
        match self.atoms() {
            Some(atoms) => {
                let mut pts: Vec<f64> = atoms.iter().map(|a| a.0).filter(|v| *v > 0.0).collect();
                pts.push(0.0);
                pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                pts.dedup();
                quad::integrate_pieces(g, &pts, 1e-12)
            }
            None => quad::integrate_half_line(g, mean, 1e-12),
        }
    }
}

/// `E[X^k ; X <= t]` for a gamma law.
fn gamma_partial(shape: f64, rate: f64, t: f64, k: u32) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let rising: f64 = (0..k).map(|j| shape + f64::from(j)).product();
    rising / rate.powi(k as i32) * gamma_lr(shape + f64::from(k), rate * t)
}

fn pick(weights: &[f64], target: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Law of the time between resampling epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClockLaw(pub PositiveLaw);

impl ClockLaw {
    pub fn new(law: PositiveLaw) -> Result<Self> {
        law.validate("clock", true)?;
        Ok(ClockLaw(law))
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(PositiveLaw::Exponential { rate })
    }

    pub fn law(&self) -> &PositiveLaw {
        &self.0
    }

    pub fn mean(&self) -> f64 {
        self.0.mean()
    }

    pub fn second_moment(&self) -> f64 {
        self.0.second_moment()
    }

    /// `E[xi^2] / E[xi]`, the factor multiplying rate variances in the
    /// asymptotic flow moments.
    pub fn moment_ratio(&self) -> f64 {
        self.second_moment() / self.mean()
    }
}

/// Service-time law of the M/G/1 model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ServiceLaw(pub PositiveLaw);

impl ServiceLaw {
    pub fn new(law: PositiveLaw) -> Result<Self> {
        law.validate("service", true)?;
        Ok(ServiceLaw(law))
    }

    pub fn law(&self) -> &PositiveLaw {
        &self.0
    }

    /// `sigma(s) = E[e^{-sS}]`.
    pub fn lst(&self, s: f64) -> f64 {
        self.0.lst(Complex64::new(s, 0.0)).re
    }

    pub fn mean(&self) -> f64 {
        self.0.mean()
    }

    pub fn second_moment(&self) -> f64 {
        self.0.second_moment()
    }
}

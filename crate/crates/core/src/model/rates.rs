//! Joint laws of the arrival and service rate pair `(Λ, M)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::laws::PositiveLaw;
use crate::error::{Error, Result};

const PROB_SUM_TOL: f64 = 1e-12;

/// One support point of a finite rate law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub lambda: f64,
    pub mu: f64,
    pub pi: f64,
}

/// Finite-support joint law of `(Λ, M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateLawFinite {
    atoms: Vec<Atom>,
}

impl RateLawFinite {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid("rate law needs at least one atom"));
        }
        for (i, a) in atoms.iter().enumerate() {
            if !(a.lambda.is_finite() && a.lambda >= 0.0) {
                return Err(Error::invalid(format!("atom {i}: lambda must be finite and >= 0, got {}", a.lambda)));
            }
            if !(a.mu.is_finite() && a.mu >= 0.0) {
                return Err(Error::invalid(format!("atom {i}: mu must be finite and >= 0, got {}", a.mu)));
            }
            if !(a.pi.is_finite() && a.pi > 0.0) {
                return Err(Error::invalid(format!("atom {i}: pi must be positive, got {}", a.pi)));
            }
        }
        let s: f64 = atoms.iter().map(|a| a.pi).sum();
        if (s - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::invalid(format!("atom probabilities sum to {s}, not 1")));
        }
        Ok(RateLawFinite { atoms })
    }

    /// Law with the given rate vectors and probabilities.
    pub fn from_vectors(lambda: &[f64], mu: &[f64], pi: &[f64]) -> Result<Self> {
        if lambda.len() != mu.len() || lambda.len() != pi.len() {
            return Err(Error::invalid("rate vectors and probabilities differ in length"));
        }
        Self::new(
            lambda
                .iter()
                .zip(mu)
                .zip(pi)
                .map(|((&lambda, &mu), &pi)| Atom { lambda, mu, pi })
                .collect(),
        )
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn dim(&self) -> usize {
        self.atoms.len()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.lambda).collect()
    }

    pub fn mus(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.mu).collect()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.pi).collect()
    }

    pub fn moments(&self) -> RateMoments {
        let e = |f: &dyn Fn(&Atom) -> f64| self.atoms.iter().map(|a| a.pi * f(a)).sum::<f64>();
        let el = e(&|a| a.lambda);
        let em = e(&|a| a.mu);
        RateMoments {
            mean_lambda: el,
            mean_mu: em,
            var_lambda: e(&|a| (a.lambda - el).powi(2)),
            var_mu: e(&|a| (a.mu - em).powi(2)),
            cov: e(&|a| (a.lambda - el) * (a.mu - em)),
        }
    }

    /// `ρ = πλ / πμ`.
    pub fn rho(&self) -> f64 {
        self.moments().rho()
    }

    pub fn is_stable(&self) -> bool {
        self.rho() < 1.0
    }

    /// Multiply every arrival rate by `c`.
    pub fn scale_arrivals(&self, c: f64) -> Self {
        RateLawFinite {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom { lambda: a.lambda * c, ..*a })
                .collect(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let a = &self.atoms[self.sample_index(rng)];
        (a.lambda, a.mu)
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, a) in self.atoms.iter().enumerate() {
            acc += a.pi;
            if u < acc {
                return i;
            }
        }
        self.atoms.len() - 1
    }
}

/// First and second moments of `(Λ, M)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateMoments {
    pub mean_lambda: f64,
    pub mean_mu: f64,
    pub var_lambda: f64,
    pub var_mu: f64,
    pub cov: f64,
}

impl RateMoments {
    pub fn validate(&self) -> Result<()> {
        let all = [self.mean_lambda, self.mean_mu, self.var_lambda, self.var_mu, self.cov];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("rate moments must be finite"));
        }
        if self.mean_lambda < 0.0 || self.mean_mu < 0.0 {
            return Err(Error::invalid("rate means must be nonnegative"));
        }
        if self.var_lambda < 0.0 || self.var_mu < 0.0 {
            return Err(Error::invalid("rate variances must be nonnegative"));
        }
        let bound = (self.var_lambda * self.var_mu).sqrt();
        if self.cov.abs() > bound * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::invalid(format!("|cov| = {} exceeds sqrt(VarΛ VarM) = {bound}", self.cov.abs())));
        }
        Ok(())
    }

    pub fn rho(&self) -> f64 {
        self.mean_lambda / self.mean_mu
    }

    pub fn second_lambda(&self) -> f64 {
        self.var_lambda + self.mean_lambda * self.mean_lambda
    }

    /// `VarΛ − 2 Cov + VarM`, the variance of `Λ − M`.
    pub fn difference_variance(&self) -> f64 {
        self.var_lambda - 2.0 * self.cov + self.var_mu
    }

    /// Moments after multiplying `Λ` by `c`.
    pub fn scale_arrivals(&self, c: f64) -> Self {
        RateMoments {
            mean_lambda: self.mean_lambda * c,
            var_lambda: self.var_lambda * c * c,
            cov: self.cov * c,
            ..*self
        }
    }

    /// Moments after scaling `Λ` so that `EΛ = EM`.
    pub fn critical(&self) -> Self {
        if self.mean_lambda == 0.0 {
            return *self;
        }
        self.scale_arrivals(self.mean_mu / self.mean_lambda)
    }
}

/// Joint law of `(Λ, M)` with possibly uncountable support.
#[derive(Debug, Clone, PartialEq)]
pub enum RateLawGeneral {
    Finite(RateLawFinite),
    /// `Λ` and `M` independent with the given marginals.
    Independent { arrival: PositiveLaw, service: PositiveLaw },
}

impl RateLawGeneral {
    pub fn independent(arrival: PositiveLaw, service: PositiveLaw) -> Result<Self> {
        arrival.validate("arrival rate law", false)?;
        service.validate("service rate law", false)?;
        Ok(RateLawGeneral::Independent { arrival, service })
    }

    pub fn moments(&self) -> RateMoments {
        match self {
            RateLawGeneral::Finite(f) => f.moments(),
            RateLawGeneral::Independent { arrival, service } => RateMoments {
                mean_lambda: arrival.mean(),
                mean_mu: service.mean(),
                var_lambda: arrival.variance(),
                var_mu: service.variance(),
                cov: 0.0,
            },
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        match self {
            RateLawGeneral::Finite(f) => f.sample(rng),
            RateLawGeneral::Independent { arrival, service } => (arrival.sample(rng), service.sample(rng)),
        }
    }

    /// The law as a finite atom list when its support is finite.
    pub fn as_finite(&self) -> Option<RateLawFinite> {
        match self {
            RateLawGeneral::Finite(f) => Some(f.clone()),
            RateLawGeneral::Independent { arrival, service } => {
                let (a, s) = (arrival.atoms()?, service.atoms()?);
                let atoms = a
                    .iter()
                    .flat_map(|&(l, p)| s.iter().map(move |&(m, r)| Atom { lambda: l, mu: m, pi: p * r }))
                    .collect();
                // product probabilities may miss 1 by rounding
                let mut law = RateLawFinite { atoms };
                let total: f64 = law.atoms.iter().map(|x| x.pi).sum();
                for x in &mut law.atoms {
                    x.pi /= total;
                }
                Some(law)
            }
        }
    }

    pub fn scale_arrivals(&self, c: f64) -> Self {
        match self {
            RateLawGeneral::Finite(f) => RateLawGeneral::Finite(f.scale_arrivals(c)),
            RateLawGeneral::Independent { arrival, service } => RateLawGeneral::Independent {
                arrival: scale_law(arrival, c),
                service: service.clone(),
            },
        }
    }
}

/// Law of `cX`.
pub fn scale_law(law: &PositiveLaw, c: f64) -> PositiveLaw {
    match law {
        PositiveLaw::Exponential { rate } => PositiveLaw::Exponential { rate: rate / c },
        PositiveLaw::Deterministic { value } => PositiveLaw::Deterministic { value: value * c },
        PositiveLaw::Gamma { shape, rate } => PositiveLaw::Gamma { shape: *shape, rate: rate / c },
        PositiveLaw::Discrete { values, probs } => PositiveLaw::Discrete {
            values: values.iter().map(|v| v * c).collect(),
            probs: probs.clone(),
        },
    }
}

//! Model-spec files and the validated model descriptors built from them.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::generator::Generator;
use super::laws::{ClockLaw, PositiveLaw, ServiceLaw};
use super::rates::{Atom, RateLawFinite, RateLawGeneral, RateMoments};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    ResampledFinite,
    MmModulated,
    ResampledGeneral,
    EndogenousMg1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomEntry {
    pub lambda: f64,
    pub mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<f64>,
}

/// On-disk JSON layout of a model. Which fields are required depends on `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<AtomEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock: Option<PositiveLaw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service: Option<PositiveLaw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrival_law: Option<PositiveLaw>,
    /// Marginal law of `M` when `(Λ, M)` are independent in a general model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service_rate_law: Option<PositiveLaw>,
}

impl ModelFile {
    fn empty(kind: ModelKind) -> Self {
        ModelFile {
            kind,
            atoms: None,
            q: None,
            generator: None,
            clock: None,
            service: None,
            arrival_law: None,
            service_rate_law: None,
        }
    }

    fn present(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.atoms.is_some() {
            out.push("atoms");
        }
        if self.q.is_some() {
            out.push("q");
        }
        if self.generator.is_some() {
            out.push("generator");
        }
        if self.clock.is_some() {
            out.push("clock");
        }
        if self.service.is_some() {
            out.push("service");
        }
        if self.arrival_law.is_some() {
            out.push("arrival_law");
        }
        if self.service_rate_law.is_some() {
            out.push("service_rate_law");
        }
        out
    }

    fn only(&self, allowed: &[&str]) -> Result<()> {
        for f in self.present() {
            if !allowed.contains(&f) {
                return Err(Error::invalid(format!("field `{f}` is not used by kind {:?}", self.kind)));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<ModelDescriptor> {
        match self.kind {
            ModelKind::ResampledFinite => {
                self.only(&["atoms", "q"])?;
                let law = finite_law(required(&self.atoms, "atoms")?)?;
                let q = *required(&self.q, "q")?;
                Ok(ModelDescriptor::Resampled(ResampledSpec::new(law, q)?))
            }
            ModelKind::MmModulated => {
                self.only(&["atoms", "generator"])?;
                let atoms = required(&self.atoms, "atoms")?;
                if atoms.iter().any(|a| a.pi.is_some()) {
                    return Err(Error::invalid("mm_modulated atoms must not carry pi; it is derived from the generator"));
                }
                let gen = Generator::new(required(&self.generator, "generator")?.clone())?;
                let lambda: Vec<f64> = atoms.iter().map(|a| a.lambda).collect();
                let mu: Vec<f64> = atoms.iter().map(|a| a.mu).collect();
                Ok(ModelDescriptor::Modulated(MMQueueSpec::new(gen, lambda, mu)?))
            }
            ModelKind::ResampledGeneral => {
                self.only(&["atoms", "clock", "arrival_law", "service_rate_law"])?;
                let clock = ClockLaw::new(required(&self.clock, "clock")?.clone())?;
                let law = match (&self.atoms, &self.arrival_law, &self.service_rate_law) {
                    (Some(atoms), None, None) => RateLawGeneral::Finite(finite_law(atoms)?),
                    (None, Some(a), Some(s)) => RateLawGeneral::independent(a.clone(), s.clone())?,
                    _ => {
                        return Err(Error::invalid(
                            "resampled_general needs either `atoms` or both `arrival_law` and `service_rate_law`",
                        ))
                    }
                };
                Ok(ModelDescriptor::General(GeneralResampledSpec::new(law, clock)?))
            }
            ModelKind::EndogenousMg1 => {
                self.only(&["arrival_law", "service"])?;
                let arrival = required(&self.arrival_law, "arrival_law")?.clone();
                let service = ServiceLaw::new(required(&self.service, "service")?.clone())?;
                Ok(ModelDescriptor::Endogenous(EndogenousSpec::new(arrival, service)?))
            }
        }
    }
}

fn required<'a, T>(v: &'a Option<T>, name: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| Error::invalid(format!("missing required field `{name}`")))
}

fn finite_law(atoms: &[AtomEntry]) -> Result<RateLawFinite> {
    let mut out = Vec::with_capacity(atoms.len());
    for (i, a) in atoms.iter().enumerate() {
        let pi = a.pi.ok_or_else(|| Error::invalid(format!("atom {i} is missing `pi`")))?;
        out.push(Atom { lambda: a.lambda, mu: a.mu, pi });
    }
    RateLawFinite::new(out)
}

fn atom_entries(law: &RateLawFinite, with_pi: bool) -> Vec<AtomEntry> {
    law.atoms()
        .iter()
        .map(|a| AtomEntry { lambda: a.lambda, mu: a.mu, pi: with_pi.then_some(a.pi) })
        .collect()
}

/// Markov-modulated M/M/1 queue: generator plus per-state rates.
#[derive(Debug, Clone, PartialEq)]
pub struct MMQueueSpec {
    generator: Generator,
    lambda: Vec<f64>,
    mu: Vec<f64>,
}

impl MMQueueSpec {
    pub fn new(generator: Generator, lambda: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        let d = generator.dim();
        if lambda.len() != d || mu.len() != d {
            return Err(Error::invalid(format!(
                "{} arrival and {} service rates for a {d}-state generator",
                lambda.len(),
                mu.len()
            )));
        }
        for (i, (&l, &m)) in lambda.iter().zip(&mu).enumerate() {
            if !(l.is_finite() && l >= 0.0 && m.is_finite() && m >= 0.0) {
                return Err(Error::invalid(format!("state {i}: rates must be finite and >= 0")));
            }
        }
        let spec = MMQueueSpec { generator, lambda, mu };
        if spec.mean_mu() <= 0.0 {
            return Err(Error::invalid("mean service rate πμ must be positive"));
        }
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.generator.dim()
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn pi(&self) -> &[f64] {
        self.generator.stationary()
    }

    pub fn mean_lambda(&self) -> f64 {
        self.pi().iter().zip(&self.lambda).map(|(p, l)| p * l).sum()
    }

    pub fn mean_mu(&self) -> f64 {
        self.pi().iter().zip(&self.mu).map(|(p, m)| p * m).sum()
    }

    pub fn rho(&self) -> f64 {
        self.mean_lambda() / self.mean_mu()
    }

    pub fn is_stable(&self) -> bool {
        self.rho() < 1.0
    }

    pub fn tau(&self) -> f64 {
        self.generator.tau()
    }

    /// The same model with every arrival rate multiplied by `c`.
    pub fn scale_arrivals(&self, c: f64) -> Self {
        MMQueueSpec {
            generator: self.generator.clone(),
            lambda: self.lambda.iter().map(|l| l * c).collect(),
            mu: self.mu.clone(),
        }
    }

    /// Arrivals scaled so that `ρ = 1`.
    pub fn critical(&self) -> Self {
        let rho = self.rho();
        if rho == 0.0 {
            return self.clone();
        }
        self.scale_arrivals(1.0 / rho)
    }
}

/// Resampled M/M/1 queue with finite rate law and exponential clock rate `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampledSpec {
    law: RateLawFinite,
    q: f64,
    modulated: MMQueueSpec,
}

impl ResampledSpec {
    pub fn new(law: RateLawFinite, q: f64) -> Result<Self> {
        let generator = Generator::resampling(&law.probs(), q)?;
        let modulated = MMQueueSpec::new(generator, law.lambdas(), law.mus())?;
        Ok(ResampledSpec { law, q, modulated })
    }

    pub fn law(&self) -> &RateLawFinite {
        &self.law
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Equivalent modulated model with generator `q 1 π − q I`.
    pub fn modulated(&self) -> &MMQueueSpec {
        &self.modulated
    }

    pub fn rho(&self) -> f64 {
        self.law.rho()
    }
}

/// Resampled queue with general rate law and renewal clock.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralResampledSpec {
    pub law: RateLawGeneral,
    pub clock: ClockLaw,
}

impl GeneralResampledSpec {
    pub fn new(law: RateLawGeneral, clock: ClockLaw) -> Result<Self> {
        let m = law.moments();
        m.validate()?;
        if m.mean_mu <= 0.0 {
            return Err(Error::invalid("EM must be positive"));
        }
        Ok(GeneralResampledSpec { law, clock })
    }

    pub fn moments(&self) -> RateMoments {
        self.law.moments()
    }

    pub fn rho(&self) -> f64 {
        self.moments().rho()
    }
}

/// M/G/1 queue whose arrival rate is resampled at each service completion.
#[derive(Debug, Clone, PartialEq)]
pub struct EndogenousSpec {
    pub arrival: PositiveLaw,
    pub service: ServiceLaw,
}

impl EndogenousSpec {
    pub fn new(arrival: PositiveLaw, service: ServiceLaw) -> Result<Self> {
        arrival.validate("arrival_law", false)?;
        Ok(EndogenousSpec { arrival, service })
    }

    /// `EN = EΛ ES`.
    pub fn rho(&self) -> f64 {
        self.arrival.mean() * self.service.mean()
    }

    pub fn is_stable(&self) -> bool {
        self.rho() < 1.0
    }
}

/// Any validated model.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelDescriptor {
    Modulated(MMQueueSpec),
    Resampled(ResampledSpec),
    General(GeneralResampledSpec),
    Endogenous(EndogenousSpec),
}

impl ModelDescriptor {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelDescriptor::Modulated(_) => ModelKind::MmModulated,
            ModelDescriptor::Resampled(_) => ModelKind::ResampledFinite,
            ModelDescriptor::General(_) => ModelKind::ResampledGeneral,
            ModelDescriptor::Endogenous(_) => ModelKind::EndogenousMg1,
        }
    }

    pub fn rho(&self) -> f64 {
        match self {
            ModelDescriptor::Modulated(m) => m.rho(),
            ModelDescriptor::Resampled(r) => r.rho(),
            ModelDescriptor::General(g) => g.rho(),
            ModelDescriptor::Endogenous(e) => e.rho(),
        }
    }

    pub fn is_stable(&self) -> bool {
        self.rho() < 1.0
    }

    /// The modulated-queue view, available for finite resampled and modulated models.
    pub fn as_modulated(&self) -> Option<&MMQueueSpec> {
        match self {
            ModelDescriptor::Modulated(m) => Some(m),
            ModelDescriptor::Resampled(r) => Some(r.modulated()),
            _ => None,
        }
    }

    pub fn to_file(&self) -> ModelFile {
        match self {
            ModelDescriptor::Modulated(m) => ModelFile {
                atoms: Some(
                    m.lambda
                        .iter()
                        .zip(&m.mu)
                        .map(|(&lambda, &mu)| AtomEntry { lambda, mu, pi: None })
                        .collect(),
                ),
                generator: Some(m.generator.rates().to_vec()),
                ..ModelFile::empty(ModelKind::MmModulated)
            },
            ModelDescriptor::Resampled(r) => ModelFile {
                atoms: Some(atom_entries(&r.law, true)),
                q: Some(r.q),
                ..ModelFile::empty(ModelKind::ResampledFinite)
            },
            ModelDescriptor::General(g) => {
                let mut f = ModelFile { clock: Some(g.clock.0.clone()), ..ModelFile::empty(ModelKind::ResampledGeneral) };
                match &g.law {
                    RateLawGeneral::Finite(law) => f.atoms = Some(atom_entries(law, true)),
                    RateLawGeneral::Independent { arrival, service } => {
                        f.arrival_law = Some(arrival.clone());
                        f.service_rate_law = Some(service.clone());
                    }
                }
                f
            }
            ModelDescriptor::Endogenous(e) => ModelFile {
                arrival_law: Some(e.arrival.clone()),
                service: Some(e.service.0.clone()),
                ..ModelFile::empty(ModelKind::EndogenousMg1)
            },
        }
    }

    /// Canonical JSON text of the model.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("model files always serialize")
    }
}

pub fn parse_model_spec(text: &str) -> Result<ModelDescriptor> {
    let file: ModelFile = serde_json::from_str(text)?;
    file.validate()
}

pub fn load_model_spec(path: impl AsRef<Path>) -> Result<ModelDescriptor> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    parse_model_spec(&text)
}

//! M/G/1 queue whose arrival rate is redrawn at every service completion:
//! the embedded chain `Q_{n+1} = (Q_n − 1)⁺ + N_{n+1}`, its stationary PGF
//! and the transform of `Q_G` at a geometric time `G`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{EndogenousSpec, PositiveLaw, ServiceLaw};
use crate::numeric::quad::integrate_half_line;

pub use crate::inversion::invert_pgf;

const QUAD_TOL: f64 = 1e-13;
/// Below this `|1 − z|` the stationary PGF uses its expansion at 1.
const EXPANSION_RADIUS: f64 = 1e-6;
/// Half-width of the window around `z₀(r)` bridged by interpolation.
const ROOT_GAP: f64 = 1e-5;

/// Offspring law `N` (arrivals during one service) of the embedded chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddedChain {
    #[serde(skip)]
    pub arrival: PositiveLaw,
    #[serde(skip)]
    pub service: ServiceLaw,
    /// `EN = EΛ ES`.
    pub mean_offspring: f64,
    /// `ν''(1) = E[Λ²] E[S²]`.
    pub nu_dd1: f64,
}

impl EmbeddedChain {
    pub fn new(spec: &EndogenousSpec) -> Self {
        let (a, s) = (&spec.arrival, &spec.service);
        EmbeddedChain {
            arrival: a.clone(),
            service: s.clone(),
            mean_offspring: a.mean() * s.mean(),
            nu_dd1: a.second_moment() * s.second_moment(),
        }
    }

    pub fn is_stable(&self) -> bool {
        self.mean_offspring < 1.0
    }

    /// Expectation over whichever of `Λ`, `S` is atomic: `with_service(λ)`
    /// averages over `S` given `Λ = λ`, `with_arrival(s)` over `Λ` given `S = s`.
    fn mix(&self, with_service: impl Fn(f64) -> Complex64, with_arrival: impl Fn(f64) -> Complex64) -> Result<Complex64> {
        if let Some(atoms) = self.arrival.atoms() {
            return Ok(atoms.iter().map(|&(l, p)| with_service(l) * p).sum());
        }
        if let Some(atoms) = self.service.law().atoms() {
            return Ok(atoms.iter().map(|&(s, p)| with_arrival(s) * p).sum());
        }
        let law = &self.arrival;
        integrate_half_line(|l| with_service(l) * law.pdf(l).unwrap_or(0.0), law.mean(), QUAD_TOL)
    }

    /// `ν(z) = E σ(Λ(1−z))`.
    pub fn nu_c(&self, z: Complex64) -> Result<Complex64> {
        let w = 1.0 - z;
        let service = self.service.law();
        self.mix(|l| service.lst(w * l), |s| self.arrival.lst(w * s))
    }

    pub fn nu(&self, z: f64) -> Result<f64> {
        Ok(self.nu_c(Complex64::new(z, 0.0))?.re)
    }

    /// `ν'(z) = E[ΛS e^{−ΛS(1−z)}]`.
    pub fn nu_prime(&self, z: f64) -> Result<f64> {
        let w = Complex64::new(1.0 - z, 0.0);
        let service = self.service.law();
        let v = self.mix(|l| -service.lst_derivative(w * l) * l, |s| -self.arrival.lst_derivative(w * s) * s)?;
        Ok(v.re)
    }

    /// `κ(z) = ν(z)(1−z)(1−EN)/(ν(z)−z)` for complex `|z| ≤ 1`.
    pub fn stationary_pgf_c(&self, z: Complex64) -> Result<Complex64> {
        if !self.is_stable() {
            return Err(Error::Unstable { rho: self.mean_offspring });
        }
        let nu = self.nu_c(z)?;
        let w = 1.0 - z;
        let slack = 1.0 - self.mean_offspring;
        let ratio = if w.norm() < EXPANSION_RADIUS {
            // (ν − z)/(1 − z) = (1 − EN) + ½ν''(1)(1 − z) + O((1−z)²)
            slack + w * (0.5 * self.nu_dd1)
        } else {
            (nu - z) / w
        };
        Ok(nu * slack / ratio)
    }

    pub fn stationary_pgf(&self, z: f64) -> Result<f64> {
        Ok(self.stationary_pgf_c(Complex64::new(z, 0.0))?.re)
    }

    /// `P(Q = n)`, `n = 0..=n_max`, for the stationary embedded chain.
    pub fn stationary_distribution(&self, n_max: usize) -> Result<Vec<f64>> {
        if !self.is_stable() {
            return Err(Error::Unstable { rho: self.mean_offspring });
        }
        let failure = std::cell::RefCell::new(None);
        let p = invert_pgf(
            |z| match self.stationary_pgf_c(z) {
                Ok(v) => v,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    Complex64::new(f64::NAN, 0.0)
                }
            },
            n_max,
        );
        match failure.into_inner() {
            Some(e) => Err(e),
            None => p,
        }
    }

    /// Unique root of `z = (1−r)ν(z)` in `(0, 1)`.
    pub fn z0(&self, r: f64) -> Result<f64> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::arg(format!("r must lie in (0, 1), got {r}")));
        }
        let h = |z: f64| -> Result<f64> { Ok(z - (1.0 - r) * self.nu(z)?) };
        let (mut lo, mut hi) = (0.0, 1.0);
        if !(h(lo)? < 0.0 && h(hi)? > 0.0) {
            return Err(Error::numerical(format!("no sign change of z − (1−r)ν(z) on [0, 1] for r = {r}")));
        }
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if h(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut z = 0.5 * (lo + hi);
        for _ in 0..2 {
            let d = 1.0 - (1.0 - r) * self.nu_prime(z)?;
            if d > 0.0 {
                let next = z - h(z)? / d;
                if next > 0.0 && next < 1.0 {
                    z = next;
                }
            }
        }
        Ok(z)
    }

    pub fn geometric_time(&self, r: f64, initial: InitialLaw) -> Result<GeometricTimeTransform<'_>> {
        GeometricTimeTransform::new(self, r, initial)
    }
}

/// Law of `Q₀` through its PGF.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum InitialLaw {
    /// `Q₀ = 0`.
    #[default]
    Empty,
    PointMass { n: u32 },
    /// `P(Q₀ = n) = (1−p) pⁿ`.
    Geometric { p: f64 },
    Stationary,
}

impl InitialLaw {
    pub fn pgf(&self, chain: &EmbeddedChain, z: f64) -> Result<f64> {
        match *self {
            InitialLaw::Empty => Ok(1.0),
            InitialLaw::PointMass { n } => Ok(z.powi(n as i32)),
            InitialLaw::Geometric { p } => {
                if !(0.0..1.0).contains(&p) {
                    return Err(Error::arg(format!("geometric parameter must lie in [0, 1), got {p}")));
                }
                Ok((1.0 - p) / (1.0 - p * z))
            }
            InitialLaw::Stationary => chain.stationary_pgf(z),
        }
    }
}

/// `K(r, z) = Σₙ (1−r)ⁿ r E[z^{Qₙ}]` for one `r`.
#[derive(Debug, Clone)]
pub struct GeometricTimeTransform<'a> {
    chain: &'a EmbeddedChain,
    initial: InitialLaw,
    pub r: f64,
    pub z0: f64,
    /// `r κ₀(z₀)/(1 − z₀)`.
    boundary: f64,
}

impl<'a> GeometricTimeTransform<'a> {
    pub fn new(chain: &'a EmbeddedChain, r: f64, initial: InitialLaw) -> Result<Self> {
        let z0 = chain.z0(r)?;
        let boundary = r * initial.pgf(chain, z0)? / (1.0 - z0);
        Ok(GeometricTimeTransform { chain, initial, r, z0, boundary })
    }

    fn direct(&self, z: f64) -> Result<f64> {
        let nu = self.chain.nu(z)?;
        let denom = z - (1.0 - self.r) * nu;
        let k0 = self.initial.pgf(self.chain, z)?;
        Ok((self.r * z * k0 - (1.0 - self.r) * (1.0 - z) * nu * self.boundary) / denom)
    }

    /// `K(r, z)` for `z ∈ [0, 1]`, bridging the removable point `z₀(r)`.
    pub fn eval(&self, z: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::arg(format!("z must lie in [0, 1], got {z}")));
        }
        if (z - self.z0).abs() >= ROOT_GAP {
            return self.direct(z);
        }
        let (a, b) = ((self.z0 - 2.0 * ROOT_GAP).max(0.0), (self.z0 + 2.0 * ROOT_GAP).min(1.0));
        let (fa, fb) = (self.direct(a)?, self.direct(b)?);
        Ok(fa + (fb - fa) * (z - a) / (b - a))
    }
}

pub fn offspring_pgf(arrival: &PositiveLaw, service: &ServiceLaw, z: f64) -> Result<f64> {
    let spec = EndogenousSpec::new(arrival.clone(), service.clone())?;
    EmbeddedChain::new(&spec).nu(z)
}

pub fn stationary_pgf(chain: &EmbeddedChain, z: f64) -> Result<f64> {
    chain.stationary_pgf(z)
}

pub fn geometric_time_transform(chain: &EmbeddedChain, r: f64, z: f64, initial: InitialLaw) -> Result<f64> {
    chain.geometric_time(r, initial)?.eval(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(arrival: PositiveLaw, service: PositiveLaw) -> EmbeddedChain {
        EmbeddedChain::new(&EndogenousSpec::new(arrival, ServiceLaw::new(service).unwrap()).unwrap())
    }

    fn mm1(lambda: f64, mu: f64) -> EmbeddedChain {
        chain(PositiveLaw::Deterministic { value: lambda }, PositiveLaw::Exponential { rate: mu })
    }

    #[test]
    fn offspring_examples() {
        let c = mm1(0.8, 1.0);
        for &z in &[0.0, 0.3, 0.9, 1.0] {
            assert!((c.nu(z).unwrap() - 1.0 / (1.0 + 0.8 * (1.0 - z))).abs() < 1e-15);
        }
        let l = 0.4;
        let c = chain(
            PositiveLaw::Discrete { values: vec![0.0, 2.0 * l], probs: vec![0.5, 0.5] },
            PositiveLaw::Deterministic { value: 1.0 },
        );
        for &z in &[0.0, 0.5, 0.99] {
            let hand = 0.5 + 0.5 * (-2.0 * l * (1.0 - z)).exp();
            assert!((c.nu(z).unwrap() - hand).abs() < 1e-15);
        }
    }

    #[test]
    fn quadrature_route_for_two_continuous_laws() {
        // Λ ~ Exp(a), S ~ Exp(b): ν(z) = E[b/(b + Λ(1−z))]
        let (a, b) = (2.0, 3.0);
        let c = chain(PositiveLaw::Exponential { rate: a }, PositiveLaw::Exponential { rate: b });
        let s_atomic = chain(PositiveLaw::Exponential { rate: a }, PositiveLaw::Deterministic { value: 1.0 / b });
        for &z in &[0.0, 0.4, 0.95] {
            let w = 1.0 - z;
            // ∫ b/(b+λw) a e^{−aλ} dλ = (ab/w) e^{ab/w} E₁(ab/w)
            let x = a * b / w;
            let e1 = crate::numeric::quad::integrate_half_line(|t| (-t).exp() / (x + t), 1.0, 1e-15).unwrap();
            let hand = x * e1;
            assert!((c.nu(z).unwrap() - hand).abs() < 1e-11, "{z}");
            // deterministic S: E e^{−Λ w/b} = a/(a + w/b)
            assert!((s_atomic.nu(z).unwrap() - a / (a + w / b)).abs() < 1e-15);
        }
        let d = 1e-6;
        let fd = (c.nu(1.0).unwrap() - c.nu(1.0 - d).unwrap()) / d;
        assert!((fd - c.mean_offspring).abs() < 1e-5);
        assert!((c.nu_prime(0.5).unwrap() - (c.nu(0.5 + d).unwrap() - c.nu(0.5 - d).unwrap()) / (2.0 * d)).abs() < 1e-8);
    }

    #[test]
    fn mm1_stationary_is_geometric() {
        let c = mm1(0.5, 1.0);
        for &z in &[0.0, 0.2, 0.7, 1.0 - 1e-8, 1.0] {
            let v = c.stationary_pgf(z).unwrap();
            assert!((v - 0.5 / (1.0 - 0.5 * z)).abs() < 1e-10, "{z}");
        }
        let p = c.stationary_distribution(40).unwrap();
        for (n, x) in p.iter().enumerate() {
            assert!((x - 0.5f64.powi(n as i32 + 1)).abs() < 1e-7);
        }
        assert!(matches!(mm1(1.2, 1.0).stationary_pgf(0.5), Err(Error::Unstable { .. })));
    }

    #[test]
    fn no_arrivals_transform_is_one() {
        let c = chain(PositiveLaw::Deterministic { value: 0.0 }, PositiveLaw::Exponential { rate: 1.0 });
        for &r in &[0.1, 0.5, 0.9] {
            let k = c.geometric_time(r, InitialLaw::Empty).unwrap();
            assert!((k.z0 - (1.0 - r)).abs() < 1e-12);
            for &z in &[0.05, 0.3, 1.0 - r, 0.8, 1.0] {
                assert!((k.eval(z).unwrap() - 1.0).abs() < 1e-8, "{r} {z}");
            }
        }
    }

    #[test]
    fn root_and_removable_point() {
        let c = mm1(0.8, 1.0);
        let k = c.geometric_time(0.3, InitialLaw::Empty).unwrap();
        assert!((k.z0 - 0.7 * c.nu(k.z0).unwrap()).abs() < 1e-12);
        let at = k.eval(k.z0).unwrap();
        let left = k.eval(k.z0 - 3e-5).unwrap();
        let right = k.eval(k.z0 + 3e-5).unwrap();
        assert!((at - 0.5 * (left + right)).abs() < 1e-6);
        assert!((k.eval(1.0).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn stationary_start_is_fixed_point() {
        let c = chain(
            PositiveLaw::Discrete { values: vec![0.2, 1.4], probs: vec![0.5, 0.5] },
            PositiveLaw::Gamma { shape: 2.0, rate: 2.0 },
        );
        for &r in &[0.05, 0.4, 0.9] {
            let k = c.geometric_time(r, InitialLaw::Stationary).unwrap();
            for &z in &[0.1, 0.5, 0.8, 0.99] {
                let (a, b) = (k.eval(z).unwrap(), c.stationary_pgf(z).unwrap());
                assert!((a - b).abs() < 1e-8, "{r} {z}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn one_step_from_point_mass() {
        // r → 1 weights Q₀ only; K(r,z) − r κ₀(z) = O(1−r)
        let c = mm1(0.6, 1.0);
        let k = c.geometric_time(1.0 - 1e-7, InitialLaw::PointMass { n: 3 }).unwrap();
        assert!((k.eval(0.5).unwrap() - 0.125).abs() < 1e-5);
    }
}

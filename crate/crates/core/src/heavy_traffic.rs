//! Heavy-traffic limits: exponential laws for the scaled stationary queue
//! and reflected Brownian motion parameters.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ClockLaw, EndogenousSpec, MMQueueSpec, RateMoments};
use crate::numeric::linalg::det_lu;
use crate::numeric::Jet;

/// Step of the finite-difference check on `α''(1)`.
pub const FD_STEP: f64 = 1e-4;
/// Relative disagreement above which the finite-difference check reports.
pub const FD_DIAGNOSTIC_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HtKind {
    Exponential,
    Rbm,
}

/// Which limit result produced an approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Generic modulated queue, via the second derivative of `det A(z)`.
    ModulatedDeterminant,
    /// Resampling at exponential epochs, closed-form variance.
    ResampledClosedForm,
    /// Renewal resampling, reflected Brownian motion.
    RenewalRbm,
    /// M/G/1 with arrival rate resampled at service completions.
    EndogenousMg1,
}

/// How arrival rates are treated before applying a limit formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    /// Scale arrivals uniformly to load 1 first.
    #[default]
    Critical,
    /// Plug the moments in as given (the usual approximation at a fixed load).
    AsGiven,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HtApprox {
    pub kind: HtKind,
    /// Mean of the limiting exponential law; for an RBM, its stationary mean.
    pub mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    pub provenance: Provenance,
    pub scaling: Scaling,
    /// Factor applied to every arrival rate before evaluation.
    pub arrival_scale: f64,
}

impl HtApprox {
    fn exponential(mean: f64, provenance: Provenance, scaling: Scaling, arrival_scale: f64) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::numerical(format!("heavy-traffic mean {mean} is not positive")));
        }
        Ok(HtApprox { kind: HtKind::Exponential, mean, drift: None, variance: None, provenance, scaling, arrival_scale })
    }

    /// `P(Q > n) ≈ exp(−n(1−ρ)/m)` for this approximation.
    pub fn tail_curve(&self, rho: f64, n_max: usize) -> Result<Vec<f64>> {
        exp_tail_curve(self.mean, rho, n_max)
    }
}

/// Result of the determinant route for a modulated queue.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulatedHt {
    pub approx: HtApprox,
    /// `α''(1)` at the critical model from exact differentiation.
    pub alpha_dd: f64,
    /// Same quantity from central differences with one Richardson level.
    pub alpha_dd_fd: f64,
    pub tau: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// `(α(1), α'(1), α''(1))` of `α(z) = det A(z)` by forward-mode
/// differentiation of `p(z) = det(z A(z)) = z^d α(z)`, whose entries are
/// the polynomials `δ_ij(λ_i z² − (λ_i+μ_i) z + μ_i) + z q_ji`.
pub fn alpha_derivatives(spec: &MMQueueSpec) -> (f64, f64, f64) {
    let d = spec.dim();
    let z = Jet::variable(1.0);
    let q = spec.generator().rates();
    let (lambda, mu) = (spec.lambda(), spec.mu());
    let rows: Vec<Vec<Jet>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let mut e = z.scale(q[j][i]);
                    if i == j {
                        e = e + (z * z).scale(lambda[i]) - z.scale(lambda[i] + mu[i]) + Jet::constant(mu[i]);
                    }
                    e
                })
                .collect()
        })
        .collect();
    let p = det_lu(rows);
    let df = d as f64;
    // α = z^{-d} p at z = 1
    let a0 = p.v;
    let a1 = p.d1 - df * p.v;
    let a2 = p.d2 - 2.0 * df * p.d1 + df * (df + 1.0) * p.v;
    (a0, a1, a2)
}

fn alpha_value(spec: &MMQueueSpec, z: f64) -> f64 {
    let d = spec.dim();
    let q = spec.generator().rates();
    let rows = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let diag = if i == j { spec.lambda()[i] * (z - 1.0) + spec.mu()[i] * (1.0 / z - 1.0) } else { 0.0 };
                    diag + q[j][i]
                })
                .collect()
        })
        .collect();
    det_lu(rows)
}

/// Central second difference of `α` at 1 with one Richardson level.
pub fn alpha_dd_finite_difference(spec: &MMQueueSpec, h: f64) -> f64 {
    let a1 = alpha_value(spec, 1.0);
    let second = |h: f64| (alpha_value(spec, 1.0 + h) - 2.0 * a1 + alpha_value(spec, 1.0 - h)) / (h * h);
    (4.0 * second(h / 2.0) - second(h)) / 3.0
}

/// `α''(1)` for the model with arrivals scaled to load `rho`.
pub fn alpha_dd_at_load(spec: &MMQueueSpec, rho: f64) -> f64 {
    let scaled = spec.scale_arrivals(rho / spec.rho());
    alpha_derivatives(&scaled).2
}

/// Exponential limit of `(1−ρ)Q` for a Markov-modulated M/M/1 queue:
/// mean `α''(1) / (2 τ πμ)` at the critically loaded model.
pub fn ht_mean_modulated(spec: &MMQueueSpec) -> Result<ModulatedHt> {
    let tau = spec.tau();
    if tau.abs() < 1e-12 {
        return Err(Error::numerical(format!("|τ| = {:e} is too small; is the chain reducible?", tau.abs())));
    }
    let rho = spec.rho();
    if rho <= 0.0 {
        return Err(Error::arg("heavy-traffic scaling needs a positive arrival rate"));
    }
    let critical = spec.critical();
    let (_, _, alpha_dd) = alpha_derivatives(&critical);
    let alpha_dd_fd = alpha_dd_finite_difference(&critical, FD_STEP);
    let rel = (alpha_dd - alpha_dd_fd).abs() / alpha_dd.abs().max(f64::MIN_POSITIVE);
    let diagnostic = (rel > FD_DIAGNOSTIC_TOL).then(|| {
        format!("finite-difference check of α''(1) disagrees by {rel:e} relative ({alpha_dd} vs {alpha_dd_fd})")
    });
    let mean = alpha_dd / (2.0 * tau * critical.mean_mu());
    let approx = HtApprox::exponential(mean, Provenance::ModulatedDeterminant, Scaling::Critical, 1.0 / rho)?;
    Ok(ModulatedHt { approx, alpha_dd, alpha_dd_fd, tau, diagnostic })
}

fn scaled(m: &RateMoments, scaling: Scaling) -> (RateMoments, f64) {
    match scaling {
        Scaling::AsGiven => (*m, 1.0),
        Scaling::Critical if m.mean_lambda > 0.0 => (m.critical(), m.mean_mu / m.mean_lambda),
        Scaling::Critical => (*m, 1.0),
    }
}

/// `σ² = (VarΛ − 2Cov + VarM)·ratio + 2EM`.
fn diffusion_variance(m: &RateMoments, ratio: f64) -> f64 {
    m.difference_variance() * ratio + 2.0 * m.mean_mu
}

/// Exponential limit for resampling at rate `q`: mean `σ² / (2 EM)` with
/// `σ² = (VarΛ − 2Cov + VarM)(2/q) + 2EM`.
pub fn ht_mean_resampled(moments: &RateMoments, q: f64, scaling: Scaling) -> Result<HtApprox> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::arg(format!("q must be positive, got {q}")));
    }
    if !(moments.mean_mu > 0.0) {
        return Err(Error::arg("EM must be positive"));
    }
    let (m, c) = scaled(moments, scaling);
    let sigma2 = diffusion_variance(&m, 2.0 / q);
    HtApprox::exponential(sigma2 / (2.0 * m.mean_mu), Provenance::ResampledClosedForm, scaling, c)
}

/// Reflected Brownian motion limit under renewal resampling: drift `−EM`,
/// variance `(VarΛ − 2Cov + VarM) E[ξ²]/Eξ + 2EM`.
pub fn ht_rbm_params_general(moments: &RateMoments, clock: &ClockLaw, scaling: Scaling) -> Result<HtApprox> {
    let ratio = clock.moment_ratio();
    if !ratio.is_finite() {
        return Err(Error::arg("clock law needs finite first and second moments"));
    }
    if !(moments.mean_mu > 0.0) {
        return Err(Error::arg("EM must be positive"));
    }
    let (m, c) = scaled(moments, scaling);
    let variance = diffusion_variance(&m, ratio);
    if !(variance > 0.0) {
        return Err(Error::numerical("diffusion variance is not positive"));
    }
    Ok(HtApprox {
        kind: HtKind::Rbm,
        mean: variance / (2.0 * m.mean_mu),
        drift: Some(-m.mean_mu),
        variance: Some(variance),
        provenance: Provenance::RenewalRbm,
        scaling,
        arrival_scale: c,
    })
}

/// Exponential limit for the endogenous M/G/1 queue: mean `½ E[Λ²] E[S²]`.
pub fn ht_mean_endogenous(
    mean_lambda: f64,
    second_lambda: f64,
    mean_service: f64,
    second_service: f64,
    scaling: Scaling,
) -> Result<HtApprox> {
    let all = [mean_lambda, second_lambda, mean_service, second_service];
    if all.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::arg("arrival and service moments must be finite and positive"));
    }
    let c = match scaling {
        Scaling::Critical => 1.0 / (mean_lambda * mean_service),
        Scaling::AsGiven => 1.0,
    };
    let mean = 0.5 * c * c * second_lambda * second_service;
    HtApprox::exponential(mean, Provenance::EndogenousMg1, scaling, c)
}

pub fn ht_mean_endogenous_spec(spec: &EndogenousSpec, scaling: Scaling) -> Result<HtApprox> {
    ht_mean_endogenous(
        spec.arrival.mean(),
        spec.arrival.second_moment(),
        spec.service.mean(),
        spec.service.second_moment(),
        scaling,
    )
}

/// `s0(r) = (−1 + √(1 + 2ν''r)) / ν''`.
pub fn s0(r: f64, nu_dd1: f64) -> f64 {
    // rationalised to avoid cancellation for small ν''r
    2.0 * r / (1.0 + (1.0 + 2.0 * nu_dd1 * r).sqrt())
}

/// Limit of the geometric-time double transform: the transform of a
/// reflected Brownian motion with drift −1 and variance `ν''(1)`, observed
/// at an exponential time with rate `r`, started from the law with
/// transform `kappa0_bar`.
pub fn ht_transient_transform_endogenous(r: f64, s: f64, nu_dd1: f64, kappa0_bar: &dyn Fn(f64) -> f64) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::arg(format!("r must be positive, got {r}")));
    }
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::arg(format!("s must be >= 0, got {s}")));
    }
    if !(nu_dd1.is_finite() && nu_dd1 > 0.0) {
        return Err(Error::arg(format!("ν''(1) must be positive, got {nu_dd1}")));
    }
    let root = s0(r, nu_dd1);
    let k_root = kappa0_bar(root);
    let denom = r - s - 0.5 * nu_dd1 * s * s;
    let bracket = kappa0_bar(s) - s / root * k_root;
    let scale = r.max(s).max(nu_dd1 * s * s);
    if denom.abs() > 1e-9 * scale {
        return Ok(r / denom * bracket);
    }
    if bracket.abs() > 1e-6 {
        return Err(Error::numerical(format!("transform has a pole at s = {s}")));
    }
    // removable point s = s0: differentiate numerator and denominator
    let h = 1e-6 * root.max(1e-3);
    let dk = (kappa0_bar(root + h) - kappa0_bar((root - h).max(0.0))) / (root + h - (root - h).max(0.0));
    let d_bracket = dk - k_root / root;
    let d_denom = -1.0 - nu_dd1 * root;
    Ok(r * d_bracket / d_denom)
}

/// `P(Q > n) ≈ exp(−n(1−ρ)/m)`, `n = 0..=n_max`.
pub fn exp_tail_curve(m: f64, rho: f64, n_max: usize) -> Result<Vec<f64>> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::arg(format!("load must lie in (0, 1) for a heavy-traffic tail, got {rho}")));
    }
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::arg(format!("mean must be positive, got {m}")));
    }
    let rate = (1.0 - rho) / m;
    Ok((0..=n_max).map(|n| (-(n as f64) * rate).exp()).collect())
}

/// Exact tail against the exponential approximation, level by level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailComparison {
    pub rho: f64,
    pub mean: f64,
    pub exact: Vec<f64>,
    pub approx: Vec<f64>,
    /// `max_n |exact_n − approx_n|`.
    pub sup_gap: f64,
}

/// Compares an exact tail curve `exact[n]` with `exp(−n(1−ρ)/m)`.
pub fn compare_tails(exact: &[f64], m: f64, rho: f64) -> Result<TailComparison> {
    if exact.is_empty() {
        return Err(Error::arg("empty exact tail"));
    }
    let approx = exp_tail_curve(m, rho, exact.len() - 1)?;
    let sup_gap = exact.iter().zip(&approx).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(TailComparison { rho, mean: m, exact: exact.to_vec(), approx, sup_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Generator, RateLawFinite, ResampledSpec};

    fn two_point(lambda: f64, q: f64) -> ResampledSpec {
        ResampledSpec::new(RateLawFinite::from_vectors(&[lambda, 0.0], &[1.0, 1.0], &[0.5, 0.5]).unwrap(), q).unwrap()
    }

    #[test]
    fn single_state_mean_is_one() {
        let spec = MMQueueSpec::new(Generator::new(vec![vec![0.0]]).unwrap(), vec![0.5], vec![1.0]).unwrap();
        let h = ht_mean_modulated(&spec).unwrap();
        assert!((h.approx.mean - 1.0).abs() < 1e-12);
        assert!(h.diagnostic.is_none());
    }

    #[test]
    fn figure_example_closed_form() {
        for &(lambda, q) in &[(1.8, 1.0), (1.9, 0.5), (2.0, 1.0)] {
            let m = two_point(lambda, q).law().moments();
            let h = ht_mean_resampled(&m, q, Scaling::AsGiven).unwrap();
            assert!((h.mean - (lambda * lambda / (4.0 * q) + 1.0)).abs() < 1e-12);
        }
        let m = two_point(2.0, 1.0).law().moments();
        assert!((ht_mean_resampled(&m, 1.0, Scaling::Critical).unwrap().mean - 2.0).abs() < 1e-12);
    }

    #[test]
    fn determinant_route_matches_closed_form() {
        let spec = two_point(1.8, 0.7);
        let a = ht_mean_modulated(spec.modulated()).unwrap();
        let b = ht_mean_resampled(&spec.law().moments(), 0.7, Scaling::Critical).unwrap();
        assert!((a.approx.mean - b.mean).abs() < 1e-9 * b.mean);
        assert!(a.diagnostic.is_none(), "{:?}", a.diagnostic);
        assert!((a.tau + 0.7).abs() < 1e-14);
    }

    #[test]
    fn alpha_at_one_vanishes() {
        let spec = two_point(1.3, 1.1);
        let (a0, a1, _) = alpha_derivatives(spec.modulated());
        assert!(a0.abs() < 1e-13);
        // α'(1) = −τ πμ (1−ρ)
        let m = spec.modulated();
        assert!((a1 + m.tau() * m.mean_mu() * (1.0 - m.rho())).abs() < 1e-12);
    }

    #[test]
    fn endogenous_special_cases() {
        // deterministic Λ, exponential S (ES = 2): m = ½E[S²]/(ES)² = 1
        let h = ht_mean_endogenous(0.5, 0.25, 2.0, 8.0, Scaling::Critical).unwrap();
        assert!((h.mean - 1.0).abs() < 1e-14);
        // Λ ∈ {0, 2EΛ}, deterministic S at criticality
        let h = ht_mean_endogenous(1.0, 2.0, 1.0, 1.0, Scaling::AsGiven).unwrap();
        assert!((h.mean - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rbm_with_exponential_clock() {
        let m = RateMoments { mean_lambda: 0.8, mean_mu: 1.0, var_lambda: 0.3, var_mu: 0.2, cov: -0.1 };
        let rbm = ht_rbm_params_general(&m, &ClockLaw::exponential(0.5).unwrap(), Scaling::Critical).unwrap();
        let exp = ht_mean_resampled(&m, 0.5, Scaling::Critical).unwrap();
        assert!((rbm.mean - exp.mean).abs() < 1e-12);
        assert_eq!(rbm.drift, Some(-1.0));
        let det = ClockLaw::new(crate::model::PositiveLaw::Deterministic { value: 3.0 }).unwrap();
        let rbm = ht_rbm_params_general(&m, &det, Scaling::AsGiven).unwrap();
        assert!((rbm.variance.unwrap() - (m.difference_variance() * 3.0 + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn transient_transform_edges() {
        let one = |_: f64| 1.0;
        assert!((ht_transient_transform_endogenous(1.0, 0.0, 2.0, &one).unwrap() - 1.0).abs() < 1e-15);
        let v = ht_transient_transform_endogenous(1e9, 0.7, 2.0, &one).unwrap();
        assert!((v - 1.0).abs() < 1e-3);
        let root = s0(1.0, 2.0);
        let at = ht_transient_transform_endogenous(1.0, root, 2.0, &one).unwrap();
        let near = ht_transient_transform_endogenous(1.0, root * (1.0 + 1e-5), 2.0, &one).unwrap();
        assert!((at - near).abs() < 1e-4);
    }

    #[test]
    fn tail_curve_rate() {
        let c = exp_tail_curve(1.81, 0.9, 100).unwrap();
        assert_eq!(c[0], 1.0);
        assert!((-(c[1].ln()) - 0.1 / 1.81).abs() < 1e-15);
        assert!(exp_tail_curve(1.0, 0.0, 10).is_err());
    }
}

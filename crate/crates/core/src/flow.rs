//! Moments of the cumulative arrival and potential service processes under
//! renewal resampling, their large-deviations counterpart, and a
//! construction of strongly negatively correlated rate pairs.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ClockLaw, PositiveLaw, RateLawFinite, RateMoments};
use crate::numeric::quad::integrate_pieces;

/// Step of the finite-difference stencil on `c_α(θ)`.
pub const LD_STEP: f64 = 1e-4;

/// `I(t) = ∫₀ᵗ∫₀ˢ P(ξ̄ > s−r) dr ds` with `ξ̄` the residual clock time.
///
/// Uses `I(t)·Eξ = E[∫₀^{min(ξ,t)} (t−u)(ξ−u) du]`, which only needs the
/// partial moments of `ξ`.
pub fn kernel_integral(clock: &ClockLaw, t: f64) -> Result<f64> {
    check_time(t)?;
    let law = clock.law();
    if let PositiveLaw::Exponential { rate } = law {
        let x = rate * t;
        return Ok((x + (-x).exp_m1()) / (rate * rate));
    }
    let m2 = law.min_moment(t, 2);
    let m3 = law.min_moment(t, 3);
    let value = 0.5 * t * m2 - m3 / 6.0 + 0.5 * t * t * law.excess(t);
    Ok(value.max(0.0) / law.mean())
}

/// Same integral as [`kernel_integral`] by adaptive quadrature of the
/// survival function `G`:
/// `(∫₀ᵗ (tu − u²/2) G(u) du + ½t² ∫ₜ^∞ G(u) du) / Eξ`.
pub fn kernel_integral_quadrature(clock: &ClockLaw, t: f64, abs_tol: f64) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let law = clock.law();
    let mut points = vec![0.0];
    if let Some(atoms) = law.atoms() {
        let mut inner: Vec<f64> = atoms.iter().map(|a| a.0).filter(|&v| v > 0.0 && v < t).collect();
        inner.sort_by(f64::total_cmp);
        points.extend(inner);
    }
    points.push(t);
    let body = integrate_pieces(|u| (t * u - 0.5 * u * u) * law.survival(u), &points, abs_tol)?;
    let head = integrate_pieces(|u| law.survival(u), &points, abs_tol)?;
    let tail = (law.mean() - head).max(0.0);
    Ok((body + 0.5 * t * t * tail) / law.mean())
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::arg(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// Variances and covariance of `A(t)` and `S(t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowMoments {
    pub moments: RateMoments,
    #[serde(skip)]
    pub clock: ClockLaw,
    /// `lim v_A(t)/t`.
    pub v_a: f64,
    pub v_s: f64,
    pub c_as: f64,
}

impl FlowMoments {
    pub fn kernel(&self, t: f64) -> Result<f64> {
        kernel_integral(&self.clock, t)
    }

    /// `Var A(t) = t EΛ + 2 VarΛ I(t)`.
    pub fn v_a_at(&self, t: f64) -> Result<f64> {
        Ok(t * self.moments.mean_lambda + 2.0 * self.moments.var_lambda * self.kernel(t)?)
    }

    pub fn v_s_at(&self, t: f64) -> Result<f64> {
        Ok(t * self.moments.mean_mu + 2.0 * self.moments.var_mu * self.kernel(t)?)
    }

    /// `Cov(A(t), S(t)) = 2 Cov(Λ, M) I(t)`.
    pub fn c_as_at(&self, t: f64) -> Result<f64> {
        Ok(2.0 * self.moments.cov * self.kernel(t)?)
    }

    /// `(t, v_A(t), v_S(t), c_AS(t))` with a single kernel evaluation.
    pub fn at(&self, t: f64) -> Result<[f64; 4]> {
        let k = self.kernel(t)?;
        let m = &self.moments;
        Ok([t, t * m.mean_lambda + 2.0 * m.var_lambda * k, t * m.mean_mu + 2.0 * m.var_mu * k, 2.0 * m.cov * k])
    }

    /// Asymptotic variance rate of `αA(t) + (1−α)S(t)`.
    pub fn mixed_constant(&self, alpha: f64) -> f64 {
        alpha * alpha * self.v_a + (1.0 - alpha) * (1.0 - alpha) * self.v_s + 2.0 * alpha * (1.0 - alpha) * self.c_as
    }
}

pub fn flow_moments(moments: &RateMoments, clock: &ClockLaw) -> Result<FlowMoments> {
    moments.validate()?;
    let ratio = clock.moment_ratio();
    if !ratio.is_finite() {
        return Err(Error::arg("clock law needs finite first and second moments"));
    }
    Ok(FlowMoments {
        moments: *moments,
        clock: clock.clone(),
        v_a: moments.mean_lambda + moments.var_lambda * ratio,
        v_s: moments.mean_mu + moments.var_mu * ratio,
        c_as: moments.cov * ratio,
    })
}

/// `(E[ξ²]/Eξ)·Var(αΛ + (1−α)M) + α² EΛ + (1−α)² EM`.
pub fn ld_variance_closed_form(moments: &RateMoments, clock: &ClockLaw, alpha: f64) -> f64 {
    let b = 1.0 - alpha;
    let var = alpha * alpha * moments.var_lambda + b * b * moments.var_mu + 2.0 * alpha * b * moments.cov;
    clock.moment_ratio() * var + alpha * alpha * moments.mean_lambda + b * b * moments.mean_mu
}

/// Numerical cumulants of `X_α = αA + (1−α)S` from the root `c_α(θ)` of
/// `φ_α(c, θ) = E[Ξ(Λ(e^{θα}−1) + M(e^{θ(1−α)}−1) − cθ)] = 1`.
#[derive(Debug, Clone)]
pub struct LdAnalyzer {
    atoms: Vec<(f64, f64, f64)>,
    clock: ClockLaw,
    alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LdResult {
    pub alpha: f64,
    pub c0: f64,
    pub c_prime: f64,
    pub c_second: f64,
    /// `γ''(0) = 2 c'(0)`.
    pub variance: f64,
    /// `γ'''(0) = 3 c''(0)`.
    pub third_cumulant: f64,
}

impl LdAnalyzer {
    pub fn new(law: &RateLawFinite, clock: &ClockLaw, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::arg("α must be finite"));
        }
        let atoms = law.atoms().iter().map(|a| (a.lambda, a.mu, a.pi)).collect();
        Ok(LdAnalyzer { atoms, clock: clock.clone(), alpha })
    }

    /// `c_α(0) = α EΛ + (1−α) EM`.
    pub fn c0(&self) -> f64 {
        self.atoms.iter().map(|(l, m, p)| p * (self.alpha * l + (1.0 - self.alpha) * m)).sum()
    }

    /// `(φ_α(c, θ) − 1)/θ`, or `None` outside the domain of `Ξ`.
    pub fn scaled_excess(&self, c: f64, theta: f64) -> Option<f64> {
        let ea = (theta * self.alpha).exp_m1();
        let eb = (theta * (1.0 - self.alpha)).exp_m1();
        let mut sum = 0.0;
        for &(l, m, p) in &self.atoms {
            sum += p * self.clock.law().mgf_minus_one(l * ea + m * eb - c * theta)?;
        }
        Some(sum / theta)
    }

    pub fn phi(&self, c: f64, theta: f64) -> Option<f64> {
        if theta == 0.0 {
            return Some(1.0);
        }
        self.scaled_excess(c, theta).map(|g| 1.0 + g * theta)
    }

    /// Decreasing in `c`; divergence of `Ξ` means `+∞` for θ > 0 and `−∞` for θ < 0.
    fn g(&self, c: f64, theta: f64) -> f64 {
        self.scaled_excess(c, theta).unwrap_or(if theta > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY })
    }

    fn g_prime(&self, c: f64, theta: f64) -> Option<f64> {
        let ea = (theta * self.alpha).exp_m1();
        let eb = (theta * (1.0 - self.alpha)).exp_m1();
        let mut sum = 0.0;
        for &(l, m, p) in &self.atoms {
            sum += p * self.clock.law().mgf_derivative(l * ea + m * eb - c * theta)?;
        }
        Some(-sum)
    }

    /// Root `c_α(θ)` by bracketing, bisection and a Newton polish.
    pub fn solve_c(&self, theta: f64) -> Result<f64> {
        let c0 = self.c0();
        if theta == 0.0 {
            return Ok(c0);
        }
        let mut width = 0.1 * c0.abs().max(1.0);
        let (mut lo, mut hi) = (c0 - width, c0 + width);
        let mut tries = 0;
        while !(self.g(lo, theta) > 0.0 && self.g(hi, theta) < 0.0) {
            tries += 1;
            if tries > 200 {
                return Err(Error::numerical(format!("could not bracket c_α(θ) at θ = {theta}")));
            }
            width *= 2.0;
            if !(self.g(lo, theta) > 0.0) {
                lo = c0 - width;
            }
            if !(self.g(hi, theta) < 0.0) {
                hi = c0 + width;
            }
        }
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.g(mid, theta) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut c = 0.5 * (lo + hi);
        for _ in 0..2 {
            let (Some(g), Some(dg)) = (self.scaled_excess(c, theta), self.g_prime(c, theta)) else {
                return Err(Error::numerical(format!("MGF diverges at the root for θ = {theta}")));
            };
            if dg == 0.0 {
                break;
            }
            let next = c - g / dg;
            if next.is_finite() && (next - c).abs() <= (hi - lo).max(4.0 * f64::EPSILON * c.abs()) {
                c = next;
            }
        }
        match self.phi(c, theta) {
            Some(phi) if (phi - 1.0).abs() < 1e-13 => Ok(c),
            Some(phi) => Err(Error::NoConvergence { iterations: 400, residual: (phi - 1.0).abs() }),
            None => Err(Error::numerical(format!("MGF diverges at the root for θ = {theta}"))),
        }
    }

    /// Five-point central differences of `c_α` at 0 with step `h`.
    pub fn cumulants(&self, h: f64) -> Result<LdResult> {
        if !(h > 0.0) {
            return Err(Error::arg("finite-difference step must be positive"));
        }
        let c0 = self.c0();
        let (p1, m1) = (self.solve_c(h)?, self.solve_c(-h)?);
        let (p2, m2) = (self.solve_c(2.0 * h)?, self.solve_c(-2.0 * h)?);
        let c_prime = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
        let c_second = (16.0 * (p1 + m1) - (p2 + m2) - 30.0 * c0) / (12.0 * h * h);
        Ok(LdResult {
            alpha: self.alpha,
            c0,
            c_prime,
            c_second,
            variance: 2.0 * c_prime,
            third_cumulant: 3.0 * c_second,
        })
    }
}

/// Asymptotic variance and third cumulant rates of `αA + (1−α)S`.
pub fn ld_variance(law: &RateLawFinite, clock: &ClockLaw, alpha: f64) -> Result<LdResult> {
    LdAnalyzer::new(law, clock, alpha)?.cumulants(LD_STEP)
}

/// Joint law of `(X, Y)` with `Y = (1 − X/s)·1{X ≤ s}/ψ(s)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegativePair {
    /// Atoms `(x, y, p)`.
    pub joint: Vec<(f64, f64, f64)>,
    pub psi: f64,
    pub corr: f64,
    pub mean_y: f64,
}

impl NegativePair {
    pub fn y_law(&self) -> Vec<(f64, f64)> {
        self.joint.iter().map(|&(_, y, p)| (y, p)).collect()
    }
}

pub fn build_negatively_correlated(x_law: &[(f64, f64)], s: f64) -> Result<NegativePair> {
    if x_law.is_empty() {
        return Err(Error::arg("X needs at least one atom"));
    }
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::arg(format!("threshold must be positive, got {s}")));
    }
    if x_law.iter().any(|&(x, p)| !(x.is_finite() && x >= 0.0 && p.is_finite() && p >= 0.0)) {
        return Err(Error::arg("X must have finite nonnegative atoms and probabilities"));
    }
    let total: f64 = x_law.iter().map(|a| a.1).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::arg(format!("probabilities of X sum to {total}")));
    }
    let mean: f64 = x_law.iter().map(|(x, p)| x * p).sum();
    if (mean - 1.0).abs() > 1e-9 {
        return Err(Error::arg(format!("X must have unit mean, got {mean}")));
    }
    let var_x: f64 = x_law.iter().map(|(x, p)| p * (x - mean) * (x - mean)).sum();
    if var_x <= 1e-300 {
        return Err(Error::ZeroVariance("X is degenerate, so corr(X, Y) is undefined".into()));
    }
    let weight = |x: f64| if x <= s { 1.0 - x / s } else { 0.0 };
    let psi: f64 = x_law.iter().map(|&(x, p)| p * weight(x)).sum();
    if !(psi > 0.0) {
        return Err(Error::arg(format!("ψ(s) = {psi} is not positive; threshold {s} is too small")));
    }
    let joint: Vec<(f64, f64, f64)> = x_law.iter().map(|&(x, p)| (x, weight(x) / psi, p)).collect();
    let mean_y: f64 = joint.iter().map(|(_, y, p)| y * p).sum();
    let var_y: f64 = joint.iter().map(|(_, y, p)| p * (y - mean_y) * (y - mean_y)).sum();
    if var_y <= 1e-300 {
        return Err(Error::ZeroVariance("Y is degenerate".into()));
    }
    let cov: f64 = joint.iter().map(|(x, y, p)| p * (x - mean) * (y - mean_y)).sum();
    let corr = (cov / (var_x * var_y).sqrt()).clamp(-1.0, 1.0);
    Ok(NegativePair { joint, psi, corr, mean_y })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_clock(d: f64) -> ClockLaw {
        ClockLaw::exponential(d).unwrap()
    }

    #[test]
    fn kernel_exponential_closed_form() {
        for &(d, t) in &[(1.0f64, 10.0f64), (0.3, 2.0), (5.0, 1e-3)] {
            let expected = t / d - (1.0 - (-d * t).exp()) / (d * d);
            let got = kernel_integral(&exp_clock(d), t).unwrap();
            assert!((got - expected).abs() < 1e-12 * expected.max(1e-12), "{d} {t}");
        }
        assert_eq!(kernel_integral(&exp_clock(1.0), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn kernel_deterministic_by_hand() {
        // P(ξ̄ > u) = (d−u)/d on [0, d]; I(d) = ∫₀ᵈ (d−u)²/d du = d²/3
        let d = 1.7;
        let clock = ClockLaw::new(PositiveLaw::Deterministic { value: d }).unwrap();
        let hand = d * d / 3.0;
        assert!((kernel_integral_quadrature(&clock, d, 1e-12).unwrap() - hand).abs() < 1e-10);
        assert!((kernel_integral(&clock, d).unwrap() - hand).abs() < 1e-12);
    }

    #[test]
    fn kernel_routes_agree() {
        let clocks = [
            ClockLaw::new(PositiveLaw::Gamma { shape: 2.5, rate: 1.5 }).unwrap(),
            ClockLaw::new(PositiveLaw::Discrete { values: vec![0.2, 1.0, 4.0], probs: vec![0.3, 0.5, 0.2] }).unwrap(),
            exp_clock(0.7),
        ];
        for clock in &clocks {
            for &t in &[0.1, 1.0, 3.3, 20.0] {
                let a = kernel_integral(clock, t).unwrap();
                let b = kernel_integral_quadrature(clock, t, 1e-12).unwrap();
                assert!((a - b).abs() < 1e-9 * a.max(1.0), "{clock:?} {t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn example_variance_at_ten() {
        let m = RateMoments { mean_lambda: 1.0, mean_mu: 1.0, var_lambda: 1.0, var_mu: 0.0, cov: 0.0 };
        let f = flow_moments(&m, &exp_clock(1.0)).unwrap();
        let expected = 10.0 + 2.0 * (10.0 - (1.0 - (-10f64).exp()));
        assert!((f.v_a_at(10.0).unwrap() - expected).abs() < 1e-12);
        assert!((f.v_s_at(10.0).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn asymptotic_constants() {
        let m = RateMoments { mean_lambda: 1.0, mean_mu: 1.2, var_lambda: 0.5, var_mu: 0.4, cov: 0.3 };
        let f = flow_moments(&m, &exp_clock(1.0)).unwrap();
        assert!((f.c_as - 0.6).abs() < 1e-15);
        let t = 100.0 * 1.0;
        assert!(((f.v_a_at(t).unwrap() / t) - f.v_a).abs() < 0.01 * f.v_a);
    }

    fn two_atom_law() -> RateLawFinite {
        RateLawFinite::from_vectors(&[0.5, 1.5, 1.0], &[1.2, 0.8, 1.0], &[0.3, 0.3, 0.4]).unwrap()
    }

    #[test]
    fn ld_matches_closed_form() {
        let law = two_atom_law();
        let m = law.moments();
        let clocks = [
            exp_clock(0.8),
            ClockLaw::new(PositiveLaw::Deterministic { value: 1.3 }).unwrap(),
            ClockLaw::new(PositiveLaw::Gamma { shape: 3.0, rate: 2.0 }).unwrap(),
        ];
        for clock in &clocks {
            let f = flow_moments(&m, clock).unwrap();
            for &alpha in &[1.0, 0.5, 0.0, 0.3, -0.4] {
                let r = ld_variance(&law, clock, alpha).unwrap();
                let expected = ld_variance_closed_form(&m, clock, alpha);
                assert!((r.variance - expected).abs() < 1e-6 * expected, "{alpha}: {} vs {expected}", r.variance);
                assert!((r.variance - f.mixed_constant(alpha)).abs() < 1e-6 * expected);
                assert!((r.c0 - (alpha * m.mean_lambda + (1.0 - alpha) * m.mean_mu)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ld_poisson_streams() {
        let law = RateLawFinite::from_vectors(&[1.0], &[1.0], &[1.0]).unwrap();
        for &alpha in &[0.2, 0.5, 0.9] {
            let r = ld_variance(&law, &exp_clock(1.0), alpha).unwrap();
            let expected = alpha * alpha + (1.0 - alpha) * (1.0 - alpha);
            assert!((r.variance - expected).abs() < 1e-8);
            // X_α is a sum of scaled Poisson processes: third cumulant α³ + (1−α)³
            let k3 = alpha.powi(3) + (1.0 - alpha).powi(3);
            assert!((r.third_cumulant - k3).abs() < 1e-5, "{} vs {k3}", r.third_cumulant);
        }
    }

    #[test]
    fn negative_pair() {
        let x = [(0.5, 0.5), (1.5, 0.5)];
        let pair = build_negatively_correlated(&x, 100.0).unwrap();
        assert!((pair.mean_y - 1.0).abs() < 1e-12);
        assert!(pair.corr < -0.99);
        assert!(matches!(build_negatively_correlated(&[(1.0, 1.0)], 10.0), Err(Error::ZeroVariance(_))));
        assert!(build_negatively_correlated(&[(0.0, 0.0), (2.5, 0.4), (0.0, 0.6)], 1.0).is_ok());
        assert!(build_negatively_correlated(&[(0.5, 0.5), (1.5, 0.5)], 0.4).is_err());
    }

    #[test]
    fn correlation_decreases_with_threshold() {
        // mass beyond every tested threshold keeps corr away from −1
        let far = 5000.0;
        let p_far = 0.0001;
        let body = (1.0 - p_far * far) / (1.0 - p_far);
        let x = [(0.5 * body, 0.5 * (1.0 - p_far)), (1.5 * body, 0.5 * (1.0 - p_far)), (far, p_far)];
        let mut last = 1.0;
        for &s in &[10.0, 100.0, 1000.0, 1e4] {
            let c = build_negatively_correlated(&x, s).unwrap().corr;
            assert!(c < last, "{s}: {c} vs {last}");
            last = c;
        }
        assert!(last < -0.999_999);
    }
}

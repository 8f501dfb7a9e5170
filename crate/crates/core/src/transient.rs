//! M/M/1 queue observed at an exponential epoch, and the exact stationary
//! PGF of the two-point resampled M/M/1 queue.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::inversion;
use crate::model::RateLawFinite;
use crate::numeric::Poly;

const ROOT_REAL_TOL: f64 = 1e-9;
const ROOT_EDGE_TOL: f64 = 1e-9;
const MAX_CONDITION: f64 = 1e12;
const SAME_ROOT_TOL: f64 = 1e-12;

/// Roots `x1 >= x2` of `F(z) = λz² − (λ+μ+q)z + μ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientRoots {
    /// `+inf` when `λ = 0`.
    pub x1: f64,
    pub x2: f64,
    pub lambda: f64,
    pub mu: f64,
    pub q: f64,
}

impl TransientRoots {
    /// `λ = 0`: `F` is linear and only `x2` is finite.
    pub fn is_linear(&self) -> bool {
        self.lambda == 0.0
    }

    pub fn f(&self, z: f64) -> f64 {
        self.lambda * z * z - (self.lambda + self.mu + self.q) * z + self.mu
    }

    /// `F(z) / (z − x2)`: `λ(z − x1)`, or `−(μ+q)` in the linear case.
    fn lead<T>(&self, z: T) -> T
    where
        T: std::ops::Sub<f64, Output = T> + std::ops::Mul<f64, Output = T> + From<f64>,
    {
        if self.is_linear() {
            T::from(-(self.mu + self.q))
        } else {
            (z - self.x1) * self.lambda
        }
    }
}

pub fn quadratic_roots(lambda: f64, mu: f64, q: f64) -> Result<TransientRoots> {
    if !(lambda.is_finite() && lambda >= 0.0) || !(mu.is_finite() && mu >= 0.0) {
        return Err(Error::arg(format!("rates must be finite and >= 0, got λ={lambda}, μ={mu}")));
    }
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::arg(format!("q must be positive, got {q}")));
    }
    let b = lambda + mu + q;
    let s = b + (b * b - 4.0 * lambda * mu).max(0.0).sqrt();
    let x2 = 2.0 * mu / s;
    let x1 = if lambda == 0.0 { f64::INFINITY } else { s / (2.0 * lambda) };
    Ok(TransientRoots { x1, x2, lambda, mu, q })
}

/// `E[z^{Q_ξ} | Q_0 = i, (Λ_0, M_0) = (λ, μ)]` with `ξ ~ exp(q)`, for `|z| <= 1`.
pub fn transient_pgf_at_exp_epoch(i: usize, lambda: f64, mu: f64, q: f64, z: f64) -> Result<f64> {
    if z.abs() > 1.0 {
        return Err(Error::arg(format!("|z| must be <= 1, got {z}")));
    }
    let roots = quadratic_roots(lambda, mu, q)?;
    Ok(transient_pgf_c(&roots, i, Complex64::new(z, 0.0)).re)
}

/// Transient PGF at complex `z` from precomputed roots.
///
/// The numerator vanishes at `z = x2`; dividing it out leaves
/// `q G(z) / ((1 − x2) F(z)/(z − x2))` with
/// `G(z) = −x2^{i+1} − (1 − x2) Σ_{k=0}^{i} z^k x2^{i−k}`,
/// which has no singularity on the closed unit disk.
pub fn transient_pgf_c(roots: &TransientRoots, i: usize, z: Complex64) -> Complex64 {
    let x2 = roots.x2;
    let mut s = Complex64::new(1.0, 0.0);
    let mut x2pow = 1.0;
    for _ in 0..i {
        x2pow *= x2;
        s = s * z + x2pow;
    }
    let g = -(x2pow * x2) - s * (1.0 - x2);
    g * roots.q / (roots.lead(z) * (1.0 - x2))
}

/// Exact stationary solution of the resampled M/M/1 queue with two rate states.
#[derive(Debug, Clone)]
pub struct TwoPointSolution {
    /// `u_i = E[x_{2i}^Q]`.
    pub u: [f64; 2],
    pub x2: [f64; 2],
    /// `D(z) = F1 F2 + qz(π1 F2 + π2 F1)`.
    pub quartic: Poly,
    /// The zero of `D` in `(0, 1)`.
    pub z_star: f64,
    /// Condition number of the 2×2 system for the unknowns.
    pub condition: f64,
    q: f64,
    /// `D(z) / ((z − 1)(z − z*))`.
    rest: Poly,
    /// `(w1 F2 + w2 F1)(z) / (z − z*)`.
    numer: Poly,
}

impl TwoPointSolution {
    /// `E[z^Q]`, valid on the closed unit disk.
    pub fn pgf_c(&self, z: Complex64) -> Complex64 {
        -self.numer.eval_c(z) * self.q / self.rest.eval_c(z)
    }

    pub fn pgf(&self, z: f64) -> f64 {
        self.pgf_c(Complex64::new(z, 0.0)).re
    }

    /// Queue-length probabilities `P(Q = n)` for `n <= n_max`.
    pub fn distribution(&self, n_max: usize) -> Result<Vec<f64>> {
        inversion::invert_pgf(|z| self.pgf_c(z), n_max)
    }
}

fn f_poly(lambda: f64, mu: f64, q: f64) -> Poly {
    Poly::new(vec![mu, -(lambda + mu + q), lambda])
}

pub fn solve_two_point_stationary(law: &RateLawFinite, q: f64) -> Result<TwoPointSolution> {
    if law.dim() != 2 {
        return Err(Error::arg(format!("two-point solver needs d = 2, got d = {}", law.dim())));
    }
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::arg(format!("q must be positive, got {q}")));
    }
    let rho = law.rho();
    if !(rho < 1.0) {
        return Err(Error::Unstable { rho });
    }
    let a = law.atoms();
    if a.iter().any(|x| x.mu <= 0.0) {
        return Err(Error::arg("two-point solver needs positive service rates in both states"));
    }
    let r = [quadratic_roots(a[0].lambda, a[0].mu, q)?, quadratic_roots(a[1].lambda, a[1].mu, q)?];
    let f1 = f_poly(a[0].lambda, a[0].mu, q);
    let f2 = f_poly(a[1].lambda, a[1].mu, q);
    let z = Poly::new(vec![0.0, q]);
    let quartic = f1.mul(&f2).add(&z.mul(&f2.scale(a[0].pi).add(&f1.scale(a[1].pi))));

    let (cubic, _) = quartic.deflate(1.0);
    let candidates: Vec<f64> = cubic
        .roots()
        .into_iter()
        .filter(|c| c.im.abs() < ROOT_REAL_TOL && c.re > ROOT_EDGE_TOL && c.re < 1.0 - ROOT_EDGE_TOL)
        .map(|c| cubic.polish(c.re, 3))
        .collect();
    let z_star = match candidates.as_slice() {
        [z] => *z,
        [] => return Err(Error::numerical("D(z) has no zero in (0, 1) after deflating z = 1")),
        _ => return Err(Error::numerical(format!("D(z) has {} zeros in (0, 1)", candidates.len()))),
    };
    let (rest, _) = cubic.deflate(z_star);

    // w_i = π_i x_{2i} u_i / (1 − x_{2i})
    let dp1 = quartic.derivative().eval(1.0);
    let total = dp1 / (q * q);
    let (w, condition) = if (r[0].x2 - r[1].x2).abs() <= SAME_ROOT_TOL * r[0].x2.max(r[1].x2) {
        ([a[0].pi * total, a[1].pi * total], 1.0)
    } else {
        let (g1, g2) = (f2.eval(z_star), f1.eval(z_star));
        let det = g1 - g2;
        let norm_a = (g1.abs() + 1.0).max(g2.abs() + 1.0);
        let norm_inv = (g1.abs() + g2.abs()).max(2.0) / det.abs();
        let condition = norm_a * norm_inv;
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned { condition });
        }
        ([-g2 * total / det, g1 * total / det], condition)
    };
    let numer_full = f2.scale(w[0]).add(&f1.scale(w[1]));
    let (numer, _) = numer_full.deflate(z_star);
    let u = [0, 1].map(|i| w[i] * (1.0 - r[i].x2) / (a[i].pi * r[i].x2));
    Ok(TwoPointSolution {
        u,
        x2: [r[0].x2, r[1].x2],
        quartic,
        z_star,
        condition,
        q,
        rest,
        numer,
    })
}

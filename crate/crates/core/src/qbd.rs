//! Matrix-geometric solution of the Markov-modulated M/M/1 queue and the
//! per-state PGF from the Cramer system.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::MMQueueSpec;
use crate::numeric::linalg::{self, det_lu};

pub const R_TOLERANCE: f64 = 1e-14;
pub const MAX_ITERATIONS: usize = 1_000_000;
pub const MAX_TAIL_LEVEL: usize = 1_000_000;

/// Offsets below `z` used when `α(z)` is numerically zero.
const EXTRAPOLATION_OFFSETS: [f64; 3] = [1e-4, 5e-5, 2.5e-5];
const ALPHA_ZERO: f64 = 1e-12;

/// QBD blocks `(A0, A1, A2, B00)`: up, local, down, and level-0 local.
#[derive(Debug, Clone)]
pub struct QbdBlocks {
    pub a0: DMatrix<f64>,
    pub a1: DMatrix<f64>,
    pub a2: DMatrix<f64>,
    pub b00: DMatrix<f64>,
}

impl QbdBlocks {
    pub fn new(spec: &MMQueueSpec) -> Self {
        let q = spec.generator().matrix();
        let l = DMatrix::from_diagonal(&DVector::from_column_slice(spec.lambda()));
        let m = DMatrix::from_diagonal(&DVector::from_column_slice(spec.mu()));
        QbdBlocks { a1: &q - &l - &m, b00: &q - &l, a0: l, a2: m }
    }

    /// `A0 + R A1 + R² A2`.
    pub fn residual(&self, r: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a0 + r * &self.a1 + r * r * &self.a2
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QbdSolution {
    #[serde(serialize_with = "ser_matrix")]
    pub r: DMatrix<f64>,
    pub zeta0: Vec<f64>,
    pub iterations: usize,
    /// Sup-norm of `A0 + R A1 + R² A2`.
    pub residual: f64,
    pub spectral_radius: f64,
    pub rho: f64,
    /// `(I − R)⁻¹ 1`.
    #[serde(skip)]
    tail_vec: DVector<f64>,
}

fn ser_matrix<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::Serialize;
    linalg::to_rows(m).serialize(s)
}

/// Minimal nonnegative solution of `A0 + R A1 + R² A2 = 0` by functional
/// iteration from `R = 0`. Works for unstable models too (then `sp(R) = 1`).
pub fn minimal_r(blocks: &QbdBlocks) -> Result<(DMatrix<f64>, usize)> {
    let d = blocks.a0.nrows();
    let a1_inv = blocks
        .a1
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::numerical("local block A1 is singular"))?;
    let mut r = DMatrix::<f64>::zeros(d, d);
    let mut r2 = DMatrix::<f64>::zeros(d, d);
    let mut lhs = DMatrix::<f64>::zeros(d, d);
    let mut next = DMatrix::<f64>::zeros(d, d);
    let mut change = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        r2.gemm(1.0, &r, &r, 0.0);
        lhs.copy_from(&blocks.a0);
        lhs.gemm(1.0, &r2, &blocks.a2, 1.0);
        next.gemm(-1.0, &lhs, &a1_inv, 0.0);
        change = next.iter().zip(r.iter()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        std::mem::swap(&mut r, &mut next);
        if change < R_TOLERANCE {
            return Ok((r, it));
        }
    }
    Err(Error::NoConvergence { iterations: MAX_ITERATIONS, residual: change })
}

pub fn solve_r_matrix(spec: &MMQueueSpec) -> Result<QbdSolution> {
    let rho = spec.rho();
    if !(rho < 1.0) {
        return Err(Error::Unstable { rho });
    }
    let blocks = QbdBlocks::new(spec);
    let (r, iterations) = minimal_r(&blocks)?;
    let d = spec.dim();
    let residual = linalg::sup_norm(&blocks.residual(&r));
    let spectral_radius = linalg::spectral_radius(&r);
    let i_minus_r = DMatrix::<f64>::identity(d, d) - &r;
    let tail_vec = i_minus_r
        .lu()
        .solve(&DVector::from_element(d, 1.0))
        .ok_or_else(|| Error::numerical("I − R is singular"))?;

    // ζ0 (B00 + R A2) = 0 with the first equation replaced by ζ0 (I − R)⁻¹ 1 = 1.
    let mut m = &blocks.b00 + &r * &blocks.a2;
    m.set_column(0, &tail_vec);
    let mut rhs = vec![0.0; d];
    rhs[0] = 1.0;
    let zeta0 = linalg::solve_left(&m, &rhs)?;
    Ok(QbdSolution { r, zeta0, iterations, residual, spectral_radius, rho, tail_vec })
}

impl QbdSolution {
    pub fn dim(&self) -> usize {
        self.zeta0.len()
    }

    pub fn empty_probability(&self) -> f64 {
        self.zeta0.iter().sum()
    }

    /// `ζ0 (I − R)⁻¹ 1`.
    pub fn total_mass(&self) -> f64 {
        self.zeta0.iter().zip(self.tail_vec.iter()).map(|(a, b)| a * b).sum()
    }

    /// Joint probabilities `P(Q = k, J = i)` for `k <= n_max`.
    pub fn levels(&self, n_max: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(n_max + 1);
        let mut row = nalgebra::RowDVector::from_row_slice(&self.zeta0);
        for _ in 0..=n_max {
            out.push(row.iter().copied().collect());
            row = &row * &self.r;
        }
        out
    }

    /// `P(Q = n)` for `n <= n_max`.
    pub fn marginal(&self, n_max: usize) -> Vec<f64> {
        self.levels(n_max).iter().map(|v| v.iter().sum()).collect()
    }

    pub fn state_probabilities(&self) -> Vec<f64> {
        let row = nalgebra::RowDVector::from_row_slice(&self.zeta0);
        let d = self.dim();
        let inv = (DMatrix::<f64>::identity(d, d) - &self.r).try_inverse().expect("I − R invertible");
        (&row * inv).iter().copied().collect()
    }

    /// `E[Q] = ζ0 R (I − R)⁻² 1`.
    pub fn mean(&self) -> f64 {
        let d = self.dim();
        let row = nalgebra::RowDVector::from_row_slice(&self.zeta0);
        let inv = (DMatrix::<f64>::identity(d, d) - &self.r).try_inverse().expect("I − R invertible");
        let v = &inv * &self.tail_vec;
        (&row * &self.r * v)[0]
    }

    /// `E[z^Q] = ζ0 (I − zR)⁻¹ 1`.
    pub fn pgf(&self, z: f64) -> f64 {
        let d = self.dim();
        let m = DMatrix::<f64>::identity(d, d) - &self.r * z;
        let v = m.lu().solve(&DVector::from_element(d, 1.0)).expect("I − zR invertible for |z| <= 1");
        self.zeta0.iter().zip(v.iter()).map(|(a, b)| a * b).sum()
    }

    /// `P(Q > n) = ζ0 R^{n+1} (I − R)⁻¹ 1` for `n = 0..=n_max` (capped at
    /// [`MAX_TAIL_LEVEL`]), forced nonincreasing.
    pub fn tail_probabilities(&self, n_max: usize) -> Vec<f64> {
        let n_max = n_max.min(MAX_TAIL_LEVEL);
        let mut out = Vec::with_capacity(n_max + 1);
        let mut row = nalgebra::RowDVector::from_row_slice(&self.zeta0) * &self.r;
        let mut prev = 1.0_f64;
        for _ in 0..=n_max {
            let p = (&row * &self.tail_vec)[0].clamp(0.0, prev);
            out.push(p);
            prev = p;
            row = &row * &self.r;
        }
        out
    }

    /// `P(Q ≥ n) = 1 − Σ_{k<n} P(Q = k)` for `n = 0..=n_max`, the exact curve
    /// plotted against the exponential heavy-traffic tail.
    pub fn at_least_probabilities(&self, n_max: usize) -> Vec<f64> {
        let mut out = vec![1.0];
        if n_max > 0 {
            out.extend(self.tail_probabilities(n_max - 1));
        }
        out
    }
}

/// Per-state PGF `f_i(z) = E[z^Q 1{J = i}]` by Cramer's rule on `A(z) f = b(z | β)`.
#[derive(Debug, Clone)]
pub struct CramerPgf {
    lambda: Vec<f64>,
    mu: Vec<f64>,
    /// `q_ij`.
    q: Vec<Vec<f64>>,
    beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CramerValue {
    pub f: Vec<f64>,
    /// True when `α(z)` vanished and the value was extrapolated from below.
    pub extrapolated: bool,
}

impl CramerValue {
    pub fn total(&self) -> f64 {
        self.f.iter().sum()
    }
}

pub fn cramer_pgf(spec: &MMQueueSpec, beta: &[f64]) -> Result<CramerPgf> {
    if beta.len() != spec.dim() {
        return Err(Error::arg(format!("β has {} entries, model has {} states", beta.len(), spec.dim())));
    }
    Ok(CramerPgf {
        lambda: spec.lambda().to_vec(),
        mu: spec.mu().to_vec(),
        q: spec.generator().rates().to_vec(),
        beta: beta.to_vec(),
    })
}

impl CramerPgf {
    /// `A(z)` with `a_ij = (λ_i(z−1) + μ_i(1/z−1)) 1{i=j} + q_ji`.
    pub fn a_matrix(&self, z: f64) -> Vec<Vec<f64>> {
        let d = self.lambda.len();
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        let diag = if i == j { self.lambda[i] * (z - 1.0) + self.mu[i] * (1.0 / z - 1.0) } else { 0.0 };
                        diag + self.q[j][i]
                    })
                    .collect()
            })
            .collect()
    }

    pub fn b_vector(&self, z: f64) -> Vec<f64> {
        self.mu.iter().zip(&self.beta).map(|(m, b)| m * (1.0 / z - 1.0) * b).collect()
    }

    /// `α(z) = det A(z)`.
    pub fn alpha(&self, z: f64) -> f64 {
        det_lu(self.a_matrix(z))
    }

    /// `α_i(z)`: determinant of `A(z)` with column `i` replaced by `b(z | β)`.
    pub fn alpha_i(&self, z: f64, i: usize) -> f64 {
        let mut a = self.a_matrix(z);
        for (row, b) in a.iter_mut().zip(self.b_vector(z)) {
            row[i] = b;
        }
        det_lu(a)
    }

    fn direct(&self, z: f64) -> Vec<f64> {
        let alpha = self.alpha(z);
        (0..self.lambda.len()).map(|i| self.alpha_i(z, i) / alpha).collect()
    }

    pub fn eval(&self, z: f64) -> Result<CramerValue> {
        if !(z > 0.0 && z <= 1.0) {
            return Err(Error::arg(format!("Cramer PGF needs z in (0, 1], got {z}")));
        }
        if self.alpha(z).abs() >= ALPHA_ZERO {
            return Ok(CramerValue { f: self.direct(z), extrapolated: false });
        }
        // Richardson on one-sided offsets h, h/2, h/4 (error linear in h).
        let vals: Vec<Vec<f64>> = EXTRAPOLATION_OFFSETS.iter().map(|h| self.direct(z - h)).collect();
        let d = self.lambda.len();
        let f = (0..d)
            .map(|i| {
                let (a, b, c) = (vals[0][i], vals[1][i], vals[2][i]);
                let r1 = 2.0 * b - a;
                let r2 = 2.0 * c - b;
                (4.0 * r2 - r1) / 3.0
            })
            .collect();
        Ok(CramerValue { f, extrapolated: true })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Generator, RateLawFinite, ResampledSpec};

    fn table_model(lambda: f64, q: f64) -> MMQueueSpec {
        let law = RateLawFinite::from_vectors(&[lambda, 0.0], &[1.0, 1.0], &[0.5, 0.5]).unwrap();
        ResampledSpec::new(law, q).unwrap().modulated().clone()
    }

    #[test]
    fn scalar_queue() {
        let spec = MMQueueSpec::new(Generator::new(vec![vec![0.0]]).unwrap(), vec![0.5], vec![1.0]).unwrap();
        let s = solve_r_matrix(&spec).unwrap();
        assert!((s.r[(0, 0)] - 0.5).abs() < 1e-13);
        assert!((s.zeta0[0] - 0.5).abs() < 1e-13);
        let tail = s.tail_probabilities(10);
        for (n, p) in tail.iter().enumerate() {
            assert!((p - 0.5f64.powi(n as i32 + 1)).abs() < 1e-13);
        }
        let c = cramer_pgf(&spec, &s.zeta0).unwrap();
        for &z in &[0.1, 0.5, 0.9] {
            assert!((c.eval(z).unwrap().total() - 0.5 / (1.0 - 0.5 * z)).abs() < 1e-13);
        }
    }

    #[test]
    fn table_entry() {
        let s = solve_r_matrix(&table_model(1.8, 0.5)).unwrap();
        assert!((s.r[(0, 0)] - 0.963).abs() < 5e-4);
        assert!((s.r[(0, 1)] - 0.837).abs() < 5e-4);
        assert!((s.zeta0[0] - 0.0187).abs() < 5e-5);
        assert!((s.zeta0[1] - 0.0813).abs() < 5e-5);
        assert!(s.residual < 1e-12);
        assert!((s.total_mass() - 1.0).abs() < 1e-10);
        assert!((s.empty_probability() - 0.1).abs() < 1e-10);
    }

    #[test]
    fn cramer_matches_matrix_geometric() {
        let spec = table_model(1.8, 1.0);
        let s = solve_r_matrix(&spec).unwrap();
        let c = cramer_pgf(&spec, &s.zeta0).unwrap();
        assert!((c.eval(0.5).unwrap().total() - s.pgf(0.5)).abs() < 1e-8);
        let near = c.eval(1.0 - 1e-6).unwrap();
        for (f, p) in near.f.iter().zip(spec.pi()) {
            assert!((f - p).abs() < 1e-4);
        }
        let at_one = c.eval(1.0).unwrap();
        assert!(at_one.extrapolated);
        assert!((at_one.total() - 1.0).abs() < 1e-6);
        assert!(c.alpha(1.0).abs() < 1e-10);
    }

    #[test]
    fn unstable_minimal_solution_has_unit_radius() {
        let spec = table_model(2.1, 1.0);
        assert!(matches!(solve_r_matrix(&spec), Err(Error::Unstable { .. })));
        let (r, _) = minimal_r(&QbdBlocks::new(&spec)).unwrap();
        assert!(linalg::spectral_radius(&r) > 1.0 - 1e-6);
    }
}

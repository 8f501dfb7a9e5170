//! Background-chain generators and their stationary vectors.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numeric::linalg::{self, det_lu};

/// Largest dimension for which the stationary vector is taken from the
/// determinant (Cramer) construction.
pub const CRAMER_MAX_DIM: usize = 8;

const ROW_SUM_TOL: f64 = 1e-12;
const BALANCE_TOL: f64 = 1e-10;

/// Validated rate matrix of an irreducible finite Markov chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    q: Vec<Vec<f64>>,
    pi: Vec<f64>,
    tau: f64,
}

impl Generator {
    pub fn new(q: Vec<Vec<f64>>) -> Result<Self> {
        let d = q.len();
        if d == 0 {
            return Err(Error::invalid("generator must have at least one state"));
        }
        let scale = q.iter().flatten().fold(1.0_f64, |m, x| m.max(x.abs()));
        for (i, row) in q.iter().enumerate() {
            if row.len() != d {
                return Err(Error::invalid(format!("generator row {i} has {} entries, expected {d}", row.len())));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("generator row {i} has a non-finite entry")));
            }
            for (j, &x) in row.iter().enumerate() {
                if i != j && x < 0.0 {
                    return Err(Error::invalid(format!("generator entry ({i},{j}) = {x} is negative")));
                }
            }
            let s: f64 = row.iter().sum();
            if s.abs() > ROW_SUM_TOL * scale {
                return Err(Error::invalid(format!("generator row {i} sums to {s:e}, not 0")));
            }
        }
        if !irreducible(&q) {
            return Err(Error::invalid("generator is reducible"));
        }
        let tau = det_lu(t_matrix(&q));
        let pi = if d <= CRAMER_MAX_DIM {
            cramer_stationary(&q)?
        } else {
            linear_stationary(&q)?
        };
        if pi.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::numerical("stationary vector has a nonpositive entry"));
        }
        let gen = Generator { q, pi, tau };
        let res = gen.balance_residual();
        if res > BALANCE_TOL * scale {
            return Err(Error::numerical(format!("stationary vector balance residual {res:e}")));
        }
        Ok(gen)
    }

    /// The resampling generator `q 1 pi - q I`.
    pub fn resampling(pi: &[f64], q: f64) -> Result<Self> {
        if !(q.is_finite() && q > 0.0) {
            return Err(Error::invalid(format!("resampling rate q must be positive, got {q}")));
        }
        let d = pi.len();
        let m = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| if i == j { q * pi[j] - q } else { q * pi[j] })
                    .collect()
            })
            .collect();
        Generator::new(m)
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn rates(&self) -> &[Vec<f64>] {
        &self.q
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.q[i][j]
    }

    /// Total outflow rate `q_i = -q_ii` of state `i`.
    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.q[i][i]
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    /// `det T`, with `T` the transposed generator whose first row is all ones.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        linalg::from_rows(&self.q)
    }

    /// `max_j |(pi Q)_j|` together with `|pi 1 - 1|`.
    pub fn balance_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst = (self.pi.iter().sum::<f64>() - 1.0).abs();
        for j in 0..d {
            let s: f64 = (0..d).map(|i| self.pi[i] * self.q[i][j]).sum();
            worst = worst.max(s.abs());
        }
        worst
    }
}

/// `T_ij = q_ji` for `i > 0`, first row all ones.
pub fn t_matrix(q: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = q.len();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| if i == 0 { 1.0 } else { q[j][i] })
                .collect()
        })
        .collect()
}

/// `pi_j = det T_j / det T` with `T_j` the matrix `T` whose column `j` is
/// replaced by the first unit vector.
pub fn cramer_stationary(q: &[Vec<f64>]) -> Result<Vec<f64>> {
    let t = t_matrix(q);
    let det = det_lu(t.clone());
    if det.abs() < 1e-300 {
        return Err(Error::numerical("determinant of T vanishes"));
    }
    let d = q.len();
    Ok((0..d)
        .map(|j| {
            let mut tj = t.clone();
            for (i, row) in tj.iter_mut().enumerate() {
                row[j] = if i == 0 { 1.0 } else { 0.0 };
            }
            det_lu(tj) / det
        })
        .collect())
}

/// Solve `pi Q = 0` with the first balance equation replaced by `pi 1 = 1`.
pub fn linear_stationary(q: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = q.len();
    let mut a = linalg::from_rows(q);
    for i in 0..d {
        a[(i, 0)] = 1.0;
    }
    let mut b = vec![0.0; d];
    b[0] = 1.0;
    linalg::solve_left(&a, &b)
}

fn irreducible(q: &[Vec<f64>]) -> bool {
    let d = q.len();
    let reach = |forward: bool| {
        let mut seen = vec![false; d];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..d {
                let r = if forward { q[i][j] } else { q[j][i] };
                if j != i && r > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_balance() {
        let g = Generator::new(vec![vec![-1.0, 1.0], vec![3.0, -3.0]]).unwrap();
        let (a, b) = (1.0, 3.0);
        assert!((g.stationary()[0] - b / (a + b)).abs() < 1e-14);
        assert!((g.stationary()[1] - a / (a + b)).abs() < 1e-14);
    }

    #[test]
    fn resampling_generator_entries() {
        let g = Generator::resampling(&[0.5, 0.5], 1.0).unwrap();
        assert_eq!(g.rates(), &[vec![-0.5, 0.5], vec![0.5, -0.5]]);
        let g = Generator::resampling(&[0.5, 0.5], 2.0).unwrap();
        assert!((g.tau() + 2.0).abs() < 1e-14);
        let g = Generator::resampling(&[1.0], 3.0).unwrap();
        assert_eq!(g.rates(), &[vec![0.0]]);
        assert_eq!(g.tau(), 1.0);
    }

    #[test]
    fn cramer_and_linear_agree() {
        let q = vec![
            vec![-3.0, 1.0, 2.0, 0.0],
            vec![0.5, -1.5, 0.0, 1.0],
            vec![0.0, 2.0, -2.5, 0.5],
            vec![1.0, 0.0, 0.2, -1.2],
        ];
        let a = cramer_stationary(&q).unwrap();
        let b = linear_stationary(&q).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn large_dimension_uses_linear_route() {
        let d = 12;
        let pi: Vec<f64> = (1..=d).map(|k| k as f64 / (d * (d + 1) / 2) as f64).collect();
        let g = Generator::resampling(&pi, 0.8).unwrap();
        for (x, y) in g.stationary().iter().zip(&pi) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((g.tau() - (-0.8f64).powi(d as i32 - 1)).abs() < 1e-8 * 0.8f64.powi(d as i32 - 1));
    }

    #[test]
    fn rejects_invalid() {
        assert!(Generator::new(vec![vec![-1.0, 1.0], vec![0.0, 0.0]]).is_err());
        assert!(Generator::new(vec![vec![-1.0, 1.1], vec![1.0, -1.0]]).is_err());
        assert!(Generator::new(vec![vec![1.0, -1.0], vec![1.0, -1.0]]).is_err());
    }
}

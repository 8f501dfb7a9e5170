//! Real-coefficient polynomials in ascending-power storage.

use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    /// `coeffs[k]` multiplies `z^k`.
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Poly { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }

    pub fn eval_c(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() == 1 {
            return Poly::new(vec![0.0]);
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new(
            (0..n)
                .map(|k| self.coeffs.get(k).unwrap_or(&0.0) + other.coeffs.get(k).unwrap_or(&0.0))
                .collect(),
        )
    }

    pub fn scale(&self, c: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    /// Synthetic division by `(z - root)`; returns quotient and remainder.
    pub fn deflate(&self, root: f64) -> (Poly, f64) {
        let n = self.degree();
        if n == 0 {
            return (Poly::new(vec![0.0]), self.coeffs[0]);
        }
        let mut q = vec![0.0; n];
        let mut carry = self.coeffs[n];
        for k in (0..n).rev() {
            q[k] = carry;
            carry = self.coeffs[k] + carry * root;
        }
        (Poly::new(q), carry)
    }

    /// All complex roots. Degrees one and two use closed forms; higher
    /// degrees use the eigenvalues of the companion matrix.
    pub fn roots(&self) -> Vec<Complex64> {
        let n = self.degree();
        match n {
            0 => Vec::new(),
            1 => vec![Complex64::new(-self.coeffs[0] / self.coeffs[1], 0.0)],
            2 => quadratic(self.coeffs[2], self.coeffs[1], self.coeffs[0]).to_vec(),
            _ => {
                let lead = self.coeffs[n];
                let companion = DMatrix::from_fn(n, n, |i, j| {
                    if i == 0 {
                        -self.coeffs[n - 1 - j] / lead
                    } else if i == j + 1 {
                        1.0
                    } else {
                        0.0
                    }
                });
                companion.complex_eigenvalues().iter().copied().collect()
            }
        }
    }

    /// Newton refinement of a real root estimate.
    pub fn polish(&self, mut x: f64, steps: usize) -> f64 {
        let d = self.derivative();
        for _ in 0..steps {
            let fp = d.eval(x);
            if fp == 0.0 {
                break;
            }
            let step = self.eval(x) / fp;
            if !step.is_finite() {
                break;
            }
            x -= step;
        }
        x
    }
}

/// Roots of `a z^2 + b z + c` avoiding cancellation.
pub fn quadratic(a: f64, b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let t = -0.5 * (b + b.signum() * s);
        if t == 0.0 {
            return [Complex64::new(0.0, 0.0); 2];
        }
        [Complex64::new(t / a, 0.0), Complex64::new(c / t, 0.0)]
    } else {
        let re = -b / (2.0 * a);
        let im = (-disc).sqrt() / (2.0 * a);
        [Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

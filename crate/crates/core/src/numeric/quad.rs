//! Adaptive Gauss–Kronrod (7/15) quadrature for real and complex integrands.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 20_000;

pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn norm(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
}

fn gk15<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, &x) in XGK.iter().enumerate().take(7) {
        let f1 = f(c - h * x);
        let f2 = f(c + h * x);
        kronrod = kronrod + (f1 + f2) * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + (f1 + f2) * WG[j / 2];
        }
    }
    let err = ((kronrod - gauss) * h).norm();
    (kronrod * h, err)
}

/// Integrate `f` over `[a, b]` to absolute tolerance `abs_tol`.
pub fn integrate<T: QuadValue, F: Fn(f64) -> T>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<T> {
    if a == b {
        return Ok(T::zero());
    }
    let total = b - a;
    let mut stack = vec![(a, b)];
    let mut acc = T::zero();
    let mut visited = 0usize;
    while let Some((lo, hi)) = stack.pop() {
        visited += 1;
        if visited > MAX_INTERVALS {
            return Err(Error::numerical(format!(
                "quadrature on [{a}, {b}] did not reach tolerance {abs_tol:e}"
            )));
        }
        let (val, err) = gk15(&f, lo, hi);
        let budget = abs_tol * ((hi - lo) / total).abs();
        let mid = 0.5 * (lo + hi);
        if err <= budget.max(f64::EPSILON * val.norm()) || mid <= lo || mid >= hi {
            acc = acc + val;
        } else {
            stack.push((mid, hi));
            stack.push((lo, mid));
        }
    }
    Ok(acc)
}

/// Integrate over consecutive breakpoints `points[0] < points[1] < ...`.
pub fn integrate_pieces<T: QuadValue, F: Fn(f64) -> T>(f: F, points: &[f64], abs_tol: f64) -> Result<T> {
    let pieces = points.len().saturating_sub(1).max(1) as f64;
    let mut acc = T::zero();
    for w in points.windows(2) {
        acc = acc + integrate(&f, w[0], w[1], abs_tol / pieces)?;
    }
    Ok(acc)
}

/// Integrate over `[0, inf)` through the substitution `x = scale * u / (1 - u)`.
pub fn integrate_half_line<T: QuadValue, F: Fn(f64) -> T>(f: F, scale: f64, abs_tol: f64) -> Result<T> {
    let g = |u: f64| {
        let one_minus = 1.0 - u;
        let x = scale * u / one_minus;
        let jac = scale / (one_minus * one_minus);
        let v = f(x);
        if jac.is_finite() && v.norm().is_finite() {
            v * jac
        } else {
            T::zero()
        }
    };
    integrate(g, 0.0, 1.0, abs_tol)
}

//! Numerical inversion of probability generating functions on a circle.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Aliased mass `Σ_j p_{n+jN} r^{jN}` is damped below `10^-ALIAS_DIGITS`.
pub const ALIAS_DIGITS: f64 = 13.0;
pub const MIN_POINTS: usize = 4096;

const NEGATIVE_TOL: f64 = 1e-8;
const MASS_TOL: f64 = 1e-8;

/// Smallest power of two at least `max(4 n_max, MIN_POINTS)`.
pub fn default_points(n_max: usize) -> usize {
    (4 * n_max).max(MIN_POINTS).next_power_of_two()
}

/// `r = 10^(−ALIAS_DIGITS/N)`, so `r^N` bounds the aliasing error while
/// `r^(−n_max) <= 10^(ALIAS_DIGITS/4)` bounds the roundoff amplification.
pub fn default_radius(points: usize) -> f64 {
    10f64.powf(-ALIAS_DIGITS / points as f64)
}

/// Probabilities `p_0..=p_{n_max}` of the PGF `f` with [`default_points`]
/// samples on the circle of radius [`default_radius`].
pub fn invert_pgf<F: Fn(Complex64) -> Complex64>(f: F, n_max: usize) -> Result<Vec<f64>> {
    let points = default_points(n_max);
    invert_pgf_with(f, n_max, default_radius(points), points)
}

/// Discrete inverse transform from `points` samples of `f` on the circle of
/// the given radius.
pub fn invert_pgf_with<F: Fn(Complex64) -> Complex64>(
    f: F,
    n_max: usize,
    radius: f64,
    points: usize,
) -> Result<Vec<f64>> {
    if points <= n_max {
        return Err(Error::arg(format!("{points} inversion points cannot resolve {} coefficients", n_max + 1)));
    }
    if !(radius > 0.0 && radius <= 1.0) {
        return Err(Error::arg(format!("inversion radius must lie in (0, 1], got {radius}")));
    }
    let step = 2.0 * std::f64::consts::PI / points as f64;
    let mut buf: Vec<Complex64> = (0..points)
        .map(|k| f(Complex64::from_polar(radius, step * k as f64)))
        .collect();
    if buf.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::numerical("PGF is not finite on the inversion circle"));
    }
    FftPlanner::new().plan_fft_forward(points).process(&mut buf);
    let n = points as f64;
    let mut out = Vec::with_capacity(n_max + 1);
    let mut scale = 1.0;
    for (k, v) in buf.iter().take(n_max + 1).enumerate() {
        let p = v.re / n * scale;
        if p < -NEGATIVE_TOL {
            return Err(Error::numerical(format!("inverted probability p_{k} = {p:e} is negative")));
        }
        out.push(p.max(0.0));
        scale /= radius;
    }
    let mass: f64 = out.iter().sum();
    if mass > 1.0 + MASS_TOL {
        return Err(Error::numerical(format!("inverted probabilities sum to {mass}")));
    }
    Ok(out)
}

/// Total variation distance between two probability vectors, padding the
/// shorter with zeros.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    0.5 * (0..n)
        .map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

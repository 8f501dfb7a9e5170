//! Independent oracles and model generators shared by the integration
//! tests and the acceptance runner.

#![allow(dead_code)]

use nalgebra::DMatrix;
use ovq_core::numeric::linalg::spectral_radius;
use proptest::prelude::*;

use ovq_core::{Generator, MMQueueSpec, RateLawFinite, ResampledSpec};

/// Stationary level marginal of the QBD truncated at `levels` (arrivals
/// blocked at the top), by a dense linear solve of `p G = 0`, `p 1 = 1`.
pub fn truncated_ctmc(spec: &MMQueueSpec, levels: usize) -> Vec<f64> {
    let d = spec.dim();
    let n = (levels + 1) * d;
    let g = spec.generator().rates();
    let idx = |level: usize, j: usize| level * d + j;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for level in 0..=levels {
        for i in 0..d {
            let from = idx(level, i);
            for j in 0..d {
                if i != j {
                    m[(from, idx(level, j))] += g[i][j];
                }
            }
            if level < levels {
                m[(from, idx(level + 1, i))] += spec.lambda()[i];
            }
            if level > 0 {
                m[(from, idx(level - 1, i))] += spec.mu()[i];
            }
        }
    }
    for r in 0..n {
        let out: f64 = (0..n).filter(|&c| c != r).map(|c| m[(r, c)]).sum();
        m[(r, r)] = -out;
    }
    // solve Gᵀ pᵀ = 0 with the first equation replaced by normalisation
    let mut a = m.transpose();
    for c in 0..n {
        a[(0, c)] = 1.0;
    }
    let mut b = nalgebra::DVector::<f64>::zeros(n);
    b[0] = 1.0;
    let p = a.lu().solve(&b).expect("truncated generator is irreducible");
    (0..=levels).map(|l| (0..d).map(|j| p[idx(l, j)]).sum()).collect()
}

/// `P(Q = n)` of the M/M/1 queue.
pub fn geometric(rho: f64, n_max: usize) -> Vec<f64> {
    (0..=n_max).map(|n| (1.0 - rho) * rho.powi(n as i32)).collect()
}

pub fn two_point(lambda: [f64; 2], mu: [f64; 2], p: f64) -> RateLawFinite {
    RateLawFinite::from_vectors(&lambda, &mu, &[p, 1.0 - p]).unwrap()
}

pub fn table1(lambda: f64, q: f64) -> ResampledSpec {
    ResampledSpec::new(two_point([lambda, 0.0], [1.0, 1.0], 0.5), q).unwrap()
}

/// `(λ, μ, q)` for the six printed cases with `R_11, R_12, ζ_01, ζ_02`.
pub const TABLE1: [(f64, f64, [f64; 4]); 6] = [
    (1.8, 0.5, [0.963, 0.837, 0.0187, 0.0813]),
    (1.8, 1.0, [0.946, 0.854, 0.0270, 0.0730]),
    (1.8, 2.0, [0.930, 0.870, 0.0349, 0.0652]),
    (1.9, 0.5, [0.982, 0.918, 0.0088, 0.0412]),
    (1.9, 1.0, [0.974, 0.926, 0.0130, 0.0370]),
    (1.9, 2.0, [0.966, 0.934, 0.0171, 0.0330]),
];

/// Stable two-point model `(law, q)` with load in `[0.05, rho_max]`.
pub fn arb_two_point(rho_max: f64) -> impl Strategy<Value = (RateLawFinite, f64)> {
    (
        (0.0..3.0f64, 0.0..3.0f64),
        (0.2..3.0f64, 0.2..3.0f64),
        0.1..0.9f64,
        0.1..2.0f64,
        0.05..rho_max,
    )
        .prop_map(|((l1, l2), (m1, m2), p, q, rho)| {
            let base = two_point([l1 + 0.01, l2], [m1, m2], p);
            let law = base.scale_arrivals(rho / base.rho());
            (law, q)
        })
}

/// Irreducible generator on `d` states with off-diagonal rates in `(0, 2)`.
pub fn arb_generator(d: usize) -> impl Strategy<Value = Generator> {
    proptest::collection::vec(0.05..2.0f64, d * d).prop_map(move |v| {
        let mut q = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    q[i][j] = v[i * d + j];
                }
            }
            q[i][i] = -q[i].iter().sum::<f64>();
        }
        Generator::new(q).unwrap()
    })
}

/// Modulated model with `d ∈ [1, d_max]`, rates in `(0, 3)`, arrivals
/// scaled to a load drawn from `load`.
pub fn arb_modulated(d_max: usize, load: std::ops::Range<f64>) -> impl Strategy<Value = MMQueueSpec> {
    (1..=d_max).prop_flat_map(move |d| {
        (
            arb_generator(d),
            proptest::collection::vec(0.01..3.0f64, d),
            proptest::collection::vec(0.1..3.0f64, d),
            load.clone(),
        )
            .prop_map(|(g, lambda, mu, rho)| {
                let spec = MMQueueSpec::new(g, lambda, mu).unwrap();
                spec.scale_arrivals(rho / spec.rho())
            })
    })
}

fn close(what: &str, a: f64, b: f64, tol: f64) -> Result<(), String> {
    if (a - b).abs() <= tol * (1.0 + b.abs()) {
        Ok(())
    } else {
        Err(format!("{what}: {a} vs {b}"))
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

/// Invariants of the two-point transient roots, the stationary PGF and the
/// quartic `D(z)`.
pub fn check_two_point(law: &RateLawFinite, q: f64) -> Result<(), String> {
    use ovq_core::transient::{quadratic_roots, solve_two_point_stationary};
    for a in law.atoms() {
        let r = quadratic_roots(a.lambda, a.mu, q).map_err(|e| e.to_string())?;
        ensure(r.x2 > 0.0, || format!("x2 = {} not positive", r.x2))?;
        if a.lambda < a.mu {
            ensure(r.x2 < 1.0, || format!("x2 = {} not below 1", r.x2))?;
        }
        if a.lambda > 0.0 {
            ensure(r.x1 >= r.x2, || format!("x1 = {} < x2 = {}", r.x1, r.x2))?;
            close("x1 x2", r.x1 * r.x2, a.mu / a.lambda, 1e-9)?;
            close("x1 + x2", r.x1 + r.x2, (a.lambda + a.mu + q) / a.lambda, 1e-9)?;
        }
    }
    let sol = solve_two_point_stationary(law, q).map_err(|e| e.to_string())?;
    close("PGF(1)", sol.pgf(1.0), 1.0, 1e-9)?;
    let spec = ResampledSpec::new(law.clone(), q).map_err(|e| e.to_string())?;
    let qbd = ovq_core::qbd::solve_r_matrix(spec.modulated()).map_err(|e| e.to_string())?;
    close("PGF(0) vs QBD", sol.pgf(0.0), qbd.empty_probability(), 1e-7)?;

    let d = &sol.quartic;
    let mu: Vec<f64> = law.mus();
    close("D(0)", d.eval(0.0), mu[0] * mu[1], 1e-12)?;
    ensure(d.eval(1.0).abs() < 1e-10 * (1.0 + q * q), || format!("D(1) = {}", d.eval(1.0)))?;
    ensure(d.derivative().eval(1.0) > 0.0, || format!("D'(1) = {}", d.derivative().eval(1.0)))?;
    // sign changes of D on a fine grid of (0, 1) away from the edges
    let grid: Vec<f64> = (1..4000).map(|k| d.eval(k as f64 / 4000.0)).collect();
    let changes = grid.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
    ensure(changes == 1, || format!("D has {changes} sign changes in (0, 1)"))?;
    ensure(sol.z_star > 0.0 && sol.z_star < 1.0, || format!("z* = {}", sol.z_star))
}

/// Invariants of a modulated model: `πQ = 0`, the spectral radius of `R`
/// against stability and the empty-system balance `Σ μ_i ζ0_i = πμ − πλ`.
pub fn check_modulated(spec: &MMQueueSpec) -> Result<(), String> {
    let g = spec.generator();
    ensure(g.balance_residual() < 1e-10, || format!("πQ residual {}", g.balance_residual()))?;
    close("π 1", g.stationary().iter().sum(), 1.0, 1e-12)?;
    let rho = spec.rho();
    if (rho - 1.0).abs() < 0.02 {
        return Ok(());
    }
    let blocks = ovq_core::qbd::QbdBlocks::new(spec);
    let (r, _) = ovq_core::qbd::minimal_r(&blocks).map_err(|e| e.to_string())?;
    let sp = spectral_radius(&r);
    ensure(if rho < 1.0 { sp < 1.0 - 1e-9 } else { sp > 1.0 - 1e-6 }, || format!("sp(R) = {sp} at load {rho}"))?;
    if rho < 1.0 {
        let sol = ovq_core::qbd::solve_r_matrix(spec).map_err(|e| e.to_string())?;
        let lhs: f64 = sol.zeta0.iter().zip(spec.mu()).map(|(z, m)| z * m).sum();
        close("Σ μ ζ0", lhs, spec.mean_mu() - spec.mean_lambda(), 1e-8)?;
        close("total mass", sol.total_mass(), 1.0, 1e-8)?;
    }
    Ok(())
}

/// `c_AS² ≤ v_A v_S` for the flow constants and at a few finite times.
pub fn check_flows(law: &RateLawFinite, clock: &ovq_core::ClockLaw) -> Result<(), String> {
    let f = ovq_core::flow::flow_moments(&law.moments(), clock).map_err(|e| e.to_string())?;
    ensure(f.c_as * f.c_as <= f.v_a * f.v_s * (1.0 + 1e-12) + 1e-15, || {
        format!("c_AS = {} with v_A = {}, v_S = {}", f.c_as, f.v_a, f.v_s)
    })?;
    for t in [0.1, 1.0, 10.0] {
        let [_, va, vs, cas] = f.at(t).map_err(|e| e.to_string())?;
        ensure(cas * cas <= va * vs * (1.0 + 1e-12) + 1e-15, || format!("at t = {t}: c = {cas}, vA = {va}, vS = {vs}"))?;
    }
    Ok(())
}

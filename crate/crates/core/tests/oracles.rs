//! Cross-checks of each exact solver against an independent route.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Exp1};

use ovq_core::endogenous::EmbeddedChain;
use ovq_core::inversion::total_variation;
use ovq_core::qbd::{cramer_pgf, solve_r_matrix};
use ovq_core::transient::{solve_two_point_stationary, transient_pgf_at_exp_epoch};
use ovq_core::{EndogenousSpec, Generator, MMQueueSpec, PositiveLaw, ResampledSpec, ServiceLaw};

#[test]
fn two_point_inversion_matches_qbd() {
    for (lambda, q, _) in common::TABLE1 {
        let spec = common::table1(lambda, q);
        let exact = solve_two_point_stationary(spec.law(), q).unwrap().distribution(600).unwrap();
        let qbd = solve_r_matrix(spec.modulated()).unwrap().marginal(600);
        let tv = total_variation(&exact, &qbd);
        assert!(tv < 1e-8, "λ={lambda} q={q}: TV {tv:e}");
    }
}

#[test]
fn two_point_unequal_service_rates() {
    let law = common::two_point([1.2, 0.4], [2.0, 0.7], 0.35);
    let q = 0.8;
    let spec = ResampledSpec::new(law.clone(), q).unwrap();
    let a = solve_two_point_stationary(&law, q).unwrap().distribution(400).unwrap();
    let b = solve_r_matrix(spec.modulated()).unwrap().marginal(400);
    assert!(total_variation(&a, &b) < 1e-8);
}

#[test]
fn qbd_matches_truncated_chain() {
    let models = [
        MMQueueSpec::new(
            Generator::new(vec![vec![-1.0, 1.0], vec![0.5, -0.5]]).unwrap(),
            vec![1.5, 0.2],
            vec![1.0, 1.4],
        )
        .unwrap(),
        MMQueueSpec::new(
            Generator::new(vec![vec![-0.7, 0.3, 0.4], vec![1.0, -1.5, 0.5], vec![0.2, 0.2, -0.4]]).unwrap(),
            vec![0.3, 2.0, 0.8],
            vec![1.2, 1.0, 1.5],
        )
        .unwrap(),
    ];
    for spec in &models {
        assert!(spec.rho() < 0.9);
        let qbd = solve_r_matrix(spec).unwrap().marginal(400);
        let ctmc = common::truncated_ctmc(spec, 400);
        let tv = total_variation(&qbd, &ctmc);
        assert!(tv < 1e-9, "TV {tv:e}");
    }
}

#[test]
fn cramer_pgf_matches_qbd() {
    let spec = common::table1(1.8, 1.0);
    let sol = solve_r_matrix(spec.modulated()).unwrap();
    let pgf = cramer_pgf(spec.modulated(), &sol.zeta0).unwrap();
    for z in [0.1, 0.4, 0.7, 0.95, 0.999, 1.0] {
        let v = pgf.eval(z).unwrap();
        let direct = sol.pgf(z);
        assert!((v.total() - direct).abs() < 1e-7, "z={z}: {} vs {direct}", v.total());
    }
}

/// `E[z^{Q(T)}]` for an M/M/1 queue from `Q(0) = i`, `T ~ Exp(q)`.
fn mm1_transient_mc(i: usize, lambda: f64, mu: f64, q: f64, z: f64, paths: usize) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let horizon = Exp::new(q).unwrap();
    let vals: Vec<f64> = (0..paths)
        .map(|_| {
            let mut left: f64 = horizon.sample(&mut rng);
            let mut n = i;
            loop {
                let rate = lambda + if n > 0 { mu } else { 0.0 };
                let dt: f64 = Exp1.sample(&mut rng);
                let dt = dt / rate;
                if dt >= left {
                    break;
                }
                left -= dt;
                if rng.random::<f64>() * rate < lambda {
                    n += 1;
                } else {
                    n -= 1;
                }
            }
            z.powi(n as i32)
        })
        .collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn transient_pgf_matches_simulation() {
    for &(i, lambda, mu, q, z) in &[(0, 1.0, 1.0, 0.5, 0.6), (3, 0.7, 1.5, 1.0, 0.8), (1, 2.0, 1.0, 2.0, 0.3)] {
        let exact = transient_pgf_at_exp_epoch(i, lambda, mu, q, z).unwrap();
        let (mc, se) = mm1_transient_mc(i, lambda, mu, q, z, 200_000);
        assert!((exact - mc).abs() < 4.0 * se, "i={i}: {exact} vs {mc} ± {se}");
    }
}

#[test]
fn embedded_chain_mean_identity() {
    // (1−ρ) EQ = ρ(1−ρ) + ν''(1)/2 for the embedded chain
    let arrival = PositiveLaw::Discrete { values: vec![0.2, 1.1], probs: vec![0.4, 0.6] };
    let service = ServiceLaw::new(PositiveLaw::Gamma { shape: 2.0, rate: 2.5 }).unwrap();
    let spec = EndogenousSpec::new(arrival, service).unwrap();
    let chain = EmbeddedChain::new(&spec);
    let p = chain.stationary_distribution(800).unwrap();
    let mean: f64 = p.iter().enumerate().map(|(n, x)| n as f64 * x).sum();
    let rho = spec.rho();
    let want = (rho * (1.0 - rho) + 0.5 * chain.nu_dd1) / (1.0 - rho);
    assert!((mean - want).abs() < 1e-6 * want, "{mean} vs {want}");
}

#[test]
fn embedded_chain_continuous_arrival_law() {
    // Λ ~ Exp with deterministic S: Poisson mixture is geometric
    let arrival = PositiveLaw::Exponential { rate: 1.0 / 0.6 };
    let service = ServiceLaw::new(PositiveLaw::Deterministic { value: 1.0 }).unwrap();
    let chain = EmbeddedChain::new(&EndogenousSpec::new(arrival.clone(), service).unwrap());
    // offspring pgf 1/(1 + 0.6(1−z)); compare against Λ continuous, S exponential
    let gamma = ServiceLaw::new(PositiveLaw::Exponential { rate: 1.0 }).unwrap();
    let other = EmbeddedChain::new(&EndogenousSpec::new(PositiveLaw::Deterministic { value: 0.6 }, gamma).unwrap());
    for z in [0.0, 0.3, 0.9] {
        assert!((chain.nu(z).unwrap() - other.nu(z).unwrap()).abs() < 1e-12);
    }
    let a = chain.stationary_distribution(200).unwrap();
    assert!(total_variation(&a, &common::geometric(0.6, 200)) < 1e-7);
}

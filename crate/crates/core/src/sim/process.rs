//! Queue processes driven one event at a time.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use crate::model::{ClockLaw, EndogenousSpec, GeneralResampledSpec, MMQueueSpec, RateLawGeneral};

use super::rng::SimRng;

pub trait Process {
    fn phases(&self) -> usize {
        1
    }

    /// Queue length and background state.
    fn state(&self) -> (usize, usize);

    /// Applies the next event and returns the time spent in the state held
    /// before it; `∞` if no event can ever occur.
    fn advance(&mut self, rng: &mut SimRng) -> f64;
}

fn pick(cumulative: &[f64], u: f64) -> usize {
    cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1)
}

pub struct ModulatedProcess<'a> {
    spec: &'a MMQueueSpec,
    /// Per state: off-diagonal targets and cumulative rates.
    jumps: Vec<(Vec<usize>, Vec<f64>)>,
    q: usize,
    j: usize,
}

impl<'a> ModulatedProcess<'a> {
    pub fn new(spec: &'a MMQueueSpec, q: usize, j: usize) -> Self {
        let rates = spec.generator().rates();
        let jumps = (0..spec.dim())
            .map(|i| {
                let mut targets = Vec::new();
                let mut cum = Vec::new();
                let mut acc = 0.0;
                for (k, &r) in rates[i].iter().enumerate() {
                    if k != i && r > 0.0 {
                        acc += r;
                        targets.push(k);
                        cum.push(acc);
                    }
                }
                (targets, cum)
            })
            .collect();
        ModulatedProcess { spec, jumps, q, j }
    }

    /// Empty queue, background state from `π`.
    pub fn stationary(spec: &'a MMQueueSpec, rng: &mut SimRng) -> Self {
        let mut cum = Vec::with_capacity(spec.dim());
        let mut acc = 0.0;
        for p in spec.pi() {
            acc += p;
            cum.push(acc);
        }
        let j = pick(&cum, rng.random::<f64>() * acc);
        ModulatedProcess::new(spec, 0, j)
    }
}

impl Process for ModulatedProcess<'_> {
    fn phases(&self) -> usize {
        self.spec.dim()
    }

    fn state(&self) -> (usize, usize) {
        (self.q, self.j)
    }

    fn advance(&mut self, rng: &mut SimRng) -> f64 {
        let lambda = self.spec.lambda()[self.j];
        let mu = if self.q > 0 { self.spec.mu()[self.j] } else { 0.0 };
        let (targets, cum) = &self.jumps[self.j];
        let exit = cum.last().copied().unwrap_or(0.0);
        let total = lambda + mu + exit;
        if total <= 0.0 {
            return f64::INFINITY;
        }
        let e: f64 = Exp1.sample(rng);
        let u = rng.random::<f64>() * total;
        if u < lambda {
            self.q += 1;
        } else if u < lambda + mu {
            self.q -= 1;
        } else {
            self.j = targets[pick(cum, u - lambda - mu)];
        }
        e / total
    }
}

/// Arrival and potential-service Poisson streams with rates redrawn at the
/// epochs of a renewal clock.
pub struct GeneralProcess<'a> {
    law: &'a RateLawGeneral,
    clock: &'a ClockLaw,
    pub q: usize,
    pub lambda: f64,
    pub mu: f64,
    /// Time to the next resampling epoch.
    pub clock_left: f64,
    pub arrivals: u64,
    pub potential_services: u64,
}

impl<'a> GeneralProcess<'a> {
    /// Resampling process in stationarity, queue empty.
    pub fn stationary(spec: &'a GeneralResampledSpec, rng: &mut SimRng) -> Self {
        let (lambda, mu) = spec.law.sample(rng);
        let clock_left = spec.clock.law().sample_residual(rng);
        GeneralProcess {
            law: &spec.law,
            clock: &spec.clock,
            q: 0,
            lambda,
            mu,
            clock_left,
            arrivals: 0,
            potential_services: 0,
        }
    }
}

impl Process for GeneralProcess<'_> {
    fn state(&self) -> (usize, usize) {
        (self.q, 0)
    }

    fn advance(&mut self, rng: &mut SimRng) -> f64 {
        let total = self.lambda + self.mu;
        let dt = if total > 0.0 {
            let e: f64 = Exp1.sample(rng);
            e / total
        } else {
            f64::INFINITY
        };
        if dt >= self.clock_left {
            let elapsed = self.clock_left;
            (self.lambda, self.mu) = self.law.sample(rng);
            self.clock_left = self.clock.law().sample(rng);
            return elapsed;
        }
        self.clock_left -= dt;
        if rng.random::<f64>() * total < self.lambda {
            self.q += 1;
            self.arrivals += 1;
        } else {
            self.q = self.q.saturating_sub(1);
            self.potential_services += 1;
        }
        dt
    }
}

/// Embedded chain at departures; each step takes unit time.
pub struct EndogenousProcess<'a> {
    spec: &'a EndogenousSpec,
    q: usize,
}

impl<'a> EndogenousProcess<'a> {
    pub fn new(spec: &'a EndogenousSpec) -> Self {
        EndogenousProcess { spec, q: 0 }
    }
}

/// `Poisson(ΛS)` for a fresh pair `(Λ, S)`.
pub fn sample_offspring(spec: &EndogenousSpec, rng: &mut SimRng) -> usize {
    let lambda = spec.arrival.sample(rng);
    let s = spec.service.law().sample(rng);
    let mean = lambda * s;
    if mean <= 0.0 {
        return 0;
    }
    let n: f64 = Poisson::new(mean).expect("finite positive Poisson mean").sample(rng);
    n as usize
}

impl Process for EndogenousProcess<'_> {
    fn state(&self) -> (usize, usize) {
        (self.q, 0)
    }

    fn advance(&mut self, rng: &mut SimRng) -> f64 {
        self.q = self.q.saturating_sub(1) + sample_offspring(self.spec, rng);
        1.0
    }
}

//! Simulation oracles for the queue models and for reflected Brownian
//! motion.
//!
//! Replications run in parallel on the global rayon pool. Each one draws
//! from its own stream (see [`rng`]) and results are merged in replication
//! order, so output depends only on the configuration.

pub mod flows;
pub mod process;
pub mod rbm;
pub mod rng;
pub mod stats;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{EndogenousSpec, GeneralResampledSpec, MMQueueSpec, ModelDescriptor};
use process::{EndogenousProcess, GeneralProcess, ModulatedProcess, Process};
use stats::{CiMethod, ConfidenceInterval, BATCHES};

pub use flows::{simulate_flows, FlowSamples};
pub use rbm::{rbm_marginal_cdf, rbm_stationary_samples, rbm_transform_at_exponential_time, simulate_rbm, RbmConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    /// Number of events per replication (departures for the embedded chain).
    Events(u64),
    /// Simulated time per replication.
    Time(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub horizon: Horizon,
    /// Leading fraction of each replication discarded, in `[0, 0.9]`.
    pub warmup_fraction: f64,
    pub replications: usize,
    pub seed: u64,
    /// Scaled times `t` at which `(1−ρ) Q(t/(1−ρ)²)` is recorded from an
    /// empty start.
    pub trajectory_grid: Option<Vec<f64>>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { horizon: Horizon::Events(1_000_000), warmup_fraction: 0.1, replications: 1, seed: 1, trajectory_grid: None }
    }
}

impl SimConfig {
    pub fn events(n: u64, seed: u64) -> Self {
        SimConfig { horizon: Horizon::Events(n), seed, ..SimConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.9).contains(&self.warmup_fraction) {
            return Err(Error::arg(format!("warmup fraction must lie in [0, 0.9], got {}", self.warmup_fraction)));
        }
        if self.replications == 0 {
            return Err(Error::arg("at least one replication is required"));
        }
        match self.horizon {
            Horizon::Events(0) => return Err(Error::arg("horizon must be positive")),
            Horizon::Time(t) if !(t.is_finite() && t > 0.0) => {
                return Err(Error::arg(format!("time horizon must be positive, got {t}")));
            }
            _ => {}
        }
        if let Some(grid) = &self.trajectory_grid {
            if grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || grid.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::arg("trajectory grid must be nondecreasing and nonnegative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    /// Stationary queue-length histogram; time-weighted for continuous-time
    /// models, departure-weighted for the embedded chain.
    pub histogram: Vec<f64>,
    pub mean: ConfidenceInterval,
    pub variance: f64,
    pub replications: usize,
    pub events: u64,
    /// Post-warmup simulated time summed over replications.
    pub observed_time: f64,
    /// Fraction of time in each background state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub occupancy: Option<Vec<f64>>,
    /// Correlation of `1{J = i}` with `Q`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_correlation: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<TrajectorySamples>,
}

impl SimResult {
    pub fn tail(&self) -> Vec<f64> {
        stats::tail(&self.histogram)
    }
}

/// `(1−ρ) Q(t/(1−ρ)²)` on a grid, one row per replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySamples {
    pub rho: f64,
    pub t_grid: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl TrajectorySamples {
    /// Samples at grid point `k` across replications.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[k]).collect()
    }
}

/// Per-replication accumulator of weighted queue-length observations.
#[derive(Debug, Clone)]
struct Recorder {
    hist: Vec<f64>,
    phase_w: Vec<f64>,
    phase_q: Vec<f64>,
    w: f64,
    qw: f64,
    q2w: f64,
    batch_width: f64,
    batch_w: [f64; BATCHES],
    batch_qw: [f64; BATCHES],
    events: u64,
}

impl Recorder {
    fn new(phases: usize, batch_width: f64) -> Self {
        Recorder {
            hist: Vec::new(),
            phase_w: vec![0.0; phases],
            phase_q: vec![0.0; phases],
            w: 0.0,
            qw: 0.0,
            q2w: 0.0,
            batch_width,
            batch_w: [0.0; BATCHES],
            batch_qw: [0.0; BATCHES],
            events: 0,
        }
    }

    /// Queue length `q` in phase `j` for weight `w`, at `progress` into the
    /// observed window.
    fn record(&mut self, q: usize, j: usize, w: f64, progress: f64) {
        if w <= 0.0 {
            return;
        }
        if q >= self.hist.len() {
            self.hist.resize(q + 1, 0.0);
        }
        let qf = q as f64;
        self.hist[q] += w;
        self.phase_w[j] += w;
        self.phase_q[j] += w * qf;
        self.w += w;
        self.qw += w * qf;
        self.q2w += w * qf * qf;
        let b = ((progress / self.batch_width) as usize).min(BATCHES - 1);
        self.batch_w[b] += w;
        self.batch_qw[b] += w * qf;
    }

    /// The process got stuck in `(q, j)`; its long-run law is a point mass.
    fn absorb(&mut self, q: usize, j: usize) {
        let phases = self.phase_w.len();
        let events = self.events;
        *self = Recorder::new(phases, self.batch_width);
        self.events = events;
        for b in 0..BATCHES {
            self.record(q, j, 1.0, b as f64 * self.batch_width);
        }
    }
}

fn run_replication<P: Process>(mut process: P, cfg: &SimConfig, rng: &mut rng::SimRng) -> Recorder {
    let phases = process.phases();
    match cfg.horizon {
        Horizon::Events(n) => {
            let warm = (cfg.warmup_fraction * n as f64).floor() as u64;
            let observed = (n - warm).max(1) as f64;
            let mut rec = Recorder::new(phases, observed / BATCHES as f64);
            for k in 0..n {
                let (q, j) = process.state();
                let dt = process.advance(rng);
                rec.events += 1;
                if !dt.is_finite() {
                    rec.absorb(q, j);
                    break;
                }
                if k >= warm {
                    rec.record(q, j, dt, (k - warm) as f64);
                }
            }
            rec
        }
        Horizon::Time(t_end) => {
            let warm = cfg.warmup_fraction * t_end;
            let mut rec = Recorder::new(phases, (t_end - warm) / BATCHES as f64);
            let mut t = 0.0;
            while t < t_end {
                let (q, j) = process.state();
                let dt = process.advance(rng);
                rec.events += 1;
                if !dt.is_finite() {
                    rec.absorb(q, j);
                    break;
                }
                let (a, b) = (t.max(warm), (t + dt).min(t_end));
                if b > a {
                    rec.record(q, j, b - a, a - warm);
                }
                t += dt;
            }
            rec
        }
    }
}

fn merge(recs: Vec<Recorder>) -> SimResult {
    let n = recs.len();
    let len = recs.iter().map(|r| r.hist.len()).max().unwrap_or(1);
    let phases = recs[0].phase_w.len();
    let mut hist = vec![0.0; len];
    let mut phase_w = vec![0.0; phases];
    let mut phase_q = vec![0.0; phases];
    let (mut m1, mut m2) = (0.0, 0.0);
    let mut means = Vec::with_capacity(n);
    let (mut events, mut observed) = (0, 0.0);
    for r in &recs {
        let w = r.w.max(f64::MIN_POSITIVE);
        for (h, x) in hist.iter_mut().zip(&r.hist) {
            *h += x / w / n as f64;
        }
        for j in 0..phases {
            phase_w[j] += r.phase_w[j] / w / n as f64;
            phase_q[j] += r.phase_q[j] / w / n as f64;
        }
        m1 += r.qw / w / n as f64;
        m2 += r.q2w / w / n as f64;
        means.push(r.qw / w);
        events += r.events;
        observed += r.w;
    }
    let hist = stats::normalize(&hist);
    let mean = if n >= 2 {
        ConfidenceInterval::from_samples(&means, CiMethod::Replications)
    } else {
        let r = &recs[0];
        let batch: Vec<f64> =
            (0..BATCHES).filter(|&b| r.batch_w[b] > 0.0).map(|b| r.batch_qw[b] / r.batch_w[b]).collect();
        if batch.iter().all(|&x| x == batch[0]) {
            ConfidenceInterval::exact(m1)
        } else {
            let ci = ConfidenceInterval::from_samples(&batch, CiMethod::BatchMeans);
            ConfidenceInterval { estimate: m1, ..ci }
        }
    };
    let variance = (m2 - m1 * m1).max(0.0);
    let (occupancy, phase_correlation) = if phases > 1 {
        let corr = (0..phases)
            .map(|j| {
                let p = phase_w[j];
                let denom = (variance * p * (1.0 - p)).sqrt();
                if denom > 0.0 { (phase_q[j] - m1 * p) / denom } else { 0.0 }
            })
            .collect();
        (Some(phase_w), Some(corr))
    } else {
        (None, None)
    };
    SimResult {
        histogram: hist,
        mean,
        variance,
        replications: n,
        events,
        observed_time: observed,
        occupancy,
        phase_correlation,
        trajectories: None,
    }
}

fn run_all<P, F>(cfg: &SimConfig, make: F) -> Result<SimResult>
where
    P: Process,
    F: Fn(&mut rng::SimRng) -> P + Sync,
{
    cfg.validate()?;
    let recs: Vec<Recorder> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(cfg.seed, k);
            let p = make(&mut rng);
            run_replication(p, cfg, &mut rng)
        })
        .collect();
    Ok(merge(recs))
}

fn trajectories<P, F>(rho: f64, grid: &[f64], cfg: &SimConfig, make: F) -> Result<TrajectorySamples>
where
    P: Process,
    F: Fn(&mut rng::SimRng) -> P + Sync,
{
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::arg(format!("scaled trajectories need a load in (0, 1), got {rho}")));
    }
    let scale = 1.0 - rho;
    let times: Vec<f64> = grid.iter().map(|t| t / (scale * scale)).collect();
    // same rule as the stationary runs, on a disjoint block of streams
    let offset = 1u64 << 40;
    let values = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(cfg.seed, offset + k);
            let mut p = make(&mut rng);
            let mut row = Vec::with_capacity(times.len());
            let mut t = 0.0;
            let mut next = 0;
            while next < times.len() {
                let (q, _) = p.state();
                let dt = p.advance(&mut rng);
                while next < times.len() && times[next] < t + dt {
                    row.push(scale * q as f64);
                    next += 1;
                }
                t += dt;
            }
            row
        })
        .collect();
    Ok(TrajectorySamples { rho, t_grid: grid.to_vec(), values })
}

/// Competing exponential clocks for a Markov-modulated M/M/1 queue,
/// started empty with the background state drawn from `π`.
pub fn simulate_modulated(spec: &MMQueueSpec, cfg: &SimConfig) -> Result<SimResult> {
    let mut result = run_all(cfg, |rng| ModulatedProcess::stationary(spec, rng))?;
    if let Some(grid) = &cfg.trajectory_grid {
        result.trajectories = Some(trajectories(spec.rho(), grid, cfg, |rng| ModulatedProcess::stationary(spec, rng))?);
    }
    Ok(result)
}

/// Event-driven simulation with a renewal resampling clock whose first
/// epoch is drawn from the residual-life law.
pub fn simulate_general_resampled(spec: &GeneralResampledSpec, cfg: &SimConfig) -> Result<SimResult> {
    let mut result = run_all(cfg, |rng| GeneralProcess::stationary(spec, rng))?;
    if let Some(grid) = &cfg.trajectory_grid {
        result.trajectories = Some(trajectories(spec.rho(), grid, cfg, |rng| GeneralProcess::stationary(spec, rng))?);
    }
    Ok(result)
}

/// The embedded chain `Q_{n+1} = (Q_n − 1)⁺ + Poisson(Λ_{n+1} S_{n+1})`
/// from `Q_0 = 0`; the horizon counts departures.
pub fn simulate_endogenous(spec: &EndogenousSpec, cfg: &SimConfig) -> Result<SimResult> {
    let mut result = run_all(cfg, |_| EndogenousProcess::new(spec))?;
    if let Some(grid) = &cfg.trajectory_grid {
        result.trajectories = Some(trajectories(spec.rho(), grid, cfg, |_| EndogenousProcess::new(spec))?);
    }
    Ok(result)
}

pub fn simulate(model: &ModelDescriptor, cfg: &SimConfig) -> Result<SimResult> {
    match model {
        ModelDescriptor::Modulated(m) => simulate_modulated(m, cfg),
        ModelDescriptor::Resampled(r) => simulate_modulated(r.modulated(), cfg),
        ModelDescriptor::General(g) => simulate_general_resampled(g, cfg),
        ModelDescriptor::Endogenous(e) => simulate_endogenous(e, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Generator, PositiveLaw, RateLawFinite, ResampledSpec, ServiceLaw};

    fn mm1(lambda: f64) -> MMQueueSpec {
        MMQueueSpec::new(Generator::new(vec![vec![0.0]]).unwrap(), vec![lambda], vec![1.0]).unwrap()
    }

    #[test]
    fn mm1_empty_probability() {
        let r = simulate_modulated(&mm1(0.5), &SimConfig::events(2_000_000, 3)).unwrap();
        assert!((r.histogram.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((r.histogram[0] - 0.5).abs() < 0.01, "{}", r.histogram[0]);
        assert!(r.mean.contains(1.0) || (r.mean.estimate - 1.0).abs() < 4.0 * r.mean.std_error);
        assert_eq!(r.mean.method, CiMethod::BatchMeans);
    }

    #[test]
    fn deterministic_given_seed() {
        let spec = ResampledSpec::new(RateLawFinite::from_vectors(&[1.8, 0.0], &[1.0, 1.0], &[0.5, 0.5]).unwrap(), 1.0)
            .unwrap();
        let cfg = SimConfig { replications: 3, ..SimConfig::events(20_000, 11) };
        let a = simulate(&ModelDescriptor::Resampled(spec.clone()), &cfg).unwrap();
        let b = simulate(&ModelDescriptor::Resampled(spec), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mean.method, CiMethod::Replications);
    }

    #[test]
    fn no_arrivals_stays_empty() {
        let spec = EndogenousSpec::new(
            PositiveLaw::Deterministic { value: 0.0 },
            ServiceLaw::new(PositiveLaw::Exponential { rate: 1.0 }).unwrap(),
        )
        .unwrap();
        let r = simulate_endogenous(&spec, &SimConfig::events(1000, 1)).unwrap();
        assert_eq!(r.histogram, vec![1.0]);
        assert_eq!(r.mean.estimate, 0.0);
    }

    #[test]
    fn absorbing_state_is_a_point_mass() {
        let r = simulate_modulated(&mm1(0.0), &SimConfig::events(100, 1)).unwrap();
        assert_eq!(r.histogram, vec![1.0]);
    }

    #[test]
    fn time_horizon_and_trajectories() {
        let cfg = SimConfig {
            horizon: Horizon::Time(5_000.0),
            replications: 4,
            trajectory_grid: Some(vec![0.0, 0.5, 1.0]),
            ..SimConfig::default()
        };
        let r = simulate_modulated(&mm1(0.5), &cfg).unwrap();
        let traj = r.trajectories.unwrap();
        assert_eq!(traj.values.len(), 4);
        assert!(traj.column(0).iter().all(|&x| x == 0.0));
        assert!((r.observed_time - 4.0 * 4_500.0).abs() < 1e-6);
    }

    #[test]
    fn config_validation() {
        let bad = SimConfig { warmup_fraction: 0.95, ..SimConfig::default() };
        assert!(bad.validate().is_err());
        let bad = SimConfig { replications: 0, ..SimConfig::default() };
        assert!(bad.validate().is_err());
    }
}

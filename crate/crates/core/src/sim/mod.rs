//! Seeded Monte Carlo checks of the model's stochastic assumptions, plus an
//! event-driven authentication run that counts messages.
//!
//! All randomness comes from ChaCha8 streams derived from the user seed and
//! a `(purpose, lane)` pair, so independent processes never share draws and
//! parallel results do not depend on the thread count.

mod compare;
mod engine;

pub use compare::{compare_q_sweep, compare_to_analytic, ComparisonReport, ComparisonRow, RowStatus};
pub use engine::{run_sim, SimStats, TraceBucket, WorldConstants, WORLD};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::keychain::KeychainError;
use crate::model::{ModelError, NetworkConfig};

/// Trials per parallel block. Fixed, so merged results are independent of
/// how blocks are scheduled.
pub const BLOCK_TRIALS: u64 = 1 << 14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation settings: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Keychain(#[from] KeychainError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    /// Monte Carlo trials for the estimators.
    pub trials: u64,
    /// End of the event-driven run.
    pub horizon: f64,
    /// Window for per-window count statistics and trace buckets.
    pub unit_window: f64,
    /// Mean vehicle dwell time; `None` keeps every vehicle until the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_dwell: Option<f64>,
    /// U_T bound used by the refresh policy; `None` means `t₂ − t₁`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fs_window: Option<f64>,
}

impl SimConfig {
    pub fn new(seed: u64, trials: u64, horizon: f64, unit_window: f64) -> Self {
        Self {
            seed,
            trials,
            horizon,
            unit_window,
            mean_dwell: None,
            fs_window: None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        let err = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if self.trials < 1 {
            return err("trials ≥ 1");
        }
        if !positive(self.horizon) {
            return err("horizon > 0");
        }
        if !positive(self.unit_window) {
            return err("unit_window > 0");
        }
        if self.mean_dwell.is_some_and(|d| !positive(d)) {
            return err("mean_dwell > 0");
        }
        if self.fs_window.is_some_and(|w| !positive(w)) {
            return err("fs_window > 0");
        }
        Ok(())
    }
}

/// Independent random streams. Each value selects a disjoint family of
/// ChaCha8 streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub(crate) enum Purpose {
    PoissonCounts = 1,
    Attachment = 2,
    Arrivals = 3,
    VehicleAttributes = 4,
    KeyUpdates = 5,
}

pub(crate) fn stream_rng(seed: u64, purpose: Purpose, lane: u64) -> ChaCha8Rng {
    debug_assert!(lane < 1 << 56);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 56) | lane);
    rng
}

/// A probability estimate from `trials` Bernoulli outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
    pub trials: u64,
}

impl Estimate {
    /// Frequency `k/n` with stderr `√(p̃(1−p̃)/n)`, `p̃ = (k+1)/(n+2)`. The
    /// smoothed `p̃` keeps the stderr positive when `k ∈ {0, n}`.
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        assert!(trials > 0 && successes <= trials);
        let n = trials as f64;
        let smoothed = (successes as f64 + 1.0) / (n + 2.0);
        Self {
            estimate: successes as f64 / n,
            stderr: (smoothed * (1.0 - smoothed) / n).sqrt(),
            trials,
        }
    }

    /// `|estimate − p| / σ`, with σ the larger of the empirical stderr and
    /// the binomial stderr under `p`.
    pub fn z_score(&self, p: f64) -> f64 {
        let null = (p * (1.0 - p) / self.trials as f64).sqrt();
        let sigma = self.stderr.max(null);
        (self.estimate - p).abs() / sigma
    }
}

/// Counts per trial, `counts[k]` = trials with exactly `k` events.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountHistogram {
    pub counts: Vec<u64>,
    pub trials: u64,
}

impl CountHistogram {
    fn empty() -> Self {
        Self { counts: Vec::new(), trials: 0 }
    }

    fn record(&mut self, k: usize) {
        if self.counts.len() <= k {
            self.counts.resize(k + 1, 0);
        }
        self.counts[k] += 1;
        self.trials += 1;
    }

    fn merge(mut self, other: Self) -> Self {
        if self.counts.len() < other.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self.trials += other.trials;
        self
    }

    pub fn count(&self, k: usize) -> u64 {
        self.counts.get(k).copied().unwrap_or(0)
    }

    pub fn frequency(&self, k: usize) -> Estimate {
        Estimate::from_counts(self.count(k), self.trials)
    }

    pub fn mean(&self) -> f64 {
        let total: u64 = self.counts.iter().enumerate().map(|(k, &c)| k as u64 * c).sum();
        total as f64 / self.trials as f64
    }

    /// Sample standard error of [`CountHistogram::mean`].
    pub fn mean_stderr(&self) -> f64 {
        let n = self.trials as f64;
        let mean = self.mean();
        let ss: f64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(k, &c)| c as f64 * (k as f64 - mean).powi(2))
            .sum();
        if self.trials < 2 {
            return f64::INFINITY;
        }
        (ss / (n - 1.0) / n).sqrt()
    }
}

fn block_ranges(trials: u64) -> Vec<(u64, u64)> {
    let blocks = trials.div_ceil(BLOCK_TRIALS);
    (0..blocks)
        .map(|b| (b, BLOCK_TRIALS.min(trials - b * BLOCK_TRIALS)))
        .collect()
}

/// Events of a rate-`rate` Poisson process in `[0, window]`, one count per
/// trial, built from exponential inter-arrival times.
pub fn sample_poisson_counts(rate: f64, window: f64, sim: &SimConfig) -> Result<CountHistogram, SimError> {
    sim.validate()?;
    if !(rate.is_finite() && rate > 0.0) {
        return Err(SimError::InvalidConfig(format!("rate = {rate} must be positive")));
    }
    if !(window.is_finite() && window > 0.0) {
        return Err(SimError::InvalidConfig(format!("window = {window} must be positive")));
    }
    let gap = Exp::new(rate).expect("positive rate");
    let hist = block_ranges(sim.trials)
        .into_par_iter()
        .map(|(block, n)| {
            let mut rng = stream_rng(sim.seed, Purpose::PoissonCounts, block);
            let mut h = CountHistogram::empty();
            for _ in 0..n {
                let mut t = gap.sample(&mut rng);
                let mut k = 0;
                while t <= window {
                    k += 1;
                    t += gap.sample(&mut rng);
                }
                h.record(k);
            }
            h
        })
        .reduce(CountHistogram::empty, CountHistogram::merge);
    Ok(hist)
}

/// One attachment trial: each of N devices picks one of E entities
/// uniformly; a loss is when none picks one of the n⁻¹ reachable entities.
pub(crate) fn attachment_lost(cfg: &NetworkConfig, rng: &mut impl Rng) -> bool {
    let reachable = cfg.reachable_hops_inv;
    (0..cfg.n_devices).all(|_| rng.random_range(0..cfg.n_entities) >= reachable)
}

/// Monte Carlo estimate of the connectivity-loss probability P.
pub fn estimate_connectivity_loss(cfg: &NetworkConfig, sim: &SimConfig) -> Result<Estimate, SimError> {
    cfg.validate()?;
    sim.validate()?;
    let losses: u64 = block_ranges(sim.trials)
        .into_par_iter()
        .map(|(block, n)| {
            let mut rng = stream_rng(sim.seed, Purpose::Attachment, block);
            (0..n).filter(|_| attachment_lost(cfg, &mut rng)).count() as u64
        })
        .sum();
    Ok(Estimate::from_counts(losses, sim.trials))
}

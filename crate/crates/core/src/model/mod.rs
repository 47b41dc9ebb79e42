//! The analytic core.
//!
//! Sustainability `S_N` is the ratio of key-update activity to the product of
//! vehicles in range, connectivity-loss probability and protocol passes.
//! With key updates and vehicle arrivals both Poisson, the per-time ratio of
//! their pmfs integrates to an `Ei` difference ([`sustainability_closed_form`]);
//! [`sustainability_quadrature`] integrates the same ratio numerically and is
//! its oracle. Overheads, fail-safe points and the optimization constraints
//! build on the same configuration.

mod failsafe;
mod feasibility;
mod overhead;
mod sustainability;

pub use failsafe::{
    failsafe_point, sustainability_rate, Criterion, FailSafeReport, FAILSAFE_SCAN_POINTS, FAILSAFE_TOLERANCE,
};
pub use feasibility::{check_feasibility, key_utilization_window, OptimizationConstraints};
pub use overhead::{
    message_overhead, message_overhead_until, signaling_overhead, signaling_overhead_with, SignalingOverhead,
};
pub use sustainability::{
    connectivity_loss_probability, key_update_pmf, sustainability_asymptotic, sustainability_closed_form,
    sustainability_quadrature, sustainability_report, vehicle_count_density, vehicle_pmf, DensityProfile,
    SustainabilityReport, QUADRATURE_TOLERANCE,
};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{NumericsError, RealInterval};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("infeasible configuration: {}", join_clauses(.0))]
    Infeasible(Vec<Clause>),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no {0} threshold configured")]
    MissingThreshold(Criterion),
    #[error("no safe window: fail-safe point is undefined")]
    NoSafeWindow,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

impl ModelError {
    /// True for errors caused by the configuration rather than by numerics.
    pub fn is_config_error(&self) -> bool {
        !matches!(self, ModelError::Numerics(_))
    }
}

fn join_clauses(clauses: &[Clause]) -> String {
    clauses.iter().map(Clause::to_string).collect::<Vec<_>>().join("; ")
}

/// A named constraint of the model. `Display` gives the textual form used in
/// error messages and CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Clause {
    DevicesPositive,
    EntitiesPositive,
    PassesPositive,
    UpdateRatePositive,
    ArrivalRatePositive,
    RateGap,
    EntityGap,
    HopsDistinctFromEntities,
    WindowStartPositive,
    WindowOrdered,
    InitialOverheadPositive,
    SustainabilityThresholdPositive,
    OverheadThresholdPositive,
    AlphaPrimeTimePositive,
    DensityPositive,
    DensityBounded,
    MinimumUpdates,
    PairCountPositive,
    PairCountBounded,
    UtilizationPositive,
    UtilizationBeforeSafe,
    SafeBeforeAttack,
    SafetyMarginPositive,
}

impl Clause {
    pub fn as_str(&self) -> &'static str {
        match self {
            Clause::DevicesPositive => "N ≥ 1",
            Clause::EntitiesPositive => "E ≥ 1",
            Clause::PassesPositive => "Q ≥ 1",
            Clause::UpdateRatePositive => "α > 0",
            Clause::ArrivalRatePositive => "β > 0",
            Clause::RateGap => "β − α > 0",
            Clause::EntityGap => "E − n⁻¹ > 0",
            Clause::HopsDistinctFromEntities => "n⁻¹ ≠ E",
            Clause::WindowStartPositive => "t₁ > 0",
            Clause::WindowOrdered => "t₂ − t₁ > 0",
            Clause::InitialOverheadPositive => "O_b > 0",
            Clause::SustainabilityThresholdPositive => "S_N^TH > 0",
            Clause::OverheadThresholdPositive => "M_O^TH > 0",
            Clause::AlphaPrimeTimePositive => "α′ evaluation time > 0",
            Clause::DensityPositive => "0 < D",
            Clause::DensityBounded => "D ≤ N",
            Clause::MinimumUpdates => "U_N ≥ U′_N",
            Clause::PairCountPositive => "0 < n⁻¹(n⁻¹−1)/2",
            Clause::PairCountBounded => "n⁻¹(n⁻¹−1)/2 ≤ E(E−1)/2",
            Clause::UtilizationPositive => "0 < t_u",
            Clause::UtilizationBeforeSafe => "t_u < t′",
            Clause::SafeBeforeAttack => "t′ ≤ t",
            Clause::SafetyMarginPositive => "ε > 0",
        }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the time factor of the signaling overhead is evaluated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverheadForm {
    /// `∫_{t₁}^{t₂} (1−α′)ᵗ dt`, the exponential overhead model integrated.
    #[default]
    Integral,
    /// The printed ratio of logarithms, which reduces to `t₂ − t₁`.
    Printed,
}

impl OverheadForm {
    pub fn as_str(&self) -> &'static str {
        match self {
            OverheadForm::Integral => "integral",
            OverheadForm::Printed => "printed",
        }
    }
}

/// All model parameters.
///
/// Fields are public and unchecked so that infeasible configurations can be
/// represented and reported; every operation validates before computing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    /// N: end devices (vehicles, UEs, users).
    pub n_devices: u32,
    /// E: overall involved entities.
    pub n_entities: u32,
    /// n⁻¹: inverse of the hop count between vehicle and serving entity.
    pub reachable_hops_inv: u32,
    /// Q: protocol passes per authentication.
    pub passes: u32,
    /// α: key updates per unit time.
    pub update_rate: f64,
    /// β: vehicle arrivals per unit time.
    pub arrival_rate: f64,
    pub t1: f64,
    pub t2: f64,
    /// O_b: overhead of the initial authentication, in messages.
    #[serde(default = "default_o_b")]
    pub o_b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_n_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_o_threshold: Option<f64>,
    #[serde(default)]
    pub overhead_interpretation: OverheadForm,
    /// Time at which α′ = α/t is fixed; `None` means t₁.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_prime_at: Option<f64>,
}

fn default_o_b() -> f64 {
    1.0
}

impl NetworkConfig {
    /// The parameter-study baseline: N = 10, n⁻¹ = 5, t₁ = 5 s, t₂ = 105 s,
    /// α = β/2, O_b = 1, no thresholds.
    pub fn baseline(arrival_rate: f64, passes: u32, n_entities: u32) -> Self {
        Self {
            n_devices: 10,
            n_entities,
            reachable_hops_inv: 5,
            passes,
            update_rate: arrival_rate / 2.0,
            arrival_rate,
            t1: 5.0,
            t2: 105.0,
            o_b: 1.0,
            s_n_threshold: None,
            m_o_threshold: None,
            overhead_interpretation: OverheadForm::Integral,
            alpha_prime_at: None,
        }
    }

    /// Every violated configuration invariant, in a fixed order.
    pub fn violations(&self) -> Vec<Clause> {
        let mut v = Vec::new();
        let mut check = |ok: bool, clause| {
            if !ok {
                v.push(clause);
            }
        };
        let hops = self.reachable_hops_inv;
        check(self.n_devices >= 1, Clause::DevicesPositive);
        check(self.n_entities >= 1, Clause::EntitiesPositive);
        check(self.passes >= 1, Clause::PassesPositive);
        check(hops >= 2, Clause::PairCountPositive);
        check(positive(self.update_rate), Clause::UpdateRatePositive);
        check(positive(self.arrival_rate), Clause::ArrivalRatePositive);
        check(self.arrival_rate - self.update_rate > 0.0, Clause::RateGap);
        check(self.n_entities > hops, Clause::EntityGap);
        check(hops != self.n_entities, Clause::HopsDistinctFromEntities);
        check(positive(self.t1), Clause::WindowStartPositive);
        check(self.t2.is_finite() && self.t2 - self.t1 > 0.0, Clause::WindowOrdered);
        check(positive(self.o_b), Clause::InitialOverheadPositive);
        check(self.s_n_threshold.is_none_or(positive), Clause::SustainabilityThresholdPositive);
        check(self.m_o_threshold.is_none_or(positive), Clause::OverheadThresholdPositive);
        check(self.alpha_prime_at.is_none_or(positive), Clause::AlphaPrimeTimePositive);
        v
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ModelError::Infeasible(v))
        }
    }

    pub fn window(&self) -> Result<RealInterval, ModelError> {
        Ok(RealInterval::new(self.t1, self.t2)?)
    }

    /// `(β − α)`, the exponent scale of the pmf ratio.
    pub fn rate_gap(&self) -> f64 {
        self.arrival_rate - self.update_rate
    }

    /// `n⁻¹/E`.
    pub fn reach_fraction(&self) -> f64 {
        self.reachable_hops_inv as f64 / self.n_entities as f64
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

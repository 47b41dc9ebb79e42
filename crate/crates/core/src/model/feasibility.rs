use serde::{Deserialize, Serialize};

use super::{Clause, FailSafeReport, ModelError, NetworkConfig};

/// Timing and update-count bounds of the scheduling problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizationConstraints {
    /// t: time an adversary needs to launch an attack.
    pub attack_time: f64,
    /// t′: minimum time for which keys should not be changed.
    pub safe_time: f64,
    /// t_u: planned key-utilization time.
    pub utilization_time: f64,
    /// U′_N: mandatory number of key updates.
    #[serde(default)]
    pub min_updates: u64,
    /// ε: margin kept between t_u and t′.
    #[serde(default = "default_margin")]
    pub safety_margin: f64,
}

fn default_margin() -> f64 {
    1.0
}

fn push_unique(v: &mut Vec<Clause>, c: Clause) {
    if !v.contains(&c) {
        v.push(c);
    }
}

/// Every violated clause of the configuration and the optimization
/// constraints. An empty list means the setup is feasible.
///
/// `density_count` overrides D; by default D is the expected number of
/// arrivals by t₁, `β·t₁`, clipped to `[0, N]`.
pub fn check_feasibility(
    cfg: &NetworkConfig,
    opt: &OptimizationConstraints,
    observed_updates: u64,
    density_count: Option<f64>,
) -> Vec<Clause> {
    let mut v = cfg.violations();
    let n = cfg.n_devices as f64;

    let d = density_count.unwrap_or_else(|| (cfg.arrival_rate * cfg.t1).clamp(0.0, n));
    if !(d > 0.0) {
        push_unique(&mut v, Clause::DensityPositive);
    }
    if !(d <= n) {
        push_unique(&mut v, Clause::DensityBounded);
    }

    if observed_updates < opt.min_updates {
        push_unique(&mut v, Clause::MinimumUpdates);
    }

    let pairs = |k: u32| k as u64 * (k as u64).saturating_sub(1) / 2;
    let hop_pairs = pairs(cfg.reachable_hops_inv);
    if hop_pairs == 0 {
        push_unique(&mut v, Clause::PairCountPositive);
    }
    if hop_pairs > pairs(cfg.n_entities) {
        push_unique(&mut v, Clause::PairCountBounded);
    }
    if cfg.reachable_hops_inv == cfg.n_entities {
        push_unique(&mut v, Clause::HopsDistinctFromEntities);
    }

    if !(opt.utilization_time > 0.0) {
        push_unique(&mut v, Clause::UtilizationPositive);
    }
    if !(opt.utilization_time < opt.safe_time) {
        push_unique(&mut v, Clause::UtilizationBeforeSafe);
    }
    if !(opt.safe_time <= opt.attack_time) {
        push_unique(&mut v, Clause::SafeBeforeAttack);
    }
    if !(opt.safety_margin > 0.0) {
        push_unique(&mut v, Clause::SafetyMarginPositive);
    }
    v
}

/// Recommended key-utilization time `t_u = min(F_S, t′ − ε)`.
pub fn key_utilization_window(opt: &OptimizationConstraints, fs: &FailSafeReport) -> Result<f64, ModelError> {
    let mut bad = Vec::new();
    if !(opt.safety_margin > 0.0) {
        bad.push(Clause::SafetyMarginPositive);
    }
    if !(opt.safe_time <= opt.attack_time) {
        bad.push(Clause::SafeBeforeAttack);
    }
    if !bad.is_empty() {
        return Err(ModelError::Infeasible(bad));
    }
    let fail_safe = fs.fail_safe_time.ok_or(ModelError::NoSafeWindow)?;
    let t_u = fail_safe.min(opt.safe_time - opt.safety_margin);
    if t_u > 0.0 {
        Ok(t_u)
    } else {
        Err(ModelError::Infeasible(vec![Clause::UtilizationPositive]))
    }
}

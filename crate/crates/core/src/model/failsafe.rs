use std::fmt;

use serde::{Deserialize, Serialize};

use super::{connectivity_loss_probability, message_overhead_until, ModelError, NetworkConfig};

/// Grid points of the coarse scan that brackets the first threshold crossing.
pub const FAILSAFE_SCAN_POINTS: usize = 201;

/// Width of the final bisection bracket, in time units.
pub const FAILSAFE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Keys stay valid while the instantaneous sustainability rate is at or
    /// above `S_N^TH`.
    #[serde(alias = "sustainability")]
    SustainabilityRate,
    /// Keys stay valid while the cumulative message overhead since t₁ is at
    /// or below `M_O^TH`.
    #[serde(alias = "overhead")]
    MessageOverhead,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::SustainabilityRate => "sustainability",
            Criterion::MessageOverhead => "overhead",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailSafeReport {
    /// F_S; `None` when the criterion already fails at t₁.
    pub fail_safe_time: Option<f64>,
    pub criterion: Criterion,
    pub threshold_used: f64,
    /// `(t, criterion value)` on the coarse scan grid.
    pub scan_points: Vec<(f64, f64)>,
}

/// `s(τ) = α²·e^{(β−α)/τ} / (2βτ·N·P·Q)`: the sustainability integrand
/// normalised per unit time.
pub fn sustainability_rate(cfg: &NetworkConfig, tau: f64) -> Result<f64, ModelError> {
    let p = connectivity_loss_probability(cfg)?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(ModelError::Domain(format!("τ = {tau} must be positive")));
    }
    let (alpha, beta) = (cfg.update_rate, cfg.arrival_rate);
    let norm = cfg.n_devices as f64 * p * cfg.passes as f64;
    Ok(alpha * alpha * (cfg.rate_gap() / tau).exp() / (2.0 * beta * tau * norm))
}

/// Latest t ∈ [t₁, t₂] up to which the chosen criterion holds throughout.
///
/// A coarse grid locates the first failing point; bisection then narrows
/// the crossing to [`FAILSAFE_TOLERANCE`], returning the passing end of the
/// bracket.
pub fn failsafe_point(cfg: &NetworkConfig, criterion: Criterion) -> Result<FailSafeReport, ModelError> {
    cfg.validate()?;
    let threshold = match criterion {
        Criterion::SustainabilityRate => cfg.s_n_threshold,
        Criterion::MessageOverhead => cfg.m_o_threshold,
    }
    .ok_or(ModelError::MissingThreshold(criterion))?;

    let value = |t: f64| match criterion {
        Criterion::SustainabilityRate => sustainability_rate(cfg, t),
        Criterion::MessageOverhead => message_overhead_until(cfg, t),
    };
    let holds = |v: f64| match criterion {
        Criterion::SustainabilityRate => v >= threshold,
        Criterion::MessageOverhead => v <= threshold,
    };

    let (t1, t2) = (cfg.t1, cfg.t2);
    let step = (t2 - t1) / (FAILSAFE_SCAN_POINTS - 1) as f64;
    let mut scan_points = Vec::with_capacity(FAILSAFE_SCAN_POINTS);
    let mut first_failure = None;
    for i in 0..FAILSAFE_SCAN_POINTS {
        let t = if i + 1 == FAILSAFE_SCAN_POINTS { t2 } else { t1 + i as f64 * step };
        let v = value(t)?;
        scan_points.push((t, v));
        if first_failure.is_none() && !holds(v) {
            first_failure = Some(i);
        }
    }

    let fail_safe_time = match first_failure {
        None => Some(t2),
        Some(0) => None,
        Some(i) => {
            let (mut lo, mut hi) = (scan_points[i - 1].0, scan_points[i].0);
            while hi - lo > FAILSAFE_TOLERANCE {
                let mid = 0.5 * (lo + hi);
                if holds(value(mid)?) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Some(lo)
        }
    };

    Ok(FailSafeReport {
        fail_safe_time,
        criterion,
        threshold_used: threshold,
        scan_points,
    })
}

use serde::Serialize;

use super::{ModelError, NetworkConfig};
use crate::numerics::{exp_integral_ei, integrate_adaptive, RealInterval};

/// Relative tolerance of the quadrature route.
pub const QUADRATURE_TOLERANCE: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SustainabilityReport {
    pub closed_form: f64,
    pub quadrature: f64,
    pub asymptotic: f64,
    /// `|closed_form − quadrature| / |quadrature|`.
    pub relative_gap: f64,
}

/// Vehicle density over a radial support; integrates to the number of
/// vehicles in range.
pub struct DensityProfile {
    density: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    support: RealInterval,
}

impl DensityProfile {
    pub fn new(density: impl Fn(f64) -> f64 + Send + Sync + 'static, support: RealInterval) -> Self {
        Self {
            density: Box::new(density),
            support,
        }
    }

    pub fn constant(per_metre: f64, support: RealInterval) -> Self {
        Self::new(move |_| per_metre, support)
    }

    /// Piecewise-linear density rising from zero at the ends to `peak` at
    /// the midpoint of the support.
    pub fn triangular(peak: f64, support: RealInterval) -> Self {
        let (lo, mid, hi) = (support.lo(), support.midpoint(), support.hi());
        Self::new(
            move |x| {
                if x <= mid {
                    peak * (x - lo) / (mid - lo)
                } else {
                    peak * (hi - x) / (hi - mid)
                }
            },
            support,
        )
    }

    pub fn support(&self) -> RealInterval {
        self.support
    }

    pub fn density_at(&self, x: f64) -> f64 {
        (self.density)(x)
    }
}

impl std::fmt::Debug for DensityProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DensityProfile").field("support", &self.support).finish_non_exhaustive()
    }
}

/// `P = (1 − n⁻¹/E)^N`, the probability that none of the N devices reaches a
/// serving entity.
pub fn connectivity_loss_probability(cfg: &NetworkConfig) -> Result<f64, ModelError> {
    cfg.validate()?;
    Ok((1.0 - cfg.reach_fraction()).powi(cfg.n_devices as i32))
}

fn check_time(t: f64) -> Result<(), ModelError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(ModelError::Domain(format!("time must be positive and finite, got {t}")))
    }
}

/// Poisson probability of exactly two key updates at mean `α/t`.
pub fn key_update_pmf(alpha: f64, t: f64) -> Result<f64, ModelError> {
    check_time(t)?;
    let lambda = alpha / t;
    Ok((-lambda).exp() * lambda * lambda / 2.0)
}

/// Poisson probability of exactly one vehicle at mean `β/t`.
pub fn vehicle_pmf(beta: f64, t: f64) -> Result<f64, ModelError> {
    check_time(t)?;
    let lambda = beta / t;
    Ok((-lambda).exp() * lambda)
}

/// `D = ∫ density` over the profile's support.
pub fn vehicle_count_density(profile: &DensityProfile) -> Result<f64, ModelError> {
    let negative = std::cell::Cell::new(None);
    let r = integrate_adaptive(
        |x| {
            let d = profile.density_at(x);
            if d < 0.0 && negative.get().is_none() {
                negative.set(Some(x));
            }
            d
        },
        profile.support(),
        1e-12,
    )?;
    if let Some(x) = negative.get() {
        return Err(ModelError::Domain(format!("density is negative at x = {x}")));
    }
    Ok(r.value)
}

fn normaliser(cfg: &NetworkConfig) -> Result<f64, ModelError> {
    let p = connectivity_loss_probability(cfg)?;
    Ok(cfg.n_devices as f64 * p * cfg.passes as f64)
}

/// `S_N = α²/(2βN·P·Q) · (Ei((β−α)/t₁) − Ei((β−α)/t₂))`.
pub fn sustainability_closed_form(cfg: &NetworkConfig) -> Result<f64, ModelError> {
    let norm = normaliser(cfg)?;
    let (alpha, beta, c) = (cfg.update_rate, cfg.arrival_rate, cfg.rate_gap());
    let ei_span = exp_integral_ei(c / cfg.t1)? - exp_integral_ei(c / cfg.t2)?;
    Ok(alpha * alpha / (2.0 * beta * norm) * ei_span)
}

/// `S_N = 1/(N·P·Q) · ∫_{t₁}^{t₂} pmf₂(α/t) / pmf₁(β/t) dt`, integrated
/// numerically. The pmf ratio is formed in log space so large rates do not
/// underflow either pmf.
pub fn sustainability_quadrature(cfg: &NetworkConfig) -> Result<f64, ModelError> {
    let norm = normaliser(cfg)?;
    let window = cfg.window()?;
    let (alpha, beta) = (cfg.update_rate, cfg.arrival_rate);
    let ln2 = std::f64::consts::LN_2;
    let integrand = |t: f64| {
        let (la, lb) = (alpha / t, beta / t);
        let ln_updates = -la + 2.0 * la.ln() - ln2;
        let ln_vehicles = -lb + lb.ln();
        (ln_updates - ln_vehicles).exp()
    };
    let r = integrate_adaptive(integrand, window, QUADRATURE_TOLERANCE)?;
    Ok(r.value / norm)
}

/// The large-rate limit `α/β`.
pub fn sustainability_asymptotic(cfg: &NetworkConfig) -> f64 {
    cfg.update_rate / cfg.arrival_rate
}

pub fn sustainability_report(cfg: &NetworkConfig) -> Result<SustainabilityReport, ModelError> {
    let closed_form = sustainability_closed_form(cfg)?;
    let quadrature = sustainability_quadrature(cfg)?;
    Ok(SustainabilityReport {
        closed_form,
        quadrature,
        asymptotic: sustainability_asymptotic(cfg),
        relative_gap: ((closed_form - quadrature) / quadrature).abs(),
    })
}

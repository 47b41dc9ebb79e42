use serde::Serialize;

use super::{connectivity_loss_probability, ModelError, NetworkConfig, OverheadForm};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalingOverhead {
    /// O_S, in messages.
    pub value: f64,
    pub form: OverheadForm,
    /// α′ = α/t at the configured evaluation time.
    pub alpha_prime: f64,
    /// `O_b·(n⁻¹/E)^N / (E·(1 − n⁻¹/E)^N)`.
    pub prefactor: f64,
    /// The time factor the prefactor multiplies.
    pub time_factor: f64,
}

/// Signaling overhead O_S over `[t₁, t₂]` using the configured form.
pub fn signaling_overhead(cfg: &NetworkConfig) -> Result<SignalingOverhead, ModelError> {
    signaling_overhead_with(cfg, cfg.overhead_interpretation)
}

pub fn signaling_overhead_with(cfg: &NetworkConfig, form: OverheadForm) -> Result<SignalingOverhead, ModelError> {
    cfg.validate()?;
    overhead_between(cfg, form, cfg.t2)
}

fn overhead_between(cfg: &NetworkConfig, form: OverheadForm, t_end: f64) -> Result<SignalingOverhead, ModelError> {
    let at = cfg.alpha_prime_at.unwrap_or(cfg.t1);
    let alpha_prime = cfg.update_rate / at;
    if !(alpha_prime > 0.0 && alpha_prime < 1.0) {
        return Err(ModelError::Domain(format!(
            "α′ = α/t = {alpha_prime} at t = {at} must lie in (0, 1)"
        )));
    }

    let reach = cfg.reach_fraction();
    let n = cfg.n_devices as i32;
    let prefactor = cfg.o_b * reach.powi(n) / (cfg.n_entities as f64 * (1.0 - reach).powi(n));

    let span = t_end - cfg.t1;
    let time_factor = match form {
        // ∫_{t₁}^{t_end} (1−α′)ᵗ dt = (1−α′)^{t₁}·((1−α′)^{span} − 1)/ln(1−α′)
        OverheadForm::Integral => {
            let log_base = (-alpha_prime).ln_1p();
            (cfg.t1 * log_base).exp() * (span * log_base).exp_m1() / log_base
        }
        // [ln(1−α′)^{t₂} − ln(1−α′)^{t₁}] / ln(1−α′) = t₂ − t₁
        OverheadForm::Printed => span,
    };

    Ok(SignalingOverhead {
        value: prefactor * time_factor,
        form,
        alpha_prime,
        prefactor,
        time_factor,
    })
}

/// Message overhead `M_O = O_S·(1 − P)/(E·P)` over `[t₁, t₂]`.
pub fn message_overhead(cfg: &NetworkConfig) -> Result<f64, ModelError> {
    message_overhead_until(cfg, cfg.t2)
}

/// Cumulative message overhead from t₁ to `t`.
pub fn message_overhead_until(cfg: &NetworkConfig, t: f64) -> Result<f64, ModelError> {
    let p = connectivity_loss_probability(cfg)?;
    if !(t >= cfg.t1 && t.is_finite()) {
        return Err(ModelError::Domain(format!("t = {t} precedes t₁ = {}", cfg.t1)));
    }
    let os = overhead_between(cfg, cfg.overhead_interpretation, t)?;
    Ok(os.value * (1.0 - p) / (cfg.n_entities as f64 * p))
}

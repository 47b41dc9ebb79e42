//! Factorized refresh policy: decides whether a vehicle keeps its current
//! short-range key or regenerates it.
//!
//! Two hard rules fire first: the key has outlived the fail-safe window, or
//! the vehicle crossed into a new zone since the last decision. Otherwise the
//! eight vehicle factors are each normalised to `[0, 1]` by a documented scale
//! and combined as a weighted sum; the key is regenerated when the sum
//! exceeds the threshold. The scales and the weighted-sum form are defaults
//! of this crate, not derived quantities.

use serde::{Deserialize, Serialize};

pub const REASON_FAILSAFE_EXPIRY: &str = "fail-safe expiry";
pub const REASON_ZONE_HANDOVER: &str = "zone handover";
pub const REASON_SCORE: &str = "score above threshold";

/// Order of the factor vector and of the policy weights.
pub const FACTOR_NAMES: [&str; 8] = [
    "speed",
    "displacement",
    "last_update",
    "shared_sessions",
    "refresh_rate",
    "total_keys",
    "zone_traversals",
    "dissociation",
];

/// Per-vehicle inputs to the refresh decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleContext {
    /// S, m/s.
    pub speed: f64,
    /// L, metres.
    pub location: (f64, f64),
    /// U_T: seconds since the current key was issued.
    pub last_update: f64,
    /// A_S.
    pub shared_sessions: u32,
    /// F_R: refreshes per unit time.
    pub refresh_rate: f64,
    /// T_K.
    pub total_keys: u32,
    /// Z_T: zone traversals since issuance.
    pub zone_traversals: u32,
    /// V_A ∈ [0, 1]: affinity to the current terminal.
    pub associativity: f64,
    /// Location at the previous decision; displacement is measured from here.
    pub anchor_location: (f64, f64),
    /// Z_T at the previous decision.
    pub anchor_zone_traversals: u32,
}

impl VehicleContext {
    /// Fresh context for a vehicle at `location` with a newly issued key.
    pub fn at(location: (f64, f64)) -> Self {
        Self {
            speed: 0.0,
            location,
            last_update: 0.0,
            shared_sessions: 0,
            refresh_rate: 0.0,
            total_keys: 0,
            zone_traversals: 0,
            associativity: 1.0,
            anchor_location: location,
            anchor_zone_traversals: 0,
        }
    }

    pub fn displacement(&self) -> f64 {
        let (dx, dy) = (self.location.0 - self.anchor_location.0, self.location.1 - self.anchor_location.1);
        dx.hypot(dy)
    }

    /// Moves the decision anchor to the current state.
    pub fn mark_decision(&mut self) {
        self.anchor_location = self.location;
        self.anchor_zone_traversals = self.zone_traversals;
    }

    /// Resets the per-key counters after a new key has been issued.
    pub fn key_renewed(&mut self) {
        self.last_update = 0.0;
        self.zone_traversals = 0;
        self.mark_decision();
    }
}

/// Raw value at which each factor saturates to 1. `last_update` is scaled
/// by the fail-safe window instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FactorScales {
    pub speed: f64,
    pub displacement: f64,
    pub shared_sessions: f64,
    pub refresh_rate: f64,
    pub total_keys: f64,
    pub zone_traversals: f64,
}

impl Default for FactorScales {
    fn default() -> Self {
        Self {
            speed: 40.0,
            displacement: 1000.0,
            shared_sessions: 10.0,
            refresh_rate: 1.0,
            total_keys: 100.0,
            zone_traversals: 5.0,
        }
    }
}

impl FactorScales {
    pub fn normalize(&self, ctx: &VehicleContext, fs_window: f64) -> [f64; 8] {
        let unit = |raw: f64, scale: f64| {
            if scale > 0.0 {
                (raw / scale).clamp(0.0, 1.0)
            } else {
                f64::from(raw > 0.0)
            }
        };
        [
            unit(ctx.speed, self.speed),
            unit(ctx.displacement(), self.displacement),
            unit(ctx.last_update, fs_window),
            unit(ctx.shared_sessions as f64, self.shared_sessions),
            unit(ctx.refresh_rate, self.refresh_rate),
            unit(ctx.total_keys as f64, self.total_keys),
            unit(ctx.zone_traversals as f64, self.zone_traversals),
            (1.0 - ctx.associativity).clamp(0.0, 1.0),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefreshAction {
    Keep,
    Regenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefreshDecision {
    pub action: RefreshAction,
    pub score: f64,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefreshPolicy {
    /// Weights in [`FACTOR_NAMES`] order.
    pub weights: [f64; 8],
    pub threshold: f64,
    #[serde(default)]
    pub scales: FactorScales,
}

impl Default for RefreshPolicy {
    fn default() -> Self {
        Self {
            weights: [1.0; 8],
            threshold: 2.0,
            scales: FactorScales::default(),
        }
    }
}

impl RefreshPolicy {
    pub fn evaluate(&self, ctx: &VehicleContext, fs_window: f64) -> RefreshDecision {
        let factors = self.scales.normalize(ctx, fs_window);
        let score: f64 = self.weights.iter().zip(factors).map(|(w, f)| w * f).sum();

        let mut reasons = Vec::new();
        if ctx.last_update > fs_window {
            reasons.push(REASON_FAILSAFE_EXPIRY.to_string());
        }
        if ctx.zone_traversals > ctx.anchor_zone_traversals {
            reasons.push(REASON_ZONE_HANDOVER.to_string());
        }
        if reasons.is_empty() && score > self.threshold {
            reasons.push(REASON_SCORE.to_string());
        }
        let action = if reasons.is_empty() {
            RefreshAction::Keep
        } else {
            RefreshAction::Regenerate
        };
        RefreshDecision { action, score, reasons }
    }
}

/// [`RefreshPolicy::evaluate`] with the default factor scales.
pub fn evaluate_refresh_policy(
    ctx: &VehicleContext,
    fs_window: f64,
    weights: [f64; 8],
    threshold: f64,
) -> RefreshDecision {
    RefreshPolicy {
        weights,
        threshold,
        scales: FactorScales::default(),
    }
    .evaluate(ctx, fs_window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn saturated(fs_window: f64) -> VehicleContext {
        let s = FactorScales::default();
        VehicleContext {
            speed: s.speed,
            location: (s.displacement, 0.0),
            last_update: fs_window,
            shared_sessions: s.shared_sessions as u32,
            refresh_rate: s.refresh_rate,
            total_keys: s.total_keys as u32,
            zone_traversals: s.zone_traversals as u32,
            associativity: 0.0,
            anchor_location: (0.0, 0.0),
            anchor_zone_traversals: s.zone_traversals as u32,
        }
    }

    #[test]
    fn failsafe_expiry_forces_regeneration() {
        let mut ctx = VehicleContext::at((0.0, 0.0));
        ctx.last_update = 51.0;
        let d = evaluate_refresh_policy(&ctx, 50.0, [0.0; 8], 100.0);
        assert_eq!(d.action, RefreshAction::Regenerate);
        assert_eq!(d.reasons, [REASON_FAILSAFE_EXPIRY]);
    }

    #[test]
    fn zone_handover_forces_regeneration() {
        let mut ctx = VehicleContext::at((0.0, 0.0));
        ctx.zone_traversals = 1;
        let d = evaluate_refresh_policy(&ctx, 50.0, [0.0; 8], 100.0);
        assert_eq!(d.reasons, [REASON_ZONE_HANDOVER]);
        ctx.mark_decision();
        assert_eq!(evaluate_refresh_policy(&ctx, 50.0, [0.0; 8], 100.0).action, RefreshAction::Keep);
    }

    #[test]
    fn zero_factors_keep() {
        let ctx = VehicleContext::at((3.0, 4.0));
        let d = evaluate_refresh_policy(&ctx, 50.0, [1.0; 8], 0.5);
        assert_eq!(d.action, RefreshAction::Keep);
        assert_eq!(d.score, 0.0);
        assert!(d.reasons.is_empty());
    }

    #[test]
    fn all_saturated_factors_score_eight_w() {
        let ctx = saturated(50.0);
        assert_eq!(FactorScales::default().normalize(&ctx, 50.0), [1.0; 8]);
        let w = 0.25;
        let d = evaluate_refresh_policy(&ctx, 50.0, [w; 8], 0.5);
        assert_eq!(d.action, RefreshAction::Regenerate);
        assert!((d.score - 8.0 * w).abs() < 1e-15);
        assert_eq!(d.reasons, [REASON_SCORE]);
    }

    #[test]
    fn key_renewal_resets_counters() {
        let mut ctx = saturated(50.0);
        ctx.key_renewed();
        assert_eq!(ctx.last_update, 0.0);
        assert_eq!(ctx.zone_traversals, 0);
        assert_eq!(ctx.displacement(), 0.0);
    }

    fn arb_ctx() -> impl Strategy<Value = VehicleContext> {
        (
            0.0f64..80.0,
            (-2000.0f64..2000.0, -2000.0f64..2000.0),
            0.0f64..100.0,
            0u32..20,
            0.0f64..2.0,
            0u32..200,
            0u32..10,
            0.0f64..=1.0,
            0u32..10,
        )
            .prop_map(|(speed, location, last_update, shared, rate, keys, zones, assoc, anchor_z)| VehicleContext {
                speed,
                location,
                last_update,
                shared_sessions: shared,
                refresh_rate: rate,
                total_keys: keys,
                zone_traversals: zones,
                associativity: assoc,
                anchor_location: (0.0, 0.0),
                anchor_zone_traversals: anchor_z,
            })
    }

    proptest! {
        #[test]
        fn increasing_a_factor_never_flips_to_keep(
            ctx in arb_ctx(),
            weights in prop::array::uniform8(0.0f64..2.0),
            threshold in 0.0f64..8.0,
            which in 0usize..8,
            bump in 0.0f64..500.0,
        ) {
            let fs_window = 50.0;
            let before = evaluate_refresh_policy(&ctx, fs_window, weights, threshold);
            let mut up = ctx.clone();
            match which {
                0 => up.speed += bump,
                1 => {
                    // Push further away from the anchor along the same ray.
                    let d = up.displacement();
                    let scale = if d > 0.0 { (d + bump) / d } else { 1.0 };
                    up.location = (up.location.0 * scale, up.location.1 * scale);
                    if d == 0.0 { up.location.0 += bump; }
                }
                2 => up.last_update += bump,
                3 => up.shared_sessions += bump as u32,
                4 => up.refresh_rate += bump,
                5 => up.total_keys += bump as u32,
                6 => up.zone_traversals += bump as u32,
                _ => up.associativity = (up.associativity - bump / 500.0).max(0.0),
            }
            let after = evaluate_refresh_policy(&up, fs_window, weights, threshold);
            prop_assert!(after.score >= before.score - 1e-12);
            if before.action == RefreshAction::Regenerate {
                prop_assert_eq!(after.action, RefreshAction::Regenerate);
            }
        }

        #[test]
        fn regenerate_always_has_a_reason(ctx in arb_ctx(), weights in prop::array::uniform8(0.0f64..2.0), threshold in 0.0f64..8.0) {
            let d = evaluate_refresh_policy(&ctx, 50.0, weights, threshold);
            prop_assert_eq!(d.action == RefreshAction::Regenerate, !d.reasons.is_empty());
        }
    }
}

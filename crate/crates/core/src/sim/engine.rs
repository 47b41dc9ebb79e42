use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::{
    attachment_lost, estimate_connectivity_loss, sample_poisson_counts, stream_rng, Estimate, Purpose, SimConfig,
    SimError,
};
use crate::keychain::{AuthMode, KeyHierarchy, RefreshAction, RefreshPolicy, SessionEvent, SessionState, VehicleContext};
use crate::model::NetworkConfig;

/// Geometry of the synthetic road area. Vehicles enter at a uniform point of
/// the square, move in a straight line at constant speed, and cross zones
/// on a square grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorldConstants {
    pub area_side: f64,
    pub zone_side: f64,
    pub max_speed: f64,
    /// Distance from the issuing position at which V_A falls to 1/e.
    pub associativity_length: f64,
}

pub const WORLD: WorldConstants = WorldConstants {
    area_side: 1000.0,
    zone_side: 250.0,
    max_speed: 40.0,
    associativity_length: 1000.0,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceBucket {
    pub start: f64,
    pub end: f64,
    pub arrivals: u64,
    pub lost: u64,
    pub authentications: u64,
    pub refreshes: u64,
    pub messages: u64,
    /// Vehicles holding an active session at `end`.
    pub active: u64,
}

/// Results of one event-driven run.
///
/// `message_total == session_messages + initial_auth_cost · auth_count` holds
/// exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub seed: u64,
    pub horizon: f64,
    pub unit_window: f64,
    pub passes: u32,
    /// Messages charged once per first authentication: `⌈O_b⌉`.
    pub initial_auth_cost: u64,
    pub arrival_count: u64,
    /// Arrivals that found no reachable entity.
    pub lost_count: u64,
    /// First authentications.
    pub auth_count: u64,
    /// Keys regenerated by the refresh policy.
    pub key_update_count: u64,
    /// Events of the global key-update process.
    pub update_events: u64,
    pub policy_evaluations: u64,
    /// One message per protocol pass, over initial and refresh sessions.
    pub session_messages: u64,
    pub initial_auth_charge: u64,
    pub message_total: u64,
    pub empirical_probabilities: BTreeMap<String, Estimate>,
    pub traces: Vec<TraceBucket>,
}

impl SimStats {
    pub fn conserves_messages(&self) -> bool {
        self.initial_auth_charge == self.initial_auth_cost * self.auth_count
            && self.message_total == self.session_messages + self.initial_auth_charge
    }
}

struct Vehicle {
    peer: String,
    arrival: f64,
    entity: u32,
    origin: (f64, f64),
    velocity: (f64, f64),
    session: SessionState,
    key_issued_at: f64,
    issue_position: (f64, f64),
    renewals: u64,
}

impl Vehicle {
    fn position(&self, t: f64) -> (f64, f64) {
        let dt = t - self.arrival;
        (self.origin.0 + self.velocity.0 * dt, self.origin.1 + self.velocity.1 * dt)
    }
}

fn zone_of(p: (f64, f64)) -> (i64, i64) {
    ((p.0 / WORLD.zone_side).floor() as i64, (p.1 / WORLD.zone_side).floor() as i64)
}

/// Completes every remaining pass of the pending authentication.
fn complete_passes(mut s: SessionState) -> Result<SessionState, SimError> {
    while !s.is_active() {
        s = s.advance(SessionEvent::PassCompleted)?;
    }
    Ok(s)
}

struct Traces {
    width: f64,
    buckets: Vec<TraceBucket>,
    active_delta: Vec<i64>,
}

impl Traces {
    fn new(horizon: f64, width: f64) -> Self {
        let n = ((horizon / width).ceil() as usize).max(1);
        let buckets = (0..n)
            .map(|i| TraceBucket {
                start: i as f64 * width,
                end: ((i + 1) as f64 * width).min(horizon),
                arrivals: 0,
                lost: 0,
                authentications: 0,
                refreshes: 0,
                messages: 0,
                active: 0,
            })
            .collect();
        Self {
            width,
            buckets,
            active_delta: vec![0; n],
        }
    }

    fn index(&self, t: f64) -> usize {
        ((t / self.width) as usize).min(self.buckets.len() - 1)
    }

    fn at(&mut self, t: f64) -> &mut TraceBucket {
        let i = self.index(t);
        &mut self.buckets[i]
    }

    fn active_change(&mut self, t: f64, delta: i64) {
        let i = self.index(t);
        self.active_delta[i] += delta;
    }

    fn finish(mut self) -> Vec<TraceBucket> {
        let mut active = 0i64;
        for (b, d) in self.buckets.iter_mut().zip(self.active_delta) {
            active += d;
            b.active = active as u64;
        }
        self.buckets
    }
}

/// Event-driven run over `[0, horizon]`.
///
/// Vehicles arrive as a Poisson(β) process and attach through the N-device
/// connectivity trial; attached vehicles complete a Q-pass short-range
/// authentication and get a session key from `hierarchy`. A global
/// Poisson(α) key-update process evaluates `policy` for every active
/// vehicle, and a regeneration costs another Q passes plus a fresh key.
///
/// Arrival times, per-vehicle attributes and update times each come from
/// their own stream, and none of them depends on Q. Runs that differ only
/// in Q therefore see identical events.
pub fn run_sim(
    cfg: &NetworkConfig,
    sim: &SimConfig,
    hierarchy: &mut KeyHierarchy,
    policy: &RefreshPolicy,
) -> Result<SimStats, SimError> {
    cfg.validate()?;
    sim.validate()?;
    let q = cfg.passes;
    let initial_auth_cost = cfg.o_b.ceil() as u64;
    let fs_window = sim.fs_window.unwrap_or(cfg.t2 - cfg.t1);
    let horizon = sim.horizon;

    let arrival_gap = Exp::new(cfg.arrival_rate).expect("validated rate");
    let update_gap = Exp::new(cfg.update_rate).expect("validated rate");
    let dwell = sim.mean_dwell.map(|m| Exp::new(1.0 / m).expect("validated dwell"));
    let mut arrival_rng = stream_rng(sim.seed, Purpose::Arrivals, 0);
    let mut update_rng = stream_rng(sim.seed, Purpose::KeyUpdates, 0);

    let mut stats = SimStats {
        seed: sim.seed,
        horizon,
        unit_window: sim.unit_window,
        passes: q,
        initial_auth_cost,
        arrival_count: 0,
        lost_count: 0,
        auth_count: 0,
        key_update_count: 0,
        update_events: 0,
        policy_evaluations: 0,
        session_messages: 0,
        initial_auth_charge: 0,
        message_total: 0,
        empirical_probabilities: BTreeMap::new(),
        traces: Vec::new(),
    };
    let mut traces = Traces::new(horizon, sim.unit_window);
    let mut vehicles: BTreeMap<u64, Vehicle> = BTreeMap::new();
    // (departure time bits, vehicle id); non-negative f64 bits order like the values.
    let mut departures: BTreeSet<(u64, u64)> = BTreeSet::new();

    let mut next_arrival = arrival_gap.sample(&mut arrival_rng);
    let mut next_update = update_gap.sample(&mut update_rng);
    loop {
        let next_departure = departures.first().map(|&(bits, _)| f64::from_bits(bits));
        let t = next_departure.unwrap_or(f64::INFINITY).min(next_arrival).min(next_update);
        if t > horizon {
            break;
        }

        if next_departure == Some(t) {
            let (_, id) = departures.pop_first().expect("peeked above");
            let v = vehicles.remove(&id).expect("scheduled vehicles are active");
            v.session.advance(SessionEvent::Expire)?;
            hierarchy.untrack_vehicle(&v.peer);
            traces.active_change(t, -1);
        } else if next_arrival == t {
            next_arrival = t + arrival_gap.sample(&mut arrival_rng);
            let id = stats.arrival_count;
            stats.arrival_count += 1;
            traces.at(t).arrivals += 1;

            let mut rng = stream_rng(sim.seed, Purpose::VehicleAttributes, id);
            if attachment_lost(cfg, &mut rng) {
                stats.lost_count += 1;
                traces.at(t).lost += 1;
                continue;
            }
            let entity = rng.random_range(0..cfg.reachable_hops_inv);
            let origin = (
                rng.random_range(0.0..WORLD.area_side),
                rng.random_range(0.0..WORLD.area_side),
            );
            let heading = rng.random_range(0.0..std::f64::consts::TAU);
            let speed = rng.random_range(0.0..WORLD.max_speed);
            let departs = dwell.map(|d| t + d.sample(&mut rng));

            let session = SessionState::new(AuthMode::ShortRange, q)?.advance(SessionEvent::Start)?;
            let session = complete_passes(session)?;
            stats.session_messages += session.messages_sent;
            stats.initial_auth_charge += initial_auth_cost;
            stats.auth_count += 1;
            let bucket = traces.at(t);
            bucket.authentications += 1;
            bucket.messages += session.messages_sent + initial_auth_cost;

            let peer = format!("veh-{id}");
            let mut ctx = VehicleContext::at(origin);
            ctx.speed = speed;
            hierarchy.track_vehicle(&peer, ctx);
            hierarchy.issue_session_key(AuthMode::ShortRange, &peer)?;
            vehicles.insert(
                id,
                Vehicle {
                    peer,
                    arrival: t,
                    entity,
                    origin,
                    velocity: (speed * heading.cos(), speed * heading.sin()),
                    session,
                    key_issued_at: t,
                    issue_position: origin,
                    renewals: 0,
                },
            );
            traces.active_change(t, 1);
            if let Some(d) = departs {
                departures.insert((d.to_bits(), id));
            }
        } else {
            next_update = t + update_gap.sample(&mut update_rng);
            stats.update_events += 1;
            let mut per_entity: BTreeMap<u32, u32> = BTreeMap::new();
            for v in vehicles.values() {
                *per_entity.entry(v.entity).or_default() += 1;
            }
            for v in vehicles.values_mut() {
                let location = v.position(t);
                let ctx = hierarchy.vehicle_mut(&v.peer).expect("active vehicles are tracked");
                let (z0, z1) = (zone_of(v.issue_position), zone_of(location));
                let moved = (location.0 - v.issue_position.0).hypot(location.1 - v.issue_position.1);
                let age = t - v.arrival;
                ctx.location = location;
                ctx.last_update = t - v.key_issued_at;
                ctx.shared_sessions = per_entity[&v.entity] - 1;
                ctx.refresh_rate = if age > 0.0 { v.renewals as f64 / age } else { 0.0 };
                ctx.zone_traversals = (z0.0.abs_diff(z1.0) + z0.1.abs_diff(z1.1)) as u32;
                ctx.associativity = (-moved / WORLD.associativity_length).exp();

                let decision = policy.evaluate(ctx, fs_window);
                stats.policy_evaluations += 1;
                if decision.action == RefreshAction::Keep {
                    ctx.mark_decision();
                    continue;
                }
                ctx.key_renewed();
                let before = v.session.messages_sent;
                v.session = complete_passes(v.session.advance(SessionEvent::RefreshRequested)?)?;
                let spent = v.session.messages_sent - before;
                hierarchy.issue_session_key(AuthMode::ShortRange, &v.peer)?;
                v.key_issued_at = t;
                v.issue_position = location;
                v.renewals += 1;
                stats.session_messages += spent;
                stats.key_update_count += 1;
                let bucket = traces.at(t);
                bucket.refreshes += 1;
                bucket.messages += spent;
            }
        }
    }
    stats.message_total = stats.session_messages + stats.initial_auth_charge;
    stats.traces = traces.finish();

    let probs = &mut stats.empirical_probabilities;
    probs.insert("connectivity_loss".into(), estimate_connectivity_loss(cfg, sim)?);
    if stats.arrival_count > 0 {
        probs.insert(
            "connectivity_loss_in_run".into(),
            Estimate::from_counts(stats.lost_count, stats.arrival_count),
        );
    }
    let updates = sample_poisson_counts(cfg.update_rate, sim.unit_window, sim)?;
    probs.insert("key_updates_exactly_2".into(), updates.frequency(2));
    let arrivals = sample_poisson_counts(cfg.arrival_rate, sim.unit_window, sim)?;
    probs.insert("arrivals_exactly_1".into(), arrivals.frequency(1));
    Ok(stats)
}

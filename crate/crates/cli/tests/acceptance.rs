//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p sustain5g --test acceptance`.

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sustain5g::sweep::{run_sweep, SweepSpec};
use sustain5g_core::keychain::{derive_key, AuthMode, KeyHierarchy, RefreshPolicy, KEY_LEN};
use sustain5g_core::model::{
    check_feasibility, connectivity_loss_probability, failsafe_point, key_update_pmf, message_overhead_until,
    signaling_overhead_with, sustainability_asymptotic, sustainability_closed_form, sustainability_quadrature,
    sustainability_rate, Clause, Criterion, NetworkConfig, OptimizationConstraints, OverheadForm,
};
use sustain5g_core::numerics::reference::ei_reference;
use sustain5g_core::numerics::{exp_integral_ei, integrate_adaptive, RealInterval};
use sustain5g_core::sim::{estimate_connectivity_loss, run_sim, sample_poisson_counts, SimConfig, SimStats};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    if elapsed.as_secs_f64() < limit_s {
        Ok(())
    } else {
        Err(format!("took {:.2} s, limit {limit_s} s", elapsed.as_secs_f64()))
    }
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// β ∈ {2,…,10}, α = β/2, Q ∈ 1..=5, E ∈ 6..=10 with N = 10, n⁻¹ = 5.
fn baseline_grid() -> Vec<NetworkConfig> {
    let mut v = Vec::new();
    for beta in [2.0, 4.0, 6.0, 8.0, 10.0] {
        for q in 1..=5 {
            for e in 6..=10 {
                v.push(NetworkConfig::baseline(beta, q, e));
            }
        }
    }
    v
}

fn ei_oracle() -> Outcome {
    let start = Instant::now();
    let grid = log_spaced(1e-3, 30.0, 1000);
    let mut worst: f64 = 0.0;
    for &x in &grid {
        for x in [x, -x] {
            let v = exp_integral_ei(x).map_err(|e| format!("Ei({x}): {e}"))?;
            worst = worst.max(rel(v, ei_reference(x)));
        }
    }
    let elapsed = start.elapsed();
    ensure!(worst <= 1e-9, "max relative error {worst:e} > 1e-9");
    let e1 = exp_integral_ei(1.0).unwrap();
    let em1 = exp_integral_ei(-1.0).unwrap();
    ensure!(rel(e1, 1.895_117_816_355_936_8) <= 1e-9, "Ei(1) = {e1}");
    ensure!((em1 - -0.219_383_93).abs() <= 5e-9, "Ei(-1) = {em1}");
    within(elapsed, 1.0)?;
    Ok(format!("max rel err {worst:.2e} over 2000 pts, Ei(1) = {e1:.16}, Ei(-1) = {em1:.8}"))
}

fn closed_form_vs_quadrature() -> Outcome {
    let start = Instant::now();
    let grid = baseline_grid();
    let mut worst: f64 = 0.0;
    for cfg in &grid {
        let c = sustainability_closed_form(cfg).map_err(|e| e.to_string())?;
        let q = sustainability_quadrature(cfg).map_err(|e| e.to_string())?;
        worst = worst.max(rel(c, q));
    }
    ensure!(grid.len() == 125, "{} configs", grid.len());
    ensure!(worst <= 1e-6, "max relative gap {worst:e} > 1e-6");
    within(start.elapsed(), 10.0)?;
    Ok(format!("max rel gap {worst:.2e} over {} configs", grid.len()))
}

fn q_inverse_law() -> Outcome {
    let mut worst: f64 = 0.0;
    for beta in [2.0, 4.0, 6.0, 8.0, 10.0] {
        for e in 6..=10 {
            let base = sustainability_closed_form(&NetworkConfig::baseline(beta, 1, e)).unwrap();
            for q in 1..=5 {
                let s = sustainability_closed_form(&NetworkConfig::baseline(beta, q, e)).unwrap();
                worst = worst.max(rel(s * q as f64, base));
            }
        }
    }
    ensure!(worst <= 1e-12, "max deviation of S_N·Q {worst:e} > 1e-12");
    Ok(format!("max rel deviation of S_N·Q {worst:.2e}"))
}

fn asymptotic_limit() -> Outcome {
    for cfg in baseline_grid() {
        let a = sustainability_asymptotic(&cfg);
        ensure!(a == cfg.update_rate / cfg.arrival_rate, "{a} ≠ α/β for {cfg:?}");
        ensure!(a == 0.5, "{a} ≠ 0.5 for β = {}", cfg.arrival_rate);
    }
    Ok("exactly α/β = 0.5 for all 125 configs".into())
}

fn random_feasible(rng: &mut ChaCha8Rng) -> NetworkConfig {
    let e = rng.random_range(3..=12);
    let mut cfg = NetworkConfig::baseline(2.0, 1, e);
    cfg.reachable_hops_inv = rng.random_range(2..e);
    cfg.n_devices = rng.random_range(1..=8);
    cfg
}

fn connectivity_loss_monte_carlo() -> Outcome {
    let start = Instant::now();
    let cfg = NetworkConfig::baseline(2.0, 1, 10);
    let p = connectivity_loss_probability(&cfg).unwrap();
    ensure!(p == 9.765_625e-4, "analytic value {p}");
    let est = estimate_connectivity_loss(&cfg, &SimConfig::new(2024, 1_000_000, 1.0, 1.0)).map_err(|e| e.to_string())?;
    let z0 = est.z_score(p);
    ensure!(z0 <= 4.0, "baseline: {} vs {p}, z = {z0:.2}", est.estimate);
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst = z0;
    for i in 0..10 {
        let cfg = random_feasible(&mut rng);
        let p = connectivity_loss_probability(&cfg).unwrap();
        let est = estimate_connectivity_loss(&cfg, &SimConfig::new(300 + i, 1_000_000, 1.0, 1.0)).map_err(|e| e.to_string())?;
        let z = est.z_score(p);
        ensure!(z <= 4.0, "{cfg:?}: {} vs {p}, z = {z:.2}", est.estimate);
        worst = worst.max(z);
    }
    within(start.elapsed(), 30.0)?;
    Ok(format!("baseline estimate {:.4e} (z = {z0:.2}), max |z| {worst:.2} over 11 configs", est.estimate))
}

fn poisson_pmf(lambda: f64, k: u32) -> f64 {
    let log_fact: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
    (k as f64 * lambda.ln() - lambda - log_fact).exp()
}

fn poisson_fidelity() -> Outcome {
    let sim = SimConfig::new(4048, 1_000_000, 1.0, 1.0);
    let mut worst: f64 = 0.0;
    for lambda in 1..=5 {
        let lambda = lambda as f64;
        let h = sample_poisson_counts(lambda, 1.0, &sim).map_err(|e| e.to_string())?;
        for k in 0..=6 {
            let z = h.frequency(k as usize).z_score(poisson_pmf(lambda, k));
            ensure!(z <= 3.0, "λ = {lambda}, k = {k}: z = {z:.2}");
            worst = worst.max(z);
        }
        let two = key_update_pmf(lambda, 1.0).unwrap();
        ensure!((two - poisson_pmf(lambda, 2)).abs() <= 1e-15, "key_update_pmf({lambda}, 1) = {two}");
        let z = h.frequency(2).z_score(two);
        ensure!(z <= 3.0, "exactly-2 at λ = {lambda}: z = {z:.2}");
    }
    Ok(format!("max |z| {worst:.2} over 35 (λ, k) cells"))
}

/// A feasible configuration with α′ = α/t₁ ∈ (0, 1) and n⁻¹/E ≤ 1/2, so O_S
/// stays of order one and an absolute tolerance is meaningful.
fn random_overhead_config(rng: &mut ChaCha8Rng) -> NetworkConfig {
    let e = rng.random_range(4..=12);
    let mut cfg = NetworkConfig::baseline(2.0, rng.random_range(1..=5), e);
    cfg.reachable_hops_inv = rng.random_range(2..=e / 2);
    cfg.n_devices = rng.random_range(1..=10);
    cfg.t1 = rng.random_range(2.0..10.0);
    cfg.t2 = cfg.t1 + rng.random_range(10.0..100.0);
    cfg.update_rate = rng.random_range(0.05..0.95) * cfg.t1;
    cfg.arrival_rate = cfg.update_rate + rng.random_range(0.5..5.0);
    cfg.o_b = rng.random_range(0.5..3.0);
    cfg
}

fn overhead_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let cfg = random_overhead_config(&mut rng);
        let os = signaling_overhead_with(&cfg, OverheadForm::Integral).map_err(|e| format!("{cfg:?}: {e}"))?;
        let base = 1.0 - cfg.update_rate / cfg.t1;
        let window = RealInterval::new(cfg.t1, cfg.t2).unwrap();
        let quad = integrate_adaptive(|t| os.prefactor * base.powf(t), window, 1e-14).map_err(|e| e.to_string())?;
        let err = (os.value - quad.value).abs();
        ensure!(err <= 1e-8, "{cfg:?}: O_S {} vs quadrature {}", os.value, quad.value);
        worst = worst.max(err);
        let printed = signaling_overhead_with(&cfg, OverheadForm::Printed).unwrap();
        ensure!(
            printed.value == printed.prefactor * (cfg.t2 - cfg.t1),
            "printed form {} ≠ prefactor·(t₂ − t₁)",
            printed.value
        );
        ensure!(printed.prefactor == os.prefactor, "prefactor differs between forms");
    }
    Ok(format!("max abs err {worst:.2e} over 20 configs, printed form exact"))
}

/// Latest grid point before the first failure on a `step` grid over [t₁, t₂].
fn brute_force_failsafe(cfg: &NetworkConfig, criterion: Criterion, threshold: f64, step: f64) -> Option<f64> {
    let n = ((cfg.t2 - cfg.t1) / step).floor() as usize;
    let holds = |t: f64| match criterion {
        Criterion::SustainabilityRate => sustainability_rate(cfg, t).unwrap() >= threshold,
        Criterion::MessageOverhead => message_overhead_until(cfg, t).unwrap() <= threshold,
    };
    let mut last = None;
    for i in 0..=n {
        let t = cfg.t1 + i as f64 * step;
        if !holds(t) {
            return last;
        }
        last = Some(t);
    }
    if holds(cfg.t2) {
        Some(cfg.t2)
    } else {
        last
    }
}

fn failsafe_scan() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(31337);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let base = random_overhead_config(&mut rng);
        let span = base.t2 - base.t1;
        for criterion in [Criterion::SustainabilityRate, Criterion::MessageOverhead] {
            let tau = base.t1 + span * rng.random_range(0.05..0.95);
            let mut cfg = base.clone();
            let threshold = match criterion {
                Criterion::SustainabilityRate => sustainability_rate(&cfg, tau).unwrap(),
                Criterion::MessageOverhead => message_overhead_until(&cfg, tau).unwrap(),
            };
            match criterion {
                Criterion::SustainabilityRate => cfg.s_n_threshold = Some(threshold),
                Criterion::MessageOverhead => cfg.m_o_threshold = Some(threshold),
            }
            let fs = failsafe_point(&cfg, criterion).map_err(|e| e.to_string())?.fail_safe_time;
            let brute = brute_force_failsafe(&cfg, criterion, threshold, 1e-4);
            let (Some(fs), Some(brute)) = (fs, brute) else {
                return Err(format!("{criterion}: bisection {fs:?} vs scan {brute:?}"));
            };
            let gap = (fs - brute).abs();
            ensure!(gap <= 1e-3, "{criterion}: bisection {fs} vs scan {brute} (crossing near {tau})");
            worst = worst.max(gap);
        }
    }
    within(start.elapsed(), 10.0)?;
    Ok(format!("max |F_S − scan| {worst:.2e} over 40 cases"))
}

fn feasibility_clauses() -> Outcome {
    let opt = || OptimizationConstraints {
        attack_time: 120.0,
        safe_time: 60.0,
        utilization_time: 40.0,
        min_updates: 0,
        safety_margin: 1.0,
    };
    let base = || NetworkConfig::baseline(2.0, 1, 10);
    type Case = (Clause, Box<dyn Fn(&mut NetworkConfig, &mut OptimizationConstraints, &mut u64, &mut Option<f64>)>, Vec<Clause>);
    use Clause::*;
    // Each mutation lists every clause it is expected to trip.
    let cases: Vec<Case> = vec![
        (DevicesPositive, Box::new(|c, _, _, _| c.n_devices = 0), vec![DensityPositive]),
        (EntitiesPositive, Box::new(|c, _, _, _| c.n_entities = 0), vec![EntityGap, PairCountBounded]),
        (PassesPositive, Box::new(|c, _, _, _| c.passes = 0), vec![]),
        (UpdateRatePositive, Box::new(|c, _, _, _| c.update_rate = 0.0), vec![]),
        (ArrivalRatePositive, Box::new(|c, _, _, _| { c.arrival_rate = -1.0; c.update_rate = -2.0 }), vec![UpdateRatePositive, DensityPositive]),
        (RateGap, Box::new(|c, _, _, _| c.update_rate = c.arrival_rate), vec![]),
        (EntityGap, Box::new(|c, _, _, _| c.n_entities = 4), vec![PairCountBounded]),
        (HopsDistinctFromEntities, Box::new(|c, _, _, _| c.n_entities = 5), vec![EntityGap]),
        (WindowStartPositive, Box::new(|c, _, _, _| c.t1 = 0.0), vec![DensityPositive]),
        (WindowOrdered, Box::new(|c, _, _, _| c.t2 = c.t1), vec![]),
        (InitialOverheadPositive, Box::new(|c, _, _, _| c.o_b = 0.0), vec![]),
        (SustainabilityThresholdPositive, Box::new(|c, _, _, _| c.s_n_threshold = Some(0.0)), vec![]),
        (OverheadThresholdPositive, Box::new(|c, _, _, _| c.m_o_threshold = Some(-1.0)), vec![]),
        (AlphaPrimeTimePositive, Box::new(|c, _, _, _| c.alpha_prime_at = Some(0.0)), vec![]),
        (DensityPositive, Box::new(|_, _, _, d| *d = Some(0.0)), vec![]),
        (DensityBounded, Box::new(|_, _, _, d| *d = Some(11.0)), vec![]),
        (MinimumUpdates, Box::new(|_, o, u, _| { o.min_updates = 5; *u = 4 }), vec![]),
        (PairCountPositive, Box::new(|c, _, _, _| c.reachable_hops_inv = 1), vec![]),
        (PairCountBounded, Box::new(|c, _, _, _| c.reachable_hops_inv = 11), vec![EntityGap]),
        (UtilizationPositive, Box::new(|_, o, _, _| o.utilization_time = 0.0), vec![]),
        (UtilizationBeforeSafe, Box::new(|_, o, _, _| o.utilization_time = 60.0), vec![]),
        (SafeBeforeAttack, Box::new(|_, o, _, _| o.attack_time = 59.0), vec![]),
        (SafetyMarginPositive, Box::new(|_, o, _, _| o.safety_margin = 0.0), vec![]),
    ];
    ensure!(check_feasibility(&base(), &opt(), 0, None).is_empty(), "baseline reported infeasible");
    let mut seen = HashSet::new();
    for (target, mutate, companions) in &cases {
        let (mut c, mut o, mut u, mut d) = (base(), opt(), 0u64, None);
        mutate(&mut c, &mut o, &mut u, &mut d);
        let got: HashSet<Clause> = check_feasibility(&c, &o, u, d).into_iter().collect();
        let want: HashSet<Clause> = companions.iter().copied().chain([*target]).collect();
        ensure!(got == want, "{target}: reported {got:?}, expected {want:?}");
        seen.insert(*target);
    }
    ensure!(seen.len() == 23, "{} distinct clauses exercised", seen.len());

    let rows = run_sweep(&NetworkConfig::baseline(2.0, 1, 10), &SweepSpec::default()).map_err(|e| e.to_string())?;
    let mut flagged = 0;
    for r in &rows {
        if r.n_entities <= 5 {
            ensure!(!r.feasible && r.violation.contains("E − n⁻¹ > 0"), "row {r:?} not flagged");
            flagged += 1;
        } else {
            ensure!(r.feasible, "row {r:?} flagged");
        }
    }
    Ok(format!("{} clauses triggered, {flagged} sweep rows flagged \"E − n⁻¹ > 0\"", seen.len()))
}

fn keychain_properties() -> Outcome {
    let build = || {
        let mut h = KeyHierarchy::build(std::array::from_fn(|i| i as u8));
        for (mode, peer) in [(AuthMode::ShortRange, "veh-1"), (AuthMode::LongRange, "hub-1"), (AuthMode::ShortRange, "veh-1")] {
            h.issue_session_key(mode, peer).unwrap();
        }
        h
    };
    ensure!(build().dump() == build().dump(), "hierarchy dump differs between builds");

    let mut h = KeyHierarchy::build([1; KEY_LEN]);
    let mut keys = HashSet::new();
    for i in 0..10_000 {
        let mode = if i % 2 == 0 { AuthMode::ShortRange } else { AuthMode::LongRange };
        let k = h.issue_session_key(mode, &format!("peer-{}", i % 101)).map_err(|e| e.to_string())?;
        keys.insert(*k.bytes());
    }
    ensure!(keys.len() == 10_000, "{} distinct of 10000", keys.len());

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let parent = h.root().clone();
    let mut total = 0u32;
    for _ in 0..1000 {
        let len = rng.random_range(4..24);
        let label: Vec<u8> = (0..len).map(|_| rng.random_range(b'A'..=b'Z')).collect();
        let mut flipped = label.clone();
        flipped[rng.random_range(0..len)] ^= 1 << rng.random_range(0..5);
        let a = derive_key(&parent, std::str::from_utf8(&label).unwrap()).unwrap();
        let b = derive_key(&parent, std::str::from_utf8(&flipped).unwrap()).unwrap();
        total += a.bytes().iter().zip(b.bytes()).map(|(x, y)| (x ^ y).count_ones()).sum::<u32>();
    }
    let mean = total as f64 / 1000.0;
    ensure!((96.0..=160.0).contains(&mean), "avalanche mean {mean}");
    Ok(format!("reproducible dump, 10000 distinct keys, avalanche mean {mean:.2} bits"))
}

fn simulate(cfg: &NetworkConfig, sim: &SimConfig, threads: usize) -> SimStats {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
        let mut h = KeyHierarchy::build([5; KEY_LEN]);
        run_sim(cfg, sim, &mut h, &RefreshPolicy::default()).unwrap()
    })
}

fn simulation_properties() -> Outcome {
    let cfg = NetworkConfig::baseline(4.0, 2, 8);
    let mut sim = SimConfig::new(42, 50_000, 100.0, 1.0);
    sim.mean_dwell = Some(20.0);
    let a = simulate(&cfg, &sim, 1);
    ensure!(a == simulate(&cfg, &sim, 4), "stats depend on thread count");
    ensure!(a == simulate(&cfg, &sim, 1), "stats differ between identical runs");
    ensure!(a.conserves_messages(), "message identity violated: {a:?}");
    ensure!(
        a.message_total == a.session_messages + a.initial_auth_cost * a.auth_count,
        "message_total {} ≠ {} + {}·{}",
        a.message_total,
        a.session_messages,
        a.initial_auth_cost,
        a.auth_count
    );
    let mut doubled = cfg.clone();
    doubled.passes = 4;
    let b = simulate(&doubled, &sim, 2);
    ensure!(a.key_update_count > 0, "no key updates exercised");
    ensure!(b.session_messages == 2 * a.session_messages, "{} ≠ 2·{}", b.session_messages, a.session_messages);
    ensure!(b.conserves_messages(), "message identity violated at Q = 4");
    Ok(format!(
        "{} arrivals, {} refreshes, session messages {} → {} on doubling Q",
        a.arrival_count, a.key_update_count, a.session_messages, b.session_messages
    ))
}

fn end_to_end() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_sustain5g");
    let v = Command::new(bin).arg("validate").output().map_err(|e| e.to_string())?;
    ensure!(v.status.code() == Some(0), "validate exited {:?}", v.status.code());
    let s = Command::new(bin).arg("sweep").output().map_err(|e| e.to_string())?;
    ensure!(s.status.code() == Some(0), "sweep exited {:?}", s.status.code());
    let golden = include_bytes!("data/sweep_default.csv");
    ensure!(s.stdout == golden, "default sweep differs from the golden CSV");
    Ok(format!("validate exit 0, sweep matches {} golden bytes", golden.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("Ei oracle", ei_oracle),
        ("closed form vs quadrature", closed_form_vs_quadrature),
        ("Q-inverse law", q_inverse_law),
        ("asymptotic limit", asymptotic_limit),
        ("connectivity-loss Monte Carlo", connectivity_loss_monte_carlo),
        ("Poisson pmf fidelity", poisson_fidelity),
        ("overhead oracle", overhead_oracle),
        ("fail-safe scan", failsafe_scan),
        ("feasibility clauses", feasibility_clauses),
        ("keychain determinism and distinctness", keychain_properties),
        ("simulation determinism and conservation", simulation_properties),
        ("end-to-end", end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail} ({secs:.2} s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {detail} ({secs:.2} s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

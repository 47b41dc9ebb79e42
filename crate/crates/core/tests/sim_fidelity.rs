use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sustain5g_core::keychain::{KeyHierarchy, RefreshPolicy};
use sustain5g_core::model::{connectivity_loss_probability, key_update_pmf, NetworkConfig};
use sustain5g_core::sim::{estimate_connectivity_loss, run_sim, sample_poisson_counts, SimConfig};

fn poisson_pmf(lambda: f64, k: u32) -> f64 {
    let log_fact: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
    (k as f64 * lambda.ln() - lambda - log_fact).exp()
}

#[test]
fn poisson_pmf_within_three_sigma() {
    let sim = SimConfig::new(2024, 1_000_000, 1.0, 1.0);
    for lambda in 1..=5 {
        let h = sample_poisson_counts(lambda as f64, 1.0, &sim).unwrap();
        for k in 0..=6 {
            let p = poisson_pmf(lambda as f64, k);
            let z = h.frequency(k as usize).z_score(p);
            assert!(z <= 3.0, "λ = {lambda}, k = {k}: z = {z}");
        }
        let two = key_update_pmf(lambda as f64, 1.0).unwrap();
        assert!((two - poisson_pmf(lambda as f64, 2)).abs() <= 1e-15);
    }
}

fn random_feasible(rng: &mut ChaCha8Rng) -> NetworkConfig {
    let e = rng.random_range(3..=12);
    let mut cfg = NetworkConfig::baseline(2.0, 1, e);
    cfg.reachable_hops_inv = rng.random_range(2..e);
    cfg.n_devices = rng.random_range(1..=8);
    cfg
}

#[test]
fn attachment_within_four_sigma_for_random_configs() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for i in 0..10 {
        let cfg = random_feasible(&mut rng);
        let est = estimate_connectivity_loss(&cfg, &SimConfig::new(100 + i, 1_000_000, 1.0, 1.0)).unwrap();
        let p = connectivity_loss_probability(&cfg).unwrap();
        assert!(est.z_score(p) <= 4.0, "{cfg:?}: {est:?} vs {p}");
        assert!((0.0..=1.0).contains(&est.estimate) && est.stderr >= 0.0);
    }
}

#[test]
fn single_trial_is_valid_with_wide_stderr() {
    let cfg = NetworkConfig::baseline(2.0, 2, 10);
    let mut h = KeyHierarchy::build([0; 32]);
    let s = run_sim(&cfg, &SimConfig::new(42, 1, 20.0, 1.0), &mut h, &RefreshPolicy::default()).unwrap();
    assert!(s.conserves_messages());
    for (name, e) in &s.empirical_probabilities {
        if e.trials == 1 {
            assert!(e.stderr > 0.4, "{name}: {e:?}");
        }
    }
}

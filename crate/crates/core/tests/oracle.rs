use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qwopt::oracle::*;
use qwopt::walk::*;

fn half_target() -> TargetState {
    // identity coins put the walker on |1>, so this target has F = 1/2
    let one = C64::new(1.0, 0.0);
    TargetState::superposition(3, &[(1, one), (3, one)]).unwrap()
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

#[test]
fn count_means_follow_lambda_p() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = NoiseModel::poisson(1e4);
    let c1: Vec<f64> = (0..10_000)
        .map(|_| simulate_counts(&[0.5, 0.5, 0.0, 0.0], &noise, &mut rng).unwrap()[0] as f64)
        .collect();
    let (m, s) = mean_std(&c1);
    assert!((m - 5000.0).abs() < 3.0 * s / 100.0, "mean {m}");
}

#[test]
fn estimator_at_half_fidelity() {
    let mut o = Oracle::new(OracleConfig::new(3, half_target(), 17)).unwrap();
    let theta = [0.0; 8];
    assert!((o.evaluate_exact(&theta).unwrap() - 0.5).abs() < 1e-12);
    let f: Vec<f64> = (0..2000).map(|_| 1.0 - o.cost(&theta).unwrap()).collect();
    let (m, s) = mean_std(&f);
    assert!((m - 0.5).abs() < 3.0 * s / (f.len() as f64).sqrt(), "mean {m}");
    assert!((3.5e-3..=6.5e-3).contains(&s), "std {s}");
    assert_eq!(o.evaluations(), 2000);
}

#[test]
fn estimator_is_nearly_unbiased_at_high_lambda() {
    for (target_f, seed) in [(0.1f64, 1), (0.5, 2), (0.9, 3)] {
        let a = target_f.sqrt();
        let b = (1.0 - target_f).sqrt();
        let t = TargetState::superposition(3, &[(1, C64::new(a, 0.0)), (3, C64::new(b, 0.0))]).unwrap();
        let mut c = OracleConfig::new(3, t, seed);
        c.noise = NoiseModel::poisson(1e6);
        let mut o = Oracle::new(c).unwrap();
        let theta = [0.0; 8];
        let exact = o.evaluate_exact(&theta).unwrap();
        assert!((exact - target_f).abs() < 1e-12);
        let m = (0..1000).map(|_| 1.0 - o.cost(&theta).unwrap()).sum::<f64>() / 1000.0;
        assert!((m - exact).abs() < 1e-3, "F={target_f}: mean {m}");
    }
}

#[test]
fn kick_mean_matches_configuration() {
    let mut c = OracleConfig::new(3, TargetState::basis(3, 1).unwrap(), 5);
    c.perturbation = PerturbationConfig {
        handles: vec![Handle::new(2, 2)],
        ..PerturbationConfig::with_probability(1.0)
    };
    let mut o = Oracle::new(c).unwrap();
    for _ in 0..10_000 {
        o.perturb_step();
    }
    let ev = o.perturbation_events();
    assert_eq!(ev.len(), 10_000);
    let m = ev.iter().map(|e| e.offset.to_degrees()).sum::<f64>() / ev.len() as f64;
    assert!((m + 30.0).abs() < 3.0 * 5.0 / 100.0, "mean kick {m}");
}

#[test]
fn offsets_are_observationally_additive() {
    let target = random_target(4, 9).unwrap();
    let mut o = Oracle::new(OracleConfig::new(3, target.clone(), 1)).unwrap();
    let off = 0.3;
    o.inject_offset(Handle::new(3, 1), off).unwrap();
    let i = handle_index(3, 1, true).unwrap();
    let theta: Vec<f64> = (0..8).map(|k| 0.2 * k as f64).collect();
    let mut shifted = theta.clone();
    shifted[i] += off;
    let clean = Oracle::new(OracleConfig::new(3, target, 1)).unwrap();
    assert_eq!(
        o.evaluate_exact(&theta).unwrap().to_bits(),
        clean.evaluate_exact(&shifted).unwrap().to_bits()
    );
}

#[test]
fn noiseless_cost_is_deterministic_and_matches_pipeline() {
    let target = random_target(4, 21).unwrap();
    let mut c = OracleConfig::new(3, target.clone(), 4);
    c.noise = NoiseModel::noiseless();
    let mut o = Oracle::new(c).unwrap();
    let theta: Vec<f64> = (0..8).map(|k| 0.37 * k as f64 - 1.0).collect();
    let direct = exact_fidelity(
        3,
        &theta,
        &target,
        &WalkState::default_input(3),
        &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
    )
    .unwrap();
    for _ in 0..5 {
        assert_eq!(o.cost(&theta).unwrap().to_bits(), (1.0 - direct).to_bits());
    }
}

#[test]
fn seeded_sequences_repeat() {
    let run = || {
        let mut c = OracleConfig::new(3, random_target(4, 2).unwrap(), 77);
        c.perturbation = PerturbationConfig::with_probability(0.05);
        let mut o = Oracle::new(c).unwrap();
        let theta = [0.4; 8];
        let costs: Vec<u64> = (0..200).map(|_| o.cost(&theta).unwrap().to_bits()).collect();
        (costs, o.perturbation_events().to_vec())
    };
    let (a, ea) = run();
    let (b, eb) = run();
    assert_eq!(a, b);
    assert_eq!(ea, eb);
    assert!(!ea.is_empty());
}

use std::f64::consts::PI;

use qwopt::baselines::{powell, random_search, BaselineConfig};

fn sphere(x: &[f64]) -> qwopt::Result<f64> {
    Ok(x.iter().map(|v| (v - 0.5).powi(2)).sum())
}

// CDF of the minimum of `draws` sphere values of uniform points in [0,1]^4;
// exact while the ball of radius sqrt(eps) stays inside the cube.
fn min_cdf(eps: f64, draws: i32) -> f64 {
    assert!(eps <= 0.25);
    1.0 - (1.0 - PI * PI * eps * eps / 2.0).powi(draws)
}

fn ks_statistic(first_seed: u64, repeats: u64) -> f64 {
    let mut best: Vec<f64> = (first_seed..first_seed + repeats)
        .map(|s| {
            let cfg = BaselineConfig::new(vec![(0.0, 1.0); 4], 1000, s);
            let t = random_search(sphere, &cfg).unwrap();
            assert_eq!(t.len(), 1000);
            assert!(t.best_curve().windows(2).all(|w| w[1] <= w[0]));
            t.final_best().unwrap()
        })
        .collect();
    best.sort_by(f64::total_cmp);
    let n = repeats as f64;
    best.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = min_cdf(x, 1000);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

// Kolmogorov critical value at the 1% level
fn critical(repeats: u64) -> f64 {
    1.6276 / (repeats as f64).sqrt()
}

#[test]
fn random_search_minimum_follows_order_statistics() {
    let d = ks_statistic(1000, 200);
    assert!(d < critical(200), "KS statistic {d}");
    // a large sample guards against a bias a 200-run test cannot see
    let d = ks_statistic(100_000, 10_000);
    assert!(d < critical(10_000), "KS statistic {d}");
}

#[test]
fn baselines_are_reproducible() {
    let cfg = BaselineConfig::new(vec![(-1.0, 2.0); 3], 120, 9);
    let f = |x: &[f64]| Ok(x[0].sin() + (x[1] * x[2]).cos());
    for algo in [random_search::<fn(&[f64]) -> qwopt::Result<f64>>, powell] {
        let a = algo(f, &cfg).unwrap();
        let b = algo(f, &cfg).unwrap();
        assert_eq!(a.len(), b.len());
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.theta, rb.theta);
            assert_eq!(ra.cost.to_bits(), rb.cost.to_bits());
        }
    }
}

#[test]
fn powell_reaches_the_quadratic_minimum() {
    let cfg = BaselineConfig::new(vec![(-5.0, 5.0); 2], 200, 0);
    let t = powell(|x| Ok((x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(2)), &cfg).unwrap();
    let b = t.summary.best_theta.clone().unwrap();
    assert!(((b[0] - 1.0).powi(2) + (b[1] + 2.0).powi(2)).sqrt() < 1e-6, "{b:?}");
    assert!(t.len() <= 200);
    assert!(t.best_curve().windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn separable_quadratic_converges_within_two_sweeps() {
    // exact axis line minima reach the optimum in sweep one; sweep two sees
    // no progress and stops
    let n = 3;
    let mut cfg = BaselineConfig::new(vec![(-4.0, 4.0); n], 10_000, 0);
    cfg.start = Some(vec![-3.0, 2.5, 1.0]);
    let c = [0.7, -1.3, 2.2];
    let w = [1.0, 4.0, 0.5];
    let f = |x: &[f64]| Ok((0..3).map(|i| w[i] * (x[i] - c[i]).powi(2)).sum());
    let t = powell(f, &cfg).unwrap();
    let two_sweeps = 1 + 2 * (n + 1) * cfg.max_line_evals;
    assert!(t.len() <= two_sweeps, "{} evaluations", t.len());
    let b = t.summary.best_theta.clone().unwrap();
    for i in 0..3 {
        assert!((b[i] - c[i]).abs() < 1e-5, "{b:?}");
    }
}

#[test]
fn powell_stays_inside_the_box() {
    let cfg = BaselineConfig::new(vec![(0.0, 1.0), (10.0, 20.0)], 300, 0);
    // minimum outside the box
    let t = powell(|x| Ok((x[0] - 3.0).powi(2) + (x[1] - 5.0).powi(2)), &cfg).unwrap();
    assert!(t.records.iter().all(|r| (0.0..=1.0).contains(&r.theta[0]) && (10.0..=20.0).contains(&r.theta[1])));
    let b = t.summary.best_theta.clone().unwrap();
    assert!((b[0] - 1.0).abs() < 1e-5 && (b[1] - 10.0).abs() < 1e-5, "{b:?}");
}

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slelab::special_fn::{gamma_fn, hyp2f1, hyp2f1_at_one, SeriesControl};

/// Plain partial sums of the hypergeometric series with compensated
/// summation, run far past the point where terms stop mattering.
fn naive_series(a: f64, b: f64, c: f64, z: f64) -> f64 {
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut comp = 0.0f64;
    for n in 0..2_000_000 {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if term == 0.0 || (n > 100 && term.abs() < 1e-20 * sum.abs()) {
            break;
        }
    }
    sum
}

#[test]
fn production_path_matches_naive_series_on_random_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let ctrl = SeriesControl::new(1e-14, 20_000).unwrap();
    let mut checked = 0;
    while checked < 50 {
        let a = rng.random_range(-2.0..2.0);
        let b = rng.random_range(-2.0..2.0);
        let c = rng.random_range(0.2..3.0);
        for z in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let oracle = naive_series(a, b, c, z);
            let v = hyp2f1(a, b, c, z, &ctrl).unwrap();
            let scale = oracle.abs().max(1.0);
            assert!(
                (v - oracle).abs() <= 1e-9 * scale,
                "({a}, {b}, {c}, {z}): {v} vs {oracle}"
            );
        }
        checked += 1;
    }
}

#[test]
fn hyp2f1_with_equal_parameters_is_a_power() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ctrl = SeriesControl::default();
    for _ in 0..20 {
        let a = rng.random_range(-2.5..2.5);
        let b = rng.random_range(0.1..3.0);
        let z = rng.random_range(0.0..0.95);
        let v = hyp2f1(a, b, b, z, &ctrl).unwrap();
        let exact = (1.0 - z).powf(-a);
        assert!((v - exact).abs() <= 1e-10 * exact.max(1.0), "a={a} b={b} z={z}");
    }
}

#[test]
fn gamma_duplication_formula() {
    for x in [0.3, 0.75, 1.9, 4.2] {
        let lhs = gamma_fn(2.0 * x).unwrap();
        let rhs = 2f64.powf(2.0 * x - 1.0) / PI.sqrt() * gamma_fn(x).unwrap() * gamma_fn(x + 0.5).unwrap();
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs(), "x={x}");
    }
}

#[test]
fn value_at_one_is_the_limit_of_the_series() {
    // convergent case: compare with the function just below 1
    let (a, b, c) = (0.3, 0.4, 1.9);
    let at_one = hyp2f1_at_one(a, b, c).unwrap();
    let near = hyp2f1(a, b, c, 1.0 - 1e-9, &SeriesControl::default()).unwrap();
    assert!((at_one - near).abs() < 1e-6);
}

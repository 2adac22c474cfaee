mod common;

use common::quad::integrate_positive;
use hyperfa::gig::GigParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CONC: [f64; 5] = [0.2, 0.7, 1.5, 4.0, 10.0];
const INDEX: [f64; 5] = [-3.0, -0.5, 0.0, 1.0, 2.5];

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn normalization_and_moments_on_grid() {
    for &psi in &CONC {
        for &chi in &CONC {
            for &lambda in &INDEX {
                let p = GigParams::new(psi, chi, lambda).unwrap();
                let log_h = |y: f64| p.log_density(y).unwrap();
                let mass = integrate_positive(|_| 1.0, log_h, 1e-12);
                let e_y = integrate_positive(|y| y, log_h, 1e-12);
                let e_inv = integrate_positive(|y| 1.0 / y, log_h, 1e-12);
                let e_log = integrate_positive(|y| y.ln(), log_h, 1e-12);
                let m = p.moments().unwrap();
                let tag = format!("psi={psi} chi={chi} lambda={lambda}");
                assert!((mass - 1.0).abs() < 1e-8, "{tag}: mass {mass}");
                assert!(close(m.e_y, e_y, 1e-8), "{tag}: E[Y] {} vs {e_y}", m.e_y);
                assert!(close(m.e_inv_y, e_inv, 1e-8), "{tag}: E[1/Y] {} vs {e_inv}", m.e_inv_y);
                assert!(close(m.e_log_y, e_log, 1e-8), "{tag}: E[log Y] {} vs {e_log}", m.e_log_y);
                let direct = p.e_inv_y_direct().unwrap();
                assert!(close(m.e_inv_y, direct, 1e-10), "{tag}: two routes {} vs {direct}", m.e_inv_y);
            }
        }
    }
}

#[test]
fn point_value_cross_checked_in_extended_precision() {
    let p = GigParams::new(2.0, 0.5, -1.0).unwrap();
    let v = p.log_density(2.0).unwrap();
    assert!((v - (-4.389_936_774_029_029)).abs() < 1e-12, "{v}");
}

#[test]
fn moments_at_index_zero() {
    // 40-digit quadrature of the density
    let m = GigParams::new(2.0, 2.0, 0.0).unwrap().moments().unwrap();
    assert!((m.e_y - 1.228_036_929_818_908).abs() < 1e-12);
    assert!((m.e_inv_y - 1.228_036_929_818_908).abs() < 1e-12);
    assert!(m.e_log_y.abs() < 1e-10);
}

fn mean_and_se(d: &[f64]) -> (f64, f64) {
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn sample_mean_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let draws = GigParams::new(1.0, 1.0, 0.5).unwrap().sample(&mut rng, 1_000_000).unwrap();
    let (mean, se) = mean_and_se(&draws);
    assert!((mean - 2.0).abs() < 3.0 * se, "{mean} ± {se}");
}

#[test]
fn sample_mean_against_quadrature_moment() {
    let p = GigParams::new(2.0, 0.5, 1.0).unwrap();
    let want = integrate_positive(|y| y, |y| p.log_density(y).unwrap(), 1e-12);
    assert!((want - 1.349_741_967_796_886).abs() < 1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let draws = p.sample(&mut rng, 1_000_000).unwrap();
    let (mean, se) = mean_and_se(&draws);
    assert!((mean - want).abs() < 3.0 * se, "{mean} ± {se} vs {want}");
}

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

#[test]
fn reciprocal_draws_match_swapped_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let n = 100_000;
    let neg = GigParams::new(1.5, 0.6, -0.5).unwrap().sample(&mut rng, n).unwrap();
    let pos = GigParams::new(0.6, 1.5, 0.5).unwrap().sample(&mut rng, n).unwrap();
    let recip: Vec<f64> = neg.iter().map(|y| 1.0 / y).collect();
    let d = ks_statistic(recip, pos);
    // 0.1% critical value
    let crit = 1.949 * (2.0 / n as f64).sqrt();
    assert!(d < crit, "KS {d} >= {crit}");
}

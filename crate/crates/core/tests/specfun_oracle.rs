mod common;

use common::bessel::log_k_and_order_derivative;
use hyperfa::specfun::{dlogk_dnu, log_bessel_k};

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

#[test]
fn evenness_in_order() {
    for nu in (0..=40).map(|k| k as f64 * 1.25 + 0.013) {
        for &x in &log_grid(1e-3, 1e3, 13) {
            let a = log_bessel_k(nu, x).unwrap();
            let b = log_bessel_k(-nu, x).unwrap();
            assert!(((a - b).exp() - 1.0).abs() <= 1e-12, "nu={nu} x={x}");
        }
    }
}

#[test]
fn three_term_recurrence() {
    for nu in (0..=60).map(|k| k as f64 * 0.83 + 0.05) {
        for &x in &log_grid(1e-2, 1e3, 11) {
            let lo = log_bessel_k(nu - 1.0, x).unwrap();
            let mid = log_bessel_k(nu, x).unwrap();
            let hi = log_bessel_k(nu + 1.0, x).unwrap();
            let a = lo;
            let b = mid + (2.0 * nu / x).ln();
            let m = a.max(b);
            let rhs = m + ((a - m).exp() + (b - m).exp()).ln();
            assert!(((hi - rhs).exp() - 1.0).abs() <= 1e-10, "nu={nu} x={x}: {hi} vs {rhs}");
        }
    }
}

#[test]
fn high_precision_reference_values() {
    // 40-digit reference values
    let table = [
        (0.3, 0.001, 2.667_682_792_758_738_5),
        (7.5, 3.0, 3.464_010_014_659_947),
        (200.0, 1e4, -10_002.379_557_960_566),
        (200.0, 0.5, 1_134.499_080_799_172_9),
        (0.0, 1e4, -10_004.379_391_332_718),
        (33.3, 12.0, 21.149_369_106_754_486),
        (1000.0, 500.0, 322.317_651_492_029_33),
        (250.3, 22.0, 528.808_569_205_043_3),
    ];
    for (nu, x, want) in table {
        let got = log_bessel_k(nu, x).unwrap();
        assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "nu={nu} x={x}: {got} vs {want}");
    }
}

#[test]
fn order_derivative_reference_values() {
    let table = [
        (0.5, 1.0, 0.361_328_616_888_222_6),
        (0.0, 2.0, 0.0),
        (1.0, 0.1, 2.463_068_049_756_290_5),
        (3.7, 2.5, 1.096_414_817_847_516_5),
        (-6.2, 40.0, -0.152_541_405_699_453_4),
        (10.0, 0.1, 5.247_515_725_143_906),
        (10.0, 100.0, 0.099_344_223_388_195_77),
        (-10.0, 5.0, -1.404_013_188_400_093_2),
        (2.25, 17.0, 0.128_361_387_520_429_18),
    ];
    for (nu, x, want) in table {
        let got = dlogk_dnu(nu, x).unwrap();
        assert!((got - want).abs() < 1e-7, "nu={nu} x={x}: {got} vs {want}");
    }
    let a = dlogk_dnu(0.5, 1.0).unwrap();
    let b = dlogk_dnu(-0.5, 1.0).unwrap();
    assert_eq!(a, -b);
}

#[test]
fn order_derivative_against_integral_representation() {
    for nu in (0..=20).map(|k| -10.0 + k as f64) {
        for &x in &log_grid(0.1, 100.0, 8) {
            let (log_k, want) = log_k_and_order_derivative(nu, x);
            let got = dlogk_dnu(nu, x).unwrap();
            assert!((got - want).abs() < 1e-5, "nu={nu} x={x}: {got} vs {want}");
            assert!((log_bessel_k(nu, x).unwrap() - log_k).abs() < 1e-9 * log_k.abs().max(1.0));
        }
    }
}

#[test]
fn order_derivative_matches_fixed_step_difference() {
    for nu in (0..=24).map(|k| -12.0 + k as f64 * 0.97) {
        for &x in &log_grid(0.05, 200.0, 9) {
            let h = 1e-6;
            let fd = (log_bessel_k(nu + h, x).unwrap() - log_bessel_k(nu - h, x).unwrap()) / (2.0 * h);
            assert!((dlogk_dnu(nu, x).unwrap() - fd).abs() < 1e-5, "nu={nu} x={x}");
        }
    }
}

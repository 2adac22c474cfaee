//! Integral representation `K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt`
//! and its order derivative `int_0^inf t sinh(nu t) exp(-x cosh t) dt`.

use super::quad::{integrate_panels, support_window};

fn log_kernel(nu: f64, x: f64, t: f64) -> f64 {
    // log(exp(-x cosh t) * cosh(nu t)), stable for large nu t
    let a = (nu * t).abs();
    -x * t.cosh() + a + (0.5 * (1.0 + (-2.0 * a).exp())).ln()
}

/// `(log K_nu(x), d/dnu log K_nu(x))` by direct quadrature.
pub fn log_k_and_order_derivative(nu: f64, x: f64) -> (f64, f64) {
    let (_, hi) = support_window(|t| log_kernel(nu, x, t), 1.0, 0.05, 60.0);
    let lo = 0.0;
    let hi = hi.max(0.5);
    // shift by the peak to avoid overflow
    let mut peak = f64::NEG_INFINITY;
    for k in 0..=2000 {
        let t = hi * k as f64 / 2000.0;
        peak = peak.max(log_kernel(nu, x, t));
    }
    let k = integrate_panels(|t| (log_kernel(nu, x, t) - peak).exp(), lo, hi, 64, 1e-14);
    let dk = integrate_panels(
        |t| {
            // t sinh(nu t) exp(-x cosh t), scaled by the same peak
            let a = (nu * t).abs();
            let sinh_scaled = 0.5 * (1.0 - (-2.0 * a).exp()) * nu.signum();
            t * sinh_scaled * (-x * t.cosh() + a - peak).exp()
        },
        lo,
        hi,
        64,
        1e-14,
    );
    (k.ln() + peak, dk / k)
}

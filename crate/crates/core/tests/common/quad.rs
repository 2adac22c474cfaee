//! Adaptive Gauss-Kronrod (7/15) quadrature used as an independent oracle.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Integral of `f` over `[a, b]` to roughly `tol` relative accuracy.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let mut total = 0.0;
    let mut stack = vec![(a, b, 0usize)];
    let (whole, _) = gk15(&f, a, b);
    let scale = whole.abs().max(1e-300);
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err) = gk15(&f, lo, hi);
        if err <= tol * scale * ((hi - lo) / (b - a)).max(1e-3) || depth > 40 {
            total += val;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    total
}

/// Integral over a window `[lo, hi]` split into `pieces` equal panels.
pub fn integrate_panels<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, pieces: usize, tol: f64) -> f64 {
    let w = (hi - lo) / pieces as f64;
    (0..pieces)
        .map(|k| integrate(&f, lo + k as f64 * w, lo + (k + 1) as f64 * w, tol))
        .sum()
}

/// Window `[lo, hi]` around the peak of a log-integrand outside of which it
/// has dropped by more than `drop` nats.
pub fn support_window<F: Fn(f64) -> f64>(logf: F, center: f64, step: f64, drop: f64) -> (f64, f64) {
    // coarse search for the peak near the centre
    let mut peak_u = center;
    let mut peak = logf(center);
    for k in -400..=400 {
        let u = center + k as f64 * step * 0.25;
        let v = logf(u);
        if v > peak {
            peak = v;
            peak_u = u;
        }
    }
    let mut lo = peak_u;
    while logf(lo) > peak - drop {
        lo -= step;
    }
    let mut hi = peak_u;
    while logf(hi) > peak - drop {
        hi += step;
    }
    (lo, hi)
}

/// `integral_0^inf g(y) exp(log_h(y)) dy` computed on the log scale
/// `y = e^u`, where `log_h` is a log density used to locate the mass.
pub fn integrate_positive<G, H>(g: G, log_h: H, tol: f64) -> f64
where
    G: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    let log_integrand = |u: f64| log_h(u.exp()) + u;
    let (lo, hi) = support_window(log_integrand, 0.0, 0.25, 80.0);
    integrate_panels(
        |u: f64| {
            let y = u.exp();
            g(y) * (log_h(y) + u).exp()
        },
        lo,
        hi,
        32,
        tol,
    )
}

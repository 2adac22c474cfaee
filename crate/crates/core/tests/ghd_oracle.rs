mod common;

use common::quad::{integrate_panels, support_window};
use hyperfa::ghd::{log_density_legacy, FactoredScale, GhParams, GhSampler, Scale};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_spd(rng: &mut ChaCha8Rng, p: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(p, p) * 0.5
}

fn random_vec(rng: &mut ChaCha8Rng, p: usize, s: f64) -> DVector<f64> {
    DVector::from_fn(p, |_, _| rng.random_range(-s..s))
}

#[test]
fn two_parameterizations_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    for trial in 0..200 {
        let p = 1 + trial % 5;
        let raw = random_spd(&mut rng, p);
        let sigma = &raw / raw.determinant().powf(1.0 / p as f64);
        let mu = random_vec(&mut rng, p, 2.0);
        let alpha = random_vec(&mut rng, p, 1.0);
        let x = random_vec(&mut rng, p, 3.0);
        let chi = rng.random_range(0.2..4.0);
        let phi = rng.random_range(0.2..4.0);
        let lambda = rng.random_range(-3.0..3.0);
        let legacy = log_density_legacy(&x, &mu, &alpha, &sigma, chi, phi, lambda).unwrap();

        let eta = (chi / phi).sqrt();
        let g = GhParams::new(mu, alpha * eta, Scale::Dense(sigma * eta), lambda, (chi * phi).sqrt()).unwrap();
        let direct = g.log_density(&x).unwrap();
        assert!((legacy - direct).abs() < 1e-10, "trial {trial}: {legacy} vs {direct}");
    }
}

#[test]
fn unit_determinant_example_in_two_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let raw = random_spd(&mut rng, 2);
    let sigma = &raw / raw.determinant().sqrt();
    let mu = DVector::from_vec(vec![0.3, -0.2]);
    let alpha = DVector::from_vec(vec![0.5, 1.0]);
    let x = DVector::from_vec(vec![1.0, 1.0]);
    let legacy = log_density_legacy(&x, &mu, &alpha, &sigma, 2.0, 0.5, 0.7).unwrap();
    let g = GhParams::new(mu, alpha * 2.0, Scale::Dense(sigma * 2.0), 0.7, 1.0).unwrap();
    assert!((legacy - g.log_density(&x).unwrap()).abs() < 1e-10);
}

#[test]
fn factored_scale_matches_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for trial in 0..60 {
        let p = 2 + trial % 30;
        let q = 1 + trial % (p - 1).min(4);
        let loadings = DMatrix::from_fn(p, q, |_, _| rng.random_range(-2.0..2.0));
        let noise = DVector::from_fn(p, |_, _| rng.random_range(0.05..3.0));
        let fs = FactoredScale::new(loadings, noise).unwrap();
        let mu = random_vec(&mut rng, p, 1.0);
        let alpha = random_vec(&mut rng, p, 0.5);
        let lambda = rng.random_range(-2.0..2.0);
        let omega = rng.random_range(0.1..5.0);
        let dense = GhParams::new(mu.clone(), alpha.clone(), Scale::Dense(fs.dense()), lambda, omega).unwrap();
        let fact = GhParams::new(mu, alpha, Scale::Factored(fs), lambda, omega).unwrap();
        for _ in 0..5 {
            let x = random_vec(&mut rng, p, 4.0);
            let a = dense.log_density(&x).unwrap();
            let b = fact.log_density(&x).unwrap();
            assert!((a - b).abs() < 1e-10 * a.abs().max(1.0), "p={p} q={q}: {a} vs {b}");
        }
    }
}

fn scalar(alpha: f64, sigma: f64, lambda: f64, omega: f64) -> GhParams {
    GhParams::new(
        DVector::from_element(1, 0.4),
        DVector::from_element(1, alpha),
        Scale::Dense(DMatrix::from_element(1, 1, sigma)),
        lambda,
        omega,
    )
    .unwrap()
}

fn one_d_mass(g: &GhParams, lo: f64, hi: f64) -> f64 {
    let d = g.density().unwrap();
    integrate_panels(|x| d.log_density(&DVector::from_element(1, x)).unwrap().exp(), lo, hi, 16, 1e-12)
}

fn one_d_window(g: &GhParams) -> (f64, f64) {
    let d = g.density().unwrap();
    support_window(|x| d.log_density(&DVector::from_element(1, x)).unwrap(), 0.4, 0.5, 45.0)
}

#[test]
fn one_dimensional_normalization() {
    for &lambda in &[-1.0, 0.5, 2.0] {
        for &omega in &[0.5, 1.0, 5.0] {
            for &alpha in &[0.0, 0.8] {
                let g = scalar(alpha, 1.3, lambda, omega);
                let (lo, hi) = one_d_window(&g);
                let mass = one_d_mass(&g, lo, hi);
                assert!((mass - 1.0).abs() < 1e-6, "lambda={lambda} omega={omega} alpha={alpha}: {mass}");
            }
        }
    }
}

#[test]
fn histogram_goodness_of_fit() {
    let g = scalar(0.6, 1.0, 0.5, 1.0);
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let draws = g.sample(&mut rng, n).unwrap();
    // 20 equal-width bins on the bulk plus two tails
    let edges: Vec<f64> = (0..=20).map(|k| -3.0 + 0.5 * k as f64).collect();
    let (lo, hi) = one_d_window(&g);
    let mut probs = vec![one_d_mass(&g, lo, edges[0])];
    for w in edges.windows(2) {
        probs.push(one_d_mass(&g, w[0], w[1]));
    }
    probs.push(one_d_mass(&g, edges[20], hi));
    let mut counts = vec![0usize; probs.len()];
    for v in draws.iter() {
        let k = if *v < edges[0] {
            0
        } else if *v >= edges[20] {
            21
        } else {
            1 + ((v - edges[0]) / 0.5).floor() as usize
        };
        counts[k] += 1;
    }
    let chi2: f64 = counts
        .iter()
        .zip(&probs)
        .map(|(&c, &p)| {
            let e = p * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    // 1% critical value, 21 degrees of freedom
    assert!(chi2 < 38.932, "chi2 = {chi2}");
}

#[test]
fn sample_mean_tracks_mixing_moment() {
    let mu = DVector::from_vec(vec![1.0, -2.0]);
    let alpha = DVector::from_vec(vec![0.5, 1.5]);
    let g = GhParams::new(
        mu.clone(),
        alpha.clone(),
        Scale::Dense(DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0])),
        0.5,
        1.0,
    )
    .unwrap();
    let n = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let x = g.sample(&mut rng, n).unwrap();
    let e_y = hyperfa::gig::GigParams::symmetric(1.0, 0.5).unwrap().moments().unwrap().e_y;
    for j in 0..2 {
        let col = x.column(j);
        let mean = col.mean();
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        let want = mu[j] + e_y * alpha[j];
        assert!((mean - want).abs() < 3.0 * se, "coord {j}: {mean} vs {want} (se {se})");
    }
}

fn covariance_close(samples: &[DVector<f64>], sigma: &DMatrix<f64>, k_se: f64) {
    let n = samples.len() as f64;
    let p = sigma.nrows();
    for a in 0..p {
        for b in 0..p {
            let prods: Vec<f64> = samples.iter().map(|v| v[a] * v[b]).collect();
            let m = prods.iter().sum::<f64>() / n;
            let var = prods.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            assert!((m - sigma[(a, b)]).abs() < k_se * se, "entry ({a},{b}): {m} vs {} (se {se})", sigma[(a, b)]);
        }
    }
}

#[test]
fn standardized_residuals_recover_scale() {
    let sigma = DMatrix::from_row_slice(3, 3, &[1.0, 0.4, 0.0, 0.4, 2.0, -0.3, 0.0, -0.3, 0.7]);
    let g = GhParams::new(
        DVector::from_vec(vec![0.0, 1.0, 2.0]),
        DVector::from_vec(vec![1.0, -1.0, 0.5]),
        Scale::Dense(sigma.clone()),
        -0.8,
        2.0,
    )
    .unwrap();
    let sampler = GhSampler::new(&g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let resid: Vec<DVector<f64>> = (0..200_000)
        .map(|_| {
            let (x, y) = sampler.draw(&mut rng);
            (x - &g.mu - &g.alpha * y) / y.sqrt()
        })
        .collect();
    covariance_close(&resid, &sigma, 3.0);
}

#[test]
fn concentrated_mixing_gives_gaussian_covariance() {
    let sigma = DMatrix::from_row_slice(2, 2, &[1.5, 0.5, 0.5, 1.0]);
    let g = GhParams::new(DVector::zeros(2), DVector::zeros(2), Scale::Dense(sigma.clone()), 0.5, 1e6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    let x = g.sample(&mut rng, 200_000).unwrap();
    let rows: Vec<DVector<f64>> = x.row_iter().map(|r| r.transpose()).collect();
    // Var(Y) = O(1/omega) leaves a bias far inside the sampling error
    covariance_close(&rows, &sigma, 3.5);
}

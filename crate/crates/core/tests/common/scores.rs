//! Score and gradient oracles for the conditional-maximization stages.

use hyperfa::data::ObservationMatrix;
use hyperfa::mghfa::cm::q_objective;
use hyperfa::mghfa::{EStepCache, GhfaComponent};
use nalgebra::{DMatrix, DVector};

/// `Psi^{-1} sum zhat [r E2' - alpha E1' - Lambda E3]` and its scale.
pub fn score_lambda(
    data: &ObservationMatrix,
    cache: &EStepCache,
    comp: &GhfaComponent,
    loadings: &DMatrix<f64>,
    noise: &DVector<f64>,
    g: usize,
) -> (f64, f64) {
    let (p, q) = (loadings.nrows(), loadings.ncols());
    let mut t1 = DMatrix::zeros(p, q);
    let mut t2 = DMatrix::zeros(p, q);
    let mut t3 = DMatrix::zeros(p, q);
    for (i, x) in data.rows().iter().enumerate() {
        let z = cache.zhat[(i, g)];
        let r = x - &comp.mu;
        t1 += z * &r * cache.e2[g][i].transpose();
        t2 += z * &comp.alpha * cache.e1[g][i].transpose();
        t3 += z * loadings * &cache.e3[g][i];
    }
    let scale_rows = |m: DMatrix<f64>| DMatrix::from_fn(p, q, |j, k| m[(j, k)] / noise[j]);
    let (t1, t2, t3) = (scale_rows(t1), scale_rows(t2), scale_rows(t3));
    ((&t1 - &t2 - &t3).norm(), t1.norm() + t2.norm() + t3.norm())
}

/// `diag S2` and its scale.
pub fn score_noise(
    data: &ObservationMatrix,
    cache: &EStepCache,
    comp: &GhfaComponent,
    loadings: &DMatrix<f64>,
    noise: &DVector<f64>,
    g: usize,
) -> (f64, f64) {
    let p = noise.len();
    let mut inner = DMatrix::zeros(p, p);
    let mut scale = 0.0;
    for (i, x) in data.rows().iter().enumerate() {
        let z = cache.zhat[(i, g)];
        let r = x - &comp.mu;
        let a = &comp.alpha;
        let terms = [
            cache.b[(i, g)] * &r * r.transpose(),
            -2.0 * a * r.transpose(),
            cache.a[(i, g)] * a * a.transpose(),
            -2.0 * &r * cache.e2[g][i].transpose() * loadings.transpose(),
            2.0 * a * cache.e1[g][i].transpose() * loadings.transpose(),
            loadings * &cache.e3[g][i] * loadings.transpose(),
        ];
        for t in terms {
            scale += z * t.diagonal().abs().sum();
            inner += z * t;
        }
    }
    let n_g = cache.n_g(g);
    let s2 = 0.5 * n_g * DMatrix::from_diagonal(noise) - 0.5 * inner;
    (s2.diagonal().norm(), scale + n_g * noise.sum())
}

/// Central-difference gradient norm of `q_g`.
pub fn q_gradient(omega: f64, lambda: f64, a: f64, b: f64, c: f64) -> f64 {
    let h = 1e-5;
    let d_omega = (q_objective(omega + h, lambda, a, b, c).unwrap() - q_objective(omega - h, lambda, a, b, c).unwrap()) / (2.0 * h);
    let d_lambda = (q_objective(omega, lambda + h, a, b, c).unwrap() - q_objective(omega, lambda - h, a, b, c).unwrap()) / (2.0 * h);
    d_omega.hypot(d_lambda)
}

//! Starting values from a (hard or soft) partition of the rows.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use crate::data::ObservationMatrix;
use crate::error::{Error, Result};
use crate::mghfa::fit::min_component_size;
use crate::mghfa::model::{GhfaComponent, MixtureModel};

pub const INIT_LAMBDA: f64 = -0.5;
pub const INIT_OMEGA: f64 = 1.0;

/// Hard labels as an `n x G` indicator matrix.
pub fn indicator(labels: &[usize], g: usize) -> DMatrix<f64> {
    let mut z = DMatrix::zeros(labels.len(), g);
    for (i, &l) in labels.iter().enumerate() {
        z[(i, l)] = 1.0;
    }
    z
}

/// Random responsibilities, uniform weights normalized per row. Rows with
/// a known class get its indicator.
pub fn random_weights<R: Rng + ?Sized>(n: usize, g: usize, known: Option<&[Option<usize>]>, rng: &mut R) -> DMatrix<f64> {
    let mut z = DMatrix::zeros(n, g);
    for i in 0..n {
        let w: Vec<f64> = (0..g).map(|_| rng.random::<f64>() + 1e-12).collect();
        let total: f64 = w.iter().sum();
        for (k, v) in w.iter().enumerate() {
            z[(i, k)] = v / total;
        }
        if let Some(c) = known.and_then(|k| k[i]) {
            z.row_mut(i).fill(0.0);
            z[(i, c)] = 1.0;
        }
    }
    z
}

/// Component parameters from weighted moments: cluster mean, top-`q`
/// principal directions scaled by root eigenvalues, and the remaining
/// diagonal variance. `alpha = 0`, `lambda = -1/2`, `omega = 1`.
pub fn model_from_weights(data: &ObservationMatrix, z: &DMatrix<f64>, q: usize, psi_floor: f64) -> Result<MixtureModel> {
    let (n, p, g_count) = (data.n(), data.p(), z.ncols());
    if z.nrows() != n {
        return Err(Error::Dimension("weights do not match the rows".into()));
    }
    let mut weights = Vec::with_capacity(g_count);
    let mut components = Vec::with_capacity(g_count);
    for g in 0..g_count {
        let n_g = z.column(g).sum();
        let needed = min_component_size(q);
        if n_g <= needed as f64 {
            return Err(Error::EmptyComponent {
                component: g,
                size: n_g,
                needed,
            });
        }
        let mut mu = DVector::zeros(p);
        for (i, x) in data.rows().iter().enumerate() {
            mu.axpy(z[(i, g)], x, 1.0);
        }
        mu /= n_g;
        let mut cov = DMatrix::zeros(p, p);
        for (i, x) in data.rows().iter().enumerate() {
            let r = x - &mu;
            cov.syger(z[(i, g)] / n_g, &r, &r, 1.0);
        }
        cov.fill_upper_triangle_with_lower_triangle();
        let eig = SymmetricEigen::new(cov.clone());
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let mut loadings = DMatrix::zeros(p, q);
        for (k, &idx) in order.iter().take(q).enumerate() {
            let scale = eig.eigenvalues[idx].max(0.0).sqrt();
            let v = eig.eigenvectors.column(idx);
            // deterministic sign: largest entry positive
            let pivot = v.iamax();
            let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
            loadings.set_column(k, &(v * (sign * scale)));
        }
        let noise = DVector::from_fn(p, |j, _| {
            let s = cov[(j, j)];
            let explained: f64 = loadings.row(j).norm_squared();
            (s - explained).max(0.1 * s).max(psi_floor)
        });
        weights.push(n_g / n as f64);
        components.push(GhfaComponent {
            mu,
            alpha: DVector::zeros(p),
            loadings,
            noise,
            lambda: INIT_LAMBDA,
            omega: INIT_OMEGA,
        });
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    MixtureModel::new(weights, components)
}

//! Inverse and log-determinant of `Lambda Lambda' + Psi` through a `q x q`
//! system.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::ghd::FactoredScale;

/// Factor counts handled on the stack by [`WoodburyPrecision::mahalanobis`].
const STACK_FACTORS: usize = 16;

/// Precision operator for a factored scale
/// `Sigma^{-1} = Psi^{-1} - Psi^{-1} Lambda M^{-1} Lambda' Psi^{-1}` with
/// `M = I_q + Lambda' Psi^{-1} Lambda`.
#[derive(Debug, Clone)]
pub struct WoodburyPrecision {
    inv_noise: DVector<f64>,
    loadings: DMatrix<f64>,
    /// `Psi^{-1} Lambda`, p x q
    scaled_loadings: DMatrix<f64>,
    /// `M^{-1}`, q x q
    core_inv: DMatrix<f64>,
    log_det: f64,
}

impl WoodburyPrecision {
    pub fn new(scale: &FactoredScale) -> Result<Self> {
        let noise = scale.noise();
        let loadings = scale.loadings();
        let q = loadings.ncols();
        let inv_noise = noise.map(|v| 1.0 / v);
        let mut scaled_loadings = loadings.clone();
        for (j, mut row) in scaled_loadings.row_iter_mut().enumerate() {
            row *= inv_noise[j];
        }
        let core = DMatrix::<f64>::identity(q, q) + loadings.transpose() * &scaled_loadings;
        let (core_inv, core_log_det) = if q == 0 {
            (DMatrix::zeros(0, 0), 0.0)
        } else {
            let chol = Cholesky::<f64, Dyn>::new(core).ok_or(Error::NotPositiveDefinite)?;
            let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            (chol.inverse(), log_det)
        };
        let log_det = noise.iter().map(|v| v.ln()).sum::<f64>() + core_log_det;
        Ok(Self {
            inv_noise,
            loadings: loadings.clone(),
            scaled_loadings,
            core_inv,
            log_det,
        })
    }

    pub fn dim(&self) -> usize {
        self.inv_noise.len()
    }

    /// `log |Lambda Lambda' + Psi|`
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// `M^{-1} = I_q - beta Lambda`.
    pub fn core_inverse(&self) -> &DMatrix<f64> {
        &self.core_inv
    }

    /// `u = M^{-1} Lambda' Psi^{-1} v` and the residual `v - Lambda u`.
    fn split(&self, v: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let u = &self.core_inv * self.scaled_loadings.tr_mul(v);
        let resid = v - &self.loadings * &u;
        (u, resid)
    }

    /// `Sigma^{-1} v = Psi^{-1} (v - Lambda u)`
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.split(v).1.component_mul(&self.inv_noise)
    }

    /// `a' Sigma^{-1} b = (a - Lambda u_a)' Psi^{-1} (b - Lambda u_b) + u_a' u_b`;
    /// a sum of squares when `a = b`.
    pub fn quad(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        let weighted = |ra: &DVector<f64>, rb: &DVector<f64>| -> f64 {
            ra.iter()
                .zip(rb.iter())
                .zip(self.inv_noise.iter())
                .map(|((x, y), w)| x * y * w)
                .sum()
        };
        let (ua, ra) = self.split(a);
        if std::ptr::eq(a, b) {
            return weighted(&ra, &ra) + ua.norm_squared();
        }
        let (ub, rb) = self.split(b);
        weighted(&ra, &rb) + ua.dot(&ub)
    }

    /// `(x - m)' Sigma^{-1} (x - m)` in the residual form of [`Self::quad`],
    /// without heap allocation for small `q`.
    pub fn mahalanobis(&self, x: &DVector<f64>, m: &DVector<f64>) -> f64 {
        let q = self.core_inv.nrows();
        if q > STACK_FACTORS {
            let r = x - m;
            return self.quad(&r, &r);
        }
        let (x, m) = (x.as_slice(), m.as_slice());
        let p = x.len();
        let scaled = self.scaled_loadings.as_slice();
        let core = self.core_inv.as_slice();
        let mut t = [0.0; STACK_FACTORS];
        for (k, tk) in t.iter_mut().enumerate().take(q) {
            let col = &scaled[k * p..(k + 1) * p];
            let mut s = 0.0;
            for j in 0..p {
                s += col[j] * (x[j] - m[j]);
            }
            *tk = s;
        }
        let mut u = [0.0; STACK_FACTORS];
        for (k, uk) in u.iter_mut().enumerate().take(q) {
            let mut s = 0.0;
            for (l, tl) in t.iter().enumerate().take(q) {
                s += core[l * q + k] * tl;
            }
            *uk = s;
        }
        let loadings = self.loadings.as_slice();
        let inv_noise = self.inv_noise.as_slice();
        let mut weighted = 0.0;
        for j in 0..p {
            let mut r = x[j] - m[j];
            for (k, uk) in u.iter().enumerate().take(q) {
                r -= loadings[k * p + j] * uk;
            }
            weighted += r * r * inv_noise[j];
        }
        weighted + u[..q].iter().map(|v| v * v).sum::<f64>()
    }

    /// `beta = Lambda' Sigma^{-1} = M^{-1} Lambda' Psi^{-1}`, q x p.
    pub fn beta(&self) -> DMatrix<f64> {
        &self.core_inv * self.scaled_loadings.transpose()
    }

    /// Dense `Sigma^{-1}`.
    pub fn dense_inverse(&self) -> DMatrix<f64> {
        let mut inv = -(&self.scaled_loadings * &self.core_inv * self.scaled_loadings.transpose());
        for j in 0..self.dim() {
            inv[(j, j)] += self.inv_noise[j];
        }
        inv
    }
}

/// `((Lambda Lambda' + Psi)^{-1}, log |Lambda Lambda' + Psi|)`.
pub fn woodbury_inverse(scale: &FactoredScale) -> Result<(DMatrix<f64>, f64)> {
    let prec = WoodburyPrecision::new(scale)?;
    Ok((prec.dense_inverse(), prec.log_det()))
}

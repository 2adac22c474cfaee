//! Conditional expectations of the latent labels, mixing weights and factors.

use nalgebra::{DMatrix, DVector};

use crate::data::ObservationMatrix;
use crate::error::{Error, Result};
use crate::mghfa::model::{log_sum_exp, MixtureModel};
use crate::specfun::dlogk_dnu;

/// Which optional blocks to compute. `c` is only consumed by the first
/// conditional-maximization stage, the factor moments only by the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EStepOptions {
    pub log_moment: bool,
    pub factor_moments: bool,
}

impl EStepOptions {
    pub const FIRST_STAGE: Self = Self {
        log_moment: true,
        factor_moments: false,
    };
    pub const SECOND_STAGE: Self = Self {
        log_moment: false,
        factor_moments: true,
    };
    pub const ALL: Self = Self {
        log_moment: true,
        factor_moments: true,
    };
}

/// Per-observation, per-component expectations. Matrices are `n x G`;
/// factor moments are indexed `[g][i]` and empty when not requested.
#[derive(Debug, Clone)]
pub struct EStepCache {
    pub zhat: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub e1: Vec<Vec<DVector<f64>>>,
    pub e2: Vec<Vec<DVector<f64>>>,
    pub e3: Vec<Vec<DMatrix<f64>>>,
    /// `Lambda' (Lambda Lambda' + Psi)^{-1}`, q x p
    pub beta: Vec<DMatrix<f64>>,
    /// observed-data log-likelihood at the parameters used
    pub loglik: f64,
}

impl EStepCache {
    pub fn n(&self) -> usize {
        self.zhat.nrows()
    }

    pub fn g(&self) -> usize {
        self.zhat.ncols()
    }

    pub fn has_factor_moments(&self) -> bool {
        !self.e1.is_empty()
    }

    /// `n_g = sum_i zhat_ig`
    pub fn n_g(&self, g: usize) -> f64 {
        self.zhat.column(g).sum()
    }

    fn weighted_mean(&self, m: &DMatrix<f64>, g: usize) -> f64 {
        self.zhat.column(g).dot(&m.column(g)) / self.n_g(g)
    }

    /// `A_g`
    pub fn a_bar(&self, g: usize) -> f64 {
        self.weighted_mean(&self.a, g)
    }

    /// `B_g`
    pub fn b_bar(&self, g: usize) -> f64 {
        self.weighted_mean(&self.b, g)
    }

    /// `C_g`
    pub fn c_bar(&self, g: usize) -> f64 {
        self.weighted_mean(&self.c, g)
    }

    /// Hard assignment `argmax_g zhat_ig`, ties to the lowest index.
    pub fn hard_labels(&self) -> Vec<usize> {
        self.zhat
            .row_iter()
            .map(|row| {
                let mut best = 0;
                for g in 1..row.len() {
                    if row[g] > row[best] {
                        best = g;
                    }
                }
                best
            })
            .collect()
    }
}

/// E-step. Rows with `Some(class)` in `known` keep the indicator of that
/// class as their responsibility and contribute only that term to the
/// log-likelihood.
pub fn e_step(
    data: &ObservationMatrix,
    model: &MixtureModel,
    known: Option<&[Option<usize>]>,
    options: EStepOptions,
) -> Result<EStepCache> {
    let n = data.n();
    let g_count = model.g();
    let q = model.q();
    if data.p() != model.p() {
        return Err(Error::Dimension(format!("data has p={}, model p={}", data.p(), model.p())));
    }
    if let Some(k) = known {
        if k.len() != n {
            return Err(Error::Dimension(format!("{} labels for {n} rows", k.len())));
        }
        if let Some(bad) = k.iter().flatten().find(|&&c| c >= g_count) {
            return Err(Error::Input(format!("class {bad} outside 0..{g_count}")));
        }
    }

    let mut log_terms = DMatrix::zeros(n, g_count);
    let mut a = DMatrix::zeros(n, g_count);
    let mut b = DMatrix::zeros(n, g_count);
    let mut c = DMatrix::zeros(n, g_count);
    let mut beta = Vec::with_capacity(g_count);
    let mut core_inv = Vec::with_capacity(g_count);

    for (g, comp) in model.components.iter().enumerate() {
        let precision = comp.precision()?;
        let density = comp.density(&precision)?;
        let log_pi = model.weights[g].ln();
        for (i, x) in data.rows().iter().enumerate() {
            let t = density.terms(x)?;
            if !t.log_density.is_finite() {
                return Err(Error::NonFiniteDensity { obs: i, component: g });
            }
            log_terms[(i, g)] = log_pi + t.log_density;
            let psi = comp.omega + t.alpha_quad;
            let chi = comp.omega + t.delta;
            let eta = (chi / psi).sqrt();
            let ratio = (t.log_k_next - t.log_k).exp();
            let a_ig = eta * ratio;
            let b_ig = ratio / eta - 2.0 * t.index / chi;
            if !(a_ig > 0.0 && a_ig.is_finite()) {
                return Err(Error::NonPositiveMoment { obs: i, component: g, value: a_ig });
            }
            if !(b_ig > 0.0 && b_ig.is_finite()) {
                return Err(Error::NonPositiveMoment { obs: i, component: g, value: b_ig });
            }
            a[(i, g)] = a_ig;
            b[(i, g)] = b_ig;
            if options.log_moment {
                c[(i, g)] = eta.ln() + dlogk_dnu(t.index, (psi * chi).sqrt())?;
            }
        }
        if options.factor_moments {
            beta.push(precision.beta());
            core_inv.push(precision.core_inverse().clone());
        } else {
            beta.push(DMatrix::zeros(q, data.p()));
        }
    }

    let mut zhat = DMatrix::zeros(n, g_count);
    let mut loglik = 0.0;
    for i in 0..n {
        let row: Vec<f64> = log_terms.row(i).iter().copied().collect();
        match known.and_then(|k| k[i]) {
            Some(class) => {
                zhat[(i, class)] = 1.0;
                loglik += row[class];
            }
            None => {
                let total = log_sum_exp(&row);
                if !total.is_finite() {
                    return Err(Error::NonFiniteDensity { obs: i, component: 0 });
                }
                for g in 0..g_count {
                    zhat[(i, g)] = (row[g] - total).exp();
                }
                loglik += total;
            }
        }
    }

    let (mut e1, mut e2, mut e3) = (Vec::new(), Vec::new(), Vec::new());
    if options.factor_moments {
        for (g, comp) in model.components.iter().enumerate() {
            let beta_alpha = &beta[g] * &comp.alpha;
            let mut e1_g = Vec::with_capacity(n);
            let mut e2_g = Vec::with_capacity(n);
            let mut e3_g = Vec::with_capacity(n);
            for (i, x) in data.rows().iter().enumerate() {
                let beta_r = &beta[g] * (x - &comp.mu);
                let (a_ig, b_ig) = (a[(i, g)], b[(i, g)]);
                e1_g.push(&beta_r - a_ig * &beta_alpha);
                e2_g.push(b_ig * &beta_r - &beta_alpha);
                let mut e3_ig = core_inv[g].clone();
                for j in 0..q {
                    for k in 0..q {
                        let (rj, rk, aj, ak) = (beta_r[j], beta_r[k], beta_alpha[j], beta_alpha[k]);
                        e3_ig[(j, k)] += b_ig * rj * rk - rj * ak - aj * rk + a_ig * aj * ak;
                    }
                }
                e3_g.push(e3_ig);
            }
            e1.push(e1_g);
            e2.push(e2_g);
            e3.push(e3_g);
        }
    }

    Ok(EStepCache {
        zhat,
        a,
        b,
        c,
        e1,
        e2,
        e3,
        beta,
        loglik,
    })
}

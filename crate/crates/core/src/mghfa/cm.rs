//! The two conditional-maximization stages.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::data::ObservationMatrix;
use crate::error::{Error, Result};
use crate::mghfa::estep::EStepCache;
use crate::mghfa::model::{MixtureModel, OMEGA_MAX, OMEGA_MIN};
use crate::specfun::{d2logk_dx2, dlogk_dnu, dlogk_dx, log_bessel_k};

const HALVINGS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmSettings {
    pub psi_floor: f64,
    pub omega_min: f64,
    pub omega_max: f64,
}

impl Default for CmSettings {
    fn default() -> Self {
        Self {
            psi_floor: crate::ghd::NOISE_FLOOR,
            omega_min: OMEGA_MIN,
            omega_max: OMEGA_MAX,
        }
    }
}

/// `q_g(omega, lambda) = -log K_lambda(omega) + (lambda - 1) C - omega (A + B) / 2`
pub fn q_objective(omega: f64, lambda: f64, a_bar: f64, b_bar: f64, c_bar: f64) -> Result<f64> {
    Ok(-log_bessel_k(lambda, omega)? + (lambda - 1.0) * c_bar - 0.5 * omega * (a_bar + b_bar))
}

/// Fixed-point step for `lambda`, kept only while it does not lower `q_g`.
pub fn update_lambda(lambda: f64, omega: f64, a_bar: f64, b_bar: f64, c_bar: f64) -> Result<f64> {
    let d = dlogk_dnu(lambda, omega)?;
    if d.abs() < 1e-12 {
        return Ok(lambda);
    }
    let proposal = c_bar * lambda / d;
    if !proposal.is_finite() {
        return Ok(lambda);
    }
    let base = q_objective(omega, lambda, a_bar, b_bar, c_bar)?;
    let mut step = proposal - lambda;
    for _ in 0..=HALVINGS {
        let candidate = lambda + step;
        if q_objective(omega, candidate, a_bar, b_bar, c_bar)? >= base {
            return Ok(candidate);
        }
        step *= 0.5;
    }
    Ok(lambda)
}

/// Newton step for `omega` at fixed `lambda`, halved while it leaves the
/// admissible interval or lowers `q_g`.
pub fn update_omega(
    omega: f64,
    lambda: f64,
    a_bar: f64,
    b_bar: f64,
    c_bar: f64,
    settings: &CmSettings,
) -> Result<f64> {
    let grad = -dlogk_dx(lambda, omega)? - 0.5 * (a_bar + b_bar);
    let hess = -d2logk_dx2(lambda, omega)?;
    if hess == 0.0 || !(grad / hess).is_finite() {
        return Ok(omega);
    }
    let base = q_objective(omega, lambda, a_bar, b_bar, c_bar)?;
    let mut step = -grad / hess;
    for _ in 0..=HALVINGS {
        let candidate = omega + step;
        if candidate >= settings.omega_min
            && candidate <= settings.omega_max
            && q_objective(candidate, lambda, a_bar, b_bar, c_bar)? >= base
        {
            return Ok(candidate);
        }
        step *= 0.5;
    }
    Ok(omega)
}

pub const SHAPE_SWEEPS: usize = 100;

/// Alternates the `lambda` and `omega` updates until both settle. Every
/// sweep leaves `q_g` no lower.
pub fn update_shape(
    lambda: f64,
    omega: f64,
    a_bar: f64,
    b_bar: f64,
    c_bar: f64,
    settings: &CmSettings,
) -> Result<(f64, f64)> {
    let (mut lambda, mut omega) = (lambda, omega);
    for _ in 0..SHAPE_SWEEPS {
        let (l0, o0) = (lambda, omega);
        lambda = update_lambda(lambda, omega, a_bar, b_bar, c_bar)?;
        omega = update_omega(omega, lambda, a_bar, b_bar, c_bar, settings)?;
        if (lambda - l0).abs() <= 1e-10 * l0.abs().max(1.0) && (omega - o0).abs() <= 1e-10 * o0 {
            break;
        }
    }
    Ok((lambda, omega))
}

/// Updates `pi`, `mu`, `alpha`, `lambda` and `omega`.
pub fn cm_step_1(
    data: &ObservationMatrix,
    cache: &EStepCache,
    model: &MixtureModel,
    settings: &CmSettings,
) -> Result<MixtureModel> {
    let n = data.n() as f64;
    let p = data.p();
    let mut next = model.clone();
    for (g, comp) in next.components.iter_mut().enumerate() {
        let n_g = cache.n_g(g);
        let (a_bar, b_bar, c_bar) = (cache.a_bar(g), cache.b_bar(g), cache.c_bar(g));
        let mut denom = 0.0;
        let mut mu_num = DVector::zeros(p);
        let mut alpha_num = DVector::zeros(p);
        for (i, x) in data.rows().iter().enumerate() {
            let z = cache.zhat[(i, g)];
            if z == 0.0 {
                continue;
            }
            let w = a_bar * cache.b[(i, g)] - 1.0;
            denom += z * w;
            mu_num.axpy(z * w, x, 1.0);
            alpha_num.axpy(z * (b_bar - cache.b[(i, g)]), x, 1.0);
        }
        if !(denom.abs() >= 1e-12 * n_g.max(1.0)) {
            return Err(Error::DegenerateUpdate {
                component: g,
                reason: format!("sum of zhat (A b - 1) is {denom:e}"),
            });
        }
        comp.mu = mu_num / denom;
        comp.alpha = alpha_num / denom;
        (comp.lambda, comp.omega) = update_shape(comp.lambda, comp.omega, a_bar, b_bar, c_bar, settings)?;
        next.weights[g] = n_g / n;
    }
    let total: f64 = next.weights.iter().sum();
    for w in &mut next.weights {
        *w /= total;
    }
    Ok(next)
}

/// Weighted sums over observations feeding the second stage.
#[derive(Debug, Clone)]
pub struct FactorSums {
    pub n_g: f64,
    /// `sum zhat (x - mu) E2'`, p x q
    pub r_e2: DMatrix<f64>,
    /// `sum zhat E1`
    pub e1: DVector<f64>,
    /// `sum zhat E3`
    pub e3: DMatrix<f64>,
    /// `sum zhat b (x_j - mu_j)^2`
    pub b_rr: DVector<f64>,
    /// `sum zhat (x - mu)`
    pub r: DVector<f64>,
    /// `sum zhat a`
    pub a: f64,
}

pub fn factor_sums(data: &ObservationMatrix, cache: &EStepCache, model: &MixtureModel, g: usize) -> FactorSums {
    let (p, q) = (model.p(), model.q());
    let comp = &model.components[g];
    let mut s = FactorSums {
        n_g: cache.n_g(g),
        r_e2: DMatrix::zeros(p, q),
        e1: DVector::zeros(q),
        e3: DMatrix::zeros(q, q),
        b_rr: DVector::zeros(p),
        r: DVector::zeros(p),
        a: 0.0,
    };
    for (i, x) in data.rows().iter().enumerate() {
        let z = cache.zhat[(i, g)];
        if z == 0.0 {
            continue;
        }
        let r = x - &comp.mu;
        s.r_e2.ger(z, &r, &cache.e2[g][i], 1.0);
        s.e1.axpy(z, &cache.e1[g][i], 1.0);
        s.e3 += z * &cache.e3[g][i];
        s.b_rr += (z * cache.b[(i, g)]) * r.component_mul(&r);
        s.r.axpy(z, &r, 1.0);
        s.a += z * cache.a[(i, g)];
    }
    s
}

fn solve_loadings(rhs: &DMatrix<f64>, e3: &DMatrix<f64>, g: usize) -> Result<DMatrix<f64>> {
    let q = e3.nrows();
    let sym = 0.5 * (e3 + e3.transpose());
    let inv = match Cholesky::<f64, Dyn>::new(sym.clone()) {
        Some(ch) => ch.inverse(),
        None => {
            let ridge = 1e-10 * sym.trace() / q as f64;
            log::warn!("component {g}: weighted E3 sum is singular, adding ridge {ridge:e}");
            let regular = sym + DMatrix::identity(q, q) * ridge;
            Cholesky::<f64, Dyn>::new(regular)
                .ok_or_else(|| Error::DegenerateUpdate {
                    component: g,
                    reason: "weighted E3 sum is not positive definite".into(),
                })?
                .inverse()
        }
    };
    Ok(rhs * inv)
}

/// Updates `Lambda` and `Psi`. The cache must carry factor moments computed
/// at the current `mu` and `alpha`.
pub fn cm_step_2(
    data: &ObservationMatrix,
    cache: &EStepCache,
    model: &MixtureModel,
    settings: &CmSettings,
) -> Result<MixtureModel> {
    if !cache.has_factor_moments() {
        return Err(Error::Input("second stage needs factor moments in the cache".into()));
    }
    let q = model.q();
    let mut next = model.clone();
    for g in 0..model.g() {
        let s = factor_sums(data, cache, model, g);
        let comp = &mut next.components[g];
        let alpha = comp.alpha.clone();
        let loadings = if q == 0 {
            DMatrix::zeros(model.p(), 0)
        } else {
            solve_loadings(&(&s.r_e2 - &alpha * s.e1.transpose()), &s.e3, g)?
        };
        let le1 = &loadings * &s.e1;
        let le3l = &loadings * &s.e3;
        for j in 0..model.p() {
            let cross: f64 = s.r_e2.row(j).dot(&loadings.row(j));
            let quad: f64 = le3l.row(j).dot(&loadings.row(j));
            let total = s.b_rr[j] - 2.0 * alpha[j] * s.r[j] + s.a * alpha[j] * alpha[j] - 2.0 * cross
                + 2.0 * alpha[j] * le1[j]
                + quad;
            let psi = total / s.n_g;
            if !psi.is_finite() {
                return Err(Error::DegenerateUpdate {
                    component: g,
                    reason: format!("noise variance {j} is not finite"),
                });
            }
            comp.noise[j] = psi.max(settings.psi_floor);
        }
        comp.loadings = loadings;
    }
    Ok(next)
}

//! Multivariate generalized hyperbolic law.
//!
//! The working parameterization fixes `eta = sqrt(chi/psi) = 1` and keeps the
//! concentration `omega = sqrt(psi chi)`, so that the scale matrix is free. A
//! draw is `X = mu + Y alpha + sqrt(Y) V` with `Y ~ GIG(omega, omega, lambda)`
//! and `V ~ N(0, Sigma)`.
//!
//! The `(chi, phi)` parameterization with `|Sigma| = 1` is kept for
//! [`log_density_legacy`]; its `phi` is the same symbol as the GIG `psi`.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::gig::GigParams;
use crate::mghfa::woodbury::WoodburyPrecision;
use crate::specfun::{log_bessel_k, log_bessel_k_pair};

/// Floor applied to every diagonal entry of `Psi`.
pub const NOISE_FLOOR: f64 = 1e-6;

/// `Sigma = Lambda Lambda' + Psi` with diagonal `Psi`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredScale {
    loadings: DMatrix<f64>,
    noise: DVector<f64>,
}

impl FactoredScale {
    pub fn new(loadings: DMatrix<f64>, noise: DVector<f64>) -> Result<Self> {
        if loadings.nrows() != noise.len() {
            return Err(Error::Dimension(format!(
                "loadings have {} rows but noise has {} entries",
                loadings.nrows(),
                noise.len()
            )));
        }
        if loadings.ncols() >= loadings.nrows() && loadings.nrows() > 0 && loadings.ncols() > 0 {
            return Err(Error::Dimension(format!(
                "factor count q={} must be below p={}",
                loadings.ncols(),
                loadings.nrows()
            )));
        }
        if let Some(v) = noise.iter().find(|v| !(**v >= NOISE_FLOOR) || !v.is_finite()) {
            return Err(Error::Domain(format!(
                "noise variance {v} below floor {NOISE_FLOOR}"
            )));
        }
        if loadings.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("loadings must be finite".into()));
        }
        Ok(Self { loadings, noise })
    }

    pub fn loadings(&self) -> &DMatrix<f64> {
        &self.loadings
    }

    pub fn noise(&self) -> &DVector<f64> {
        &self.noise
    }

    pub fn p(&self) -> usize {
        self.noise.len()
    }

    pub fn q(&self) -> usize {
        self.loadings.ncols()
    }

    pub fn dense(&self) -> DMatrix<f64> {
        &self.loadings * self.loadings.transpose() + DMatrix::from_diagonal(&self.noise)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scale {
    Dense(DMatrix<f64>),
    Factored(FactoredScale),
}

impl Scale {
    pub fn dim(&self) -> usize {
        match self {
            Scale::Dense(m) => m.nrows(),
            Scale::Factored(f) => f.p(),
        }
    }

    pub fn dense(&self) -> DMatrix<f64> {
        match self {
            Scale::Dense(m) => m.clone(),
            Scale::Factored(f) => f.dense(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GhParams {
    pub mu: DVector<f64>,
    pub alpha: DVector<f64>,
    pub scale: Scale,
    pub lambda: f64,
    pub omega: f64,
}

impl GhParams {
    pub fn new(
        mu: DVector<f64>,
        alpha: DVector<f64>,
        scale: Scale,
        lambda: f64,
        omega: f64,
    ) -> Result<Self> {
        let p = mu.len();
        if alpha.len() != p || scale.dim() != p {
            return Err(Error::Dimension(format!(
                "mu has {p} entries, alpha {}, scale {}",
                alpha.len(),
                scale.dim()
            )));
        }
        if let Scale::Dense(m) = &scale {
            if m.nrows() != m.ncols() {
                return Err(Error::Dimension("scale matrix must be square".into()));
            }
        }
        if !(omega > 0.0) || !omega.is_finite() || !lambda.is_finite() {
            return Err(Error::Domain(format!(
                "need omega > 0 and finite lambda, got omega={omega}, lambda={lambda}"
            )));
        }
        Ok(Self {
            mu,
            alpha,
            scale,
            lambda,
            omega,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Precompute everything that does not depend on `x`.
    pub fn density(&self) -> Result<GhDensity> {
        GhDensity::new(self)
    }

    pub fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        self.density()?.log_density(x)
    }

    /// `n x p` matrix of draws.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<DMatrix<f64>> {
        if n == 0 {
            return Err(Error::Input("sample size must be at least 1".into()));
        }
        let sampler = GhSampler::new(self)?;
        let p = self.dim();
        let mut out = DMatrix::zeros(n, p);
        for i in 0..n {
            let (x, _) = sampler.draw(rng);
            out.set_row(i, &x.transpose());
        }
        Ok(out)
    }
}

/// Precision of a scale matrix, dense through Cholesky or factored through
/// the Woodbury identity.
#[derive(Debug, Clone)]
pub enum Precision {
    Dense {
        chol: Cholesky<f64, Dyn>,
        log_det: f64,
    },
    Factored(WoodburyPrecision),
}

impl Precision {
    pub fn new(scale: &Scale) -> Result<Self> {
        match scale {
            Scale::Dense(m) => {
                let chol = Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite)?;
                let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
                Ok(Precision::Dense { chol, log_det })
            }
            Scale::Factored(f) => Ok(Precision::Factored(WoodburyPrecision::new(f)?)),
        }
    }

    pub fn log_det(&self) -> f64 {
        match self {
            Precision::Dense { log_det, .. } => *log_det,
            Precision::Factored(w) => w.log_det(),
        }
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            Precision::Dense { chol, .. } => chol.solve(v),
            Precision::Factored(w) => w.apply(v),
        }
    }

    pub fn quad(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        match self {
            Precision::Dense { chol, .. } => a.dot(&chol.solve(b)),
            Precision::Factored(w) => w.quad(a, b),
        }
    }

    /// `(x - m)' Sigma^{-1} (x - m)`
    pub fn mahalanobis(&self, x: &DVector<f64>, m: &DVector<f64>) -> f64 {
        match self {
            Precision::Dense { .. } => {
                let r = x - m;
                self.quad(&r, &r)
            }
            Precision::Factored(w) => w.mahalanobis(x, m),
        }
    }
}

/// Evaluator with the `x`-free parts of the log density cached.
#[derive(Debug, Clone)]
pub struct GhDensity {
    mu: DVector<f64>,
    precision: Precision,
    inv_alpha: DVector<f64>,
    /// `alpha' Sigma^{-1} alpha`
    alpha_quad: f64,
    lambda: f64,
    omega: f64,
    log_const: f64,
}

/// Pieces of one density evaluation shared with the conditional moments.
#[derive(Debug, Clone, Copy)]
pub struct DensityTerms {
    pub log_density: f64,
    /// squared Mahalanobis distance `delta(x, mu | Sigma)`
    pub delta: f64,
    pub alpha_quad: f64,
    /// order `lambda - p/2` of the conditional GIG law
    pub index: f64,
    /// `log K_index` and `log K_{index+1}` at `sqrt(psi chi)`
    pub log_k: f64,
    pub log_k_next: f64,
}

impl GhDensity {
    pub fn new(params: &GhParams) -> Result<Self> {
        let precision = Precision::new(&params.scale)?;
        Self::with_precision(params, precision)
    }

    pub fn with_precision(params: &GhParams, precision: Precision) -> Result<Self> {
        let p = params.dim() as f64;
        let inv_alpha = precision.apply(&params.alpha);
        let alpha_quad = params.alpha.dot(&inv_alpha);
        let log_const = -0.5 * p * (2.0 * PI).ln()
            - 0.5 * precision.log_det()
            - log_bessel_k(params.lambda, params.omega)?;
        Ok(Self {
            mu: params.mu.clone(),
            precision,
            inv_alpha,
            alpha_quad,
            lambda: params.lambda,
            omega: params.omega,
            log_const,
        })
    }

    pub fn precision(&self) -> &Precision {
        &self.precision
    }

    pub fn alpha_quad(&self) -> f64 {
        self.alpha_quad
    }

    pub fn terms(&self, x: &DVector<f64>) -> Result<DensityTerms> {
        if x.len() != self.mu.len() {
            return Err(Error::Dimension(format!(
                "observation has {} entries, expected {}",
                x.len(),
                self.mu.len()
            )));
        }
        let delta = self.precision.mahalanobis(x, &self.mu).max(0.0);
        let tilt: f64 = x
            .as_slice()
            .iter()
            .zip(self.mu.as_slice())
            .zip(self.inv_alpha.as_slice())
            .map(|((a, m), w)| (a - m) * w)
            .sum();
        let index = self.lambda - 0.5 * x.len() as f64;
        let chi = self.omega + delta;
        let psi = self.omega + self.alpha_quad;
        let (log_k, log_k_next) = log_bessel_k_pair(index, (psi * chi).sqrt())?;
        let log_density = 0.5 * index * (chi.ln() - psi.ln()) + log_k + self.log_const + tilt;
        Ok(DensityTerms {
            log_density,
            delta,
            alpha_quad: self.alpha_quad,
            index,
            log_k,
            log_k_next,
        })
    }

    pub fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.terms(x)?.log_density)
    }
}

/// Log density in the `(chi, phi)` parameterization, which needs
/// `|Sigma| = 1`.
pub fn log_density_legacy(
    x: &DVector<f64>,
    mu: &DVector<f64>,
    alpha: &DVector<f64>,
    sigma: &DMatrix<f64>,
    chi: f64,
    phi: f64,
    lambda: f64,
) -> Result<f64> {
    let p = mu.len();
    if x.len() != p || alpha.len() != p || sigma.nrows() != p || sigma.ncols() != p {
        return Err(Error::Dimension(
            "x, mu, alpha and sigma must share one dimension".into(),
        ));
    }
    if !(chi > 0.0 && phi > 0.0) {
        return Err(Error::Domain(format!(
            "need chi > 0 and phi > 0, got chi={chi}, phi={phi}"
        )));
    }
    let chol = Cholesky::new(sigma.clone()).ok_or(Error::NotPositiveDefinite)?;
    let det: f64 = chol.l().diagonal().iter().map(|d| d * d).product();
    if (det - 1.0).abs() > 1e-8 {
        return Err(Error::Constraint { det });
    }
    let r = x - mu;
    let delta = r.dot(&chol.solve(&r));
    let inv_alpha = chol.solve(alpha);
    let alpha_quad = alpha.dot(&inv_alpha);
    let index = lambda - 0.5 * p as f64;
    let num = chi + delta;
    let den = phi + alpha_quad;
    Ok(0.5 * index * (num.ln() - den.ln())
        + 0.5 * lambda * (phi / chi).ln()
        + log_bessel_k(index, (num * den).sqrt())?
        - 0.5 * p as f64 * (2.0 * PI).ln()
        - 0.5 * det.ln()
        - log_bessel_k(lambda, (chi * phi).sqrt())?
        + r.dot(&inv_alpha))
}

/// Draws through the normal mean-variance mixture, returning the latent `Y`
/// along with `X`.
#[derive(Debug, Clone)]
pub struct GhSampler {
    mu: DVector<f64>,
    alpha: DVector<f64>,
    mixing: GigParams,
    root: ScaleRoot,
}

#[derive(Debug, Clone)]
enum ScaleRoot {
    Dense(DMatrix<f64>),
    Factored {
        loadings: DMatrix<f64>,
        noise_sd: DVector<f64>,
    },
}

impl GhSampler {
    pub fn new(params: &GhParams) -> Result<Self> {
        let root = match &params.scale {
            Scale::Dense(m) => {
                ScaleRoot::Dense(Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite)?.unpack())
            }
            Scale::Factored(f) => ScaleRoot::Factored {
                loadings: f.loadings().clone(),
                noise_sd: f.noise().map(f64::sqrt),
            },
        };
        Ok(Self {
            mu: params.mu.clone(),
            alpha: params.alpha.clone(),
            mixing: GigParams::symmetric(params.omega, params.lambda)?,
            root,
        })
    }

    /// `V ~ N(0, Sigma)`
    pub fn normal<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let p = self.mu.len();
        match &self.root {
            ScaleRoot::Dense(l) => {
                let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
                l * z
            }
            ScaleRoot::Factored { loadings, noise_sd } => {
                let u = DVector::from_fn(loadings.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
                let e = DVector::from_fn(p, |j, _| noise_sd[j] * rng.sample::<f64, _>(StandardNormal));
                loadings * u + e
            }
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (DVector<f64>, f64) {
        let y = self.mixing.sample_one(rng);
        let v = self.normal(rng);
        (&self.mu + &self.alpha * y + v * y.sqrt(), y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(mu: f64, alpha: f64, sigma: f64, lambda: f64, omega: f64) -> GhParams {
        GhParams::new(
            DVector::from_element(1, mu),
            DVector::from_element(1, alpha),
            Scale::Dense(DMatrix::from_element(1, 1, sigma)),
            lambda,
            omega,
        )
        .unwrap()
    }

    #[test]
    fn reference_point_value() {
        let v = scalar(0.0, 0.0, 1.0, 0.5, 1.0)
            .log_density(&DVector::from_element(1, 0.0))
            .unwrap();
        // K_0(1) / (sqrt(2 pi) K_{1/2}(1))
        assert!((v - 0.364_28f64.ln()).abs() < 1e-4, "{}", v.exp());
    }

    #[test]
    fn symmetric_when_unskewed() {
        let g = GhParams::new(
            DVector::from_vec(vec![1.0, -2.0]),
            DVector::zeros(2),
            Scale::Dense(DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0])),
            -1.3,
            0.7,
        )
        .unwrap();
        let d = DVector::from_vec(vec![0.4, 1.9]);
        let a = g.log_density(&(&g.mu + &d)).unwrap();
        let b = g.log_density(&(&g.mu - &d)).unwrap();
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn legacy_matches_at_unit_concentrations() {
        let mu = DVector::from_vec(vec![0.5, -1.0]);
        let alpha = DVector::from_vec(vec![0.3, 0.8]);
        let sigma = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 0.625]);
        let x = DVector::from_vec(vec![1.2, 0.1]);
        let legacy = log_density_legacy(&x, &mu, &alpha, &sigma, 1.0, 1.0, 0.8).unwrap();
        let g = GhParams::new(mu, alpha, Scale::Dense(sigma), 0.8, 1.0).unwrap();
        assert!((legacy - g.log_density(&x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn legacy_rejects_non_unit_determinant() {
        let sigma = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let z = DVector::zeros(2);
        let err = log_density_legacy(&z, &z, &z, &sigma, 1.0, 1.0, 0.5).unwrap_err();
        assert!(matches!(err, Error::Constraint { .. }));
    }

    #[test]
    fn dimension_checks() {
        let g = scalar(0.0, 0.0, 1.0, 0.5, 1.0);
        assert!(matches!(g.log_density(&DVector::zeros(2)), Err(Error::Dimension(_))));
        assert!(GhParams::new(
            DVector::zeros(2),
            DVector::zeros(3),
            Scale::Dense(DMatrix::identity(2, 2)),
            0.5,
            1.0
        )
        .is_err());
        let bad = GhParams::new(
            DVector::zeros(2),
            DVector::zeros(2),
            Scale::Dense(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])),
            0.5,
            1.0,
        )
        .unwrap();
        assert!(matches!(bad.density(), Err(Error::NotPositiveDefinite)));
    }
}

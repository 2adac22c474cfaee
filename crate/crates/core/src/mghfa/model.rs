use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::ObservationMatrix;
use crate::error::{Error, Result};
use crate::ghd::{FactoredScale, GhDensity, GhParams, Precision, Scale};
use crate::mghfa::woodbury::WoodburyPrecision;

pub const OMEGA_MIN: f64 = 1e-6;
pub const OMEGA_MAX: f64 = 1e6;

/// One generalized hyperbolic factor analyzer: location `mu`, skewness
/// `alpha`, scale `Lambda Lambda' + Psi`, index `lambda`, concentration
/// `omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct GhfaComponent {
    pub mu: DVector<f64>,
    pub alpha: DVector<f64>,
    pub loadings: DMatrix<f64>,
    pub noise: DVector<f64>,
    pub lambda: f64,
    pub omega: f64,
}

impl GhfaComponent {
    pub fn p(&self) -> usize {
        self.mu.len()
    }

    pub fn q(&self) -> usize {
        self.loadings.ncols()
    }

    pub fn validate(&self, psi_floor: f64) -> Result<()> {
        let p = self.p();
        if self.alpha.len() != p || self.loadings.nrows() != p || self.noise.len() != p {
            return Err(Error::Dimension("component blocks disagree on p".into()));
        }
        if self.noise.iter().any(|v| !(*v >= psi_floor)) {
            return Err(Error::Domain(format!("noise variance below floor {psi_floor}")));
        }
        if !(OMEGA_MIN..=OMEGA_MAX).contains(&self.omega) {
            return Err(Error::Domain(format!("omega {} outside [{OMEGA_MIN}, {OMEGA_MAX}]", self.omega)));
        }
        let finite = self.mu.iter().chain(self.alpha.iter()).chain(self.loadings.iter()).all(|v| v.is_finite())
            && self.lambda.is_finite();
        if !finite {
            return Err(Error::Domain("component parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn scale(&self) -> Result<FactoredScale> {
        FactoredScale::new(self.loadings.clone(), self.noise.clone())
    }

    pub fn gh_params(&self) -> Result<GhParams> {
        GhParams::new(
            self.mu.clone(),
            self.alpha.clone(),
            Scale::Factored(self.scale()?),
            self.lambda,
            self.omega,
        )
    }

    pub fn precision(&self) -> Result<WoodburyPrecision> {
        WoodburyPrecision::new(&self.scale()?)
    }

    /// Density evaluator sharing a Woodbury precision.
    pub fn density(&self, precision: &WoodburyPrecision) -> Result<GhDensity> {
        GhDensity::with_precision(&self.gh_params()?, Precision::Factored(precision.clone()))
    }
}

/// Mixing proportions and components, all sharing `p` and `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    pub weights: Vec<f64>,
    pub components: Vec<GhfaComponent>,
}

impl MixtureModel {
    pub fn new(weights: Vec<f64>, components: Vec<GhfaComponent>) -> Result<Self> {
        let m = Self { weights, components };
        m.validate()?;
        Ok(m)
    }

    pub fn g(&self) -> usize {
        self.components.len()
    }

    pub fn p(&self) -> usize {
        self.components[0].p()
    }

    pub fn q(&self) -> usize {
        self.components[0].q()
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() || self.weights.len() != self.components.len() {
            return Err(Error::Input("need one weight per component and at least one component".into()));
        }
        if self.weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Domain("mixing proportions must be positive".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("mixing proportions sum to {total}")));
        }
        let (p, q) = (self.p(), self.q());
        for c in &self.components {
            if c.p() != p || c.q() != q {
                return Err(Error::Dimension("components disagree on p or q".into()));
            }
            c.validate(crate::ghd::NOISE_FLOOR)?;
        }
        Ok(())
    }

    /// Number of free parameters, `(G-1) + G [3p + 2 + pq - q(q-1)/2]`.
    pub fn free_parameters(&self) -> usize {
        crate::selection::free_parameters(self.g(), self.p(), self.q())
    }

    /// Observed-data log-likelihood `sum_i log sum_g pi_g f(x_i | theta_g)`.
    pub fn log_likelihood(&self, data: &ObservationMatrix) -> Result<f64> {
        self.log_likelihood_with_labels(data, None)
    }

    /// Joint likelihood where rows with a known class contribute only the
    /// term of that class.
    pub fn log_likelihood_with_labels(
        &self,
        data: &ObservationMatrix,
        known: Option<&[Option<usize>]>,
    ) -> Result<f64> {
        if data.p() != self.p() {
            return Err(Error::Dimension(format!("data has p={}, model p={}", data.p(), self.p())));
        }
        let densities = self
            .components
            .iter()
            .map(|c| c.density(&c.precision()?))
            .collect::<Result<Vec<_>>>()?;
        let mut total = 0.0;
        let mut terms = vec![0.0; self.g()];
        for (i, x) in data.rows().iter().enumerate() {
            for (g, d) in densities.iter().enumerate() {
                terms[g] = self.weights[g].ln() + d.log_density(x)?;
                if !terms[g].is_finite() && terms[g] != f64::NEG_INFINITY {
                    return Err(Error::NonFiniteDensity { obs: i, component: g });
                }
            }
            let row = match known.and_then(|k| k[i]) {
                Some(c) => terms[c],
                None => log_sum_exp(&terms),
            };
            if !row.is_finite() {
                return Err(Error::NonFiniteDensity { obs: i, component: 0 });
            }
            total += row;
        }
        Ok(total)
    }
}

pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Serializable form of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub schema_version: u32,
    pub g: usize,
    pub p: usize,
    pub q: usize,
    pub weights: Vec<f64>,
    pub components: Vec<ComponentRecord>,
    pub loglik: f64,
    pub bic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub mu: Vec<f64>,
    pub alpha: Vec<f64>,
    /// `p` rows of `q` loadings
    pub loadings: Vec<Vec<f64>>,
    pub noise: Vec<f64>,
    pub lambda: f64,
    pub omega: f64,
}

impl ModelRecord {
    pub fn from_model(model: &MixtureModel, loglik: f64, bic: f64) -> Self {
        let components = model
            .components
            .iter()
            .map(|c| ComponentRecord {
                mu: c.mu.iter().copied().collect(),
                alpha: c.alpha.iter().copied().collect(),
                loadings: c.loadings.row_iter().map(|r| r.iter().copied().collect()).collect(),
                noise: c.noise.iter().copied().collect(),
                lambda: c.lambda,
                omega: c.omega,
            })
            .collect();
        Self {
            schema_version: MODEL_SCHEMA_VERSION,
            g: model.g(),
            p: model.p(),
            q: model.q(),
            weights: model.weights.clone(),
            components,
            loglik,
            bic,
        }
    }

    pub fn to_model(&self) -> Result<MixtureModel> {
        if self.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Input(format!(
                "unsupported model schema version {}",
                self.schema_version
            )));
        }
        let components = self
            .components
            .iter()
            .map(|c| {
                if c.loadings.len() != self.p || c.loadings.iter().any(|r| r.len() != self.q) {
                    return Err(Error::Dimension("loadings block does not match p x q".into()));
                }
                Ok(GhfaComponent {
                    mu: DVector::from_vec(c.mu.clone()),
                    alpha: DVector::from_vec(c.alpha.clone()),
                    loadings: DMatrix::from_fn(self.p, self.q, |j, k| c.loadings[j][k]),
                    noise: DVector::from_vec(c.noise.clone()),
                    lambda: c.lambda,
                    omega: c.omega,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        MixtureModel::new(self.weights.clone(), components)
    }
}

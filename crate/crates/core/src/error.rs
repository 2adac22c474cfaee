use thiserror::Error;

/// Errors raised by the numerical routines and the fitting loop.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("scale matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("identifiability constraint violated: |Sigma| = {det}, expected 1")]
    Constraint { det: f64 },

    #[error("non-finite density for observation {obs} under component {component}")]
    NonFiniteDensity { obs: usize, component: usize },

    #[error("non-positive conditional moment E[1/Y] = {value} for observation {obs}, component {component}")]
    NonPositiveMoment {
        obs: usize,
        component: usize,
        value: f64,
    },

    #[error("degenerate update for component {component}: {reason}")]
    DegenerateUpdate { component: usize, reason: String },

    #[error("component {component} has effective size {size:.3}, need more than {needed}")]
    EmptyComponent {
        component: usize,
        size: f64,
        needed: usize,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("all {} starts failed: {}", .0.len(), .0.join("; "))]
    FitFailure(Vec<String>),

    #[error("every grid cell failed")]
    SelectionFailure,
}

pub type Result<T> = std::result::Result<T, Error>;

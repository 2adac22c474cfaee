//! Mixtures of generalized hyperbolic factor analyzers.

pub mod cm;
pub mod estep;
pub mod fit;
pub mod init;
pub mod model;
pub mod woodbury;

pub use estep::{e_step, EStepCache, EStepOptions};
pub use fit::{fit, FitConfig, FitReport, Init};
pub use model::{GhfaComponent, MixtureModel, ModelRecord};
pub use woodbury::{woodbury_inverse, WoodburyPrecision};

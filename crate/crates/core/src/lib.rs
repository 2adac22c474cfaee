pub mod error;
pub mod specfun;
pub mod gig;
pub mod ghd;
pub mod mghfa;
pub mod data;
pub mod rng;
pub mod kmeans;
pub mod selection;
pub mod classify;
pub mod datasim;

pub use classify::{fit_classify, hold_out_unlabel, ClassifyReport, PartialLabels};
pub use data::ObservationMatrix;
pub use datasim::{ari, generate, Family, Partition, SimDesign};
pub use error::{Error, Result};
pub use ghd::{FactoredScale, GhParams, Scale};
pub use gig::GigParams;
pub use mghfa::fit::{fit, fit_from, FitConfig, FitReport, Init, StartDiagnostic, StartStatus};
pub use mghfa::{GhfaComponent, MixtureModel, ModelRecord};
pub use selection::{bic_table_csv, select, AitkenTarget, BicRow, CellStatus, Selection, SelectionGrid};

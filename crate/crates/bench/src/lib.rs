//! Fixtures shared by the benchmarks.

use hyperfa::datasim::{generate, Family, SimDesign};
use hyperfa::mghfa::fit::{fit, FitConfig};
use hyperfa::{MixtureModel, ObservationMatrix};

/// Simulated GH data and a model fitted to it with a short run.
pub fn fitted_gh(p: usize, g: usize, q: usize) -> (ObservationMatrix, MixtureModel) {
    let (data, _) = generate(&SimDesign::new(Family::Gh, p, g, 100, 1)).expect("valid design");
    let config = FitConfig {
        n_starts: 1,
        max_iter: 20,
        seed: 1,
        threads: 1,
        ..FitConfig::default()
    };
    let report = fit(&data, g, q, &config).expect("fit succeeds");
    (data, report.model)
}

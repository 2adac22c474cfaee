//! Model-based classification with partially labelled rows.

use rand::Rng;

use crate::data::ObservationMatrix;
use crate::error::{Error, Result};
use crate::mghfa::fit::{fit_in_current_pool, with_threads, FitConfig, FitReport};

/// Known classes (`0..G`) for some rows, `None` for the rest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialLabels {
    labels: Vec<Option<usize>>,
}

impl PartialLabels {
    pub fn new(labels: Vec<Option<usize>>) -> Self {
        Self { labels }
    }

    /// Every row labelled.
    pub fn full(truth: &[usize]) -> Self {
        Self::new(truth.iter().map(|&c| Some(c)).collect())
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of labelled rows.
    pub fn k(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }

    pub fn unlabelled(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i].is_none()).collect()
    }

    /// Checks classes lie in `0..g` and, when any row is labelled, that
    /// each class has a labelled row.
    pub fn validate(&self, g: usize) -> Result<()> {
        if let Some(bad) = self.labels.iter().flatten().find(|&&c| c >= g) {
            return Err(Error::Input(format!("class {} outside 1..={g}", bad + 1)));
        }
        if self.k() > 0 {
            for c in 0..g {
                if !self.labels.contains(&Some(c)) {
                    return Err(Error::Input(format!("class {} has no labelled rows", c + 1)));
                }
            }
        }
        Ok(())
    }
}

/// Hides each row's label independently with probability `fraction`.
pub fn hold_out_unlabel<R: Rng + ?Sized>(truth: &[usize], fraction: f64, rng: &mut R) -> Result<PartialLabels> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Input(format!("unlabel fraction must lie in [0, 1), got {fraction}")));
    }
    Ok(PartialLabels::new(
        truth
            .iter()
            .map(|&c| if rng.random::<f64>() < fraction { None } else { Some(c) })
            .collect(),
    ))
}

#[derive(Debug, Clone)]
pub struct ClassifyReport {
    pub fit: FitReport,
    /// rows without a known class
    pub unlabelled: Vec<usize>,
    /// predicted class for each entry of `unlabelled`
    pub predicted: Vec<usize>,
    /// responsibility of the predicted class
    pub confidence: Vec<f64>,
}

/// Fits with labelled rows pinned to their class. Component `g` is class
/// `g`. With no labelled rows this is the clustering fit.
pub fn fit_classify(
    data: &ObservationMatrix,
    labels: &PartialLabels,
    g: usize,
    q: usize,
    config: &FitConfig,
) -> Result<ClassifyReport> {
    if labels.len() != data.n() {
        return Err(Error::Dimension(format!("{} labels for {} rows", labels.len(), data.n())));
    }
    labels.validate(g)?;
    let known = (labels.k() > 0).then_some(labels.labels());
    let fit = with_threads(config.threads, || fit_in_current_pool(data, g, q, config, known))??;
    let unlabelled = labels.unlabelled();
    let predicted: Vec<usize> = unlabelled.iter().map(|&i| fit.labels[i]).collect();
    let confidence = unlabelled
        .iter()
        .zip(&predicted)
        .map(|(&i, &c)| fit.responsibilities[(i, c)])
        .collect();
    Ok(ClassifyReport {
        fit,
        unlabelled,
        predicted,
        confidence,
    })
}

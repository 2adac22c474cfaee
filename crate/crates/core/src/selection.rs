//! BIC, the Aitken stopping rule and the `(G, q)` grid search.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::data::ObservationMatrix;
use crate::error::{Error, Result};
use crate::mghfa::fit::{fit_in_current_pool, with_threads, FitConfig, FitReport};

/// `(G - 1) + G [3p + 2 + pq - q(q - 1)/2]`
pub fn free_parameters(g: usize, p: usize, q: usize) -> usize {
    let per = 3 * p + 2 + p * q - q * q.saturating_sub(1) / 2;
    g - 1 + g * per
}

/// `2 loglik - rho log n`; larger is better.
pub fn bic(loglik: f64, n: usize, p: usize, g: usize, q: usize) -> f64 {
    2.0 * loglik - free_parameters(g, p, q) as f64 * (n as f64).ln()
}

/// Which value the extrapolated limit is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AitkenTarget {
    /// `l_inf - l^(k+1)`
    #[default]
    Latest,
    /// `l_inf - l^(k)`
    Previous,
}

/// Three consecutive log-likelihoods `l^(k-1), l^(k), l^(k+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AitkenState {
    pub values: [f64; 3],
    pub epsilon: f64,
    pub target: AitkenTarget,
}

impl AitkenState {
    pub fn new(values: [f64; 3], epsilon: f64) -> Self {
        Self {
            values,
            epsilon,
            target: AitkenTarget::Latest,
        }
    }

    /// `(a^(k), l_inf)`, or `None` on a flat step.
    pub fn extrapolate(&self) -> Option<(f64, f64)> {
        let [l0, l1, l2] = self.values;
        let denom = l1 - l0;
        if denom == 0.0 {
            return None;
        }
        let a = (l2 - l1) / denom;
        Some((a, l1 + (l2 - l1) / (1.0 - a)))
    }
}

pub fn aitken_converged(state: &AitkenState) -> bool {
    let Some((_, limit)) = state.extrapolate() else {
        return true;
    };
    let reference = match state.target {
        AitkenTarget::Latest => state.values[2],
        AitkenTarget::Previous => state.values[1],
    };
    let gap = limit - reference;
    (0.0..state.epsilon).contains(&gap)
}

/// Inclusive sets of component and factor counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionGrid {
    g_values: Vec<usize>,
    q_values: Vec<usize>,
}

impl SelectionGrid {
    pub fn new(g_values: Vec<usize>, q_values: Vec<usize>, p: usize) -> Result<Self> {
        if g_values.is_empty() || q_values.is_empty() {
            return Err(Error::Input("selection grid must not be empty".into()));
        }
        if g_values.contains(&0) {
            return Err(Error::Input("component counts must be at least 1".into()));
        }
        if q_values.iter().any(|&q| q == 0 || q >= p) {
            return Err(Error::Input(format!("factor counts must lie in 1..{p}")));
        }
        let mut g_values = g_values;
        let mut q_values = q_values;
        g_values.sort_unstable();
        g_values.dedup();
        q_values.sort_unstable();
        q_values.dedup();
        Ok(Self { g_values, q_values })
    }

    pub fn ranges(g: (usize, usize), q: (usize, usize), p: usize) -> Result<Self> {
        Self::new((g.0..=g.1).collect(), (q.0..=q.1).collect(), p)
    }

    pub fn g_values(&self) -> &[usize] {
        &self.g_values
    }

    pub fn q_values(&self) -> &[usize] {
        &self.q_values
    }

    /// Cells ordered by `G`, then `q`.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        self.g_values
            .iter()
            .flat_map(|&g| self.q_values.iter().map(move |&q| (g, q)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Converged,
    MaxIter,
    Failed(String),
}

impl CellStatus {
    pub fn label(&self) -> &'static str {
        match self {
            CellStatus::Converged => "converged",
            CellStatus::MaxIter => "max_iter",
            CellStatus::Failed(_) => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BicRow {
    pub g: usize,
    pub q: usize,
    pub loglik: Option<f64>,
    pub rho: usize,
    pub bic: Option<f64>,
    pub iters: usize,
    pub status: CellStatus,
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub best: FitReport,
    pub table: Vec<BicRow>,
}

/// Index of the best BIC; ties go to the earlier row, i.e. smaller `G`
/// then smaller `q`.
pub fn best_row(table: &[BicRow]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, row) in table.iter().enumerate() {
        if let Some(v) = row.bic {
            if best.is_none_or(|b| v > table[b].bic.unwrap()) {
                best = Some(k);
            }
        }
    }
    best
}

pub fn select(data: &ObservationMatrix, grid: &SelectionGrid, config: &FitConfig) -> Result<Selection> {
    let cells = grid.cells();
    let fits: Vec<Result<FitReport>> = with_threads(config.threads, || {
        cells
            .par_iter()
            .map(|&(g, q)| fit_in_current_pool(data, g, q, config, None))
            .collect()
    })?;
    let p = data.p();
    let mut table = Vec::with_capacity(cells.len());
    let mut reports = Vec::with_capacity(cells.len());
    for (&(g, q), fit) in cells.iter().zip(fits) {
        let rho = free_parameters(g, p, q);
        match fit {
            Ok(report) => {
                table.push(BicRow {
                    g,
                    q,
                    loglik: Some(report.loglik),
                    rho,
                    bic: Some(report.bic),
                    iters: report.iterations,
                    status: if report.converged {
                        CellStatus::Converged
                    } else {
                        CellStatus::MaxIter
                    },
                });
                reports.push(Some(report));
            }
            Err(e) => {
                table.push(BicRow {
                    g,
                    q,
                    loglik: None,
                    rho,
                    bic: None,
                    iters: 0,
                    status: CellStatus::Failed(e.to_string()),
                });
                reports.push(None);
            }
        }
    }
    let best = best_row(&table).ok_or(Error::SelectionFailure)?;
    Ok(Selection {
        best: reports[best].take().expect("row with a BIC has a report"),
        table,
    })
}

/// CSV with columns `G,q,loglik,rho,bic,iters,status`.
pub fn bic_table_csv(table: &[BicRow]) -> String {
    let mut out = String::from("G,q,loglik,rho,bic,iters,status\n");
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.10}")).unwrap_or_else(|| "NA".into());
    for row in table {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.g,
            row.q,
            fmt(row.loglik),
            row.rho,
            fmt(row.bic),
            row.iters,
            row.status.label()
        );
    }
    out
}

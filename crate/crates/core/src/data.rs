use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `n x p` matrix of real observations, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMatrix {
    rows: Vec<DVector<f64>>,
    p: usize,
}

impl ObservationMatrix {
    pub fn new(rows: Vec<DVector<f64>>) -> Result<Self> {
        let p = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.is_empty() || p == 0 {
            return Err(Error::Input("data must have at least one row and one column".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(Error::Dimension(format!("row {i} has {} entries, expected {p}", r.len())));
            }
            if let Some(j) = r.iter().position(|v| !v.is_finite()) {
                return Err(Error::Input(format!("non-finite value at row {i}, column {j}")));
            }
        }
        Ok(Self { rows, p })
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        Self::new(m.row_iter().map(|r| r.transpose()).collect())
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows.iter().map(|r| DVector::from_column_slice(r)).collect())
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &DVector<f64> {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[DVector<f64>] {
        &self.rows
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n(), self.p, |i, j| self.rows[i][j])
    }

    /// Rows in the given order.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            rows: order.iter().map(|&i| self.rows[i].clone()).collect(),
            p: self.p,
        }
    }

    /// Vertical concatenation.
    pub fn stacked(&self, other: &Self) -> Result<Self> {
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Self::new(rows)
    }
}

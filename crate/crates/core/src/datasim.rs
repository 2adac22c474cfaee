//! Simulated mixtures on a hypercube and the adjusted Rand index.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::ObservationMatrix;
use crate::error::{Error, Result};
use crate::ghd::{GhParams, GhSampler, Scale};
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Gaussian,
    SkewNormal,
    Gh,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Family::Gaussian),
            "skew-normal" | "skewnormal" | "skew_normal" => Ok(Family::SkewNormal),
            "gh" | "ghd" => Ok(Family::Gh),
            other => Err(Error::Input(format!("unknown family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimDesign {
    pub family: Family,
    pub p: usize,
    pub g: usize,
    pub n_per_component: usize,
    pub side: f64,
    /// skewness magnitudes, drawn uniformly with a random sign
    pub skew_range: (f64, f64),
    pub gh_omega: f64,
    pub gh_lambda: f64,
    /// random correlation on top of the perturbed diagonal
    pub correlated: bool,
    pub seed: u64,
}

impl SimDesign {
    pub fn new(family: Family, p: usize, g: usize, n_per_component: usize, seed: u64) -> Self {
        Self {
            family,
            p,
            g,
            n_per_component,
            side: 200.0,
            skew_range: (10.0, 20.0),
            gh_omega: 1.0,
            gh_lambda: 0.5,
            correlated: false,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.g == 0 || self.n_per_component == 0 {
            return Err(Error::Input("p, G and n per component must be positive".into()));
        }
        if !(self.side > 0.0) {
            return Err(Error::Input("hypercube side must be positive".into()));
        }
        let (lo, hi) = self.skew_range;
        if !(lo >= 0.0 && hi >= lo) {
            return Err(Error::Input("skew range must satisfy 0 <= lo <= hi".into()));
        }
        if !(self.gh_omega > 0.0) || !self.gh_lambda.is_finite() {
            return Err(Error::Input("GH omega must be positive and lambda finite".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.g * self.n_per_component
    }
}

/// Class labels, one per observation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub labels: Vec<usize>,
}

impl Partition {
    pub fn new(labels: Vec<usize>) -> Self {
        Self { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// One simulated component: location, skewness and scale.
#[derive(Debug, Clone)]
pub struct SimComponent {
    pub mu: DVector<f64>,
    pub alpha: DVector<f64>,
    pub sigma: DMatrix<f64>,
}

fn scale_matrix<R: Rng + ?Sized>(p: usize, correlated: bool, rng: &mut R) -> DMatrix<f64> {
    let diag = DVector::from_fn(p, |_, _| loop {
        let v = 1.0 + rng.random_range(-0.9..=0.9);
        if v > 0.0 {
            break v;
        }
    });
    if !correlated {
        return DMatrix::from_diagonal(&diag);
    }
    let w = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let s = &w * w.transpose() + DMatrix::identity(p, p) * p as f64;
    let d = s.diagonal().map(|v| 1.0 / v.sqrt());
    let corr = DMatrix::from_fn(p, p, |i, j| s[(i, j)] * d[i] * d[j]);
    let root = diag.map(f64::sqrt);
    DMatrix::from_fn(p, p, |i, j| corr[(i, j)] * root[i] * root[j])
}

/// Draws the component parameters of a design.
pub fn components(design: &SimDesign) -> Result<Vec<SimComponent>> {
    design.validate()?;
    let (lo, hi) = design.skew_range;
    (0..design.g)
        .map(|g| {
            let mut rng = substream(design.seed, "simulate-params", g as u64);
            let mu = DVector::from_fn(design.p, |_, _| rng.random_range(0.0..=design.side));
            let sigma = scale_matrix(design.p, design.correlated, &mut rng);
            let alpha = match design.family {
                Family::Gaussian => DVector::zeros(design.p),
                _ => DVector::from_fn(design.p, |_, _| {
                    let m = rng.random_range(lo..=hi);
                    if rng.random::<bool>() {
                        m
                    } else {
                        -m
                    }
                }),
            };
            Ok(SimComponent { mu, alpha, sigma })
        })
        .collect()
}

/// Equal-sized components; labels run from 1 to G in row order.
pub fn generate(design: &SimDesign) -> Result<(ObservationMatrix, Partition)> {
    let comps = components(design)?;
    let mut rows = Vec::with_capacity(design.n());
    let mut labels = Vec::with_capacity(design.n());
    for (g, c) in comps.iter().enumerate() {
        let mut rng = substream(design.seed, "simulate", g as u64);
        let params = GhParams::new(
            c.mu.clone(),
            c.alpha.clone(),
            Scale::Dense(c.sigma.clone()),
            design.gh_lambda,
            design.gh_omega,
        )?;
        let sampler = GhSampler::new(&params)?;
        for _ in 0..design.n_per_component {
            let x = match design.family {
                Family::Gaussian => &c.mu + sampler.normal(&mut rng),
                Family::SkewNormal => {
                    let z0: f64 = rng.sample(StandardNormal);
                    &c.mu + z0.abs() * &c.alpha + sampler.normal(&mut rng)
                }
                Family::Gh => sampler.draw(&mut rng).0,
            };
            rows.push(x);
            labels.push(g + 1);
        }
    }
    Ok((ObservationMatrix::new(rows)?, Partition::new(labels)))
}

fn choose2(v: u64) -> f64 {
    (v as f64) * (v as f64 - 1.0) / 2.0
}

/// Adjusted Rand index from a contingency table.
pub fn ari_from_table(table: &[Vec<u64>]) -> f64 {
    let n: u64 = table.iter().flatten().sum();
    let rows: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let width = table.iter().map(|r| r.len()).max().unwrap_or(0);
    let cols: Vec<u64> = (0..width)
        .map(|j| table.iter().map(|r| r.get(j).copied().unwrap_or(0)).sum())
        .collect();
    let index: f64 = table.iter().flatten().map(|&v| choose2(v)).sum();
    let sum_rows: f64 = rows.iter().map(|&v| choose2(v)).sum();
    let sum_cols: f64 = cols.iter().map(|&v| choose2(v)).sum();
    let total = choose2(n);
    if total == 0.0 {
        return 1.0;
    }
    let expected = sum_rows * sum_cols / total;
    let max = 0.5 * (sum_rows + sum_cols);
    if max == expected {
        // both partitions trivial in the same way
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Contingency table of two labelings, rows and columns in order of the
/// sorted distinct labels.
pub fn contingency(a: &[usize], b: &[usize]) -> Result<Vec<Vec<u64>>> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("partitions have lengths {} and {}", a.len(), b.len())));
    }
    let index = |v: &[usize]| {
        let mut distinct: Vec<usize> = v.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        distinct.into_iter().enumerate().map(|(k, l)| (l, k)).collect::<HashMap<_, _>>()
    };
    let (ia, ib) = (index(a), index(b));
    let mut table = vec![vec![0u64; ib.len()]; ia.len()];
    for (x, y) in a.iter().zip(b) {
        table[ia[x]][ib[y]] += 1;
    }
    Ok(table)
}

/// Hubert-Arabie adjusted Rand index.
pub fn ari(a: &Partition, b: &Partition) -> Result<f64> {
    Ok(ari_from_table(&contingency(&a.labels, &b.labels)?))
}

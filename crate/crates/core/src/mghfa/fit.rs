//! Multi-start AECM fitting.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::data::ObservationMatrix;
use crate::error::{Error, Result};
use crate::kmeans::{kmeans, lloyd};
use crate::mghfa::cm::{cm_step_1, cm_step_2, CmSettings};
use crate::mghfa::estep::{e_step, EStepCache, EStepOptions};
use crate::mghfa::init::{indicator, model_from_weights, random_weights};
use crate::mghfa::model::{MixtureModel, OMEGA_MAX, OMEGA_MIN};
use crate::rng::substream;
use crate::selection::{aitken_converged, bic, AitkenState, AitkenTarget};

pub const KMEANS_ITERATIONS: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Init {
    KMeans,
    /// random responsibilities
    Random,
    /// one hard label per row, `0..G`
    Labels(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub max_iter: usize,
    pub epsilon: f64,
    pub n_starts: usize,
    pub init: Init,
    pub seed: u64,
    pub psi_floor: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub aitken_target: AitkenTarget,
    /// worker threads for starts and grid cells; 0 uses the global pool
    pub threads: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            epsilon: 1e-5,
            n_starts: 20,
            init: Init::KMeans,
            seed: 0,
            psi_floor: crate::ghd::NOISE_FLOOR,
            omega_min: OMEGA_MIN,
            omega_max: OMEGA_MAX,
            aitken_target: AitkenTarget::Latest,
            threads: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::Input("epsilon must be positive".into()));
        }
        if self.n_starts == 0 || self.max_iter == 0 {
            return Err(Error::Input("need at least one start and one iteration".into()));
        }
        if !(self.psi_floor > 0.0) || !(self.omega_min > 0.0) || !(self.omega_max > self.omega_min) {
            return Err(Error::Input("floors and omega bounds must be positive and ordered".into()));
        }
        Ok(())
    }

    fn settings(&self) -> CmSettings {
        CmSettings {
            psi_floor: self.psi_floor,
            omega_min: self.omega_min,
            omega_max: self.omega_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StartStatus {
    Converged,
    MaxIter,
    /// same initial partition as an earlier start
    Duplicate { of: usize },
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StartDiagnostic {
    pub start: usize,
    pub status: StartStatus,
    pub loglik: Option<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub model: MixtureModel,
    pub g: usize,
    pub q: usize,
    pub n: usize,
    pub loglik: f64,
    /// log-likelihood after each full iteration, starting at the initial values
    pub trace: Vec<f64>,
    pub bic: f64,
    /// `argmax_g zhat_ig`, ties to the lowest index
    pub labels: Vec<usize>,
    pub responsibilities: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub best_start: usize,
    pub starts: Vec<StartDiagnostic>,
}

impl FitReport {
    /// `max_g zhat_ig` per row.
    pub fn max_responsibility(&self) -> Vec<f64> {
        self.responsibilities
            .row_iter()
            .enumerate()
            .map(|(i, r)| r[self.labels[i]])
            .collect()
    }
}

struct StartOutcome {
    model: MixtureModel,
    cache: EStepCache,
    trace: Vec<f64>,
    converged: bool,
}

/// Runs `f` in a pool of `threads` workers (0: current pool).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Input(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Largest effective size at which a component is abandoned: `mu`,
/// `alpha` and `q` loadings pass exactly through `q + 2` rows.
pub(crate) fn min_component_size(q: usize) -> usize {
    q + 2
}

fn check_sizes(cache: &EStepCache, q: usize) -> Result<()> {
    let needed = min_component_size(q);
    for g in 0..cache.g() {
        let size = cache.n_g(g);
        if size <= needed as f64 {
            return Err(Error::EmptyComponent {
                component: g,
                size,
                needed,
            });
        }
    }
    Ok(())
}

/// AECM iterations from `model` until the Aitken rule fires or `max_iter`.
fn run_aecm(
    data: &ObservationMatrix,
    mut model: MixtureModel,
    config: &FitConfig,
    known: Option<&[Option<usize>]>,
) -> Result<StartOutcome> {
    let q = model.q();
    let settings = config.settings();
    let mut cache = e_step(data, &model, known, EStepOptions::FIRST_STAGE)?;
    check_sizes(&cache, q)?;
    let mut trace = vec![cache.loglik];
    let mut converged = false;
    for iteration in 0..config.max_iter {
        // a stage whose update lowers the computed log-likelihood is undone
        let proposal = cm_step_1(data, &cache, &model, &settings)?;
        let mut mid = e_step(data, &proposal, known, EStepOptions::SECOND_STAGE)?;
        if mid.loglik < cache.loglik {
            log::debug!("iteration {iteration}: first stage lowered the log-likelihood, undone");
            mid = e_step(data, &model, known, EStepOptions::SECOND_STAGE)?;
        } else {
            model = proposal;
        }
        check_sizes(&mid, q)?;
        let proposal = cm_step_2(data, &mid, &model, &settings)?;
        let next = e_step(data, &proposal, known, EStepOptions::FIRST_STAGE)?;
        if next.loglik < mid.loglik {
            log::debug!("iteration {iteration}: second stage lowered the log-likelihood, undone");
            cache = e_step(data, &model, known, EStepOptions::FIRST_STAGE)?;
        } else {
            model = proposal;
            cache = next;
        }
        check_sizes(&cache, q)?;
        trace.push(cache.loglik);
        let k = trace.len();
        if k >= 3 {
            let state = AitkenState {
                values: [trace[k - 3], trace[k - 2], trace[k - 1]],
                epsilon: config.epsilon,
                target: config.aitken_target,
            };
            if aitken_converged(&state) {
                converged = true;
                break;
            }
        }
    }
    Ok(StartOutcome {
        model,
        cache,
        trace,
        converged,
    })
}

/// Relabels a partition by order of first appearance.
fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

enum StartPlan {
    Weights(DMatrix<f64>),
    Duplicate(usize),
    Failed(String),
}

fn plan_starts(
    data: &ObservationMatrix,
    g: usize,
    config: &FitConfig,
    known: Option<&[Option<usize>]>,
) -> Result<Vec<StartPlan>> {
    let n = data.n();
    let anchored = known.is_some_and(|k| k.iter().any(|v| v.is_some()));
    let mut seen: Vec<(Vec<usize>, usize)> = Vec::new();
    let mut plans = Vec::with_capacity(config.n_starts);
    for s in 0..config.n_starts {
        let mut rng = substream(config.seed, "starts", s as u64);
        let labels = match &config.init {
            Init::Random => {
                plans.push(StartPlan::Weights(random_weights(n, g, known, &mut rng)));
                continue;
            }
            Init::Labels(l) => {
                if l.len() != n || l.iter().any(|&c| c >= g) {
                    return Err(Error::Input(format!("initial labels must be {n} values in 0..{g}")));
                }
                let mut l = l.clone();
                if let Some(k) = known {
                    for (i, c) in k.iter().enumerate() {
                        if let Some(c) = c {
                            l[i] = *c;
                        }
                    }
                }
                l
            }
            Init::KMeans if anchored => {
                let k = known.unwrap();
                let centers = crate::kmeans::plus_plus_centers(data, g, &mut rng);
                let centers = anchored_centers(data, g, k, centers);
                lloyd(data, centers, KMEANS_ITERATIONS, Some(k)).labels
            }
            Init::KMeans => kmeans(data, g, KMEANS_ITERATIONS, &mut rng).labels,
        };
        let key = canonical(&labels);
        if let Some((_, of)) = seen.iter().find(|(k, _)| *k == key) {
            plans.push(StartPlan::Duplicate(*of));
            continue;
        }
        seen.push((key, s));
        if (0..g).any(|c| !labels.contains(&c)) {
            plans.push(StartPlan::Failed("initial partition has an empty cluster".into()));
            continue;
        }
        plans.push(StartPlan::Weights(indicator(&labels, g)));
    }
    Ok(plans)
}

/// Class means of the labelled rows; classes without labelled rows keep
/// the seeded center.
fn anchored_centers(
    data: &ObservationMatrix,
    g: usize,
    known: &[Option<usize>],
    mut centers: Vec<nalgebra::DVector<f64>>,
) -> Vec<nalgebra::DVector<f64>> {
    for (c, center) in centers.iter_mut().enumerate().take(g) {
        let rows: Vec<_> = (0..data.n()).filter(|&i| known[i] == Some(c)).collect();
        if !rows.is_empty() {
            let mut m = nalgebra::DVector::zeros(data.p());
            for &i in &rows {
                m += data.row(i);
            }
            *center = m / rows.len() as f64;
        }
    }
    centers
}

/// Fits within the current rayon pool; starts run in parallel and are
/// merged in start order.
pub fn fit_in_current_pool(
    data: &ObservationMatrix,
    g: usize,
    q: usize,
    config: &FitConfig,
    known: Option<&[Option<usize>]>,
) -> Result<FitReport> {
    config.validate()?;
    let (n, p) = (data.n(), data.p());
    if g == 0 || q == 0 || q >= p {
        return Err(Error::Input(format!("need G >= 1 and 1 <= q < p, got G={g}, q={q}, p={p}")));
    }
    if n <= g {
        return Err(Error::Input(format!("need more rows than components, got n={n}, G={g}")));
    }
    // work in a canonical row order so results do not depend on the input order
    let order = canonical_order(data);
    let sorted = data.permuted(&order);
    let sorted_known: Option<Vec<Option<usize>>> = known.map(|k| order.iter().map(|&i| k[i]).collect());
    let mut sorted_config = config.clone();
    if let Init::Labels(l) = &config.init {
        if l.len() != n {
            return Err(Error::Input(format!("initial labels must be {n} values in 0..{g}")));
        }
        sorted_config.init = Init::Labels(order.iter().map(|&i| l[i]).collect());
    }
    let report = fit_sorted(&sorted, g, q, &sorted_config, sorted_known.as_deref())?;
    Ok(report.unpermuted(&order))
}

/// Row indices sorted lexicographically by value, ties by index.
pub fn canonical_order(data: &ObservationMatrix) -> Vec<usize> {
    let mut order: Vec<usize> = (0..data.n()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (data.row(a), data.row(b));
        ra.iter()
            .zip(rb.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

impl FitReport {
    /// Maps per-row outputs computed on `data.permuted(order)` back to the
    /// original row order.
    fn unpermuted(mut self, order: &[usize]) -> Self {
        let mut labels = vec![0; order.len()];
        let mut resp = DMatrix::zeros(order.len(), self.responsibilities.ncols());
        for (k, &i) in order.iter().enumerate() {
            labels[i] = self.labels[k];
            resp.set_row(i, &self.responsibilities.row(k));
        }
        self.labels = labels;
        self.responsibilities = resp;
        self
    }
}

fn fit_sorted(
    data: &ObservationMatrix,
    g: usize,
    q: usize,
    config: &FitConfig,
    known: Option<&[Option<usize>]>,
) -> Result<FitReport> {
    let (n, p) = (data.n(), data.p());
    let plans = plan_starts(data, g, config, known)?;
    let outcomes: Vec<Option<Result<StartOutcome>>> = plans
        .par_iter()
        .map(|plan| match plan {
            StartPlan::Weights(z) => Some(
                model_from_weights(data, z, q, config.psi_floor).and_then(|m| run_aecm(data, m, config, known)),
            ),
            _ => None,
        })
        .collect();

    let mut diagnostics = Vec::with_capacity(plans.len());
    let mut best: Option<(usize, StartOutcome)> = None;
    for (s, (plan, outcome)) in plans.iter().zip(outcomes).enumerate() {
        let diag = match (plan, outcome) {
            (StartPlan::Duplicate(of), _) => StartDiagnostic {
                start: s,
                status: StartStatus::Duplicate { of: *of },
                loglik: None,
                iterations: 0,
            },
            (StartPlan::Failed(reason), _) => StartDiagnostic {
                start: s,
                status: StartStatus::Failed(reason.clone()),
                loglik: None,
                iterations: 0,
            },
            (StartPlan::Weights(_), Some(Err(e))) => StartDiagnostic {
                start: s,
                status: StartStatus::Failed(e.to_string()),
                loglik: None,
                iterations: 0,
            },
            (StartPlan::Weights(_), Some(Ok(out))) => {
                let ll = *out.trace.last().unwrap();
                let d = StartDiagnostic {
                    start: s,
                    status: if out.converged {
                        StartStatus::Converged
                    } else {
                        StartStatus::MaxIter
                    },
                    loglik: Some(ll),
                    iterations: out.trace.len() - 1,
                };
                if best.as_ref().is_none_or(|(_, b)| ll > *b.trace.last().unwrap()) {
                    best = Some((s, out));
                }
                d
            }
            (StartPlan::Weights(_), None) => unreachable!("every planned start is run"),
        };
        diagnostics.push(diag);
    }

    let Some((best_start, out)) = best else {
        let reasons = diagnostics
            .iter()
            .filter_map(|d| match &d.status {
                StartStatus::Failed(r) => Some(format!("start {}: {r}", d.start)),
                _ => None,
            })
            .collect();
        return Err(Error::FitFailure(reasons));
    };
    let loglik = *out.trace.last().unwrap();
    Ok(FitReport {
        g,
        q,
        n,
        loglik,
        bic: bic(loglik, n, p, g, q),
        labels: out.cache.hard_labels(),
        responsibilities: out.cache.zhat,
        iterations: out.trace.len() - 1,
        converged: out.converged,
        trace: out.trace,
        model: out.model,
        best_start,
        starts: diagnostics,
    })
}

/// Fits a `G`-component, `q`-factor model, keeping the best start by final
/// log-likelihood (ties to the earliest start).
pub fn fit(data: &ObservationMatrix, g: usize, q: usize, config: &FitConfig) -> Result<FitReport> {
    with_threads(config.threads, || fit_in_current_pool(data, g, q, config, None))?
}

/// Single AECM run from given starting values.
pub fn fit_from(
    data: &ObservationMatrix,
    model: MixtureModel,
    config: &FitConfig,
    known: Option<&[Option<usize>]>,
) -> Result<FitReport> {
    config.validate()?;
    model.validate()?;
    let (g, q, n, p) = (model.g(), model.q(), data.n(), data.p());
    let out = run_aecm(data, model, config, known)?;
    let loglik = *out.trace.last().unwrap();
    Ok(FitReport {
        g,
        q,
        n,
        loglik,
        bic: bic(loglik, n, p, g, q),
        labels: out.cache.hard_labels(),
        responsibilities: out.cache.zhat,
        iterations: out.trace.len() - 1,
        converged: out.converged,
        starts: vec![StartDiagnostic {
            start: 0,
            status: if out.converged {
                StartStatus::Converged
            } else {
                StartStatus::MaxIter
            },
            loglik: Some(loglik),
            iterations: out.trace.len() - 1,
        }],
        trace: out.trace,
        model: out.model,
        best_start: 0,
    })
}

//! k-means with k-means++ seeding, used to initialize the mixture fits.

use nalgebra::DVector;
use rand::Rng;

use crate::data::ObservationMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub labels: Vec<usize>,
    pub centers: Vec<DVector<f64>>,
    pub iterations: usize,
}

fn sq_dist(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(x: &DVector<f64>, centers: &[DVector<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centers.iter().enumerate() {
        let d = sq_dist(x, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

/// k-means++ seeding: each new center is drawn with probability
/// proportional to the squared distance to the closest existing one.
pub fn plus_plus_centers<R: Rng + ?Sized>(data: &ObservationMatrix, k: usize, rng: &mut R) -> Vec<DVector<f64>> {
    let n = data.n();
    let mut centers = vec![data.row(rng.random_range(0..n)).clone()];
    let mut d2: Vec<f64> = data.rows().iter().map(|x| sq_dist(x, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let c = data.row(idx).clone();
        for (i, x) in data.rows().iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(x, &c));
        }
        centers.push(c);
    }
    centers
}

/// Lloyd iterations from the given centers. Rows with a `Some` entry in
/// `fixed` keep that cluster.
pub fn lloyd(
    data: &ObservationMatrix,
    mut centers: Vec<DVector<f64>>,
    max_iter: usize,
    fixed: Option<&[Option<usize>]>,
) -> KMeans {
    let n = data.n();
    let k = centers.len();
    let pinned = |i: usize| fixed.and_then(|f| f[i]);
    let mut labels = vec![usize::MAX; n];
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let mut changed = false;
        let mut dists = vec![0.0; n];
        for (i, x) in data.rows().iter().enumerate() {
            let (lab, d) = match pinned(i) {
                Some(c) => (c, sq_dist(x, &centers[c])),
                None => nearest(x, &centers),
            };
            dists[i] = d;
            if labels[i] != lab {
                labels[i] = lab;
                changed = true;
            }
        }
        let mut counts = vec![0usize; k];
        let mut sums = vec![DVector::zeros(data.p()); k];
        for (i, x) in data.rows().iter().enumerate() {
            counts[labels[i]] += 1;
            sums[labels[i]] += x;
        }
        for c in 0..k {
            if counts[c] == 0 {
                // move an empty center onto the worst-fitted free row
                let far = (0..n)
                    .filter(|&i| pinned(i).is_none() && counts[labels[i]] > 1)
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
                if let Some(i) = far {
                    counts[labels[i]] -= 1;
                    sums[labels[i]] -= data.row(i);
                    labels[i] = c;
                    counts[c] = 1;
                    sums[c] = data.row(i).clone();
                    dists[i] = 0.0;
                    changed = true;
                }
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = &sums[c] / counts[c] as f64;
            }
        }
        if !changed {
            break;
        }
    }
    KMeans {
        labels,
        centers,
        iterations,
    }
}

pub fn kmeans<R: Rng + ?Sized>(data: &ObservationMatrix, k: usize, max_iter: usize, rng: &mut R) -> KMeans {
    let centers = plus_plus_centers(data, k, rng);
    lloyd(data, centers, max_iter, None)
}

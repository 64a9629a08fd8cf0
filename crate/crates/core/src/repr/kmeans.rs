use serde::{Deserialize, Serialize};

use crate::linalg::sq_dist;
use crate::seed::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansConfig {
    pub max_iters: usize,
    /// Stop once no center moves farther than this.
    pub tolerance: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            max_iters: 100,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub dim: usize,
    pub k: usize,
    /// `k × dim`, row-major.
    pub centroids: Vec<f64>,
    /// Inertia after every iteration (the first entry follows iteration 1).
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub empty_repairs: usize,
}

impl KMeansFit {
    pub fn centroid(&self, j: usize) -> &[f64] {
        &self.centroids[j * self.dim..(j + 1) * self.dim]
    }

    pub fn inertia(&self) -> f64 {
        self.inertia_history.last().copied().unwrap_or(f64::INFINITY)
    }
}

fn nearest(x: &[f64], centroids: &[f64], dim: usize, current: Option<usize>) -> (usize, f64) {
    // Ties keep the current cluster, otherwise the lowest index.
    let (mut best, mut best_d) = match current {
        Some(c) => (c, sq_dist(x, &centroids[c * dim..(c + 1) * dim])),
        None => (0, f64::INFINITY),
    };
    for (j, c) in centroids.chunks_exact(dim).enumerate() {
        let d = sq_dist(x, c);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    (best, best_d)
}

fn pointwise_inertia(data: &[f64], dim: usize, centroids: &[f64], assign: &[usize]) -> f64 {
    data.chunks_exact(dim)
        .zip(assign)
        .map(|(x, &a)| sq_dist(x, &centroids[a * dim..(a + 1) * dim]))
        .sum()
}

/// Lloyd's algorithm on row-major `data`.
///
/// Seeds with `k` distinct rows drawn uniformly. Each update keeps, per
/// cluster, whichever of the old and new center has the lower within-cluster
/// error, and the whole update is dropped if it would raise the total, so the
/// recorded inertia never increases.
pub fn kmeans_fit(data: &[f64], dim: usize, k: usize, cfg: &KMeansConfig, rng: &mut Rng) -> Result<KMeansFit> {
    if dim == 0 || data.len() % dim != 0 {
        return Err(Error::InvalidParam(format!("data length {} is not a multiple of dim {dim}", data.len())));
    }
    let n = data.len() / dim;
    if k == 0 || n < k {
        return Err(Error::InvalidParam(format!("k-means needs 1 ≤ K ≤ n, got K={k}, n={n}")));
    }
    let row = |i: usize| &data[i * dim..(i + 1) * dim];

    let mut seeds = rand::seq::index::sample(rng, n, k).into_vec();
    seeds.sort_unstable();
    let mut centroids: Vec<f64> = seeds.iter().flat_map(|&i| row(i).iter().copied()).collect();

    let mut assign: Vec<Option<usize>> = vec![None; n];
    let mut dists = vec![0.0; n];
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut empty_repairs = 0;

    for _ in 0..cfg.max_iters {
        iterations += 1;
        for i in 0..n {
            let (a, d) = nearest(row(i), &centroids, dim, assign[i]);
            assign[i] = Some(a);
            dists[i] = d;
        }
        let mut labels: Vec<usize> = assign.iter().map(|a| a.unwrap()).collect();
        let assigned_inertia: f64 = dists.iter().sum();

        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for (i, &a) in labels.iter().enumerate() {
            counts[a] += 1;
            for (s, v) in sums[a * dim..(a + 1) * dim].iter_mut().zip(row(i)) {
                *s += v;
            }
        }

        let mut candidate = centroids.clone();
        let mut repaired = vec![false; k];
        for j in 0..k {
            if counts[j] > 0 {
                continue;
            }
            // Farthest point from its center among clusters that can spare one.
            let donor = (0..n)
                .filter(|&i| counts[labels[i]] > 1)
                .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
            let Some(p) = donor else { continue };
            let from = labels[p];
            counts[from] -= 1;
            for (s, v) in sums[from * dim..(from + 1) * dim].iter_mut().zip(row(p)) {
                *s -= v;
            }
            labels[p] = j;
            counts[j] = 1;
            dists[p] = 0.0;
            sums[j * dim..(j + 1) * dim].copy_from_slice(row(p));
            candidate[j * dim..(j + 1) * dim].copy_from_slice(row(p));
            repaired[j] = true;
            empty_repairs += 1;
        }

        let mut err_old = vec![0.0; k];
        let mut err_new = vec![0.0; k];
        for j in 0..k {
            if counts[j] > 0 && !repaired[j] {
                let inv = 1.0 / counts[j] as f64;
                for (c, s) in candidate[j * dim..(j + 1) * dim].iter_mut().zip(&sums[j * dim..(j + 1) * dim]) {
                    *c = s * inv;
                }
            }
        }
        for (i, &a) in labels.iter().enumerate() {
            err_old[a] += sq_dist(row(i), &centroids[a * dim..(a + 1) * dim]);
            err_new[a] += sq_dist(row(i), &candidate[a * dim..(a + 1) * dim]);
        }
        for j in 0..k {
            if !repaired[j] && err_new[j] > err_old[j] {
                candidate[j * dim..(j + 1) * dim].copy_from_slice(&centroids[j * dim..(j + 1) * dim]);
            }
        }
        let mut inertia = pointwise_inertia(data, dim, &candidate, &labels);
        if inertia > assigned_inertia {
            candidate.copy_from_slice(&centroids);
            labels = assign.iter().map(|a| a.unwrap()).collect();
            inertia = assigned_inertia;
        }

        let shift = candidate
            .chunks_exact(dim)
            .zip(centroids.chunks_exact(dim))
            .map(|(a, b)| sq_dist(a, b))
            .fold(0.0, f64::max)
            .sqrt();
        centroids = candidate;
        for (slot, l) in assign.iter_mut().zip(&labels) {
            *slot = Some(*l);
        }
        history.push(inertia);
        if shift < cfg.tolerance {
            converged = true;
            break;
        }
    }

    Ok(KMeansFit {
        dim,
        k,
        centroids,
        inertia_history: history,
        iterations,
        converged,
        empty_repairs,
    })
}

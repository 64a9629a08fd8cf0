use serde::{Deserialize, Serialize};

use crate::artifact::{Artifact, ModelKind};
use crate::linalg::sq_dist;
use crate::seed::Rng;
use crate::{Error, Result};

use super::kmeans::{kmeans_fit, KMeansConfig, KMeansFit};
use super::subsample_rows;

/// Sums of membership weights below this count as underflow.
pub const UNDERFLOW: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BofConfig {
    pub k: usize,
    pub g: f64,
    pub max_samples: usize,
    pub kmeans: KMeansConfig,
}

impl Default for BofConfig {
    fn default() -> Self {
        BofConfig {
            k: 128,
            g: 0.01,
            max_samples: 100_000,
            kmeans: KMeansConfig {
                max_iters: 30,
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BofCodebook {
    pub dim: usize,
    pub k: usize,
    pub g: f64,
    /// `k × dim`, row-major.
    pub centroids: Vec<f64>,
}

impl BofCodebook {
    pub fn new(centroids: Vec<f64>, dim: usize, g: f64) -> Result<Self> {
        if dim == 0 || centroids.is_empty() || centroids.len() % dim != 0 {
            return Err(Error::InvalidParam("codebook needs at least one centroid of positive dimension".into()));
        }
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::InvalidParam(format!("fuzziness g must be positive, got {g}")));
        }
        Ok(BofCodebook {
            dim,
            k: centroids.len() / dim,
            g,
            centroids,
        })
    }

    pub fn from_kmeans(fit: KMeansFit, g: f64) -> Result<Self> {
        Self::new(fit.centroids, fit.dim, g)
    }

    pub fn with_g(&self, g: f64) -> Result<Self> {
        Self::new(self.centroids.clone(), self.dim, g)
    }

    /// Fuzzy membership of one vector: exp(−‖v_k − x‖/g), l1-normalized.
    ///
    /// Exponents are shifted by the smallest distance before `exp`, which
    /// leaves the normalized vector unchanged but keeps the nearest
    /// codeword's weight at 1 instead of letting everything underflow.
    pub fn memberships_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.k);
        let mut min = f64::INFINITY;
        for (o, v) in out.iter_mut().zip(self.centroids.chunks_exact(self.dim)) {
            *o = sq_dist(v, x).sqrt();
            min = min.min(*o);
        }
        let mut sum = 0.0;
        for o in out.iter_mut() {
            *o = (-(*o - min) / self.g).exp();
            sum += *o;
        }
        if !(sum >= UNDERFLOW) || !sum.is_finite() {
            out.iter_mut().for_each(|o| *o = 1.0 / self.k as f64);
        } else {
            out.iter_mut().for_each(|o| *o /= sum);
        }
    }

    pub fn memberships(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        self.memberships_into(x, &mut out);
        out
    }

    /// Histogram of a window: the mean of its members' memberships.
    pub fn encode_into(&self, window: &[&[f64]], out: &mut [f64]) -> Result<()> {
        if window.is_empty() {
            return Err(Error::Empty("bag-of-features window"));
        }
        if let Some(w) = window.iter().find(|w| w.len() != self.dim) {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: w.len(),
            });
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut u = vec![0.0; self.k];
        for w in window {
            self.memberships_into(w, &mut u);
            for (o, v) in out.iter_mut().zip(&u) {
                *o += v;
            }
        }
        let inv = 1.0 / window.len() as f64;
        out.iter_mut().for_each(|o| *o *= inv);
        Ok(())
    }

    pub fn to_artifact(&self) -> Artifact {
        let mut a = Artifact::new(ModelKind::BagOfFeatures);
        a.push_scalar("g", self.g);
        a.push("centroids", &[self.k, self.dim], self.centroids.clone());
        a
    }

    pub fn from_artifact(a: &Artifact) -> Result<Self> {
        a.expect_kind(ModelKind::BagOfFeatures)?;
        let c = a.get("centroids")?;
        let dim = *c.dims.get(1).ok_or_else(|| Error::Format("centroid tensor must be 2-D".into()))?;
        Self::new(c.data.clone(), dim, a.scalar("g")?)
    }
}

pub fn bof_encode(codebook: &BofCodebook, window: &[&[f64]]) -> Result<Vec<f64>> {
    let mut h = vec![0.0; codebook.k];
    codebook.encode_into(window, &mut h)?;
    Ok(h)
}

/// Fit a codebook on a bounded uniform subsample of row-major `data`.
pub fn bof_fit(data: &[f64], dim: usize, cfg: &BofConfig, rng: &mut Rng) -> Result<(BofCodebook, KMeansFit)> {
    let sample = subsample_rows(data, dim, cfg.max_samples, rng);
    let fit = kmeans_fit(&sample, dim, cfg.k, &cfg.kmeans, rng)?;
    Ok((BofCodebook::from_kmeans(fit.clone(), cfg.g)?, fit))
}

/// Shannon entropy (nats) of a probability vector.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng as _;

    fn codebook(k: usize, dim: usize, g: f64) -> BofCodebook {
        let mut rng = seed::rng(1, "cb");
        BofCodebook::new((0..k * dim).map(|_| rng.gen_range(-2.0..2.0)).collect(), dim, g).unwrap()
    }

    #[test]
    fn single_codeword_histogram_is_one() {
        let cb = codebook(1, 4, 0.01);
        let w = [[9.0; 4], [-3.0; 4]];
        let refs: Vec<&[f64]> = w.iter().map(|r| &r[..]).collect();
        assert_eq!(bof_encode(&cb, &refs).unwrap(), vec![1.0]);
    }

    #[test]
    fn equidistant_point_splits_evenly() {
        let cb = BofCodebook::new(vec![-1.0, 0.0, 1.0, 0.0], 2, 0.5).unwrap();
        let u = cb.memberships(&[0.0, 3.0]);
        assert!((u[0] - 0.5).abs() < 1e-15 && (u[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exact_codeword_concentrates_with_small_g() {
        let cb = codebook(16, 8, 1e-6);
        let x = cb.centroids[5 * 8..6 * 8].to_vec();
        assert!(cb.memberships(&x)[5] > 0.999);
    }

    #[test]
    fn far_points_do_not_collapse_to_uniform() {
        // Literal exp(−d/g) underflows for every codeword here.
        let cb = BofCodebook::new(vec![0.0, 0.0, 10.0, 0.0], 2, 0.01).unwrap();
        let u = cb.memberships(&[100.0, 0.0]);
        assert!(u[1] > 0.999);
    }

    #[test]
    fn histogram_is_a_distribution_and_order_free() {
        let cb = codebook(32, 6, 0.7);
        let mut rng = seed::rng(2, "w");
        let rows: Vec<Vec<f64>> = (0..5).map(|_| (0..6).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
        let fwd: Vec<&[f64]> = rows.iter().map(|r| &r[..]).collect();
        let rev: Vec<&[f64]> = rows.iter().rev().map(|r| &r[..]).collect();
        let h = bof_encode(&cb, &fwd).unwrap();
        let h2 = bof_encode(&cb, &rev).unwrap();
        assert!(h.iter().all(|v| *v >= 0.0));
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for (a, b) in h.iter().zip(&h2) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn entropy_grows_with_g() {
        let cb = codebook(16, 4, 1.0);
        let x = [0.3, -0.2, 1.1, 0.0];
        let mut last = -1.0;
        for g in [0.001, 0.01, 0.1, 1.0, 10.0] {
            let e = entropy(&cb.with_g(g).unwrap().memberships(&x));
            assert!(e >= last);
            last = e;
        }
    }

    #[test]
    fn artifact_round_trip() {
        let cb = codebook(8, 3, 0.01);
        let mut buf = Vec::new();
        cb.to_artifact().write_to(&mut buf).unwrap();
        assert_eq!(BofCodebook::from_artifact(&Artifact::read_from(&buf[..]).unwrap()).unwrap(), cb);
    }
}

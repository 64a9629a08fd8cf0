use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::artifact::{Artifact, ModelKind};
use crate::labeling::Label;
use crate::linalg::sq_dist;
use crate::repr::{kmeans_fit, subsample_rows, KMeansConfig};
use crate::seed::Rng;
use crate::{Error, Result};

use super::svm::{svm_train_rows, SvmConfig, SvmModel};
use super::{argmax3, DenseRows, Rows};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlfnConfig {
    pub hidden: usize,
    /// Points used to estimate σ as a mean pairwise distance.
    pub sigma_samples: usize,
    /// Rows clustered to find the prototypes.
    pub max_cluster_samples: usize,
    pub kmeans: KMeansConfig,
    pub output: SvmConfig,
}

impl Default for SlfnConfig {
    fn default() -> Self {
        SlfnConfig {
            hidden: 1000,
            sigma_samples: 2000,
            max_cluster_samples: 20_000,
            kmeans: KMeansConfig {
                max_iters: 20,
                ..Default::default()
            },
            output: SvmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlfnModel {
    pub dim: usize,
    pub hidden: usize,
    /// `hidden × dim`, row-major.
    pub prototypes: Vec<f64>,
    pub sigma: f64,
    pub output: SvmModel,
}

impl SlfnModel {
    /// x_hid,k = exp(−‖x − w_k‖² / (2σ²)).
    pub fn hidden_into(&self, x: &[f64], out: &mut [f64]) {
        let scale = -1.0 / (2.0 * self.sigma * self.sigma);
        for (o, w) in out.iter_mut().zip(self.prototypes.chunks_exact(self.dim)) {
            *o = (sq_dist(x, w) * scale).exp();
        }
    }

    pub fn hidden_activations(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let mut h = vec![0.0; self.hidden];
        self.hidden_into(x, &mut h);
        Ok(h)
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            })
        }
    }

    pub fn decision_values(&self, x: &[f64]) -> Result<[f64; 3]> {
        let h = self.hidden_activations(x)?;
        Ok(self.output.decision_values_unchecked(&h))
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        Ok(Label::from_class_index(argmax3(self.decision_values(x)?)))
    }

    pub fn to_artifact(&self) -> Artifact {
        let mut a = Artifact::new(ModelKind::Slfn);
        a.push("prototypes", &[self.hidden, self.dim], self.prototypes.clone());
        a.push_scalar("sigma", self.sigma);
        self.output.write_tensors(&mut a, "out_");
        a
    }

    pub fn from_artifact(a: &Artifact) -> Result<Self> {
        a.expect_kind(ModelKind::Slfn)?;
        let p = a.get("prototypes")?;
        if p.dims.len() != 2 {
            return Err(Error::Format("prototype tensor must be 2-D".into()));
        }
        let output = SvmModel::read_tensors(a, "out_")?;
        if output.dim != p.dims[0] {
            return Err(Error::Format("output layer width does not match the prototype count".into()));
        }
        Ok(SlfnModel {
            hidden: p.dims[0],
            dim: p.dims[1],
            prototypes: p.data.clone(),
            sigma: a.scalar("sigma")?,
            output,
        })
    }
}

const PRECOMPUTE_LIMIT: usize = 16 << 20;

/// Mean Euclidean distance over all pairs of at most `cap` random rows.
pub fn mean_pairwise_distance(data: &[f64], dim: usize, cap: usize, rng: &mut Rng) -> f64 {
    let n = data.len() / dim;
    let idx: Vec<usize> = if n <= cap {
        (0..n).collect()
    } else {
        let mut v = index::sample(rng, n, cap).into_vec();
        v.sort_unstable();
        v
    };
    let row = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut total = 0.0;
    let mut pairs = 0u64;
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            total += sq_dist(row(i), row(j)).sqrt();
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        total / pairs as f64
    }
}

struct HiddenRows<'a> {
    model: &'a SlfnModel,
    data: DenseRows<'a>,
}

impl Rows for HiddenRows<'_> {
    fn dim(&self) -> usize {
        self.model.hidden
    }
    fn len(&self) -> usize {
        self.data.len()
    }
    fn row_into(&self, i: usize, out: &mut [f64]) {
        self.model.hidden_into(self.data.row(i), out);
    }
}

/// Fit prototypes and σ; the output layer is left at zero.
pub fn slfn_fit_hidden(x: &[f64], dim: usize, cfg: &SlfnConfig, rng: &mut Rng) -> Result<SlfnModel> {
    let n = DenseRows::new(x, dim)?.len();
    if n < cfg.hidden {
        return Err(Error::InvalidParam(format!("SLFN needs at least {} training rows, got {n}", cfg.hidden)));
    }
    let cap = cfg.max_cluster_samples.max(cfg.hidden);
    let sample = subsample_rows(x, dim, cap, rng);
    let fit = kmeans_fit(&sample, dim, cfg.hidden, &cfg.kmeans, rng)?;
    let sigma = mean_pairwise_distance(x, dim, cfg.sigma_samples, rng);
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParam(format!("RBF width σ = {sigma}: training rows are all identical")));
    }
    Ok(SlfnModel {
        dim,
        hidden: cfg.hidden,
        prototypes: fit.centroids,
        sigma,
        output: SvmModel::zeros(cfg.hidden),
    })
}

/// Train the max-margin output layer of `model` on the hidden activations
/// of `x`.
pub fn slfn_train_output(model: &SlfnModel, x: &[f64], labels: &[Label], cfg: &SvmConfig, rng: &mut Rng) -> Result<SvmModel> {
    let data = DenseRows::new(x, model.dim)?;
    let n = data.len();
    if labels.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: labels.len() });
    }
    let h = model.hidden;
    // Materialize the hidden layer when it is small; otherwise recompute it
    // per minibatch. Both paths feed identical values to the trainer.
    if n * h <= PRECOMPUTE_LIMIT {
        let mut buf = vec![0.0; n * h];
        for (i, out) in buf.chunks_exact_mut(h).enumerate() {
            model.hidden_into(data.row(i), out);
        }
        svm_train_rows(&DenseRows::new(&buf, h)?, labels, cfg, rng)
    } else {
        svm_train_rows(&HiddenRows { model, data }, labels, cfg, rng)
    }
}

pub fn slfn_train(x: &[f64], dim: usize, labels: &[Label], cfg: &SlfnConfig, rng: &mut Rng) -> Result<SlfnModel> {
    let n = DenseRows::new(x, dim)?.len();
    if labels.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: labels.len() });
    }
    let mut model = slfn_fit_hidden(x, dim, cfg, rng)?;
    model.output = slfn_train_output(&model, x, labels, &cfg.output, rng)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::testing::blobs;
    use crate::seed;

    #[test]
    fn prototype_hit_activates_fully_and_range_is_unit() {
        let m = SlfnModel {
            dim: 2,
            hidden: 2,
            prototypes: vec![1.0, 1.0, -3.0, 4.0],
            sigma: 0.5,
            output: SvmModel::zeros(2),
        };
        let h = m.hidden_activations(&[1.0, 1.0]).unwrap();
        assert_eq!(h[0], 1.0);
        assert!(h[1] > 0.0 && h[1] < 1.0 || h[1] == 0.0);
        let far = m.hidden_activations(&[1e3, 1e3]).unwrap();
        assert!(far.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn zero_output_layer_returns_biases() {
        let m = SlfnModel {
            dim: 1,
            hidden: 1,
            prototypes: vec![0.0],
            sigma: 1.0,
            output: SvmModel {
                biases: [0.1, 0.2, -0.3],
                ..SvmModel::zeros(1)
            },
        };
        assert_eq!(m.decision_values(&[5.0]).unwrap(), [0.1, 0.2, -0.3]);
    }

    #[test]
    fn sigma_of_two_points() {
        let d = [0.0, 0.0, 0.0, 2.0];
        assert_eq!(mean_pairwise_distance(&d, 2, 2000, &mut seed::rng(0, "s")), 2.0);
    }

    #[test]
    fn learns_blobs_and_matches_svm_on_hidden_layer() {
        let (x, y) = blobs(300, 5);
        let cfg = SlfnConfig {
            hidden: 60,
            ..Default::default()
        };
        let m = slfn_train(&x, 2, &y, &cfg, &mut seed::rng(5, "slfn")).unwrap();
        let hits = x.chunks(2).zip(&y).filter(|(r, l)| m.predict(r).unwrap() == **l).count();
        assert!(hits as f64 / y.len() as f64 > 0.9);
        let r = &x[..2];
        assert_eq!(m.predict(r).unwrap(), m.output.predict(&m.hidden_activations(r).unwrap()).unwrap());
        let back = SlfnModel::from_artifact(&m.to_artifact()).unwrap();
        assert_eq!(back, m);
    }
}

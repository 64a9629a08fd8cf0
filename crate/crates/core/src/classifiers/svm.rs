use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::artifact::{Artifact, ModelKind};
use crate::labeling::Label;
use crate::linalg::dot;
use crate::seed::Rng;
use crate::{Error, Result};

use super::weighting::ClassWeighting;
use super::{argmax3, Rows};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    /// Global regularizer C; ignored when cross-validation picks one.
    pub c: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Step size is learning_rate / (1 + decay·step).
    pub decay: f64,
    pub class_weighting: bool,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 0.01,
            epochs: 20,
            batch_size: 256,
            learning_rate: 0.01,
            decay: 1e-4,
            class_weighting: true,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidParam(format!("SVM C must be positive, got {}", self.c)));
        }
        if self.epochs == 0 || self.batch_size == 0 || !(self.learning_rate > 0.0) || self.decay < 0.0 {
            return Err(Error::InvalidParam("SVM epochs, batch size and learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Three one-vs-rest linear machines in class order (−1, 0, +1).
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub dim: usize,
    /// `3 × dim`, row-major.
    pub weights: Vec<f64>,
    pub biases: [f64; 3],
    pub class_regularizers: [f64; 3],
    pub global_c: f64,
}

impl SvmModel {
    pub fn zeros(dim: usize) -> Self {
        SvmModel {
            dim,
            weights: vec![0.0; 3 * dim],
            biases: [0.0; 3],
            class_regularizers: [0.0; 3],
            global_c: 0.0,
        }
    }

    #[inline]
    pub fn decision_values_unchecked(&self, x: &[f64]) -> [f64; 3] {
        let d = self.dim;
        [
            dot(&self.weights[..d], x) + self.biases[0],
            dot(&self.weights[d..2 * d], x) + self.biases[1],
            dot(&self.weights[2 * d..], x) + self.biases[2],
        ]
    }

    pub fn decision_values(&self, x: &[f64]) -> Result<[f64; 3]> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.decision_values_unchecked(x))
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        Ok(Label::from_class_index(argmax3(self.decision_values(x)?)))
    }

    pub fn to_artifact(&self) -> Artifact {
        let mut a = Artifact::new(ModelKind::Svm);
        self.write_tensors(&mut a, "");
        a
    }

    pub(crate) fn write_tensors(&self, a: &mut Artifact, prefix: &str) {
        a.push(&format!("{prefix}weights"), &[3, self.dim], self.weights.clone());
        a.push(&format!("{prefix}biases"), &[3], self.biases.to_vec());
        a.push(&format!("{prefix}class_regularizers"), &[3], self.class_regularizers.to_vec());
        a.push_scalar(&format!("{prefix}global_c"), self.global_c);
    }

    pub(crate) fn read_tensors(a: &Artifact, prefix: &str) -> Result<Self> {
        let w = a.get(&format!("{prefix}weights"))?;
        let b = a.get(&format!("{prefix}biases"))?;
        let c = a.get(&format!("{prefix}class_regularizers"))?;
        if w.dims.len() != 2 || w.dims[0] != 3 || b.data.len() != 3 || c.data.len() != 3 {
            return Err(Error::Format("SVM tensors have the wrong shape".into()));
        }
        Ok(SvmModel {
            dim: w.dims[1],
            weights: w.data.clone(),
            biases: [b.data[0], b.data[1], b.data[2]],
            class_regularizers: [c.data[0], c.data[1], c.data[2]],
            global_c: a.scalar(&format!("{prefix}global_c"))?,
        })
    }

    pub fn from_artifact(a: &Artifact) -> Result<Self> {
        a.expect_kind(ModelKind::Svm)?;
        Self::read_tensors(a, "")
    }
}

/// Minibatch SGD on each machine's primal hinge objective
/// (λ_c/2)‖w‖² + (1/n)Σ max(0, 1 − y(wᵀx + b)) with λ_c = 1/(C_c·n),
/// which has the same minimizer as ½‖w‖² + C_c Σ ξ. The bias is not
/// regularized and the shrink factor is clipped at zero.
pub fn svm_train_rows<R: Rows + ?Sized>(rows: &R, labels: &[Label], cfg: &SvmConfig, rng: &mut Rng) -> Result<SvmModel> {
    cfg.validate()?;
    let n = rows.len();
    let dim = rows.dim();
    if n == 0 {
        return Err(Error::Empty("SVM training set"));
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: labels.len() });
    }
    let weighting = ClassWeighting::from_labels(labels, cfg.class_weighting);
    let regs = weighting.regularizers(cfg.c);
    let lambdas = regs.map(|c| 1.0 / (c * n as f64));

    let mut model = SvmModel {
        class_regularizers: regs,
        global_c: cfg.c,
        ..SvmModel::zeros(dim)
    };
    let mut order: Vec<usize> = (0..n).collect();
    let mut xb = vec![0.0; cfg.batch_size * dim];
    let mut gw = vec![0.0; 3 * dim];
    let mut step = 0u64;

    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        for idx in order.chunks(cfg.batch_size) {
            let eta = cfg.learning_rate / (1.0 + cfg.decay * step as f64);
            step += 1;
            gw.iter_mut().for_each(|g| *g = 0.0);
            let mut gb = [0.0; 3];
            for (slot, &i) in idx.iter().enumerate() {
                let x = &mut xb[slot * dim..(slot + 1) * dim];
                rows.row_into(i, x);
                let v = model.decision_values_unchecked(x);
                let truth = labels[i].class_index();
                for c in 0..3 {
                    let y = if c == truth { 1.0 } else { -1.0 };
                    if y * v[c] < 1.0 {
                        for (g, xv) in gw[c * dim..(c + 1) * dim].iter_mut().zip(x.iter()) {
                            *g -= y * xv;
                        }
                        gb[c] -= y;
                    }
                }
            }
            let inv_b = 1.0 / idx.len() as f64;
            for c in 0..3 {
                let shrink = 1.0 - (eta * lambdas[c]).min(1.0);
                for (w, g) in model.weights[c * dim..(c + 1) * dim].iter_mut().zip(&gw[c * dim..(c + 1) * dim]) {
                    *w = shrink * *w - eta * g * inv_b;
                }
                model.biases[c] -= eta * gb[c] * inv_b;
            }
        }
        if !model.weights.iter().chain(&model.biases).all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!("SVM parameters after epoch {epoch}")));
        }
    }
    Ok(model)
}

pub fn svm_train(x: &[f64], dim: usize, labels: &[Label], cfg: &SvmConfig, rng: &mut Rng) -> Result<SvmModel> {
    svm_train_rows(&super::DenseRows::new(x, dim)?, labels, cfg, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::testing::blobs;
    use crate::seed;

    #[test]
    fn argmax_and_ties() {
        let m = SvmModel {
            biases: [-1.0, -1.0, 2.0],
            ..SvmModel::zeros(2)
        };
        assert_eq!(m.predict(&[0.0, 0.0]).unwrap(), Label::Up);
        assert_eq!(m.decision_values(&[0.0, 0.0]).unwrap(), [-1.0, -1.0, 2.0]);
        let tie = SvmModel {
            biases: [0.5, 0.5, 0.5],
            ..SvmModel::zeros(2)
        };
        assert_eq!(tie.predict(&[0.0, 0.0]).unwrap(), Label::Down);
        let tie = SvmModel {
            biases: [0.0, 0.5, 0.5],
            ..SvmModel::zeros(2)
        };
        assert_eq!(tie.predict(&[0.0, 0.0]).unwrap(), Label::Flat);
        assert!(m.predict(&[0.0]).is_err());
    }

    #[test]
    fn separable_blobs_are_learned() {
        let (x, y) = blobs(600, 1);
        let m = svm_train(&x, 2, &y, &SvmConfig { c: 0.1, ..Default::default() }, &mut seed::rng(1, "svm")).unwrap();
        let hits = x.chunks(2).zip(&y).filter(|(r, l)| m.predict(r).unwrap() == **l).count();
        assert!(hits as f64 / y.len() as f64 >= 0.99);
    }

    #[test]
    fn deterministic_given_seed_and_round_trips() {
        let (x, y) = blobs(90, 2);
        let cfg = SvmConfig::default();
        let a = svm_train(&x, 2, &y, &cfg, &mut seed::rng(2, "svm")).unwrap();
        let b = svm_train(&x, 2, &y, &cfg, &mut seed::rng(2, "svm")).unwrap();
        assert_eq!(a, b);
        let back = SvmModel::from_artifact(&a.to_artifact()).unwrap();
        assert_eq!(a, back);
    }
}

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::artifact::{Artifact, ModelKind};
use crate::labeling::Label;
use crate::nn::{softmax, weighted_cross_entropy, Activation, Adam, AdamParams, Gradients, Network};
use crate::seed::Rng;
use crate::{Error, Result};

use super::argmax3;
use super::weighting::ClassWeighting;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub class_weighting: bool,
}

impl Default for MlpConfig {
    fn default() -> Self {
        let a = AdamParams::default();
        MlpConfig {
            hidden: vec![512, 512],
            epochs: 20,
            batch_size: 256,
            learning_rate: a.lr,
            beta1: a.beta1,
            beta2: a.beta2,
            eps: a.eps,
            class_weighting: true,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::InvalidParam("MLP needs at least one non-empty hidden layer".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 || !(self.learning_rate > 0.0) {
            return Err(Error::InvalidParam("MLP epochs, batch size and learning rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.eps > 0.0) {
            return Err(Error::InvalidParam("ADAM needs β1, β2 in [0, 1) and ε > 0".into()));
        }
        Ok(())
    }

    fn adam(&self) -> AdamParams {
        AdamParams {
            lr: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub net: Network,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct MlpTrainReport {
    pub samples: usize,
    pub class_weights: [f64; 3],
    pub initial_loss: f64,
    /// Mean minibatch loss per epoch.
    pub epoch_losses: Vec<f64>,
}

impl MlpModel {
    pub fn new(dim: usize, hidden: &[usize], rng: &mut Rng) -> Result<Self> {
        let mut sizes = vec![dim];
        sizes.extend_from_slice(hidden);
        sizes.push(3);
        let mut acts = vec![Activation::Relu; hidden.len()];
        acts.push(Activation::Identity);
        Ok(MlpModel {
            net: Network::new(&sizes, &acts, rng)?,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(self.net.forward_row(x, &mut Default::default()))
    }

    pub fn probabilities(&self, x: &[f64]) -> Result<[f64; 3]> {
        let p = softmax(&self.logits(x)?);
        Ok([p[0], p[1], p[2]])
    }

    pub fn predict(&self, x: &[f64]) -> Result<(Label, [f64; 3])> {
        let p = self.probabilities(x)?;
        Ok((Label::from_class_index(argmax3(p)), p))
    }

    /// Softmax outputs for row-major `data` through the batched path.
    pub fn probabilities_batch(&self, data: &[f64]) -> Vec<[f64; 3]> {
        let d = self.input_dim();
        let mut out = Vec::with_capacity(data.len() / d);
        for chunk in data.chunks(1024 * d) {
            let c = self.net.forward(chunk, chunk.len() / d);
            for row in c.output().chunks_exact(3) {
                let p = softmax(row);
                out.push([p[0], p[1], p[2]]);
            }
        }
        out
    }

    pub fn to_artifact(&self) -> Artifact {
        let mut a = Artifact::new(ModelKind::Mlp);
        self.net.write_tensors(&mut a, "");
        a
    }

    pub fn from_artifact(a: &Artifact) -> Result<Self> {
        a.expect_kind(ModelKind::Mlp)?;
        let net = Network::read_tensors(a, "")?;
        if net.output_dim() != 3 {
            return Err(Error::Format("MLP output layer must have 3 units".into()));
        }
        Ok(MlpModel { net })
    }
}

/// Class-weighted cross-entropy of the model over row-major `data`.
pub fn mlp_loss(model: &MlpModel, data: &[f64], labels: &[Label], weights: &[f64; 3]) -> f64 {
    let d = model.input_dim();
    let targets: Vec<usize> = labels.iter().map(|l| l.class_index()).collect();
    let c = model.net.forward(data, data.len() / d);
    weighted_cross_entropy(c.output(), 3, &targets, weights).0
}

pub fn mlp_train(x: &[f64], dim: usize, labels: &[Label], cfg: &MlpConfig, rng: &mut Rng) -> Result<(MlpModel, MlpTrainReport)> {
    cfg.validate()?;
    if dim == 0 || x.len() % dim != 0 {
        return Err(Error::InvalidParam(format!("data length {} is not a multiple of dim {dim}", x.len())));
    }
    let n = x.len() / dim;
    if n == 0 {
        return Err(Error::Empty("MLP training set"));
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: labels.len() });
    }
    let weights = ClassWeighting::from_labels(labels, cfg.class_weighting).factors();
    let mut model = MlpModel::new(dim, &cfg.hidden, rng)?;
    let mut opt = Adam::new(&model.net, cfg.adam());
    let mut grads = Gradients::zeros_like(&model.net);
    let mut report = MlpTrainReport {
        samples: n,
        class_weights: weights,
        initial_loss: f64::NAN,
        ..Default::default()
    };

    let mut order: Vec<usize> = (0..n).collect();
    let mut xb = Vec::with_capacity(cfg.batch_size * dim);
    let mut tb = Vec::with_capacity(cfg.batch_size);
    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        for idx in order.chunks(cfg.batch_size) {
            xb.clear();
            tb.clear();
            for &i in idx {
                xb.extend_from_slice(&x[i * dim..(i + 1) * dim]);
                tb.push(labels[i].class_index());
            }
            let cache = model.net.forward(&xb, idx.len());
            let (loss, d) = weighted_cross_entropy(cache.output(), 3, &tb, &weights);
            if report.initial_loss.is_nan() {
                report.initial_loss = loss;
            }
            if !loss.is_finite() {
                return Err(Error::Divergence(format!("MLP epoch {epoch}: non-finite minibatch loss")));
            }
            total += loss * idx.len() as f64;
            model.net.backward(&cache, d, &mut grads);
            opt.step(&mut model.net, &grads)?;
        }
        let mean = total / n as f64;
        if mean > report.initial_loss * 10.0 {
            return Err(Error::Divergence(format!(
                "MLP epoch {epoch}: loss {mean:e} against initial {:e}",
                report.initial_loss
            )));
        }
        log::debug!("mlp epoch {epoch}: loss {mean:.6}");
        report.epoch_losses.push(mean);
    }
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::testing::blobs;
    use crate::nn::{numeric_gradient, relative_error};
    use crate::seed;
    use rand::Rng as _;

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = seed::rng(7, "mlp");
        let mut m = MlpModel::new(5, &[4, 4], &mut rng).unwrap();
        let x: Vec<f64> = (0..5 * 6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let labels: Vec<Label> = (0..6).map(|i| Label::ALL[i % 3]).collect();
        let w = [0.5, 2.0, 1.25];
        let t: Vec<usize> = labels.iter().map(|l| l.class_index()).collect();
        let c = m.net.forward(&x, 6);
        let (_, d) = weighted_cross_entropy(c.output(), 3, &t, &w);
        let mut g = Gradients::zeros_like(&m.net);
        m.net.backward(&c, d, &mut g);
        let p = m.net.flat_params();
        let num = numeric_gradient(&p, 1e-6, |p| {
            m.net.set_flat_params(p).unwrap();
            mlp_loss(&m, &x, &labels, &w)
        });
        assert!(relative_error(&g.flat(), &num) < 1e-5);
    }

    #[test]
    fn probabilities_are_a_simplex() {
        let m = MlpModel::new(4, &[8], &mut seed::rng(1, "m")).unwrap();
        let (_, p) = m.predict(&[1.0, -2.0, 0.5, 3.0]).unwrap();
        assert!(p.iter().all(|v| *v >= 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(m.predict(&[1.0]).is_err());
    }

    #[test]
    fn learns_blobs_deterministically() {
        let (x, y) = blobs(300, 3);
        let cfg = MlpConfig {
            hidden: vec![16, 16],
            epochs: 30,
            batch_size: 32,
            learning_rate: 0.01,
            ..Default::default()
        };
        let (a, rep) = mlp_train(&x, 2, &y, &cfg, &mut seed::rng(3, "mlp")).unwrap();
        let hits = x.chunks(2).zip(&y).filter(|(r, l)| a.predict(r).unwrap().0 == **l).count();
        assert!(hits as f64 / y.len() as f64 >= 0.99);
        assert!(rep.epoch_losses.last().unwrap() < &rep.epoch_losses[0]);
        let (b, _) = mlp_train(&x, 2, &y, &cfg, &mut seed::rng(3, "mlp")).unwrap();
        assert_eq!(a, b);
        let mut buf = Vec::new();
        a.to_artifact().write_to(&mut buf).unwrap();
        assert_eq!(MlpModel::from_artifact(&Artifact::read_from(&buf[..]).unwrap()).unwrap(), a);
    }
}

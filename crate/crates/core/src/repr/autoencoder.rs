use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::artifact::{Artifact, ModelKind};
use crate::nn::{squared_error, Activation, Gradients, Network, SgdMomentum};
use crate::seed::Rng;
use crate::{Error, Result};

use super::subsample_rows;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutoencoderConfig {
    pub layer_sizes: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Relative improvement below which an epoch counts as a plateau.
    pub plateau_tolerance: f64,
    pub max_samples: usize,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        AutoencoderConfig {
            layer_sizes: vec![144, 72, 24, 72, 144],
            epochs: 20,
            batch_size: 256,
            learning_rate: 0.01,
            momentum: 0.9,
            plateau_tolerance: 1e-4,
            max_samples: 100_000,
        }
    }
}

impl AutoencoderConfig {
    pub fn validate(&self) -> Result<()> {
        let s = &self.layer_sizes;
        if s.len() < 3 || s.len() % 2 == 0 {
            return Err(Error::InvalidParam("autoencoder needs an odd number (≥ 3) of layer sizes".into()));
        }
        if s.iter().ne(s.iter().rev()) {
            return Err(Error::InvalidParam(format!("autoencoder layers {s:?} are not mirror-symmetric")));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.max_samples == 0 {
            return Err(Error::InvalidParam("autoencoder epochs, batch size and sample cap must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidParam("autoencoder learning rate must be > 0 and momentum in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderModel {
    pub net: Network,
    /// Number of layers from the input up to and including the code layer.
    pub code_layer: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct AeTrainReport {
    pub samples: usize,
    pub initial_loss: f64,
    /// Mean reconstruction loss of the kept parameters after each epoch.
    pub epoch_losses: Vec<f64>,
    pub learning_rates: Vec<f64>,
}

fn activations(layers: usize) -> Vec<Activation> {
    let mut a = vec![Activation::Tanh; layers];
    a[layers - 1] = Activation::Identity;
    a
}

impl AutoencoderModel {
    pub fn new(sizes: &[usize], rng: &mut Rng) -> Result<Self> {
        let net = Network::new(sizes, &activations(sizes.len() - 1), rng)?;
        Ok(AutoencoderModel {
            net,
            code_layer: sizes.len() / 2,
        })
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        let net = Network::zeros(sizes, &activations(sizes.len() - 1))?;
        Ok(AutoencoderModel {
            net,
            code_layer: sizes.len() / 2,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn code_dim(&self) -> usize {
        self.net.layers[self.code_layer - 1].outputs
    }

    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(self.net.forward_row_partial(x, self.code_layer, &mut Default::default()))
    }

    /// Encode row-major `data` in chunks through the batched path.
    pub fn encode_batch(&self, data: &[f64]) -> Vec<f64> {
        let d = self.input_dim();
        let mut out = Vec::with_capacity(data.len() / d * self.code_dim());
        for chunk in data.chunks(4096 * d) {
            let c = self.net.forward_partial(chunk, chunk.len() / d, self.code_layer);
            out.extend_from_slice(c.output());
        }
        out
    }

    pub fn reconstruct(&self, x: &[f64]) -> Vec<f64> {
        self.net.forward_row(x, &mut Default::default())
    }

    /// Mean over rows of ‖x − x̂‖².
    pub fn loss(&self, data: &[f64]) -> f64 {
        let d = self.input_dim();
        let n = data.len() / d;
        let mut total = 0.0;
        for chunk in data.chunks(4096 * d) {
            let b = chunk.len() / d;
            let c = self.net.forward(chunk, b);
            total += squared_error(c.output(), chunk, b).0 * b as f64;
        }
        total / n as f64
    }

    pub fn to_artifact(&self) -> Artifact {
        let mut a = Artifact::new(ModelKind::Autoencoder);
        a.push_scalar("code_layer", self.code_layer as f64);
        self.net.write_tensors(&mut a, "");
        a
    }

    pub fn from_artifact(a: &Artifact) -> Result<Self> {
        a.expect_kind(ModelKind::Autoencoder)?;
        let net = Network::read_tensors(a, "")?;
        let code_layer = a.scalar("code_layer")? as usize;
        if code_layer == 0 || code_layer > net.layers.len() {
            return Err(Error::Format(format!("code layer {code_layer} out of range")));
        }
        Ok(AutoencoderModel { net, code_layer })
    }
}

/// Train on row-major `data` (`dim` columns) with minibatch SGD + momentum.
///
/// An epoch whose loss fails to improve by the plateau tolerance halves the
/// learning rate; an epoch that makes the loss worse is rolled back.
pub fn ae_train(data: &[f64], dim: usize, cfg: &AutoencoderConfig, rng: &mut Rng) -> Result<(AutoencoderModel, AeTrainReport)> {
    cfg.validate()?;
    if cfg.layer_sizes[0] != dim {
        return Err(Error::DimensionMismatch {
            expected: cfg.layer_sizes[0],
            got: dim,
        });
    }
    if data.is_empty() {
        return Err(Error::Empty("autoencoder training set"));
    }
    let train = subsample_rows(data, dim, cfg.max_samples, rng);
    let n = train.len() / dim;

    let mut model = AutoencoderModel::new(&cfg.layer_sizes, rng)?;
    let initial = model.loss(&train);
    if !initial.is_finite() {
        return Err(Error::NonFinite("initial reconstruction loss".into()));
    }
    let mut report = AeTrainReport {
        samples: n,
        initial_loss: initial,
        ..Default::default()
    };

    let mut opt = SgdMomentum::new(&model.net, cfg.learning_rate, cfg.momentum);
    let mut grads = Gradients::zeros_like(&model.net);
    let mut order: Vec<usize> = (0..n).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size * dim);
    let mut best = initial;
    let mut best_net = model.net.clone();

    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        for idx in order.chunks(cfg.batch_size) {
            batch.clear();
            for &i in idx {
                batch.extend_from_slice(&train[i * dim..(i + 1) * dim]);
            }
            let cache = model.net.forward(&batch, idx.len());
            let (_, d) = squared_error(cache.output(), &batch, idx.len());
            model.net.backward(&cache, d, &mut grads);
            opt.step(&mut model.net, &grads)?;
        }
        let loss = model.loss(&train);
        if !loss.is_finite() || loss > initial * 10.0 {
            return Err(Error::Divergence(format!(
                "autoencoder epoch {epoch}: loss {loss:e} against initial {initial:e} (lr {})",
                opt.lr
            )));
        }
        if loss > best {
            model.net = best_net.clone();
            opt = SgdMomentum::new(&model.net, opt.lr * 0.5, cfg.momentum);
        } else {
            if loss > best * (1.0 - cfg.plateau_tolerance) {
                opt.lr *= 0.5;
            }
            best = loss;
            best_net = model.net.clone();
        }
        log::debug!("ae epoch {epoch}: loss {loss:.6} kept {best:.6} lr {}", opt.lr);
        report.epoch_losses.push(best);
        report.learning_rates.push(opt.lr);
    }
    Ok((model, report))
}

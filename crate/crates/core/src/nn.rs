//! Fully connected feed-forward networks shared by the autoencoder and the
//! MLP classifier: batched forward/backward through GEMM, a single-row
//! forward for latency-sensitive prediction, and the two optimizers.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::artifact::Artifact;
use crate::linalg::{dot, gemm_nn, gemm_nt, gemm_tn};
use crate::seed::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
}

impl Activation {
    pub fn code(self) -> u32 {
        match self {
            Activation::Identity => 0,
            Activation::Tanh => 1,
            Activation::Relu => 2,
        }
    }

    pub fn from_code(c: u32) -> Option<Self> {
        match c {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Tanh),
            2 => Some(Activation::Relu),
            _ => None,
        }
    }

    #[inline]
    fn apply(self, z: &mut [f64]) {
        match self {
            Activation::Identity => {}
            Activation::Tanh => z.iter_mut().for_each(|v| *v = v.tanh()),
            Activation::Relu => z.iter_mut().for_each(|v| *v = v.max(0.0)),
        }
    }

    /// Multiply `grad` in place by s'(z), expressed through the output a = s(z).
    #[inline]
    fn backprop(self, a: &[f64], grad: &mut [f64]) {
        match self {
            Activation::Identity => {}
            Activation::Tanh => grad.iter_mut().zip(a).for_each(|(g, a)| *g *= 1.0 - a * a),
            Activation::Relu => grad.iter_mut().zip(a).for_each(|(g, a)| {
                if *a <= 0.0 {
                    *g = 0.0
                }
            }),
        }
    }
}

/// One affine layer followed by an activation. `weights` is `outputs × inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layers: Vec<Dense>,
}

/// Per-layer outputs of a batched forward pass; `acts[0]` is the input.
pub struct ForwardCache {
    pub batch: usize,
    pub acts: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("at least the input")
    }
}

/// Gradients with the same shapes as the network parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Gradients {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.bias) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }

    fn all_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|t| t.iter().all(|v| v.is_finite()))
    }
}

impl Network {
    /// Glorot-uniform weights, zero biases.
    pub fn new(sizes: &[usize], activations: &[Activation], rng: &mut Rng) -> Result<Self> {
        let mut net = Self::zeros(sizes, activations)?;
        for l in &mut net.layers {
            let limit = (6.0 / (l.inputs + l.outputs) as f64).sqrt();
            for w in &mut l.weights {
                *w = rng.gen_range(-limit..=limit);
            }
        }
        Ok(net)
    }

    pub fn zeros(sizes: &[usize], activations: &[Activation]) -> Result<Self> {
        if sizes.len() < 2 || activations.len() != sizes.len() - 1 {
            return Err(Error::InvalidParam(format!(
                "{} layer sizes need {} activations, got {}",
                sizes.len(),
                sizes.len().saturating_sub(1),
                activations.len()
            )));
        }
        if sizes.contains(&0) {
            return Err(Error::InvalidParam("layer size 0".into()));
        }
        let layers = sizes
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| Dense {
                inputs: w[0],
                outputs: w[1],
                weights: vec![0.0; w[0] * w[1]],
                bias: vec![0.0; w[1]],
                activation,
            })
            .collect();
        Ok(Network { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.outputs).unwrap_or(0)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Parameters in layer order, weights before bias.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_flat_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                got: p.len(),
            });
        }
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&p[off..off + nw]);
            off += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&p[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    /// Batched forward through the first `upto` layers. `x` is `batch × input_dim`.
    pub fn forward_partial(&self, x: &[f64], batch: usize, upto: usize) -> ForwardCache {
        assert_eq!(x.len(), batch * self.input_dim());
        let mut acts = Vec::with_capacity(upto + 1);
        acts.push(x.to_vec());
        for l in &self.layers[..upto] {
            let prev = acts.last().unwrap();
            let mut z = Vec::with_capacity(batch * l.outputs);
            for _ in 0..batch {
                z.extend_from_slice(&l.bias);
            }
            gemm_nt(batch, l.inputs, l.outputs, prev, &l.weights, 1.0, &mut z);
            l.activation.apply(&mut z);
            acts.push(z);
        }
        ForwardCache { batch, acts }
    }

    pub fn forward(&self, x: &[f64], batch: usize) -> ForwardCache {
        self.forward_partial(x, batch, self.layers.len())
    }

    /// Output of the first `upto` layers for one row, without touching GEMM.
    pub fn forward_row_partial(&self, x: &[f64], upto: usize, scratch: &mut [Vec<f64>; 2]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.input_dim());
        let [a, b] = scratch;
        a.clear();
        a.extend_from_slice(x);
        for l in &self.layers[..upto] {
            b.clear();
            for (o, row) in l.weights.chunks_exact(l.inputs).enumerate() {
                b.push(dot(row, a) + l.bias[o]);
            }
            l.activation.apply(b);
            std::mem::swap(a, b);
        }
        a.clone()
    }

    pub fn forward_row(&self, x: &[f64], scratch: &mut [Vec<f64>; 2]) -> Vec<f64> {
        self.forward_row_partial(x, self.layers.len(), scratch)
    }

    /// Backpropagate `d_out` (dL/d output, `batch × output_dim`) through the
    /// cached pass, overwriting `grads`.
    pub fn backward(&self, cache: &ForwardCache, d_out: Vec<f64>, grads: &mut Gradients) {
        let batch = cache.batch;
        let mut delta = d_out;
        for (li, l) in self.layers.iter().enumerate().rev() {
            let out = &cache.acts[li + 1];
            let input = &cache.acts[li];
            l.activation.backprop(out, &mut delta);
            // dW (outputs × inputs) = deltaᵀ · input
            gemm_tn(l.outputs, batch, l.inputs, &delta, input, 0.0, &mut grads.weights[li]);
            let gb = &mut grads.bias[li];
            gb.iter_mut().for_each(|v| *v = 0.0);
            for row in delta.chunks_exact(l.outputs) {
                for (g, d) in gb.iter_mut().zip(row) {
                    *g += d;
                }
            }
            if li > 0 {
                let mut next = vec![0.0; batch * l.inputs];
                gemm_nn(batch, l.outputs, l.inputs, &delta, &l.weights, 0.0, &mut next);
                delta = next;
            }
        }
    }
}

impl Network {
    /// Append this network's tensors to `art` under `prefix`.
    pub fn write_tensors(&self, art: &mut Artifact, prefix: &str) {
        let sizes = self.sizes();
        art.push(&format!("{prefix}sizes"), &[sizes.len()], sizes.iter().map(|&s| s as f64).collect());
        let acts = self.layers.iter().map(|l| f64::from(l.activation.code())).collect();
        art.push(&format!("{prefix}activations"), &[self.layers.len()], acts);
        for (i, l) in self.layers.iter().enumerate() {
            art.push(&format!("{prefix}w{i}"), &[l.outputs, l.inputs], l.weights.clone());
            art.push(&format!("{prefix}b{i}"), &[l.outputs], l.bias.clone());
        }
    }

    pub fn read_tensors(art: &Artifact, prefix: &str) -> Result<Self> {
        let sizes: Vec<usize> = art.get(&format!("{prefix}sizes"))?.data.iter().map(|&v| v as usize).collect();
        let acts = art
            .get(&format!("{prefix}activations"))?
            .data
            .iter()
            .map(|&v| Activation::from_code(v as u32).ok_or_else(|| Error::Format(format!("unknown activation code {v}"))))
            .collect::<Result<Vec<_>>>()?;
        let mut net = Network::zeros(&sizes, &acts).map_err(|e| Error::Format(e.to_string()))?;
        for (i, l) in net.layers.iter_mut().enumerate() {
            let w = art.get(&format!("{prefix}w{i}"))?;
            let b = art.get(&format!("{prefix}b{i}"))?;
            if w.data.len() != l.weights.len() || b.data.len() != l.bias.len() {
                return Err(Error::Format(format!("layer {i} shape does not match the size table")));
            }
            l.weights.copy_from_slice(&w.data);
            l.bias.copy_from_slice(&b.data);
        }
        Ok(net)
    }
}

/// Mean over the batch of ‖x − y‖²; returns the loss and dL/dy.
pub fn squared_error(y: &[f64], target: &[f64], batch: usize) -> (f64, Vec<f64>) {
    debug_assert_eq!(y.len(), target.len());
    let scale = 1.0 / batch as f64;
    let mut loss = 0.0;
    let grad = y
        .iter()
        .zip(target)
        .map(|(a, b)| {
            let d = a - b;
            loss += d * d;
            2.0 * d * scale
        })
        .collect();
    (loss * scale, grad)
}

/// Numerically stable softmax of one logit row.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Class-weighted categorical cross-entropy averaged over the batch.
/// `logits` is `batch × classes`; returns the loss and dL/dlogits.
pub fn weighted_cross_entropy(logits: &[f64], classes: usize, targets: &[usize], weights: &[f64]) -> (f64, Vec<f64>) {
    let batch = targets.len();
    debug_assert_eq!(logits.len(), batch * classes);
    let scale = 1.0 / batch as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; logits.len()];
    for (i, (row, &t)) in logits.chunks_exact(classes).zip(targets).enumerate() {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + row.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
        let w = weights[t];
        loss += w * (lse - row[t]);
        let g = &mut grad[i * classes..(i + 1) * classes];
        for (c, (gc, z)) in g.iter_mut().zip(row).enumerate() {
            let p = (z - lse).exp();
            *gc = w * scale * (p - if c == t { 1.0 } else { 0.0 });
        }
    }
    (loss * scale, grad)
}

fn check_grads(g: &Gradients) -> Result<()> {
    if g.all_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("gradient".into()))
    }
}

/// SGD with classical momentum.
pub struct SgdMomentum {
    pub lr: f64,
    pub momentum: f64,
    velocity: Gradients,
}

impl SgdMomentum {
    pub fn new(net: &Network, lr: f64, momentum: f64) -> Self {
        SgdMomentum {
            lr,
            momentum,
            velocity: Gradients::zeros_like(net),
        }
    }

    pub fn step(&mut self, net: &mut Network, g: &Gradients) -> Result<()> {
        check_grads(g)?;
        for (li, l) in net.layers.iter_mut().enumerate() {
            for (p, (v, d)) in [
                (&mut l.weights, (&mut self.velocity.weights[li], &g.weights[li])),
                (&mut l.bias, (&mut self.velocity.bias[li], &g.bias[li])),
            ] {
                for ((p, v), d) in p.iter_mut().zip(v.iter_mut()).zip(d) {
                    *v = self.momentum * *v - self.lr * d;
                    *p += *v;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

pub struct Adam {
    pub params: AdamParams,
    t: i32,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    pub fn new(net: &Network, params: AdamParams) -> Self {
        Adam {
            params,
            t: 0,
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
        }
    }

    pub fn step(&mut self, net: &mut Network, g: &Gradients) -> Result<()> {
        check_grads(g)?;
        self.t += 1;
        let AdamParams { lr, beta1, beta2, eps } = self.params;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        for (li, l) in net.layers.iter_mut().enumerate() {
            for (p, m, v, d) in [
                (&mut l.weights, &mut self.m.weights[li], &mut self.v.weights[li], &g.weights[li]),
                (&mut l.bias, &mut self.m.bias[li], &mut self.v.bias[li], &g.bias[li]),
            ] {
                for i in 0..p.len() {
                    m[i] = beta1 * m[i] + (1.0 - beta1) * d[i];
                    v[i] = beta2 * v[i] + (1.0 - beta2) * d[i] * d[i];
                    p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
                }
            }
        }
        Ok(())
    }
}

/// Relative error ‖a − b‖ / max(‖a‖, ‖b‖), 0 when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let den = na.max(nb);
    if den == 0.0 {
        0.0
    } else {
        diff / den
    }
}

/// Central finite-difference gradient of `loss` at `params`.
pub fn numeric_gradient(params: &[f64], step: f64, mut loss: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + step;
            let up = loss(&p);
            p[i] = orig - step;
            let down = loss(&p);
            p[i] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn toy(sizes: &[usize], acts: &[Activation], seed_name: &str) -> Network {
        Network::new(sizes, acts, &mut seed::rng(3, seed_name)).unwrap()
    }

    fn batch(rows: usize, dim: usize, rng: &mut Rng) -> Vec<f64> {
        (0..rows * dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Network::zeros(&[6, 4, 2, 4, 6], &[Activation::Tanh, Activation::Tanh, Activation::Tanh, Activation::Identity]).unwrap();
        let x = [1.0, -2.0, 0.5, 3.0, 0.0, 1.0];
        let y = net.forward(&x, 1);
        assert!(y.output().iter().all(|v| *v == 0.0));
        let (loss, _) = squared_error(y.output(), &x, 1);
        let norm: f64 = x.iter().map(|v| v * v).sum();
        assert_eq!(loss, norm);
    }

    #[test]
    fn row_and_batch_paths_agree() {
        let net = toy(&[7, 9, 3], &[Activation::Relu, Activation::Identity], "rows");
        let mut rng = seed::rng(1, "x");
        let x = batch(5, 7, &mut rng);
        let cache = net.forward(&x, 5);
        let mut scratch = Default::default();
        for r in 0..5 {
            let y = net.forward_row(&x[r * 7..(r + 1) * 7], &mut scratch);
            for (a, b) in y.iter().zip(&cache.output()[r * 3..(r + 1) * 3]) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn squared_error_gradient_matches_finite_differences() {
        let acts = [Activation::Tanh, Activation::Tanh, Activation::Tanh, Activation::Identity];
        let mut net = toy(&[6, 4, 2, 4, 6], &acts, "ae");
        let mut rng = seed::rng(2, "x");
        let x = batch(4, 6, &mut rng);
        let cache = net.forward(&x, 4);
        let (_, d) = squared_error(cache.output(), &x, 4);
        let mut g = Gradients::zeros_like(&net);
        net.backward(&cache, d, &mut g);
        let p0 = net.flat_params();
        let num = numeric_gradient(&p0, 1e-6, |p| {
            net.set_flat_params(p).unwrap();
            squared_error(net.forward(&x, 4).output(), &x, 4).0
        });
        assert!(relative_error(&g.flat(), &num) < 1e-6);
    }

    #[test]
    fn cross_entropy_closed_forms() {
        let (l, _) = weighted_cross_entropy(&[0.0, 0.0, 0.0], 3, &[1], &[1.0; 3]);
        assert!((l - 3f64.ln()).abs() < 1e-15);
        let (l, _) = weighted_cross_entropy(&[1e3, -1e3, 0.0], 3, &[0], &[1.0; 3]);
        assert!(l.is_finite() && l < 1e-300);
        let (l, _) = weighted_cross_entropy(&[-1e3, 1e3, 0.0], 3, &[0], &[1.0; 3]);
        assert!((l - 2e3).abs() < 1e-9);
    }

    #[test]
    fn softmax_properties() {
        let p = softmax(&[2.0, 2.0, 2.0]);
        assert!(p.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
        let a = softmax(&[0.3, -1.0, 2.0]);
        let b = softmax(&[100.3, 99.0, 102.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        let p = softmax(&[10.0, 0.0, 0.0]);
        assert!(p[0] > 0.9999);
    }

    #[test]
    fn adam_and_sgd_reduce_a_quadratic() {
        let acts = [Activation::Identity];
        let mut net = Network::zeros(&[2, 1], &acts).unwrap();
        let x = [1.0, 2.0, -1.0, 0.5];
        let y = [3.0, -1.0];
        let mut adam = Adam::new(&net, AdamParams { lr: 0.05, ..Default::default() });
        let mut sgd_net = net.clone();
        let mut sgd = SgdMomentum::new(&sgd_net, 0.05, 0.9);
        let mut g = Gradients::zeros_like(&net);
        for _ in 0..500 {
            let c = net.forward(&x, 2);
            let (_, d) = squared_error(c.output(), &y, 2);
            net.backward(&c, d, &mut g);
            adam.step(&mut net, &g).unwrap();
            let c = sgd_net.forward(&x, 2);
            let (_, d) = squared_error(c.output(), &y, 2);
            sgd_net.backward(&c, d, &mut g);
            sgd.step(&mut sgd_net, &g).unwrap();
        }
        assert!(squared_error(net.forward(&x, 2).output(), &y, 2).0 < 1e-4);
        assert!(squared_error(sgd_net.forward(&x, 2).output(), &y, 2).0 < 1e-8);
    }
}

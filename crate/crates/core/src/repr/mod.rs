//! Unsupervised representations: the symmetric autoencoder code and the
//! fuzzy bag-of-features histogram over a k-means codebook.

mod autoencoder;
mod bof;
mod kmeans;

pub use autoencoder::{ae_train, AeTrainReport, AutoencoderConfig, AutoencoderModel};
pub use bof::{bof_encode, bof_fit, entropy, BofCodebook, BofConfig, UNDERFLOW};
pub use kmeans::{kmeans_fit, KMeansConfig, KMeansFit};

use crate::seed::Rng;

/// Uniform subsample of at most `cap` rows, kept in original order.
pub fn subsample_rows(data: &[f64], dim: usize, cap: usize, rng: &mut Rng) -> Vec<f64> {
    let n = data.len() / dim;
    if n <= cap {
        return data.to_vec();
    }
    let mut idx = rand::seq::index::sample(rng, n, cap).into_vec();
    idx.sort_unstable();
    let mut out = Vec::with_capacity(cap * dim);
    for i in idx {
        out.extend_from_slice(&data[i * dim..(i + 1) * dim]);
    }
    out
}

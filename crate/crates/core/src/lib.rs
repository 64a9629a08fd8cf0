//! Mid-price direction forecasting from limit order book event streams.
//!
//! The crate covers the whole path from raw feed messages to evaluated
//! forecasts:
//!
//! - [`book`]: order book replay and ten-event block subsampling
//! - [`features`]: 144 handcrafted features, z-scoring, window representations
//! - [`labeling`]: smoothed mid-price direction labels
//! - [`repr`]: autoencoder codes and fuzzy bag-of-features histograms
//! - [`classifiers`]: class-weighted linear SVM, RBF-prototype SLFN, MLP
//! - [`eval`]: walk-forward / hold-out folds, macro metrics, rank tests
//! - [`synth`]: synthetic multi-stock event streams
//! - [`pipeline`]: experiment configuration, orchestration and audits
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod artifact;
pub mod book;
pub mod classifiers;
mod error;
pub mod eval;
pub mod features;
pub mod labeling;
pub mod linalg;
pub mod nn;
pub mod pipeline;
pub mod repr;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};

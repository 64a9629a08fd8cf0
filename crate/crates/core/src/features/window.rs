//! Sliding-window representations over five consecutive feature vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Window length in blocks.
pub const WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    /// Newest vector.
    Last,
    /// Element-wise mean of the window.
    Mean,
    /// Newest vector followed by the mean.
    LastMean,
    /// All five vectors, oldest first.
    Concat,
}

impl WindowKind {
    pub fn dim(self, base: usize) -> usize {
        match self {
            WindowKind::Last | WindowKind::Mean => base,
            WindowKind::LastMean => 2 * base,
            WindowKind::Concat => WINDOW * base,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowRepresentation {
    pub kind: WindowKind,
    pub values: Vec<f64>,
    pub window_end_index: usize,
}

/// Write the element-wise mean of `window` into `out`, summing oldest first.
pub fn window_mean_into(window: &[&[f64]], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for v in window {
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o += x;
        }
    }
    let n = window.len() as f64;
    out.iter_mut().for_each(|o| *o /= n);
}

/// Write the `kind` representation of `window` (oldest first) into `out`,
/// which must be `kind.dim(base)` long.
pub fn write_representation(kind: WindowKind, window: &[&[f64]], out: &mut [f64]) {
    let base = window[0].len();
    debug_assert_eq!(out.len(), kind.dim(base));
    let last = window[window.len() - 1];
    match kind {
        WindowKind::Last => out.copy_from_slice(last),
        WindowKind::Mean => window_mean_into(window, out),
        WindowKind::LastMean => {
            out[..base].copy_from_slice(last);
            window_mean_into(window, &mut out[base..]);
        }
        WindowKind::Concat => {
            for (chunk, v) in out.chunks_exact_mut(base).zip(window) {
                chunk.copy_from_slice(v);
            }
        }
    }
}

/// Build a representation from exactly [`WINDOW`] equal-length vectors.
pub fn make_representation(window: &[&[f64]], kind: WindowKind, window_end_index: usize) -> Result<WindowRepresentation> {
    if window.len() < WINDOW {
        return Err(Error::WarmUp {
            needed: WINDOW,
            available: window.len(),
        });
    }
    if window.len() > WINDOW {
        return Err(Error::InvalidParam(format!("window of {} vectors", window.len())));
    }
    let base = window[0].len();
    if let Some(bad) = window.iter().find(|v| v.len() != base) {
        return Err(Error::DimensionMismatch {
            expected: base,
            got: bad.len(),
        });
    }
    let mut values = vec![0.0; kind.dim(base)];
    write_representation(kind, window, &mut values);
    Ok(WindowRepresentation {
        kind,
        values,
        window_end_index,
    })
}

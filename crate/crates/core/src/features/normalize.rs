//! Element-wise z-score standardization.

use crate::error::{Error, Result};

/// Standard deviations below this are treated as constant dimensions.
pub const ZERO_VARIANCE: f64 = 1e-12;

/// Population mean and standard deviation per dimension, fitted on one
/// fold's training partition.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub fitted_on: String,
}

/// Fit mean and population standard deviation over `rows`.
pub fn zscore_fit<'a, I>(rows: I, fitted_on: impl Into<String>) -> Result<NormalizationStats>
where
    I: IntoIterator<Item = &'a [f64]>,
    I::IntoIter: Clone,
{
    let rows = rows.into_iter();
    let mut count = 0usize;
    let mut sum: Vec<f64> = Vec::new();
    for r in rows.clone() {
        if sum.is_empty() {
            sum = vec![0.0; r.len()];
        } else if r.len() != sum.len() {
            return Err(Error::DimensionMismatch {
                expected: sum.len(),
                got: r.len(),
            });
        }
        for (s, v) in sum.iter_mut().zip(r) {
            *s += v;
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::Empty("normalization training set"));
    }
    let n = count as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    // Second pass on centred values.
    let mut ss = vec![0.0; mean.len()];
    for r in rows {
        for ((acc, v), m) in ss.iter_mut().zip(r).zip(&mean) {
            let d = v - m;
            *acc += d * d;
        }
    }
    let std = ss.iter().map(|s| (s / n).sqrt()).collect();
    Ok(NormalizationStats {
        mean,
        std,
        fitted_on: fitted_on.into(),
    })
}

impl NormalizationStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Normalize `x` into `out`. Constant dimensions map to 0.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim());
        for (((o, v), m), s) in out.iter_mut().zip(x).zip(&self.mean).zip(&self.std) {
            *o = if *s < ZERO_VARIANCE { 0.0 } else { (v - m) / s };
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut out);
        Ok(out)
    }
}

/// Shorthand matching the fit/apply pair.
pub fn zscore_apply(stats: &NormalizationStats, x: &[f64]) -> Result<Vec<f64>> {
    stats.apply(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fit(rows: &[Vec<f64>]) -> NormalizationStats {
        zscore_fit(rows.iter().map(Vec::as_slice), "test").unwrap()
    }

    #[test]
    fn one_two_three() {
        let rows = vec![vec![1.0], vec![2.0], vec![3.0]];
        let st = fit(&rows);
        assert_eq!(st.mean[0], 2.0);
        // Population std: sqrt(2/3).
        assert!((st.std[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((st.std[0] - 0.8165).abs() < 1e-4);
        let out: Vec<f64> = rows.iter().map(|r| st.apply(r).unwrap()[0]).collect();
        assert!((out[0] + 1.224744871391589).abs() < 1e-12);
        assert_eq!(out[1], 0.0);
        assert!((out[2] - 1.224744871391589).abs() < 1e-12);
    }

    #[test]
    fn constant_dimension_maps_to_zero() {
        let rows = vec![vec![5.0, 1.0], vec![5.0, 2.0], vec![5.0, 3.0]];
        let st = fit(&rows);
        for r in &rows {
            assert_eq!(st.apply(r).unwrap()[0], 0.0);
        }
    }

    #[test]
    fn standardized_input_is_identity() {
        let rows = vec![vec![-1.0], vec![1.0]];
        let st = fit(&rows);
        assert_eq!(st.mean[0], 0.0);
        assert_eq!(st.std[0], 1.0);
        assert_eq!(st.apply(&[-1.0]).unwrap(), vec![-1.0]);
        assert_eq!(st.apply(&[0.37]).unwrap(), vec![0.37]);
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        let none: Vec<Vec<f64>> = vec![];
        assert!(zscore_fit(none.iter().map(Vec::as_slice), "x").is_err());
        let st = fit(&[vec![1.0, 2.0]]);
        assert!(matches!(st.apply(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    proptest! {
        #[test]
        fn refit_on_normalized_data_is_standard(
            rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 4), 3..60)
        ) {
            let st = fit(&rows);
            let normed: Vec<Vec<f64>> = rows.iter().map(|r| st.apply(r).unwrap()).collect();
            let again = fit(&normed);
            for d in 0..4 {
                if st.std[d] >= ZERO_VARIANCE * 1e3 {
                    prop_assert!(again.mean[d].abs() < 1e-9);
                    prop_assert!((again.std[d] - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}

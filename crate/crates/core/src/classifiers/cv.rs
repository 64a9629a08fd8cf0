use std::ops::Range;

use serde::Serialize;

use crate::eval::macro_metrics;
use crate::labeling::Label;
use crate::{Error, Result};

pub const DEFAULT_GRID: [f64; 5] = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1];
pub const CV_FOLDS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvOutcome {
    pub chosen: f64,
    /// (C, mean validation macro F) per grid value, ascending in C.
    pub scores: Vec<(f64, f64)>,
}

/// `k` contiguous validation blocks covering `0..n` in order.
pub fn contiguous_blocks(n: usize, k: usize) -> Vec<Range<usize>> {
    (0..k).map(|j| j * n / k..(j + 1) * n / k).collect()
}

/// Pick the C with the best mean validation macro F over three contiguous
/// folds. `fit_predict(train, validation, c)` trains on the rows in `train`
/// and returns predictions for `validation`. Ties go to the smaller C.
pub fn select_regularizer<F>(labels: &[Label], grid: &[f64], mut fit_predict: F) -> Result<CvOutcome>
where
    F: FnMut(&[usize], &[usize], f64) -> Result<Vec<Label>>,
{
    if grid.is_empty() {
        return Err(Error::InvalidParam("empty regularizer grid".into()));
    }
    if grid.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
        return Err(Error::InvalidParam(format!("regularizer grid {grid:?} must be positive")));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if sorted.len() == 1 {
        return Ok(CvOutcome {
            chosen: sorted[0],
            scores: vec![(sorted[0], f64::NAN)],
        });
    }
    let n = labels.len();
    if n < CV_FOLDS {
        return Err(Error::InvalidParam(format!("cross-validation needs ≥ {CV_FOLDS} rows, got {n}")));
    }
    let blocks = contiguous_blocks(n, CV_FOLDS);
    let mut scores = Vec::with_capacity(sorted.len());
    for &c in &sorted {
        let mut total = 0.0;
        for b in &blocks {
            let train: Vec<usize> = (0..n).filter(|i| !b.contains(i)).collect();
            let val: Vec<usize> = b.clone().collect();
            let pred = fit_predict(&train, &val, c)?;
            let truth: Vec<Label> = val.iter().map(|&i| labels[i]).collect();
            total += macro_metrics(&pred, &truth)?.macro_f;
        }
        scores.push((c, total / CV_FOLDS as f64));
    }
    let mut best = scores[0];
    for &s in &scores[1..] {
        if s.1 > best.1 {
            best = s;
        }
    }
    Ok(CvOutcome { chosen: best.0, scores })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value_grid_short_circuits() {
        let out = select_regularizer(&[Label::Up; 10], &[0.5], |_, _, _| panic!("no training needed")).unwrap();
        assert_eq!(out.chosen, 0.5);
    }

    #[test]
    fn ties_prefer_the_smaller_c() {
        let labels: Vec<Label> = (0..30).map(|i| Label::ALL[i % 3]).collect();
        let out = select_regularizer(&labels, &DEFAULT_GRID, |_, v, _| Ok(v.iter().map(|&i| labels[i]).collect())).unwrap();
        assert_eq!(out.chosen, 1e-5);
    }

    #[test]
    fn picks_the_best_scoring_value_with_contiguous_folds() {
        let labels: Vec<Label> = (0..30).map(|i| Label::ALL[i % 3]).collect();
        let mut seen = Vec::new();
        let out = select_regularizer(&labels, &[0.1, 0.001, 0.01], |t, v, c| {
            seen.push((t.len(), v.to_vec()));
            Ok(v.iter().map(|&i| if c == 0.01 { labels[i] } else { Label::Flat }).collect())
        })
        .unwrap();
        assert_eq!(out.chosen, 0.01);
        assert_eq!(seen[0].1, (0..10).collect::<Vec<_>>());
        assert_eq!(seen[1].1, (10..20).collect::<Vec<_>>());
        assert_eq!(seen[0].0, 20);
    }
}

//! Single-row latency and batched throughput of trained classifiers.

use std::hint::black_box;
use std::time::Instant;

use rand::Rng as _;
use serde::Serialize;

use crate::classifiers::{Classifier, ClassifierKind, MlpModel, SlfnModel, SvmModel};
use crate::seed::Rng;
use crate::{Error, Result};

pub const DEFAULT_RUNS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyReport {
    pub classifier: ClassifierKind,
    pub input_dim: usize,
    pub runs: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub max_ms: f64,
    /// 1000 / mean_ms.
    pub single_per_s: f64,
    pub batch_rows: usize,
    pub batch_per_s: f64,
}

/// Time `runs` single-row predictions (cycling through `rows`) and one
/// batched pass over all of them.
pub fn benchmark_predict(model: &Classifier, rows: &[f64], runs: usize) -> Result<LatencyReport> {
    let d = model.input_dim();
    if d == 0 || rows.len() % d != 0 {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: rows.len() % d.max(1),
        });
    }
    let n = rows.len() / d;
    if runs == 0 || n < runs {
        return Err(Error::InvalidParam(format!("benchmark needs at least {runs} rows, got {n}")));
    }
    // One untimed pass to fault in weights.
    black_box(model.predict(&rows[..d])?);
    let mut times = Vec::with_capacity(runs);
    for i in 0..runs {
        let x = &rows[i * d..(i + 1) * d];
        let t = Instant::now();
        let out = model.predict(black_box(x))?;
        times.push(t.elapsed().as_secs_f64() * 1e3);
        black_box(out);
    }
    let mean_ms = times.iter().sum::<f64>() / runs as f64;
    let mut sorted = times.clone();
    sorted.sort_by(f64::total_cmp);
    let median_ms = if runs % 2 == 1 {
        sorted[runs / 2]
    } else {
        0.5 * (sorted[runs / 2 - 1] + sorted[runs / 2])
    };
    let t = Instant::now();
    black_box(model.predict_batch(black_box(rows))?);
    let batch_s = t.elapsed().as_secs_f64();
    Ok(LatencyReport {
        classifier: model.kind(),
        input_dim: d,
        runs,
        mean_ms,
        median_ms,
        max_ms: *sorted.last().expect("runs > 0"),
        single_per_s: 1e3 / mean_ms,
        batch_rows: n,
        batch_per_s: n as f64 / batch_s,
    })
}

/// Classifiers with the default architectures and random parameters.
/// Prediction cost does not depend on the parameter values.
pub fn reference_models(dim: usize, rng: &mut Rng) -> Result<[Classifier; 3]> {
    let mut svm = SvmModel::zeros(dim);
    svm.weights.iter_mut().for_each(|w| *w = rng.gen_range(-1.0..1.0));
    let hidden = crate::classifiers::SlfnConfig::default().hidden;
    let slfn = SlfnModel {
        dim,
        hidden,
        prototypes: (0..hidden * dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        sigma: (dim as f64).sqrt(),
        output: {
            let mut o = SvmModel::zeros(hidden);
            o.weights.iter_mut().for_each(|w| *w = rng.gen_range(-1.0..1.0));
            o
        },
    };
    let mlp = MlpModel::new(dim, &crate::classifiers::MlpConfig::default().hidden, rng)?;
    Ok([Classifier::Svm(svm), Classifier::Slfn(slfn), Classifier::Mlp(mlp)])
}

/// True when mean latencies satisfy SVM ≤ SLFN ≤ MLP.
pub fn ordering_holds(reports: &[LatencyReport]) -> bool {
    let get = |k| reports.iter().find(|r| r.classifier == k).map(|r| r.mean_ms);
    match (get(ClassifierKind::Svm), get(ClassifierKind::Slfn), get(ClassifierKind::Mlp)) {
        (Some(a), Some(b), Some(c)) => a <= b && b <= c,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn report_is_consistent() {
        let mut rng = seed::rng(1, "bench");
        let [svm, ..] = reference_models(16, &mut rng).unwrap();
        let rows: Vec<f64> = (0..16 * 1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let r = benchmark_predict(&svm, &rows, 1000).unwrap();
        assert_eq!(r.runs, 1000);
        assert!(r.mean_ms > 0.0 && r.median_ms <= r.max_ms);
        assert!(benchmark_predict(&svm, &rows[..16 * 10], 1000).is_err());
    }
}

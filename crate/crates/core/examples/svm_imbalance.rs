//! Linear one-vs-rest SVM on separable blobs with an 80/10/10 class split,
//! with and without inverse-frequency class weighting.
//!
//! cargo run --release --example svm_imbalance

mod common;

use lobcast::classifiers::{svm_train, ClassWeighting, SvmConfig};
use lobcast::eval::macro_metrics;
use lobcast::labeling::Label;
use lobcast::seed;

fn main() -> lobcast::Result<()> {
    let (x, y) = common::blobs([2400, 300, 300], 1.0, 11);
    let w = ClassWeighting::from_labels(&y, true);
    println!("counts {:?}, weights {:.3?}", w.counts, w.factors());

    for weighted in [false, true] {
        let cfg = SvmConfig {
            // Per-machine regularizers only change the solution when the
            // penalty binds; with a loose C both variants separate the blobs.
            c: 2.5e-5,
            class_weighting: weighted,
            ..Default::default()
        };
        let model = svm_train(&x, 2, &y, &cfg, &mut seed::rng(5, "svm"))?;
        let pred: Vec<Label> = x.chunks(2).map(|r| model.predict(r)).collect::<lobcast::Result<_>>()?;
        let m = macro_metrics(&pred, &y)?;
        let recalls: Vec<f64> = m.per_class.iter().map(|c| c.recall).collect();
        println!(
            "weighted={weighted:<5} per-class recall {:.3?} macro recall {:.3} macro F {:.3}",
            recalls, m.macro_recall, m.macro_f
        );
    }
    Ok(())
}

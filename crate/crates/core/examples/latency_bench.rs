//! Single-sample prediction latency of the three classifiers on the 720-wide
//! concatenated window input.
//!
//! cargo run --release --example latency_bench

use lobcast::features::{WindowKind, FEATURES};
use lobcast::pipeline::{benchmark_predict, ordering_holds, reference_models};
use lobcast::seed;
use rand::Rng;

fn main() -> lobcast::Result<()> {
    let dim = WindowKind::Concat.dim(FEATURES);
    let mut rng = seed::rng(1, "latency");
    let models = reference_models(dim, &mut rng)?;
    let runs = 1000;
    let rows: Vec<f64> = (0..runs * dim).map(|_| rng.gen_range(-2.0..2.0)).collect();

    let mut reports = Vec::new();
    for m in &models {
        let r = benchmark_predict(m, &rows, runs)?;
        println!(
            "{:<5} mean {:.4} ms  median {:.4} ms  max {:.4} ms  {:>9.0} single/s  {:>9.0} batched/s",
            r.classifier.name(), r.mean_ms, r.median_ms, r.max_ms, r.single_per_s, r.batch_per_s
        );
        reports.push(r);
    }
    println!("svm < slfn < mlp: {}", ordering_holds(&reports));
    Ok(())
}

//! End-to-end anchored walk-forward run on a small synthetic market:
//! generate, featurize into a feature store, label, train an SVM per fold
//! and summarize.
//!
//! cargo run --release --example walk_forward [OUT_DIR]

use std::path::PathBuf;

use lobcast::book::block_stream;
use lobcast::eval::{format_summary, summarize};
use lobcast::features::extract_day;
use lobcast::pipeline::{run_on_dataset, write_feature_store, Dataset, ExperimentConfig};
use lobcast::synth::{generate, MarketConfig};

fn main() -> lobcast::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("lobcast-walk-forward"));

    let market = MarketConfig {
        stocks: 2,
        days: 4,
        events_per_day: 10_000,
        ..Default::default()
    };
    let days = generate(&market)?.iter().map(|s| extract_day(&block_stream(s))).collect::<lobcast::Result<Vec<_>>>()?;

    let store = out.join("store");
    write_feature_store(&store, &days)?;

    let overrides = [
        format!("data.features = {:?}", store.display().to_string()),
        "representation = \"last_mean\"".to_string(),
        "classifier = \"svm\"".to_string(),
        "horizon = 5".to_string(),
        format!("output = {:?}", out.join("run").display().to_string()),
    ];
    let cfg = ExperimentConfig::load_with_overrides(None, &overrides)?;
    let data = Dataset::build(days, cfg.label_params()?)?;
    println!("{} samples over {} stock-days", data.samples.len(), data.days.len());

    let outcome = run_on_dataset(&cfg, &data)?;
    for row in &outcome.rows {
        println!("  {:<10} macro F {:.2}", row.fold, row.macro_f);
    }
    print!("{}", format_summary(&summarize(&outcome.rows)));
    println!("audit passed: {}, results in {}", outcome.manifest.audit_passed, outcome.results_path().display());
    Ok(())
}

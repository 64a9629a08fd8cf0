//! Experiment configuration, data loading, per-fold orchestration with a
//! leakage audit, persisted model bundles and prediction benchmarks.

mod bench;
mod config;
mod experiment;
mod fitted;
mod store;

pub use bench::{benchmark_predict, ordering_holds, reference_models, LatencyReport, DEFAULT_RUNS};
pub use config::{CvConfig, DataConfig, ExperimentConfig, Part, Representation};
pub use experiment::{
    config_from_manifest, design_matrix, run_experiment, run_on_dataset, train_bundle, AuditRecord, Dataset, ExperimentOutcome, FoldAudit, FoldDiagnostics, FoldOutcome,
    RunManifest, Sample, StageTimings, TrainSelector, MANIFEST_FILE, METRICS_FILE, RESULTS_FILE,
};
pub use fitted::{normalization_from_artifact, normalization_to_artifact, BundleInfo, Featurizer, ModelBundle, BUNDLE_FILE};
pub use store::{
    featurize_event_file, featurize_events_dir, load_days, read_feature_store, read_store_manifest, write_feature_store, SourceReport, StoreEntry,
    StoreManifest, STORE_FILE,
};

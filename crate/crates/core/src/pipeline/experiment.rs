//! Fold-by-fold experiment runs with a structural train/test audit.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::book::StockDay;
use crate::classifiers::{
    mlp_train, select_regularizer, slfn_fit_hidden, slfn_train_output, svm_train, Classifier, ClassifierKind, CvOutcome, MlpTrainReport, SvmConfig,
};
use crate::eval::{format_results, macro_metrics, make_folds, Fold, FoldPlan, MetricsReport, ResultRow};
use crate::features::{zscore_fit, DayFeatures, FEATURES, WINDOW};
use crate::labeling::{label_series, Label, LabelParams};
use crate::repr::{ae_train, bof_fit, AeTrainReport};
use crate::seed::{self, Rng};
use crate::{Error, Result};

use super::config::{ExperimentConfig, Representation};
use super::fitted::{Featurizer, ModelBundle};
use super::store::load_days;

pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const METRICS_FILE: &str = "metrics.json";

/// One labelled window end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sample {
    /// Index into [`Dataset::days`].
    pub day: usize,
    pub block: usize,
    pub label: Label,
}

/// Stock-days plus every sample whose window and label are both defined,
/// ordered by (day, stock, block).
#[derive(Debug, Clone)]
pub struct Dataset {
    pub days: Vec<DayFeatures>,
    pub samples: Vec<Sample>,
    pub label_params: LabelParams,
}

impl Dataset {
    pub fn build(mut days: Vec<DayFeatures>, params: LabelParams) -> Result<Self> {
        days.sort_by(|a, b| (a.key.day_id, &a.key.stock_id).cmp(&(b.key.day_id, &b.key.stock_id)));
        if let Some(w) = days.windows(2).find(|w| w[0].key == w[1].key) {
            return Err(Error::Format(format!("stock-day {} appears twice", w[0].key)));
        }
        let mut samples = Vec::new();
        for (d, day) in days.iter().enumerate() {
            let labels = label_series(&day.mids, &params)?;
            let first = day.first_block() + WINDOW - 1;
            for t in first..day.mids.len() {
                if day.at_block(t).is_none() {
                    break;
                }
                if let Some(label) = labels.get(t) {
                    samples.push(Sample { day: d, block: t, label });
                }
            }
        }
        Ok(Dataset {
            days,
            samples,
            label_params: params,
        })
    }

    pub fn keys(&self) -> Vec<StockDay> {
        self.days.iter().map(|d| d.key.clone()).collect()
    }

    pub fn key(&self, s: &Sample) -> &StockDay {
        &self.days[s.day].key
    }

    /// Raw feature vectors of the window ending at the sample, oldest first.
    pub fn window(&self, s: &Sample) -> [&[f64]; WINDOW] {
        let day = &self.days[s.day];
        std::array::from_fn(|i| &day.at_block(s.block + 1 + i - WINDOW).expect("window inside the day").values[..])
    }

    pub fn class_counts(&self, idx: &[usize]) -> [usize; 3] {
        let mut c = [0; 3];
        for &i in idx {
            c[self.samples[i].label.class_index()] += 1;
        }
        c
    }
}

/// Stock-days that reached one fitting stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub stage: String,
    pub keys: BTreeSet<StockDay>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAudit {
    pub records: Vec<AuditRecord>,
    /// (stage, stock-day) pairs where a test stock-day reached a fit.
    pub violations: Vec<(String, StockDay)>,
    pub isolation: std::result::Result<(), String>,
}

impl FoldAudit {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.isolation.is_ok() && !self.records.is_empty()
    }
}

/// The only door from a fold to its training data. Every accessor logs the
/// stock-days it hands out under a stage name.
pub struct TrainSelector<'a> {
    data: &'a Dataset,
    fold: &'a Fold,
    /// Training sample indices in dataset order.
    samples: Vec<usize>,
    /// Training stock-days as indices into `data.days`.
    days: Vec<usize>,
    log: Mutex<Vec<AuditRecord>>,
}

impl<'a> TrainSelector<'a> {
    pub fn new(data: &'a Dataset, fold: &'a Fold) -> Self {
        let days: Vec<usize> = (0..data.days.len()).filter(|&d| fold.train.contains(&data.days[d].key)).collect();
        let samples = (0..data.samples.len())
            .filter(|&i| fold.train.contains(data.key(&data.samples[i])))
            .collect();
        TrainSelector {
            data,
            fold,
            samples,
            days,
            log: Mutex::new(Vec::new()),
        }
    }

    fn record(&self, stage: &str, keys: BTreeSet<StockDay>) {
        self.log.lock().expect("audit log").push(AuditRecord {
            stage: stage.to_string(),
            keys,
        });
    }

    pub fn sample_count(&self) -> usize {
        self.samples.len()
    }

    /// Training sample indices for `stage`.
    pub fn samples(&self, stage: &str) -> &[usize] {
        let keys = self.samples.iter().map(|&i| self.data.key(&self.data.samples[i]).clone()).collect();
        self.record(stage, keys);
        &self.samples
    }

    /// A uniform subsample (order kept) of at most `cap` training samples.
    pub fn sample_subset(&self, stage: &str, cap: usize, rng: &mut Rng) -> Vec<usize> {
        let picked = pick(self.samples.len(), cap, rng);
        let out: Vec<usize> = picked.into_iter().map(|j| self.samples[j]).collect();
        self.record(stage, out.iter().map(|&i| self.data.key(&self.data.samples[i]).clone()).collect());
        out
    }

    /// Every feature vector of the training stock-days.
    pub fn vectors(&self, stage: &str) -> Vec<&'a [f64]> {
        self.record(stage, self.days.iter().map(|&d| self.data.days[d].key.clone()).collect());
        self.days
            .iter()
            .flat_map(|&d| self.data.days[d].vectors.iter().map(|v| &v.values[..]))
            .collect()
    }

    pub fn audit(&self, test: &BTreeSet<StockDay>, protocol: crate::eval::Protocol) -> FoldAudit {
        let records = self.log.lock().expect("audit log").clone();
        let violations = records
            .iter()
            .flat_map(|r| r.keys.intersection(test).map(move |k| (r.stage.clone(), k.clone())))
            .collect();
        FoldAudit {
            records,
            violations,
            isolation: self.fold.check_isolation(protocol),
        }
    }
}

/// Sorted uniform choice of at most `cap` of `0..n`.
fn pick(n: usize, cap: usize, rng: &mut Rng) -> Vec<usize> {
    if n <= cap {
        return (0..n).collect();
    }
    let mut v = index::sample(rng, n, cap).into_vec();
    v.sort_unstable();
    v
}

/// Representation rows and labels for the given samples.
pub fn design_matrix(data: &Dataset, idx: &[usize], featurizer: &Featurizer) -> Result<(Vec<f64>, Vec<Label>)> {
    let d = featurizer.dim();
    let mut x = vec![0.0; idx.len() * d];
    let mut scratch = vec![0.0; WINDOW * FEATURES];
    let mut y = Vec::with_capacity(idx.len());
    for (row, &i) in x.chunks_exact_mut(d.max(1)).zip(idx) {
        let s = &data.samples[i];
        featurizer.transform_into(&data.window(s), &mut scratch, row)?;
        y.push(s.label);
    }
    if let Some(j) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("representation value at row {}", j / d.max(1))));
    }
    Ok((x, y))
}

fn gather(x: &[f64], y: &[Label], dim: usize, rows: &[usize]) -> (Vec<f64>, Vec<Label>) {
    let mut gx = Vec::with_capacity(rows.len() * dim);
    for &i in rows {
        gx.extend_from_slice(&x[i * dim..(i + 1) * dim]);
    }
    (gx, rows.iter().map(|&i| y[i]).collect())
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct StageTimings {
    pub normalization_s: f64,
    pub representation_fit_s: f64,
    pub design_s: f64,
    pub cv_s: f64,
    pub train_s: f64,
    pub evaluate_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldDiagnostics {
    pub fold: String,
    pub train_stock_days: usize,
    pub test_stock_days: usize,
    pub train_samples: usize,
    pub train_rows_used: usize,
    pub test_rows: usize,
    pub train_class_counts: [usize; 3],
    pub test_class_counts: [usize; 3],
    pub input_dim: usize,
    pub cv: Option<CvOutcome>,
    pub regularizer: Option<f64>,
    pub autoencoder: Option<AeTrainReport>,
    pub bof_inertia: Option<f64>,
    pub slfn_sigma: Option<f64>,
    pub mlp: Option<MlpTrainReport>,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldOutcome {
    pub fold: String,
    pub status: String,
    pub error: Option<String>,
    pub diagnostics: Option<FoldDiagnostics>,
    pub metrics: Option<MetricsReport>,
    pub audit: Option<FoldAudit>,
    pub model_dir: Option<PathBuf>,
}

struct FoldRun {
    diagnostics: FoldDiagnostics,
    metrics: MetricsReport,
    bundle: ModelBundle,
}

fn rng_for(cfg: &ExperimentConfig, fold: &Fold, stage: &str) -> Rng {
    seed::rng(cfg.seed, &format!("fold/{}/{stage}", fold.id))
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

/// Fit normalization, representation learners and the classifier on the
/// fold's training partition.
fn fit_fold(data: &Dataset, fold: &Fold, cfg: &ExperimentConfig, rep: &Representation, train: &TrainSelector) -> Result<(ModelBundle, FoldDiagnostics)> {
    let mut timings = StageTimings::default();
    if train.sample_count() == 0 {
        return Err(Error::Empty("fold training partition"));
    }

    let t = Instant::now();
    let norm = zscore_fit(train.vectors("normalization"), format!("fold {} training partition", fold.name))?;
    timings.normalization_s = secs(t);

    let t = Instant::now();
    let normalized = |rows: Vec<&[f64]>| -> Vec<f64> {
        let mut out = vec![0.0; rows.len() * FEATURES];
        for (o, r) in out.chunks_exact_mut(FEATURES).zip(rows) {
            norm.apply_into(r, o);
        }
        out
    };
    let (ae, ae_report) = if rep.needs_ae() {
        let mut rng = rng_for(cfg, fold, "ae");
        let idx = train.sample_subset("autoencoder", cfg.autoencoder.max_samples, &mut rng);
        let rows = normalized(idx.iter().map(|&i| data.window(&data.samples[i])[WINDOW - 1]).collect());
        let (m, r) = ae_train(&rows, FEATURES, &cfg.autoencoder, &mut rng)?;
        (Some(m), Some(r))
    } else {
        (None, None)
    };
    let (bof, bof_inertia) = if rep.needs_bof() {
        let mut rng = rng_for(cfg, fold, "bof");
        let all = train.vectors("bof");
        let keep = pick(all.len(), cfg.bof.max_samples, &mut rng);
        let rows = normalized(keep.into_iter().map(|i| all[i]).collect());
        let (cb, fit) = bof_fit(&rows, FEATURES, &cfg.bof, &mut rng)?;
        (Some(cb), Some(fit.inertia()))
    } else {
        (None, None)
    };
    let featurizer = Featurizer::new(rep.clone(), norm, ae, bof)?;
    timings.representation_fit_s = secs(t);
    let dim = featurizer.dim();

    let t = Instant::now();
    let rows = match cfg.max_train_rows {
        Some(cap) => train.sample_subset("classifier", cap, &mut rng_for(cfg, fold, "rows")),
        None => train.samples("classifier").to_vec(),
    };
    let (x, y) = design_matrix(data, &rows, &featurizer)?;
    timings.design_s = secs(t);

    let mut cv = None;
    let mut regularizer = None;
    let mut slfn_sigma = None;
    let mut mlp_report = None;
    // CV picks rows from the classifier training rows, themselves training
    // samples; log them as their own stage.
    let cv_rows = |rng: &mut Rng| -> Vec<usize> {
        let local = pick(rows.len(), cfg.cv.max_rows, rng);
        let keys = local.iter().map(|&j| data.key(&data.samples[rows[j]]).clone()).collect();
        train.record("cv", keys);
        local
    };
    let svm_cfg = |base: &SvmConfig, c: f64| SvmConfig { c, ..base.clone() };

    let classifier = match cfg.classifier {
        ClassifierKind::Svm => {
            let t = Instant::now();
            let c = if cfg.cv.grid.is_empty() {
                cfg.svm.c
            } else {
                let mut rng = rng_for(cfg, fold, "cv");
                let local = cv_rows(&mut rng);
                let (cx, cy) = gather(&x, &y, dim, &local);
                let mut calls = 0u64;
                let out = select_regularizer(&cy, &cfg.cv.grid, |tr, va, c| {
                    calls += 1;
                    let (tx, ty) = gather(&cx, &cy, dim, tr);
                    let m = svm_train(&tx, dim, &ty, &svm_cfg(&cfg.svm, c), &mut rng_for(cfg, fold, &format!("cv/{calls}")))?;
                    let (vx, _) = gather(&cx, &cy, dim, va);
                    Classifier::Svm(m).predict_batch(&vx)
                })?;
                let c = out.chosen;
                cv = Some(out);
                c
            };
            timings.cv_s = secs(t);
            regularizer = Some(c);
            let t = Instant::now();
            let m = svm_train(&x, dim, &y, &svm_cfg(&cfg.svm, c), &mut rng_for(cfg, fold, "svm"))?;
            timings.train_s = secs(t);
            Classifier::Svm(m)
        }
        ClassifierKind::Slfn => {
            let t = Instant::now();
            let mut rng = rng_for(cfg, fold, "slfn");
            let keys = rows.iter().map(|&i| data.key(&data.samples[i]).clone()).collect();
            train.record("sigma", keys);
            let mut model = slfn_fit_hidden(&x, dim, &cfg.slfn, &mut rng)?;
            slfn_sigma = Some(model.sigma);
            timings.train_s = secs(t);
            let t = Instant::now();
            let c = if cfg.cv.grid.is_empty() {
                cfg.slfn.output.c
            } else {
                let mut cv_rng = rng_for(cfg, fold, "cv");
                let local = cv_rows(&mut cv_rng);
                let (cx, cy) = gather(&x, &y, dim, &local);
                let h = model.hidden;
                let mut hx = vec![0.0; local.len() * h];
                for (o, r) in hx.chunks_exact_mut(h).zip(cx.chunks_exact(dim)) {
                    model.hidden_into(r, o);
                }
                let mut calls = 0u64;
                let out = select_regularizer(&cy, &cfg.cv.grid, |tr, va, c| {
                    calls += 1;
                    let (tx, ty) = gather(&hx, &cy, h, tr);
                    let m = svm_train(&tx, h, &ty, &svm_cfg(&cfg.slfn.output, c), &mut rng_for(cfg, fold, &format!("cv/{calls}")))?;
                    let (vx, _) = gather(&hx, &cy, h, va);
                    Classifier::Svm(m).predict_batch(&vx)
                })?;
                let c = out.chosen;
                cv = Some(out);
                c
            };
            timings.cv_s = secs(t);
            regularizer = Some(c);
            let t = Instant::now();
            model.output = slfn_train_output(&model, &x, &y, &svm_cfg(&cfg.slfn.output, c), &mut rng)?;
            timings.train_s += secs(t);
            Classifier::Slfn(model)
        }
        ClassifierKind::Mlp => {
            let t = Instant::now();
            let (m, r) = mlp_train(&x, dim, &y, &cfg.mlp, &mut rng_for(cfg, fold, "mlp"))?;
            timings.train_s = secs(t);
            mlp_report = Some(r);
            Classifier::Mlp(m)
        }
    };

    let diagnostics = FoldDiagnostics {
        fold: fold.name.clone(),
        train_stock_days: fold.train.len(),
        test_stock_days: fold.test.len(),
        train_samples: train.sample_count(),
        train_rows_used: rows.len(),
        test_rows: 0,
        train_class_counts: data.class_counts(&rows),
        test_class_counts: [0; 3],
        input_dim: dim,
        cv,
        regularizer,
        autoencoder: ae_report,
        bof_inertia,
        slfn_sigma,
        mlp: mlp_report,
        timings,
    };
    Ok((ModelBundle::new(featurizer, classifier, data.label_params)?, diagnostics))
}

/// Fit on the training partition, then score the test partition.
fn run_fold(data: &Dataset, fold: &Fold, cfg: &ExperimentConfig, rep: &Representation, train: &TrainSelector) -> Result<FoldRun> {
    let test_idx: Vec<usize> = (0..data.samples.len())
        .filter(|&i| fold.test.contains(data.key(&data.samples[i])))
        .collect();
    if test_idx.is_empty() {
        return Err(Error::Empty("fold test partition"));
    }
    let (bundle, mut diagnostics) = fit_fold(data, fold, cfg, rep, train)?;
    let t = Instant::now();
    let (tx, ty) = design_matrix(data, &test_idx, &bundle.featurizer)?;
    let pred = bundle.classifier.predict_batch(&tx)?;
    let mut metrics = macro_metrics(&pred, &ty)?;
    metrics.fold = fold.name.clone();
    diagnostics.timings.evaluate_s = secs(t);
    diagnostics.test_rows = test_idx.len();
    diagnostics.test_class_counts = data.class_counts(&test_idx);
    Ok(FoldRun {
        diagnostics,
        metrics,
        bundle,
    })
}

/// Fit one bundle on the given stock-days (all of them when `keys` is
/// `None`). The returned audit covers every fit stage.
pub fn train_bundle(cfg: &ExperimentConfig, data: &Dataset, keys: Option<&BTreeSet<StockDay>>) -> Result<(ModelBundle, FoldDiagnostics, FoldAudit)> {
    cfg.validate()?;
    let rep = cfg.representation()?;
    let train: BTreeSet<StockDay> = match keys {
        Some(k) => k.clone(),
        None => data.keys().into_iter().collect(),
    };
    let test: BTreeSet<StockDay> = data.keys().into_iter().filter(|k| !train.contains(k)).collect();
    let fold = Fold {
        id: 0,
        name: "train".into(),
        train,
        test,
    };
    let sel = TrainSelector::new(data, &fold);
    let (bundle, diag) = fit_fold(data, &fold, cfg, &rep, &sel)?;
    let records = sel.log.lock().expect("audit log").clone();
    let violations = records
        .iter()
        .flat_map(|r| r.keys.intersection(&fold.test).map(move |k| (r.stage.clone(), k.clone())))
        .collect();
    let audit = FoldAudit {
        records,
        violations,
        isolation: Ok(()),
    };
    Ok((bundle, diag, audit))
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub crate_version: String,
    pub config: ExperimentConfig,
    pub representation: String,
    pub input_dim: usize,
    pub label_params: LabelParams,
    /// Normalization is fitted per fold on the training partition only, with
    /// the population standard deviation.
    pub normalization: String,
    pub std_convention: String,
    pub summary_std_convention: String,
    pub root_seed: u64,
    pub seed_streams: Vec<String>,
    pub stock_days: Vec<StockDay>,
    pub samples: usize,
    pub fold_warnings: Vec<String>,
    pub audit_passed: bool,
    pub folds: Vec<FoldOutcome>,
    pub load_s: f64,
    pub total_s: f64,
}

/// Everything a run produces, also written under `config.output`.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub rows: Vec<ResultRow>,
    pub manifest: RunManifest,
}

impl ExperimentOutcome {
    pub fn results_path(&self) -> PathBuf {
        self.manifest.config.output.join(RESULTS_FILE)
    }
}

/// Run every fold of the configured protocol over an already-built dataset.
pub fn run_on_dataset(cfg: &ExperimentConfig, data: &Dataset) -> Result<ExperimentOutcome> {
    let start = Instant::now();
    cfg.validate()?;
    let rep = cfg.representation()?;
    let plan: FoldPlan = make_folds(cfg.protocol, &data.keys())?;
    let out_dir = &cfg.output;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let outcomes: Vec<(FoldOutcome, Option<ResultRow>)> = plan
        .folds
        .par_iter()
        .map(|fold| {
            let train = TrainSelector::new(data, fold);
            let res = run_fold(data, fold, cfg, &rep, &train);
            let audit = train.audit(&fold.test, plan.protocol);
            match res {
                Ok(run) => {
                    let mut model_dir = None;
                    let mut error = None;
                    if cfg.save_models {
                        let dir = out_dir.join("models").join(format!("fold_{:02}", fold.id));
                        match run.bundle.save(&dir) {
                            Ok(()) => model_dir = Some(dir),
                            Err(e) => error = Some(format!("saving models: {e}")),
                        }
                    }
                    let row = ResultRow {
                        protocol: plan.protocol.name().to_string(),
                        horizon: data.label_params.n_alpha,
                        representation: rep.name().to_string(),
                        classifier: cfg.classifier.name().to_string(),
                        fold: fold.name.clone(),
                        macro_precision: run.metrics.macro_precision,
                        macro_recall: run.metrics.macro_recall,
                        macro_f: run.metrics.macro_f,
                    };
                    let outcome = FoldOutcome {
                        fold: fold.name.clone(),
                        status: "ok".into(),
                        error,
                        diagnostics: Some(run.diagnostics),
                        metrics: Some(run.metrics),
                        audit: Some(audit),
                        model_dir,
                    };
                    (outcome, Some(row))
                }
                Err(e) => {
                    log::warn!("fold {} failed: {e}", fold.name);
                    let outcome = FoldOutcome {
                        fold: fold.name.clone(),
                        status: "failed".into(),
                        error: Some(e.to_string()),
                        diagnostics: None,
                        metrics: None,
                        audit: Some(audit),
                        model_dir: None,
                    };
                    (outcome, None)
                }
            }
        })
        .collect();

    let rows: Vec<ResultRow> = outcomes.iter().filter_map(|(_, r)| r.clone()).collect();
    let folds: Vec<FoldOutcome> = outcomes.into_iter().map(|(o, _)| o).collect();
    let audit_passed = folds.iter().all(|f| f.audit.as_ref().is_some_and(|a| a.passed()));
    let results_path = out_dir.join(RESULTS_FILE);
    fs::write(&results_path, format_results(&rows)).map_err(|e| Error::io(&results_path, e))?;
    let metrics: Vec<&MetricsReport> = folds.iter().filter_map(|f| f.metrics.as_ref()).collect();
    let metrics_path = out_dir.join(METRICS_FILE);
    fs::write(&metrics_path, serde_json::to_string_pretty(&metrics).expect("metrics serialize") + "\n")
        .map_err(|e| Error::io(&metrics_path, e))?;

    let stages = ["ae", "bof", "rows", "cv", "svm", "slfn", "mlp"];
    let manifest = RunManifest {
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        representation: rep.name().to_string(),
        input_dim: cfg.input_dim()?,
        label_params: data.label_params,
        normalization: "z-score fitted per fold on the training partition".into(),
        std_convention: "population".into(),
        summary_std_convention: "sample".into(),
        root_seed: cfg.seed,
        seed_streams: plan
            .folds
            .iter()
            .flat_map(|f| stages.iter().map(move |s| format!("fold/{}/{s}", f.id)))
            .collect(),
        stock_days: data.keys(),
        samples: data.samples.len(),
        fold_warnings: plan.warnings.clone(),
        audit_passed,
        folds,
        load_s: 0.0,
        total_s: secs(start),
    };
    write_manifest(&out_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(ExperimentOutcome { rows, manifest })
}

fn write_manifest(path: &Path, m: &RunManifest) -> Result<()> {
    let json = serde_json::to_string_pretty(m).expect("manifest serializes");
    fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

/// Load the configured data and run the experiment end to end.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let t = Instant::now();
    let days = load_days(&cfg.data)?;
    let data = Dataset::build(days, cfg.label_params()?)?;
    let load_s = secs(t);
    let mut out = run_on_dataset(cfg, &data)?;
    out.manifest.load_s = load_s;
    out.manifest.total_s += load_s;
    write_manifest(&cfg.output.join(MANIFEST_FILE), &out.manifest)?;
    Ok(out)
}

/// Read the configuration back out of a run manifest.
pub fn config_from_manifest(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let cfg = v
        .get("config")
        .ok_or_else(|| Error::Format(format!("{} has no config", path.display())))?;
    serde_json::from_value(cfg.clone()).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::store::featurize_events_dir;
    use crate::synth::{synth_generate, MarketConfig};

    fn small_dataset(dir: &Path) -> Dataset {
        let cfg = MarketConfig {
            stocks: 2,
            days: 3,
            events_per_day: 4000,
            ..Default::default()
        };
        synth_generate(&cfg, dir).unwrap();
        let (days, _) = featurize_events_dir(dir).unwrap();
        Dataset::build(days, LabelParams::for_horizon(10).unwrap()).unwrap()
    }

    fn small_config(out: &Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.data.events = Some("unused".into());
        cfg.output = out.to_path_buf();
        cfg.representation = "last".into();
        cfg.classifier = ClassifierKind::Svm;
        cfg.svm.epochs = 3;
        cfg.cv.grid = vec![1e-3, 1e-2];
        cfg.cv.max_rows = 600;
        cfg
    }

    #[test]
    fn samples_are_ordered_and_inside_windows() {
        let tmp = tempfile::tempdir().unwrap();
        let data = small_dataset(&tmp.path().join("ev"));
        assert!(!data.samples.is_empty());
        let order: Vec<(u32, &str, usize)> = data
            .samples
            .iter()
            .map(|s| (data.key(s).day_id, data.key(s).stock_id.as_str(), s.block))
            .collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
        for s in data.samples.iter().step_by(97) {
            let w = data.window(s);
            assert_eq!(w[WINDOW - 1].as_ptr(), data.days[s.day].at_block(s.block).unwrap().values.as_ptr());
        }
    }

    #[test]
    fn svm_run_audits_clean_and_reproduces() {
        let tmp = tempfile::tempdir().unwrap();
        let data = small_dataset(&tmp.path().join("ev"));
        let a = run_on_dataset(&small_config(&tmp.path().join("a")), &data).unwrap();
        assert_eq!(a.rows.len(), 2);
        assert!(a.manifest.audit_passed);
        let stages: BTreeSet<&str> = a.manifest.folds[0]
            .audit
            .as_ref()
            .unwrap()
            .records
            .iter()
            .map(|r| r.stage.as_str())
            .collect();
        assert!(stages.contains("normalization") && stages.contains("cv"));
        run_on_dataset(&small_config(&tmp.path().join("b")), &data).unwrap();
        assert_eq!(
            fs::read(tmp.path().join("a").join(RESULTS_FILE)).unwrap(),
            fs::read(tmp.path().join("b").join(RESULTS_FILE)).unwrap()
        );
        let back = config_from_manifest(&tmp.path().join("a").join(MANIFEST_FILE)).unwrap();
        assert_eq!(back, small_config(&tmp.path().join("a")));
        let m = ModelBundle::load(&tmp.path().join("b/models/fold_01")).unwrap();
        assert_eq!(m.featurizer.dim(), 144);
    }

    #[test]
    fn a_failing_fold_does_not_stop_the_others() {
        let tmp = tempfile::tempdir().unwrap();
        let data = small_dataset(&tmp.path().join("ev"));
        let mut cfg = small_config(&tmp.path().join("out"));
        cfg.classifier = ClassifierKind::Slfn;
        cfg.cv.grid = vec![];
        // Day 1 alone has fewer rows than hidden units; days 1-2 do not.
        let first_fold_rows = data.samples.iter().filter(|s| data.key(s).day_id == 1).count();
        cfg.slfn.hidden = first_fold_rows + 1;
        cfg.slfn.kmeans.max_iters = 2;
        cfg.slfn.output.epochs = 1;
        let out = run_on_dataset(&cfg, &data).unwrap();
        assert_eq!(out.manifest.folds[0].status, "failed");
        assert!(out.manifest.folds[0].error.is_some());
        assert_eq!(out.manifest.folds[1].status, "ok");
        assert_eq!(out.rows.len(), 1);
    }

    #[test]
    fn leaked_key_is_flagged() {
        let tmp = tempfile::tempdir().unwrap();
        let data = small_dataset(&tmp.path().join("ev"));
        let plan = make_folds(crate::eval::Protocol::Anchored, &data.keys()).unwrap();
        let mut fold = plan.folds[0].clone();
        let leak = fold.test.iter().next().unwrap().clone();
        fold.train.insert(leak.clone());
        let sel = TrainSelector::new(&data, &fold);
        let _ = sel.vectors("normalization");
        let audit = sel.audit(&fold.test, plan.protocol);
        assert!(!audit.passed());
        assert!(audit.violations.iter().any(|(s, k)| s == "normalization" && *k == leak));
    }
}

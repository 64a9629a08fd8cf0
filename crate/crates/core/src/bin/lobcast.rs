use std::collections::BTreeSet;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand_distr::{Distribution, StandardNormal};

use lobcast::book::io::{meta_path_for, read_event_file, stream_stem, EVENTS_SUFFIX};
use lobcast::book::StockDay;
use lobcast::classifiers::{PredictionWriter, ClassifierKind};
use lobcast::eval::{compare, format_summary, nemenyi_cd, nemenyi_compare, read_results, score_matrix, summarize, Protocol, ResultRow};
use lobcast::features::io::{read_matrix, write_matrix};
use lobcast::features::{FEATURES, WINDOW};
use lobcast::labeling::{label_series, write_label_file, LabelManifest, LabelManifestEntry, LabelParams, DEFAULT_N_BETA};
use lobcast::pipeline::{
    benchmark_predict, config_from_manifest, featurize_events_dir, load_days, ordering_holds, reference_models, run_experiment, train_bundle,
    write_feature_store, Dataset, DataConfig, ExperimentConfig, ModelBundle, Representation, DEFAULT_RUNS,
};
use lobcast::synth::{synth_generate, MarketConfig, Regime};
use lobcast::{seed, Error, Result};

#[derive(Parser)]
#[command(name = "lobcast", version, about = "Limit order book mid-price direction forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic multi-stock event files.
    Synth(SynthArgs),
    /// Validate event files or LOBF feature matrices.
    Ingest(IngestArgs),
    /// Replay event files and write a feature store.
    Features(FeaturesArgs),
    /// Write direction labels per stock-day.
    Labels(LabelsArgs),
    /// Fit one model bundle on the selected stock-days.
    Train(TrainArgs),
    /// Predict every labelled window with a saved bundle.
    Predict(PredictArgs),
    /// Run the full fold protocol and write results, models and a manifest.
    Evaluate(EvaluateArgs),
    /// Single-row latency and batched throughput per classifier.
    Bench(BenchArgs),
    /// Friedman test and Nemenyi post-hoc comparison over result tables.
    Stats(StatsArgs),
    /// Mean ± std summary of result tables.
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    stocks: Option<usize>,
    #[arg(long)]
    days: Option<usize>,
    #[arg(long)]
    events: Option<usize>,
    #[arg(long)]
    regime: Option<Regime>,
    #[arg(long, allow_hyphen_values = true)]
    drift: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct IngestArgs {
    /// `*.events.csv` files (with `.meta` sidecars) or `*.lobf` matrices.
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    /// Copy validated matrices here and check they read back bit-exactly.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long)]
    events: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LabelsArgs {
    #[arg(long, conflicts_with = "features", required_unless_present = "features")]
    events: Option<PathBuf>,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    horizon: usize,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_N_BETA)]
    n_beta: usize,
}

/// Flags shared by commands that build an [`ExperimentConfig`]. Every flag
/// is sugar for a `--set key=value` override applied after the config file.
#[derive(Args)]
struct ExperimentArgs {
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set mlp.epochs=5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    representation: Option<String>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    classifier: Option<ClassifierKind>,
    #[arg(long)]
    protocol: Option<Protocol>,
    #[arg(long)]
    seed: Option<u64>,
    /// Allow `+`-joined representation combinations.
    #[arg(long)]
    unsafe_combo: bool,
    #[arg(long)]
    max_train_rows: Option<usize>,
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let q = |s: &str| toml::Value::String(s.to_string()).to_string();
        let path = |p: &Path| q(&p.to_string_lossy());
        let mut o = self.set.clone();
        if let Some(p) = &self.events {
            o.push(format!("data.events={}", path(p)));
        }
        if let Some(p) = &self.features {
            o.push(format!("data.features={}", path(p)));
        }
        if let Some(p) = &self.output {
            o.push(format!("output={}", path(p)));
        }
        if let Some(r) = &self.representation {
            o.push(format!("representation={}", q(r)));
        }
        if let Some(h) = self.horizon {
            o.push(format!("horizon={h}"));
        }
        if let Some(c) = self.classifier {
            o.push(format!("classifier={}", q(c.name())));
        }
        if let Some(p) = self.protocol {
            o.push(format!("protocol={}", q(p.name())));
        }
        if let Some(s) = self.seed {
            o.push(format!("seed={s}"));
        }
        if self.unsafe_combo {
            o.push("unsafe_combo=true".into());
        }
        if let Some(m) = self.max_train_rows {
            o.push(format!("max_train_rows={m}"));
        }
        let cfg = ExperimentConfig::load_with_overrides(self.config.as_deref(), &o)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Train only on these days, e.g. `1-9` or `1,2,5`.
    #[arg(long)]
    days: Option<String>,
    /// Bundle directory (default: <output>/model).
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, conflicts_with = "features", required_unless_present = "features")]
    events: Option<PathBuf>,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Re-run the configuration stored in a run manifest.
    #[arg(long, conflicts_with = "config")]
    replay: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark a saved bundle's classifier instead of reference models.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Representations to benchmark reference models on.
    #[arg(long, value_delimiter = ',', default_value = "last,mean,last_mean,concat,ae,bof,ae_bof,last_bof")]
    representations: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    runs: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(required = true)]
    results: Vec<PathBuf>,
    /// Column compared: classifier or representation.
    #[arg(long, default_value = "classifier")]
    treatment: String,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(required = true)]
    results: Vec<PathBuf>,
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let json = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(path, json + "\n").map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn synth(a: SynthArgs) -> Result<()> {
    let d = MarketConfig::default();
    let cfg = MarketConfig {
        stocks: a.stocks.unwrap_or(d.stocks),
        days: a.days.unwrap_or(d.days),
        events_per_day: a.events.unwrap_or(d.events_per_day),
        regime: a.regime.unwrap_or(d.regime),
        drift: a.drift.unwrap_or(d.drift),
        noise: a.noise.unwrap_or(d.noise),
        seed: a.seed.unwrap_or(d.seed),
        ..d
    };
    cfg.validate()?;
    let (paths, manifest) = synth_generate(&cfg, &a.out)?;
    println!("wrote {} stock-days to {}", paths.len(), a.out.display());
    for (h, c) in &manifest.totals {
        let n: usize = c.iter().sum::<usize>().max(1);
        let pct = |v: usize| 100.0 * v as f64 / n as f64;
        println!("horizon {h:>2}: down {:.1}%  flat {:.1}%  up {:.1}%  ({n} labels)", pct(c[0]), pct(c[1]), pct(c[2]));
    }
    Ok(())
}

fn ingest(a: IngestArgs) -> Result<()> {
    if let Some(out) = &a.out {
        fs::create_dir_all(out).map_err(|e| Error::Format(format!("{}: {e}", out.display())))?;
    }
    let mut bad = 0usize;
    for p in &a.paths {
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if name.ends_with(EVENTS_SUFFIX) {
            if !meta_path_for(p).exists() {
                return Err(Error::Format(format!("{}: missing metadata sidecar", p.display())));
            }
            let (stream, report) = read_event_file(p)?;
            println!(
                "{}: {} rows, {} accepted, {} rejected ({})",
                p.display(),
                report.rows,
                report.accepted,
                report.rejected,
                stream.meta.key
            );
            for (line, why) in &report.rejected_rows {
                println!("  line {line}: {why}");
            }
            bad += report.rejected;
        } else if name.ends_with(".lobf") {
            let m = read_matrix(p)?;
            print!("{}: {} x {} matrix", p.display(), m.rows, m.cols);
            if let Some(out) = &a.out {
                let dest = out.join(name);
                write_matrix(&dest, &m)?;
                let back = read_matrix(&dest)?;
                let same = back.rows == m.rows && back.cols == m.cols && back.data.iter().zip(&m.data).all(|(x, y)| x.to_bits() == y.to_bits());
                if !same {
                    return Err(Error::Format(format!("{} did not round-trip bit-exactly", dest.display())));
                }
                print!(", copied to {} (bit-exact)", dest.display());
            }
            println!();
        } else {
            return Err(Error::Format(format!("{}: expected *{EVENTS_SUFFIX} or *.lobf", p.display())));
        }
    }
    println!("{bad} malformed rows in total");
    Ok(())
}

fn features(a: FeaturesArgs) -> Result<()> {
    let t = Instant::now();
    let (days, reports) = featurize_events_dir(&a.events)?;
    let secs = t.elapsed().as_secs_f64();
    write_feature_store(&a.out, &days)?;
    write_json(&a.out.join("sources.json"), &reports)?;
    let blocks: usize = reports.iter().map(|r| r.blocks).sum();
    let rows: usize = reports.iter().map(|r| r.feature_rows).sum();
    let malformed: usize = reports.iter().map(|r| r.malformed_rows).sum();
    let rejected: usize = reports.iter().map(|r| r.rejected_events).sum();
    println!(
        "{} stock-days, {blocks} blocks, {rows} feature rows ({:.0} blocks/s); {malformed} malformed rows, {rejected} rejected events",
        days.len(),
        blocks as f64 / secs
    );
    Ok(())
}

fn labels(a: LabelsArgs) -> Result<()> {
    let gamma = match a.gamma {
        Some(g) => g,
        None => lobcast::labeling::default_gamma(a.horizon)
            .ok_or_else(|| Error::InvalidParam(format!("no default gamma for horizon {}; pass --gamma", a.horizon)))?,
    };
    let params = LabelParams::new(a.n_beta, a.horizon, gamma)?;
    let days = load_days(&DataConfig {
        events: a.events,
        features: a.features,
    })?;
    fs::create_dir_all(&a.out).map_err(|e| Error::Format(format!("{}: {e}", a.out.display())))?;
    let mut streams = Vec::new();
    let mut totals = [0usize; 3];
    for day in &days {
        let series = label_series(&day.mids, &params)?;
        let file = format!("{}.labels.csv", stream_stem(&day.key));
        write_label_file(&a.out.join(&file), &series)?;
        let c = series.class_counts();
        for i in 0..3 {
            totals[i] += c[i];
        }
        streams.push(LabelManifestEntry {
            stock_id: day.key.stock_id.clone(),
            day_id: day.key.day_id,
            file,
            class_counts: c,
        });
    }
    write_json(
        &a.out.join("labels.json"),
        &LabelManifest {
            params,
            streams,
            class_counts: totals,
        },
    )?;
    println!("{} stock-days labelled; down/flat/up = {}/{}/{}", days.len(), totals[0], totals[1], totals[2]);
    Ok(())
}

fn parse_days(spec: &str) -> Result<BTreeSet<u32>> {
    let mut out = BTreeSet::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |s: &str| s.trim().parse::<u32>().map_err(|_| Error::InvalidParam(format!("bad day list {spec:?}")));
        match part.split_once('-') {
            Some((a, b)) => out.extend(num(a)?..=num(b)?),
            None => {
                out.insert(num(part)?);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidParam(format!("empty day list {spec:?}")));
    }
    Ok(out)
}

fn train(a: TrainArgs) -> Result<()> {
    let cfg = a.exp.config()?;
    let data = Dataset::build(load_days(&cfg.data)?, cfg.label_params()?)?;
    let keys: Option<BTreeSet<StockDay>> = match &a.days {
        Some(spec) => {
            let days = parse_days(spec)?;
            Some(data.keys().into_iter().filter(|k| days.contains(&k.day_id)).collect())
        }
        None => None,
    };
    let (bundle, diag, audit) = train_bundle(&cfg, &data, keys.as_ref())?;
    if !audit.passed() {
        return Err(Error::Format(format!("leakage audit failed: {:?}", audit.violations)));
    }
    let dir = a.model.unwrap_or_else(|| cfg.output.join("model"));
    bundle.save(&dir)?;
    write_json(&dir.join("training.json"), &serde_json::json!({ "diagnostics": diag, "audit": audit, "config": cfg }))?;
    println!(
        "trained {} on {} rows ({} → {} inputs); bundle in {}",
        cfg.classifier.name(),
        diag.train_rows_used,
        cfg.representation,
        diag.input_dim,
        dir.display()
    );
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let bundle = ModelBundle::load(&a.model)?;
    let days = load_days(&DataConfig {
        events: a.events,
        features: a.features,
    })?;
    fs::create_dir_all(&a.out).map_err(|e| Error::Format(format!("{}: {e}", a.out.display())))?;
    let mut scratch = vec![0.0; WINDOW * FEATURES];
    let mut x = vec![0.0; bundle.featurizer.dim()];
    let mut total = 0usize;
    for day in &days {
        let path = a.out.join(format!("{}.predictions.csv", stream_stem(&day.key)));
        let f = fs::File::create(&path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        let io = |e: std::io::Error| Error::Format(format!("{}: {e}", path.display()));
        let mut w = PredictionWriter::new(BufWriter::new(f)).map_err(io)?;
        for end in WINDOW - 1..day.vectors.len() {
            let raw: Vec<&[f64]> = day.vectors[end + 1 - WINDOW..=end].iter().map(|v| &v.values[..]).collect();
            bundle.featurizer.transform_into(&raw, &mut scratch, &mut x)?;
            let (label, scores) = bundle.classifier.predict(&x)?;
            w.write(day.vectors[end].block_index, label, scores).map_err(io)?;
            total += 1;
        }
        w.finish().map_err(io)?;
    }
    println!("{total} predictions over {} stock-days in {}", days.len(), a.out.display());
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let cfg = match &a.replay {
        Some(m) => {
            let mut cfg = config_from_manifest(m)?;
            if let Some(o) = &a.exp.output {
                cfg.output = o.clone();
            }
            cfg
        }
        None => a.exp.config()?,
    };
    let out = run_experiment(&cfg)?;
    let failed: Vec<_> = out.manifest.folds.iter().filter(|f| f.status != "ok").collect();
    print!("{}", format_summary(&summarize(&out.rows)));
    for f in &failed {
        eprintln!("fold {} failed: {}", f.fold, f.error.as_deref().unwrap_or("?"));
    }
    println!(
        "{} folds ok, {} failed; leakage audit {}; results in {}",
        out.rows.len(),
        failed.len(),
        if out.manifest.audit_passed { "passed" } else { "FAILED" },
        out.results_path().display()
    );
    if !out.manifest.audit_passed {
        return Err(Error::Format("leakage audit failed".into()));
    }
    if out.rows.is_empty() {
        return Err(Error::Format("every fold failed".into()));
    }
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let mut rng = seed::rng(a.seed, "bench");
    let rows = |dim: usize, rng: &mut seed::Rng| -> Vec<f64> { (0..dim * a.runs.max(1000)).map(|_| StandardNormal.sample(rng)).collect() };
    let mut reports = Vec::new();
    if let Some(dir) = &a.model {
        let b = ModelBundle::load(dir)?;
        let d = b.classifier.input_dim();
        reports.push((b.featurizer.representation.name().to_string(), benchmark_predict(&b.classifier, &rows(d, &mut rng), a.runs)?));
    } else {
        for name in &a.representations {
            let dim = Representation::parse(name, true)?.dim(24, 128);
            let x = rows(dim, &mut rng);
            for m in reference_models(dim, &mut rng)? {
                reports.push((name.clone(), benchmark_predict(&m, &x, a.runs)?));
            }
        }
    }
    if a.json {
        let v: Vec<_> = reports.iter().map(|(r, rep)| serde_json::json!({ "representation": r, "report": rep })).collect();
        println!("{}", serde_json::to_string_pretty(&v).map_err(|e| Error::Format(e.to_string()))?);
        return Ok(());
    }
    println!("{:<10} {:<5} {:>5} {:>10} {:>10} {:>12} {:>12}", "repr", "clf", "dim", "mean ms", "median ms", "single/s", "batch/s");
    for (r, rep) in &reports {
        println!(
            "{:<10} {:<5} {:>5} {:>10.4} {:>10.4} {:>12.0} {:>12.0}",
            r,
            rep.classifier.name(),
            rep.input_dim,
            rep.mean_ms,
            rep.median_ms,
            rep.single_per_s,
            rep.batch_per_s
        );
    }
    if a.model.is_none() {
        for name in &a.representations {
            let group: Vec<_> = reports.iter().filter(|(r, _)| r == name).map(|(_, x)| x.clone()).collect();
            println!("{name}: SVM ≤ SLFN ≤ MLP {}", if ordering_holds(&group) { "holds" } else { "does not hold" });
        }
    }
    Ok(())
}

fn load_rows(paths: &[PathBuf]) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for p in paths {
        rows.extend(read_results(p)?);
    }
    if rows.is_empty() {
        return Err(Error::Empty("result tables"));
    }
    Ok(rows)
}

fn stats(a: StatsArgs) -> Result<()> {
    let rows = load_rows(&a.results)?;
    let treatment: fn(&ResultRow) -> String = match a.treatment.as_str() {
        "classifier" => |r| r.classifier.clone(),
        "representation" => |r| r.representation.clone(),
        other => return Err(Error::InvalidParam(format!("unknown treatment {other:?} (classifier, representation)"))),
    };
    let by_classifier = a.treatment == "classifier";
    let dataset = move |r: &ResultRow| {
        let other = if by_classifier { &r.representation } else { &r.classifier };
        format!("{}/h{}/{}/{}", r.protocol, r.horizon, other, r.fold)
    };
    let (treatments, datasets, scores) = score_matrix(&rows, treatment, dataset);
    let cmp = compare(treatments, &scores)?;
    println!("Friedman over {} datasets, {} treatments: chi2 = {:.4}, p = {:e}", datasets.len(), cmp.treatments.len(), cmp.statistic, cmp.p_value);
    let cd = nemenyi_cd(cmp.treatments.len(), datasets.len(), a.alpha)?;
    println!("Nemenyi CD (alpha = {}) = {:.4}", a.alpha, cd);
    let mut order: Vec<usize> = (0..cmp.treatments.len()).collect();
    order.sort_by(|&x, &y| cmp.average_ranks[x].total_cmp(&cmp.average_ranks[y]));
    for i in order {
        println!("  {:<12} average rank {:.3}", cmp.treatments[i], cmp.average_ranks[i]);
    }
    for (x, y, sig) in nemenyi_compare(&cmp.average_ranks, cd) {
        println!(
            "  {} vs {}: |Δrank| = {:.3} {}",
            cmp.treatments[x],
            cmp.treatments[y],
            (cmp.average_ranks[x] - cmp.average_ranks[y]).abs(),
            if sig { "significant" } else { "not significant" }
        );
    }
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    print!("{}", format_summary(&summarize(&load_rows(&a.results)?)));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let res = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Ingest(a) => ingest(a),
        Command::Features(a) => features(a),
        Command::Labels(a) => labels(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Bench(a) => bench(a),
        Command::Stats(a) => stats(a),
        Command::Report(a) => report(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

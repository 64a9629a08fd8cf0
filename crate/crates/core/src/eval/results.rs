use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::{Error, Result};

pub const RESULTS_HEADER: &str = "protocol,horizon,representation,classifier,fold,macro_precision,macro_recall,macro_f";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub protocol: String,
    pub horizon: usize,
    pub representation: String,
    pub classifier: String,
    pub fold: String,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f: f64,
}

impl ResultRow {
    pub fn configuration(&self) -> String {
        format!("{}/h{}/{}/{}", self.protocol, self.horizon, self.representation, self.classifier)
    }
}

pub fn format_results(rows: &[ResultRow]) -> String {
    let mut s = String::from(RESULTS_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.protocol, r.horizon, r.representation, r.classifier, r.fold, r.macro_precision, r.macro_recall, r.macro_f
        );
    }
    s
}

pub fn write_results(path: &Path, rows: &[ResultRow]) -> Result<()> {
    std::fs::write(path, format_results(rows)).map_err(|e| Error::io(path, e))
}

pub fn parse_results(text: &str, path: &Path) -> Result<Vec<ResultRow>> {
    let perr = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == RESULTS_HEADER => {}
        _ => return Err(perr(1, format!("expected header {RESULTS_HEADER:?}"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(perr(i + 1, format!("expected 8 fields, found {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| perr(i + 1, format!("bad number {s:?}")));
        rows.push(ResultRow {
            protocol: f[0].to_string(),
            horizon: f[1].parse().map_err(|_| perr(i + 1, format!("bad horizon {:?}", f[1])))?,
            representation: f[2].to_string(),
            classifier: f[3].to_string(),
            fold: f[4].to_string(),
            macro_precision: num(f[5])?,
            macro_recall: num(f[6])?,
            macro_f: num(f[7])?,
        });
    }
    Ok(rows)
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_results(&text, path)
}

/// Mean and sample standard deviation (n − 1); std is 0 for a single value.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub protocol: String,
    pub horizon: usize,
    pub representation: String,
    pub classifier: String,
    pub folds: usize,
    pub precision: (f64, f64),
    pub recall: (f64, f64),
    pub f: (f64, f64),
}

pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, usize, String, String), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.protocol.clone(), r.horizon, r.representation.clone(), r.classifier.clone()))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((protocol, horizon, representation, classifier), g)| {
            let col = |f: fn(&ResultRow) -> f64| mean_std(&g.iter().map(|r| f(r)).collect::<Vec<_>>());
            SummaryRow {
                protocol,
                horizon,
                representation,
                classifier,
                folds: g.len(),
                precision: col(|r| r.macro_precision),
                recall: col(|r| r.macro_recall),
                f: col(|r| r.macro_f),
            }
        })
        .collect()
}

pub fn format_summary(summary: &[SummaryRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<9} {:>3}  {:<10} {:<5} {:>5}  {:>15}  {:>15}  {:>15}",
        "protocol", "h", "repr", "clf", "folds", "precision", "recall", "F-score"
    );
    for r in summary {
        let pm = |(m, sd): (f64, f64)| format!("{m:.2} ± {sd:.2}");
        let _ = writeln!(
            s,
            "{:<9} {:>3}  {:<10} {:<5} {:>5}  {:>15}  {:>15}  {:>15}",
            r.protocol,
            r.horizon,
            r.representation,
            r.classifier,
            r.folds,
            pm(r.precision),
            pm(r.recall),
            pm(r.f)
        );
    }
    s.push_str("(± is the sample standard deviation across folds)\n");
    s
}

/// Build `scores[dataset][treatment]` of macro F, where a treatment is the
/// value of `treatment` and a dataset is everything else about the row.
/// Datasets missing any treatment are dropped.
pub fn score_matrix(rows: &[ResultRow], treatment: impl Fn(&ResultRow) -> String, dataset: impl Fn(&ResultRow) -> String) -> (Vec<String>, Vec<String>, Vec<Vec<f64>>) {
    let mut cells: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    let mut treatments = std::collections::BTreeSet::new();
    for r in rows {
        let t = treatment(r);
        treatments.insert(t.clone());
        cells.entry(dataset(r)).or_default().insert(t, r.macro_f);
    }
    let treatments: Vec<String> = treatments.into_iter().collect();
    let mut names = Vec::new();
    let mut scores = Vec::new();
    for (d, m) in cells {
        if treatments.iter().all(|t| m.contains_key(t)) {
            scores.push(treatments.iter().map(|t| m[t]).collect());
            names.push(d);
        }
    }
    (treatments, names, scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(clf: &str, fold: &str, f: f64) -> ResultRow {
        ResultRow {
            protocol: "anchored".into(),
            horizon: 10,
            representation: "concat".into(),
            classifier: clf.into(),
            fold: fold.into(),
            macro_precision: f + 1.0,
            macro_recall: f - 1.0,
            macro_f: f,
        }
    }

    #[test]
    fn table_round_trips() {
        let rows = vec![row("svm", "d2", 41.25), row("mlp", "d2", 1.0 / 3.0)];
        let text = format_results(&rows);
        assert!(text.starts_with(RESULTS_HEADER));
        assert_eq!(parse_results(&text, Path::new("x")).unwrap(), rows);
    }

    #[test]
    fn summary_uses_sample_std() {
        let rows = vec![row("svm", "d2", 40.0), row("svm", "d3", 44.0)];
        let s = summarize(&rows);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].f, (42.0, 8f64.sqrt()));
    }

    #[test]
    fn score_matrix_keeps_complete_datasets() {
        let rows = vec![row("svm", "d2", 40.0), row("mlp", "d2", 45.0), row("svm", "d3", 41.0)];
        let (t, d, s) = score_matrix(&rows, |r| r.classifier.clone(), |r| r.fold.clone());
        assert_eq!(t, vec!["mlp", "svm"]);
        assert_eq!(d, vec!["d2"]);
        assert_eq!(s, vec![vec![45.0, 40.0]]);
    }
}

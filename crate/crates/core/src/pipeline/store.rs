//! Loading stock-days from event files and the on-disk feature store.
//!
//! A feature store directory holds `store.json` plus, per stock-day stem,
//! `<stem>.features.lobf` (one row per post-warm-up block),
//! `<stem>.index.csv` (row origins) and `<stem>.mids.lobf` (one mid price per
//! block, warm-up included).

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::book::io::{list_event_files, read_event_file, stream_stem};
use crate::book::{block_stream, StockDay};
use crate::features::io::{read_index, read_matrix, write_index, write_matrix, FeatureMatrix, RowIndex};
use crate::features::{extract_day, DayFeatures, FeatureVector, FEATURES};
use crate::{Error, Result};

use super::config::DataConfig;

pub const STORE_FILE: &str = "store.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreEntry {
    pub stock_id: String,
    pub day_id: u32,
    pub stem: String,
    pub tick_size: f64,
    pub blocks: usize,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreManifest {
    pub features: usize,
    pub entries: Vec<StoreEntry>,
}

/// What happened to one event file on the way to features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceReport {
    pub file: PathBuf,
    pub stock_id: String,
    pub day_id: u32,
    pub rows: usize,
    pub malformed_rows: usize,
    pub rejected_events: usize,
    pub blocks: usize,
    pub feature_rows: usize,
}

/// Replay and featurize one event file.
pub fn featurize_event_file(path: &Path) -> Result<(DayFeatures, SourceReport)> {
    let (stream, ingest) = read_event_file(path)?;
    let blocks = block_stream(&stream);
    let day = extract_day(&blocks)?;
    let report = SourceReport {
        file: path.to_path_buf(),
        stock_id: day.key.stock_id.clone(),
        day_id: day.key.day_id,
        rows: ingest.rows,
        malformed_rows: ingest.rejected,
        rejected_events: blocks.stats.rejected,
        blocks: blocks.blocks.len(),
        feature_rows: day.vectors.len(),
    };
    Ok((day, report))
}

/// Featurize every event file in `dir` in parallel, sorted by stock-day.
pub fn featurize_events_dir(dir: &Path) -> Result<(Vec<DayFeatures>, Vec<SourceReport>)> {
    let files = list_event_files(dir)?;
    if files.is_empty() {
        return Err(Error::Empty("event directory"));
    }
    let mut out: Vec<(DayFeatures, SourceReport)> = files
        .par_iter()
        .map(|p| featurize_event_file(p))
        .collect::<Result<_>>()?;
    out.sort_by(|a, b| a.0.key.cmp(&b.0.key));
    Ok(out.into_iter().unzip())
}

pub fn write_feature_store(dir: &Path, days: &[DayFeatures]) -> Result<StoreManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(days.len());
    for day in days {
        let stem = stream_stem(&day.key);
        let mut m = FeatureMatrix::new(FEATURES);
        m.data.reserve(day.vectors.len() * FEATURES);
        let mut index = Vec::with_capacity(day.vectors.len());
        for v in &day.vectors {
            m.push_row(&v.values)?;
            index.push(RowIndex {
                key: day.key.clone(),
                timestamp: v.timestamp,
                block_index: v.block_index,
            });
        }
        write_matrix(&dir.join(format!("{stem}.features.lobf")), &m)?;
        write_index(&dir.join(format!("{stem}.index.csv")), &index)?;
        let mids = FeatureMatrix {
            rows: day.mids.len(),
            cols: 1,
            data: day.mids.clone(),
        };
        write_matrix(&dir.join(format!("{stem}.mids.lobf")), &mids)?;
        entries.push(StoreEntry {
            stock_id: day.key.stock_id.clone(),
            day_id: day.key.day_id,
            stem,
            tick_size: day.tick_size,
            blocks: day.mids.len(),
            rows: day.vectors.len(),
        });
    }
    let manifest = StoreManifest {
        features: FEATURES,
        entries,
    };
    let path = dir.join(STORE_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn read_store_manifest(dir: &Path) -> Result<StoreManifest> {
    let path = dir.join(STORE_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let m: StoreManifest = serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if m.features != FEATURES {
        return Err(Error::Format(format!("store has {} features, expected {FEATURES}", m.features)));
    }
    Ok(m)
}

fn read_store_entry(dir: &Path, e: &StoreEntry) -> Result<DayFeatures> {
    let key = StockDay::new(e.stock_id.clone(), e.day_id);
    let m = read_matrix(&dir.join(format!("{}.features.lobf", e.stem)))?;
    let index = read_index(&dir.join(format!("{}.index.csv", e.stem)))?;
    let mids = read_matrix(&dir.join(format!("{}.mids.lobf", e.stem)))?;
    if m.cols != FEATURES || m.rows != e.rows || index.len() != m.rows || mids.cols != 1 || mids.rows != e.blocks {
        return Err(Error::Format(format!("feature store entry {} is inconsistent", e.stem)));
    }
    let mut vectors = Vec::with_capacity(m.rows);
    for (i, (row, ix)) in m.iter_rows().zip(&index).enumerate() {
        let first = index.first().map_or(0, |r| r.block_index);
        if ix.key != key || ix.block_index != first + i || ix.block_index >= e.blocks {
            return Err(Error::Format(format!("{}: row {i} has a bad index entry", e.stem)));
        }
        vectors.push(FeatureVector {
            values: row.try_into().expect("144 columns"),
            block_index: ix.block_index,
            timestamp: ix.timestamp,
        });
    }
    Ok(DayFeatures {
        key,
        tick_size: e.tick_size,
        mids: mids.data,
        vectors,
    })
}

pub fn read_feature_store(dir: &Path) -> Result<Vec<DayFeatures>> {
    let manifest = read_store_manifest(dir)?;
    let mut days: Vec<DayFeatures> = manifest
        .entries
        .par_iter()
        .map(|e| read_store_entry(dir, e))
        .collect::<Result<_>>()?;
    days.sort_by(|a, b| a.key.cmp(&b.key));
    Ok(days)
}

/// Load every stock-day named by the data source.
pub fn load_days(data: &DataConfig) -> Result<Vec<DayFeatures>> {
    match (&data.events, &data.features) {
        (Some(dir), None) => Ok(featurize_events_dir(dir)?.0),
        (None, Some(dir)) => read_feature_store(dir),
        _ => Err(Error::Config("exactly one of data.events and data.features must be set".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_generate, MarketConfig};

    #[test]
    fn events_and_store_agree() {
        let tmp = tempfile::tempdir().unwrap();
        let ev = tmp.path().join("ev");
        let cfg = MarketConfig {
            stocks: 2,
            days: 1,
            events_per_day: 3000,
            ..Default::default()
        };
        synth_generate(&cfg, &ev).unwrap();
        let (days, reports) = featurize_events_dir(&ev).unwrap();
        assert_eq!(days.len(), 2);
        assert!(reports.iter().all(|r| r.malformed_rows == 0 && r.rejected_events == 0));
        let store = tmp.path().join("store");
        write_feature_store(&store, &days).unwrap();
        let back = read_feature_store(&store).unwrap();
        for (a, b) in days.iter().zip(&back) {
            assert_eq!(a.key, b.key);
            assert_eq!(a.mids, b.mids);
            assert_eq!(a.vectors, b.vectors);
        }
    }
}

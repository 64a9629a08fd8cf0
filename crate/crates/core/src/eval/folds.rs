use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::book::StockDay;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    #[serde(alias = "anchored_walk_forward")]
    Anchored,
    #[serde(alias = "holdout_per_stock")]
    Holdout,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Anchored => "anchored",
            Protocol::Holdout => "holdout",
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "anchored" | "anchored_walk_forward" => Ok(Protocol::Anchored),
            "holdout" | "holdout_per_stock" => Ok(Protocol::Holdout),
            _ => Err(Error::InvalidParam(format!("unknown protocol {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Fold {
    pub id: usize,
    pub name: String,
    pub train: BTreeSet<StockDay>,
    pub test: BTreeSet<StockDay>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldPlan {
    pub protocol: Protocol,
    pub folds: Vec<Fold>,
    pub warnings: Vec<String>,
}

/// Fold `d` trains on the first `d` days of every stock and tests on day `d+1`.
pub fn make_anchored_folds(keys: &[StockDay]) -> Result<FoldPlan> {
    let days: BTreeSet<u32> = keys.iter().map(|k| k.day_id).collect();
    if days.len() < 2 {
        return Err(Error::InvalidParam(format!("anchored walk-forward needs ≥ 2 days, found {}", days.len())));
    }
    let days: Vec<u32> = days.into_iter().collect();
    let mut by_stock: BTreeMap<&str, BTreeSet<u32>> = BTreeMap::new();
    for k in keys {
        by_stock.entry(&k.stock_id).or_default().insert(k.day_id);
    }
    let mut warnings = Vec::new();
    for (stock, have) in &by_stock {
        for d in days.iter().filter(|d| !have.contains(d)) {
            warnings.push(format!("stock {stock} has no data for day {d}; folds skip that stock-day"));
        }
    }
    let all: BTreeSet<StockDay> = keys.iter().cloned().collect();
    let folds = (1..days.len())
        .map(|i| Fold {
            id: i,
            name: format!("d{}", days[i]),
            train: all.iter().filter(|k| k.day_id <= days[i - 1]).cloned().collect(),
            test: all.iter().filter(|k| k.day_id == days[i]).cloned().collect(),
        })
        .collect();
    Ok(FoldPlan {
        protocol: Protocol::Anchored,
        folds,
        warnings,
    })
}

/// One fold per stock: train on every other stock, test on the held-out one.
pub fn make_holdout_folds(keys: &[StockDay]) -> Result<FoldPlan> {
    let stocks: BTreeSet<&str> = keys.iter().map(|k| k.stock_id.as_str()).collect();
    if stocks.len() < 2 {
        return Err(Error::InvalidParam(format!("hold-out needs ≥ 2 stocks, found {}", stocks.len())));
    }
    let all: BTreeSet<StockDay> = keys.iter().cloned().collect();
    let folds = stocks
        .iter()
        .enumerate()
        .map(|(i, s)| Fold {
            id: i + 1,
            name: (*s).to_string(),
            train: all.iter().filter(|k| k.stock_id != *s).cloned().collect(),
            test: all.iter().filter(|k| k.stock_id == *s).cloned().collect(),
        })
        .collect();
    Ok(FoldPlan {
        protocol: Protocol::Holdout,
        folds,
        warnings: Vec::new(),
    })
}

pub fn make_folds(protocol: Protocol, keys: &[StockDay]) -> Result<FoldPlan> {
    match protocol {
        Protocol::Anchored => make_anchored_folds(keys),
        Protocol::Holdout => make_holdout_folds(keys),
    }
}

impl Fold {
    /// Structural leakage check for one fold under `protocol`.
    pub fn check_isolation(&self, protocol: Protocol) -> std::result::Result<(), String> {
        if self.test.is_empty() || self.train.is_empty() {
            return Err(format!("fold {} has an empty partition", self.name));
        }
        match protocol {
            Protocol::Anchored => {
                let max_train = self.train.iter().map(|k| k.day_id).max().unwrap();
                if let Some(k) = self.test.iter().find(|k| k.day_id <= max_train) {
                    return Err(format!("fold {}: test {k} is not after the last training day {max_train}", self.name));
                }
            }
            Protocol::Holdout => {
                let train: BTreeSet<&str> = self.train.iter().map(|k| k.stock_id.as_str()).collect();
                if let Some(k) = self.test.iter().find(|k| train.contains(k.stock_id.as_str())) {
                    return Err(format!("fold {}: test stock of {k} also appears in training", self.name));
                }
            }
        }
        Ok(())
    }
}

impl FoldPlan {
    pub fn check_isolation(&self) -> std::result::Result<(), String> {
        self.folds.iter().try_for_each(|f| f.check_isolation(self.protocol))
    }
}

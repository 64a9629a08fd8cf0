//! Three-class mid-price direction labels.
//!
//! `m_β(t)` is the trailing mean of the last `n_beta` mid prices (current
//! included), `m_α(t)` the mean of the next `n_alpha` smoothed values
//! (current excluded). The label is `+1` when `m_α > m_β (1 + γ)`, `-1`
//! when `m_α < m_β (1 - γ)`, `0` otherwise. All window sums run
//! oldest-to-newest starting from `0.0`, so any implementation that follows
//! the same order agrees bit for bit.

use std::collections::VecDeque;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smoothing window length used throughout.
pub const DEFAULT_N_BETA: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelParams {
    pub n_beta: usize,
    pub n_alpha: usize,
    pub gamma: f64,
}

impl LabelParams {
    pub fn new(n_beta: usize, n_alpha: usize, gamma: f64) -> Result<Self> {
        let p = Self { n_beta, n_alpha, gamma };
        p.validate()?;
        Ok(p)
    }

    /// Standard pairing: horizon 1, 5, 10 with γ = 1e-4, 2e-4, 3e-4.
    pub fn for_horizon(n_alpha: usize) -> Result<Self> {
        let gamma = default_gamma(n_alpha)
            .ok_or_else(|| Error::InvalidParam(format!("no default gamma for horizon {n_alpha}")))?;
        Self::new(DEFAULT_N_BETA, n_alpha, gamma)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_beta == 0 || self.n_alpha == 0 {
            return Err(Error::InvalidParam("n_beta and n_alpha must be >= 1".into()));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParam(format!("gamma {} must be >= 0", self.gamma)));
        }
        Ok(())
    }
}

pub fn default_gamma(n_alpha: usize) -> Option<f64> {
    match n_alpha {
        1 => Some(0.0001),
        5 => Some(0.0002),
        10 => Some(0.0003),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Down,
    Flat,
    Up,
}

impl Label {
    /// Fixed class order (−1, 0, +1).
    pub const ALL: [Label; 3] = [Label::Down, Label::Flat, Label::Up];

    pub fn value(self) -> i8 {
        match self {
            Label::Down => -1,
            Label::Flat => 0,
            Label::Up => 1,
        }
    }

    pub fn from_value(v: i8) -> Option<Self> {
        match v {
            -1 => Some(Label::Down),
            0 => Some(Label::Flat),
            1 => Some(Label::Up),
            _ => None,
        }
    }

    /// 0, 1, 2 for −1, 0, +1.
    pub fn class_index(self) -> usize {
        self as usize
    }

    pub fn from_class_index(i: usize) -> Self {
        Self::ALL[i]
    }
}

fn window_mean<'a>(values: impl Iterator<Item = &'a f64>, n: usize) -> f64 {
    let mut sum = 0.0;
    for v in values {
        sum += v;
    }
    sum / n as f64
}

/// Trailing mean over `n_beta` values; element `k` belongs to time
/// `k + n_beta - 1`. Empty when the input is shorter than the window.
pub fn smooth_mid(mids: &[f64], n_beta: usize) -> Vec<f64> {
    if n_beta == 0 || mids.len() < n_beta {
        return Vec::new();
    }
    mids.windows(n_beta).map(|w| window_mean(w.iter(), n_beta)).collect()
}

/// Labels aligned to block indices `first..first + labels.len()`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelSeries {
    pub first: usize,
    pub labels: Vec<Label>,
}

impl LabelSeries {
    /// Inclusive (first, last) block index with a defined label.
    pub fn valid_range(&self) -> Option<(usize, usize)> {
        (!self.labels.is_empty()).then(|| (self.first, self.first + self.labels.len() - 1))
    }

    pub fn get(&self, t: usize) -> Option<Label> {
        t.checked_sub(self.first).and_then(|i| self.labels.get(i).copied())
    }

    pub fn class_counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for l in &self.labels {
            c[l.class_index()] += 1;
        }
        c
    }
}

/// Online labeler: feed mid prices in order, receive `(t, label)` as soon
/// as the horizon for `t` has been observed.
#[derive(Debug, Clone)]
pub struct Labeler {
    params: LabelParams,
    mids: VecDeque<f64>,
    smoothed: VecDeque<f64>,
    seen: usize,
}

impl Labeler {
    pub fn new(params: LabelParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            mids: VecDeque::with_capacity(params.n_beta),
            smoothed: VecDeque::with_capacity(params.n_alpha + 1),
            seen: 0,
        })
    }

    pub fn push(&mut self, mid: f64) -> Option<(usize, Label)> {
        let LabelParams { n_beta, n_alpha, gamma } = self.params;
        self.seen += 1;
        self.mids.push_back(mid);
        if self.mids.len() > n_beta {
            self.mids.pop_front();
        }
        if self.mids.len() < n_beta {
            return None;
        }
        self.smoothed.push_back(window_mean(self.mids.iter(), n_beta));
        if self.smoothed.len() > n_alpha + 1 {
            self.smoothed.pop_front();
        }
        if self.smoothed.len() < n_alpha + 1 {
            return None;
        }
        let m_beta = self.smoothed[0];
        let m_alpha = window_mean(self.smoothed.iter().skip(1), n_alpha);
        let label = if m_alpha > m_beta * (1.0 + gamma) {
            Label::Up
        } else if m_alpha < m_beta * (1.0 - gamma) {
            Label::Down
        } else {
            Label::Flat
        };
        Some((self.seen - 1 - n_alpha, label))
    }
}

/// Label a single stock-day mid-price series.
pub fn label_series(mids: &[f64], params: &LabelParams) -> Result<LabelSeries> {
    let mut labeler = Labeler::new(*params)?;
    let mut out = LabelSeries {
        first: params.n_beta - 1,
        labels: Vec::with_capacity(mids.len()),
    };
    for &m in mids {
        if let Some((_, l)) = labeler.push(m) {
            out.labels.push(l);
        }
    }
    Ok(out)
}

/// Write `block_index,label` rows.
pub fn write_label_file(path: &Path, series: &LabelSeries) -> Result<()> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let io = |e| Error::io(path, e);
    writeln!(w, "block_index,label").map_err(io)?;
    for (i, l) in series.labels.iter().enumerate() {
        writeln!(w, "{},{}", series.first + i, l.value()).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Read `block_index,label` rows into (block index, label) pairs.
pub fn read_label_file(path: &Path) -> Result<Vec<(usize, Label)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let perr = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    if lines.next() != Some("block_index,label") {
        return Err(perr(1, "expected header block_index,label".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let (b, v) = l.split_once(',').ok_or_else(|| perr(i + 2, "expected 2 fields".into()))?;
            let b = b.parse::<usize>().map_err(|e| perr(i + 2, e.to_string()))?;
            let v = v
                .parse::<i8>()
                .ok()
                .and_then(Label::from_value)
                .ok_or_else(|| perr(i + 2, format!("bad label {v:?}")))?;
            Ok((b, v))
        })
        .collect()
}

/// Run manifest written next to label files.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LabelManifest {
    pub params: LabelParams,
    pub streams: Vec<LabelManifestEntry>,
    /// Totals in class order (−1, 0, +1).
    pub class_counts: [usize; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LabelManifestEntry {
    pub stock_id: String,
    pub day_id: u32,
    pub file: String,
    pub class_counts: [usize; 3],
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct evaluation of the three formulas for one index, windows
    /// summed oldest first.
    fn oracle(p: &[f64], t: usize, prm: &LabelParams) -> Label {
        let mb = |s: usize| {
            let mut sum = 0.0;
            for i in (s + 1 - prm.n_beta)..=s {
                sum += p[i];
            }
            sum / prm.n_beta as f64
        };
        let m_beta = mb(t);
        let mut sum = 0.0;
        for i in 1..=prm.n_alpha {
            sum += mb(t + i);
        }
        let m_alpha = sum / prm.n_alpha as f64;
        if m_alpha > m_beta * (1.0 + prm.gamma) {
            Label::Up
        } else if m_alpha < m_beta * (1.0 - prm.gamma) {
            Label::Down
        } else {
            Label::Flat
        }
    }

    #[test]
    fn smoothing_examples() {
        assert!(smooth_mid(&[3.0; 12], 9).iter().all(|&m| m == 3.0));
        let p = [1.0, 5.0, 2.0];
        assert_eq!(smooth_mid(&p, 1), p.to_vec());
        let p: Vec<f64> = (1..=9).map(f64::from).collect();
        assert_eq!(smooth_mid(&p, 9), vec![5.0]);
        assert!(smooth_mid(&p[..8], 9).is_empty());
    }

    #[test]
    fn constant_series_is_all_flat() {
        let s = label_series(&[100.0; 50], &LabelParams::for_horizon(5).unwrap()).unwrap();
        assert_eq!(s.labels.len(), 50 - 8 - 5);
        assert!(s.labels.iter().all(|&l| l == Label::Flat));
        assert_eq!(s.valid_range(), Some((8, 44)));
    }

    #[test]
    fn threshold_substitution() {
        // n_beta = n_alpha = 1: m_beta(0) = p0, m_alpha(0) = p1.
        let prm = LabelParams::new(1, 1, 0.0002).unwrap();
        let s = label_series(&[100.0, 100.03], &prm).unwrap();
        assert_eq!(s.labels, vec![Label::Up]);
        let s = label_series(&[100.0, 99.97], &prm).unwrap();
        assert_eq!(s.labels, vec![Label::Down]);
        // Exactly on the boundary: strict inequality keeps it flat.
        let boundary = 100.0 * (1.0 + 0.0002);
        let s = label_series(&[100.0, boundary], &prm).unwrap();
        assert_eq!(s.labels, vec![Label::Flat]);
    }

    #[test]
    fn random_walk_matches_oracle_bitwise() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut p = vec![100.0];
        for _ in 1..10_000 {
            let last = *p.last().unwrap();
            p.push(last + rng.gen_range(-0.02..0.02));
        }
        let prm = LabelParams::new(9, 5, 0.0002).unwrap();
        let s = label_series(&p, &prm).unwrap();
        let (a, b) = s.valid_range().unwrap();
        assert_eq!((a, b), (8, 10_000 - 1 - 5));
        for t in a..=b {
            assert_eq!(s.get(t), Some(oracle(&p, t, &prm)), "t={t}");
        }
    }

    #[test]
    fn short_series_yields_no_labels() {
        let prm = LabelParams::for_horizon(10).unwrap();
        let s = label_series(&[1.0; 18], &prm).unwrap();
        assert!(s.labels.is_empty());
        assert_eq!(s.valid_range(), None);
    }

    #[test]
    fn invalid_params() {
        assert!(LabelParams::new(0, 1, 0.0).is_err());
        assert!(LabelParams::new(1, 0, 0.0).is_err());
        assert!(LabelParams::new(1, 1, -1.0).is_err());
        assert!(LabelParams::for_horizon(3).is_err());
    }

    fn walk(steps: &[f64]) -> Vec<f64> {
        let mut p = vec![50.0];
        for s in steps {
            let last = *p.last().unwrap();
            p.push(last * (1.0 + s));
        }
        p
    }

    proptest! {
        #[test]
        fn flat_count_grows_with_gamma(
            steps in prop::collection::vec(-0.001f64..0.001, 40..200),
            g1 in 0.0f64..0.001,
            g2 in 0.0f64..0.001,
        ) {
            let p = walk(&steps);
            let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
            let a = label_series(&p, &LabelParams::new(9, 5, lo).unwrap()).unwrap();
            let b = label_series(&p, &LabelParams::new(9, 5, hi).unwrap()).unwrap();
            prop_assert!(a.class_counts()[1] <= b.class_counts()[1]);
        }

        #[test]
        fn positive_rescaling_keeps_labels(
            steps in prop::collection::vec(-0.001f64..0.001, 40..200),
            k in prop::sample::select(vec![0.5f64, 2.0, 4.0, 0.25, 1024.0]),
        ) {
            // Power-of-two factors scale every partial sum exactly.
            let p = walk(&steps);
            let q: Vec<f64> = p.iter().map(|x| x * k).collect();
            let prm = LabelParams::new(9, 10, 0.0003).unwrap();
            prop_assert_eq!(label_series(&p, &prm).unwrap(), label_series(&q, &prm).unwrap());
        }

        #[test]
        fn mirrored_deviations_swap_up_and_down(
            devs in prop::collection::vec(-64i32..64, 40..200),
        ) {
            // Dyadic deviations and power-of-two windows keep every mean exact.
            let base = 1024.0;
            let up: Vec<f64> = devs.iter().map(|&d| base + f64::from(d) / 8.0).collect();
            let down: Vec<f64> = devs.iter().map(|&d| base - f64::from(d) / 8.0).collect();
            let prm = LabelParams::new(8, 4, 0.0).unwrap();
            let a = label_series(&up, &prm).unwrap().class_counts();
            let b = label_series(&down, &prm).unwrap().class_counts();
            prop_assert_eq!(a[0], b[2]);
            prop_assert_eq!(a[2], b[0]);
        }
    }
}

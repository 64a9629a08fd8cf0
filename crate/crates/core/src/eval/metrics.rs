use serde::Serialize;

use crate::labeling::Label;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

/// Scores are percentages. Rows of `confusion` are truths, columns
/// predictions, both in class order (−1, 0, +1).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub fold: String,
    pub per_class: [ClassScores; 3],
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f: f64,
    pub confusion: [[u64; 3]; 3],
}

/// An exact non-negative fraction. 0/0 reads as 0.
#[derive(Debug, Clone, Copy)]
struct Fraction {
    num: u128,
    den: u128,
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Fraction {
    fn new(num: u64, den: u64) -> Self {
        if den == 0 {
            Fraction { num: 0, den: 1 }
        } else {
            Fraction { num: num as u128, den: den as u128 }.reduced()
        }
    }

    fn reduced(self) -> Self {
        let g = gcd(self.num, self.den).max(1);
        Fraction {
            num: self.num / g,
            den: self.den / g,
        }
    }

    fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `100 · Σ parts / len` correctly rounded whenever
    /// the reduced fraction fits in 53 bits.
    fn mean_percent(parts: &[Fraction]) -> f64 {
        let exact = parts.iter().try_fold(Fraction { num: 0, den: 1 }, |acc, p| {
            let den = acc.den.checked_mul(p.den)?;
            let num = acc.num.checked_mul(p.den)?.checked_add(p.num.checked_mul(acc.den)?)?;
            Some(Fraction { num, den }.reduced())
        });
        let limit = 1u128 << 53;
        if let Some(Fraction { num, den }) = exact.and_then(|f| {
            Some(Fraction {
                num: f.num.checked_mul(100)?,
                den: f.den.checked_mul(parts.len() as u128)?,
            })
        }) {
            let f = Fraction { num, den }.reduced();
            if f.num < limit && f.den < limit {
                return f.value();
            }
        }
        100.0 * parts.iter().map(|p| p.value()).sum::<f64>() / parts.len() as f64
    }
}

pub fn confusion_matrix(predictions: &[Label], truths: &[Label]) -> [[u64; 3]; 3] {
    let mut c = [[0u64; 3]; 3];
    for (p, t) in predictions.iter().zip(truths) {
        c[t.class_index()][p.class_index()] += 1;
    }
    c
}

/// Per-class precision, recall and F, then their unweighted means.
/// Undefined ratios (0/0) count as 0.
pub fn macro_metrics(predictions: &[Label], truths: &[Label]) -> Result<MetricsReport> {
    if predictions.len() != truths.len() {
        return Err(Error::DimensionMismatch {
            expected: truths.len(),
            got: predictions.len(),
        });
    }
    if truths.is_empty() {
        return Err(Error::Empty("metrics input"));
    }
    let confusion = confusion_matrix(predictions, truths);
    let mut per_class = [ClassScores {
        precision: 0.0,
        recall: 0.0,
        f: 0.0,
    }; 3];
    let mut fractions = [[Fraction::new(0, 1); 3]; 3];
    for c in 0..3 {
        let tp = confusion[c][c];
        let predicted: u64 = (0..3).map(|t| confusion[t][c]).sum();
        let actual: u64 = confusion[c].iter().sum();
        // F = 2PR/(P+R) = 2·TP/(predicted + actual), and 0 when TP = 0.
        fractions[c] = [Fraction::new(tp, predicted), Fraction::new(tp, actual), Fraction::new(2 * tp, predicted + actual)];
        let [p, r, f] = fractions[c];
        per_class[c] = ClassScores {
            precision: Fraction::mean_percent(&[p]),
            recall: Fraction::mean_percent(&[r]),
            f: Fraction::mean_percent(&[f]),
        };
    }
    let column = |i: usize| fractions.map(|f| f[i]);
    Ok(MetricsReport {
        fold: String::new(),
        per_class,
        macro_precision: Fraction::mean_percent(&column(0)),
        macro_recall: Fraction::mean_percent(&column(1)),
        macro_f: Fraction::mean_percent(&column(2)),
        confusion,
    })
}

pub fn accuracy(predictions: &[Label], truths: &[Label]) -> f64 {
    let hits = predictions.iter().zip(truths).filter(|(p, t)| p == t).count();
    hits as f64 / truths.len().max(1) as f64
}

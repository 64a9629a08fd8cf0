use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::{Error, Result};

/// Critical values q_α of the Nemenyi test (studentized range statistic
/// divided by √2, infinite degrees of freedom) for k = 2..=10.
const Q_05: [f64; 9] = [1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164];
const Q_10: [f64; 9] = [1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920];

pub const MAX_TABULATED_K: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankComparison {
    pub treatments: Vec<String>,
    pub datasets: usize,
    pub average_ranks: Vec<f64>,
    pub statistic: f64,
    pub p_value: f64,
}

/// Midranks of one row, rank 1 for the highest score.
pub fn midranks(row: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
    let mut ranks = vec![0.0; row.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && row[order[j + 1]] == row[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Friedman test over `scores[dataset][treatment]`, higher scores ranking first.
pub fn friedman_test(scores: &[Vec<f64>]) -> Result<(f64, f64, Vec<f64>)> {
    let n = scores.len();
    let k = scores.first().map(|r| r.len()).unwrap_or(0);
    if n < 2 || k < 2 {
        return Err(Error::InvalidParam(format!("Friedman test needs k ≥ 2 and n ≥ 2, got k={k}, n={n}")));
    }
    if let Some(r) = scores.iter().find(|r| r.len() != k) {
        return Err(Error::DimensionMismatch { expected: k, got: r.len() });
    }
    if scores.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Friedman scores".into()));
    }
    let mut avg = vec![0.0; k];
    for row in scores {
        for (a, r) in avg.iter_mut().zip(midranks(row)) {
            *a += r;
        }
    }
    avg.iter_mut().for_each(|a| *a /= n as f64);
    let (kf, nf) = (k as f64, n as f64);
    let centre = (kf + 1.0) / 2.0;
    let ss: f64 = avg.iter().map(|r| (r - centre) * (r - centre)).sum();
    let stat = 12.0 * nf / (kf * (kf + 1.0)) * ss;
    let p = if stat <= 0.0 {
        1.0
    } else {
        let chi = ChiSquared::new(kf - 1.0).map_err(|e| Error::InvalidParam(e.to_string()))?;
        chi.sf(stat)
    };
    Ok((stat, p, avg))
}

pub fn nemenyi_q(k: usize, alpha: f64) -> Result<f64> {
    let table = if (alpha - 0.05).abs() < 1e-12 {
        &Q_05
    } else if (alpha - 0.10).abs() < 1e-12 {
        &Q_10
    } else {
        return Err(Error::Untabulated { k, alpha });
    };
    if !(2..=MAX_TABULATED_K).contains(&k) {
        return Err(Error::Untabulated { k, alpha });
    }
    Ok(table[k - 2])
}

/// Critical difference q_α·√(k(k+1)/(6n)).
pub fn nemenyi_cd(k: usize, n: usize, alpha: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParam("Nemenyi CD needs n ≥ 1".into()));
    }
    let q = nemenyi_q(k, alpha)?;
    let (kf, nf) = (k as f64, n as f64);
    Ok(q * (kf * (kf + 1.0) / (6.0 * nf)).sqrt())
}

/// Pairs `(a, b, significant)` for a < b.
pub fn nemenyi_compare(avg_ranks: &[f64], cd: f64) -> Vec<(usize, usize, bool)> {
    let mut out = Vec::new();
    for a in 0..avg_ranks.len() {
        for b in a + 1..avg_ranks.len() {
            out.push((a, b, (avg_ranks[a] - avg_ranks[b]).abs() > cd));
        }
    }
    out
}

pub fn compare(treatments: Vec<String>, scores: &[Vec<f64>]) -> Result<RankComparison> {
    let (statistic, p_value, average_ranks) = friedman_test(scores)?;
    Ok(RankComparison {
        treatments,
        datasets: scores.len(),
        average_ranks,
        statistic,
        p_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midranks_share_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 3.0, 0.0]), vec![1.5, 3.0, 1.5, 4.0]);
    }

    #[test]
    fn perfect_ordering_gives_twenty() {
        let rows = vec![vec![0.9, 0.5, 0.1]; 10];
        let (s, p, r) = friedman_test(&rows).unwrap();
        assert!((s - 20.0).abs() < 1e-9);
        assert!(p < 1e-4);
        assert_eq!(r, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn constant_scores_are_null() {
        let (s, p, r) = friedman_test(&vec![vec![0.4; 4]; 6]).unwrap();
        assert_eq!(s, 0.0);
        assert_eq!(p, 1.0);
        assert!((r.iter().sum::<f64>() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn invariant_to_column_swaps_and_monotone_transforms() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![(i as f64).sin(), (i as f64 * 1.3).cos(), 0.1 * i as f64]).collect();
        let (s, ..) = friedman_test(&rows).unwrap();
        let swapped: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[2], r[1], r[0]]).collect();
        let cubed: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v.powi(3) + 7.0).collect()).collect();
        assert!((friedman_test(&swapped).unwrap().0 - s).abs() < 1e-12);
        assert!((friedman_test(&cubed).unwrap().0 - s).abs() < 1e-12);
    }

    #[test]
    fn cd_shrinks_with_n_and_rejects_untabulated() {
        let a = nemenyi_cd(3, 10, 0.1).unwrap();
        let b = nemenyi_cd(3, 100, 0.1).unwrap();
        assert!(b < a);
        assert!(nemenyi_cd(11, 10, 0.05).is_err());
        assert!(nemenyi_cd(3, 10, 0.01).is_err());
        assert!(nemenyi_compare(&[2.0, 2.0, 2.0], a).iter().all(|(_, _, s)| !s));
    }
}

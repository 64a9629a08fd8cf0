use serde::Serialize;

use crate::labeling::Label;

/// Class counts of a training set and the inverse-frequency factors derived
/// from them: factor_i = (1/3)·N/N_i, so balanced classes all get 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassWeighting {
    pub counts: [usize; 3],
    pub total: usize,
    pub enabled: bool,
}

impl ClassWeighting {
    pub fn from_counts(counts: [usize; 3], enabled: bool) -> Self {
        ClassWeighting {
            counts,
            total: counts.iter().sum(),
            enabled,
        }
    }

    pub fn from_labels(labels: &[Label], enabled: bool) -> Self {
        let mut counts = [0; 3];
        for l in labels {
            counts[l.class_index()] += 1;
        }
        Self::from_counts(counts, enabled)
    }

    /// A class absent from training keeps factor 1.
    pub fn factors(&self) -> [f64; 3] {
        if !self.enabled {
            return [1.0; 3];
        }
        let n = self.total as f64;
        self.counts.map(|c| if c == 0 { 1.0 } else { n / (3.0 * c as f64) })
    }

    /// Per-class regularizers C_i = (1/3)(N/N_i)·C.
    pub fn regularizers(&self, c: f64) -> [f64; 3] {
        self.factors().map(|f| f * c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_classes_keep_c() {
        let w = ClassWeighting::from_counts([50, 50, 50], true);
        assert_eq!(w.regularizers(0.01), [0.01; 3]);
    }

    #[test]
    fn count_times_regularizer_is_constant() {
        let w = ClassWeighting::from_counts([800, 100, 100], true);
        let c = w.regularizers(0.1);
        for i in 0..3 {
            let v = c[i] * w.counts[i] as f64;
            assert!((v - 1000.0 * 0.1 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn disabled_weighting_is_flat() {
        let w = ClassWeighting::from_counts([800, 100, 0], false);
        assert_eq!(w.factors(), [1.0; 3]);
        let w = ClassWeighting::from_counts([800, 100, 0], true);
        assert_eq!(w.factors()[2], 1.0);
    }
}

//! Mid-price direction classifiers: one-vs-rest linear SVM, RBF-prototype
//! SLFN with a max-margin output layer, and a ReLU MLP trained with ADAM.
//!
//! All three share the class order (−1, 0, +1) and break score ties toward
//! the lowest class.

mod cv;
mod mlp;
mod slfn;
mod svm;
mod weighting;

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::artifact::{Artifact, ModelKind};
use crate::labeling::Label;
use crate::{Error, Result};

pub use cv::{contiguous_blocks, select_regularizer, CvOutcome, CV_FOLDS, DEFAULT_GRID};
pub use mlp::{mlp_loss, mlp_train, MlpConfig, MlpModel, MlpTrainReport};
pub use slfn::{mean_pairwise_distance, slfn_fit_hidden, slfn_train, slfn_train_output, SlfnConfig, SlfnModel};
pub use svm::{svm_train, svm_train_rows, SvmConfig, SvmModel};
pub use weighting::ClassWeighting;

/// Index of the largest value; ties go to the lowest index.
#[inline]
pub fn argmax3(v: [f64; 3]) -> usize {
    let mut best = 0;
    for i in 1..3 {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

/// Random-access source of fixed-width training rows.
pub trait Rows {
    fn dim(&self) -> usize;
    fn len(&self) -> usize;
    fn row_into(&self, i: usize, out: &mut [f64]);
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DenseRows<'a> {
    data: &'a [f64],
    dim: usize,
}

impl<'a> DenseRows<'a> {
    pub fn new(data: &'a [f64], dim: usize) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(Error::InvalidParam(format!("data length {} is not a multiple of dim {dim}", data.len())));
        }
        Ok(DenseRows { data, dim })
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

impl Rows for DenseRows<'_> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn len(&self) -> usize {
        self.data.len() / self.dim
    }
    fn row_into(&self, i: usize, out: &mut [f64]) {
        out.copy_from_slice(self.row(i));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Svm,
    Slfn,
    Mlp,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [ClassifierKind::Svm, ClassifierKind::Slfn, ClassifierKind::Mlp];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Svm => "svm",
            ClassifierKind::Slfn => "slfn",
            ClassifierKind::Mlp => "mlp",
        }
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svm" => Ok(ClassifierKind::Svm),
            "slfn" => Ok(ClassifierKind::Slfn),
            "mlp" => Ok(ClassifierKind::Mlp),
            _ => Err(Error::InvalidParam(format!("unknown classifier {s:?} (svm, slfn, mlp)"))),
        }
    }
}

/// Any trained classifier behind one prediction interface.
#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Svm(SvmModel),
    Slfn(SlfnModel),
    Mlp(MlpModel),
}

impl Classifier {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Classifier::Svm(_) => ClassifierKind::Svm,
            Classifier::Slfn(_) => ClassifierKind::Slfn,
            Classifier::Mlp(_) => ClassifierKind::Mlp,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Classifier::Svm(m) => m.dim,
            Classifier::Slfn(m) => m.dim,
            Classifier::Mlp(m) => m.input_dim(),
        }
    }

    /// Decision values (SVM, SLFN) or class probabilities (MLP).
    pub fn scores(&self, x: &[f64]) -> Result<[f64; 3]> {
        match self {
            Classifier::Svm(m) => m.decision_values(x),
            Classifier::Slfn(m) => m.decision_values(x),
            Classifier::Mlp(m) => m.probabilities(x),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<(Label, [f64; 3])> {
        let s = self.scores(x)?;
        Ok((Label::from_class_index(argmax3(s)), s))
    }

    /// Scores for row-major `data`; the MLP uses its batched path.
    pub fn scores_batch(&self, data: &[f64]) -> Result<Vec<[f64; 3]>> {
        let d = self.input_dim();
        if data.len() % d != 0 {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: data.len() % d,
            });
        }
        match self {
            Classifier::Mlp(m) => Ok(m.probabilities_batch(data)),
            _ => data.chunks_exact(d).map(|r| self.scores(r)).collect(),
        }
    }

    pub fn predict_batch(&self, data: &[f64]) -> Result<Vec<Label>> {
        Ok(self
            .scores_batch(data)?
            .into_iter()
            .map(|s| Label::from_class_index(argmax3(s)))
            .collect())
    }

    pub fn to_artifact(&self) -> Artifact {
        match self {
            Classifier::Svm(m) => m.to_artifact(),
            Classifier::Slfn(m) => m.to_artifact(),
            Classifier::Mlp(m) => m.to_artifact(),
        }
    }

    pub fn from_artifact(a: &Artifact) -> Result<Self> {
        match a.kind {
            ModelKind::Svm => SvmModel::from_artifact(a).map(Classifier::Svm),
            ModelKind::Slfn => SlfnModel::from_artifact(a).map(Classifier::Slfn),
            ModelKind::Mlp => MlpModel::from_artifact(a).map(Classifier::Mlp),
            k => Err(Error::Format(format!("{k:?} artifact is not a classifier"))),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_artifact().save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_artifact(&Artifact::load(path)?)
    }
}

pub const PREDICTION_HEADER: &str = "block_index,label,score_-1,score_0,score_+1";

/// Streaming writer for `block_index,label,score_-1,score_0,score_+1` rows.
pub struct PredictionWriter<W: Write> {
    out: W,
}

impl<W: Write> PredictionWriter<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(out, "{PREDICTION_HEADER}")?;
        Ok(PredictionWriter { out })
    }

    pub fn write(&mut self, block_index: usize, label: Label, s: [f64; 3]) -> std::io::Result<()> {
        writeln!(self.out, "{block_index},{},{},{},{}", label.value(), s[0], s[1], s[2])
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use crate::labeling::Label;
    use crate::seed;
    use rand_distr::{Distribution, Normal};

    /// `per_class` points around each of three well-separated 2-D centers.
    pub fn blobs(per_class: usize, s: u64) -> (Vec<f64>, Vec<Label>) {
        let mut rng = seed::rng(s, "blobs");
        let noise = Normal::new(0.0, 0.5).unwrap();
        let centers = [[-4.0, -4.0], [0.0, 4.0], [4.0, -4.0]];
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..per_class {
            for (c, ctr) in centers.iter().enumerate() {
                x.push(ctr[0] + noise.sample(&mut rng));
                x.push(ctr[1] + noise.sample(&mut rng));
                y.push(Label::from_class_index(c));
            }
        }
        (x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_lowest_on_ties() {
        assert_eq!(argmax3([1.0, 1.0, 0.0]), 0);
        assert_eq!(argmax3([0.0, 2.0, 2.0]), 1);
        assert_eq!(argmax3([2.0, -1.0, -1.0]), 0);
    }

    #[test]
    fn prediction_stream_format() {
        let mut w = PredictionWriter::new(Vec::new()).unwrap();
        w.write(7, Label::Up, [0.1, 0.2, 0.7]).unwrap();
        let s = String::from_utf8(w.finish().unwrap()).unwrap();
        assert_eq!(s, "block_index,label,score_-1,score_0,score_+1\n7,1,0.1,0.2,0.7\n");
    }

    #[test]
    fn classifier_artifacts_round_trip() {
        let c = Classifier::Svm(SvmModel {
            biases: [1.0, 2.0, 3.0],
            ..SvmModel::zeros(4)
        });
        assert_eq!(Classifier::from_artifact(&c.to_artifact()).unwrap(), c);
        assert!(Classifier::from_artifact(&Artifact::new(ModelKind::Autoencoder)).is_err());
    }
}

//! A trained pipeline: normalization, optional learned representations and a
//! classifier, persisted as one directory of artifacts.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::artifact::{Artifact, ModelKind};
use crate::classifiers::{Classifier, ClassifierKind};
use crate::features::{write_representation, NormalizationStats, FEATURES, WINDOW};
use crate::labeling::{Label, LabelParams};
use crate::repr::{AutoencoderModel, BofCodebook};
use crate::{Error, Result};

use super::config::{Part, Representation};

pub const BUNDLE_FILE: &str = "bundle.json";

pub fn normalization_to_artifact(stats: &NormalizationStats) -> Artifact {
    let mut a = Artifact::new(ModelKind::Normalization);
    a.push("mean", &[stats.dim()], stats.mean.clone());
    a.push("std", &[stats.dim()], stats.std.clone());
    a
}

pub fn normalization_from_artifact(a: &Artifact, fitted_on: &str) -> Result<NormalizationStats> {
    a.expect_kind(ModelKind::Normalization)?;
    let mean = a.get("mean")?.data.clone();
    let std = a.get("std")?.data.clone();
    if mean.len() != std.len() {
        return Err(Error::Format("normalization mean and std differ in length".into()));
    }
    Ok(NormalizationStats {
        mean,
        std,
        fitted_on: fitted_on.to_string(),
    })
}

/// Maps a window of raw feature vectors to a classifier input row.
#[derive(Debug, Clone, PartialEq)]
pub struct Featurizer {
    pub representation: Representation,
    pub norm: NormalizationStats,
    pub ae: Option<AutoencoderModel>,
    pub bof: Option<BofCodebook>,
}

impl Featurizer {
    pub fn new(representation: Representation, norm: NormalizationStats, ae: Option<AutoencoderModel>, bof: Option<BofCodebook>) -> Result<Self> {
        if norm.dim() != FEATURES {
            return Err(Error::DimensionMismatch {
                expected: FEATURES,
                got: norm.dim(),
            });
        }
        if representation.needs_ae() != ae.is_some() || representation.needs_bof() != bof.is_some() {
            return Err(Error::InvalidParam(format!("learned components do not match representation {representation}")));
        }
        if let Some(ae) = &ae {
            if ae.input_dim() != FEATURES {
                return Err(Error::DimensionMismatch {
                    expected: FEATURES,
                    got: ae.input_dim(),
                });
            }
        }
        if let Some(b) = &bof {
            if b.dim != FEATURES {
                return Err(Error::DimensionMismatch {
                    expected: FEATURES,
                    got: b.dim,
                });
            }
        }
        Ok(Featurizer {
            representation,
            norm,
            ae,
            bof,
        })
    }

    pub fn dim(&self) -> usize {
        let code = self.ae.as_ref().map_or(0, |a| a.code_dim());
        let k = self.bof.as_ref().map_or(0, |b| b.k);
        self.representation.dim(code, k)
    }

    /// Write the representation of `raw` (oldest first, [`WINDOW`] vectors)
    /// into `out`. `scratch` must hold `WINDOW × FEATURES` values.
    pub fn transform_into(&self, raw: &[&[f64]], scratch: &mut [f64], out: &mut [f64]) -> Result<()> {
        if raw.len() != WINDOW || raw.iter().any(|r| r.len() != FEATURES) {
            return Err(Error::InvalidParam(format!("expected {WINDOW} raw vectors of {FEATURES} features")));
        }
        if out.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: out.len(),
            });
        }
        for (chunk, r) in scratch.chunks_exact_mut(FEATURES).zip(raw) {
            self.norm.apply_into(r, chunk);
        }
        let window: Vec<&[f64]> = scratch.chunks_exact(FEATURES).collect();
        let mut at = 0;
        for part in self.representation.parts() {
            match part {
                Part::Window(kind) => {
                    let d = kind.dim(FEATURES);
                    write_representation(*kind, &window, &mut out[at..at + d]);
                    at += d;
                }
                Part::Ae => {
                    let ae = self.ae.as_ref().expect("checked in new");
                    let code = ae.encode(window[WINDOW - 1])?;
                    out[at..at + code.len()].copy_from_slice(&code);
                    at += code.len();
                }
                Part::Bof => {
                    let b = self.bof.as_ref().expect("checked in new");
                    b.encode_into(&window, &mut out[at..at + b.k])?;
                    at += b.k;
                }
            }
        }
        Ok(())
    }

    pub fn transform(&self, raw: &[&[f64]]) -> Result<Vec<f64>> {
        let mut scratch = vec![0.0; WINDOW * FEATURES];
        let mut out = vec![0.0; self.dim()];
        self.transform_into(raw, &mut scratch, &mut out)?;
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleInfo {
    pub representation: String,
    pub unsafe_combo: bool,
    pub classifier: ClassifierKind,
    pub input_dim: usize,
    pub label_params: LabelParams,
    pub normalization_fitted_on: String,
    /// Standard-deviation convention of the normalization statistics.
    pub std_convention: String,
}

/// Featurizer plus classifier, ready to predict from raw windows.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub featurizer: Featurizer,
    pub classifier: Classifier,
    pub label_params: LabelParams,
}

impl ModelBundle {
    pub fn new(featurizer: Featurizer, classifier: Classifier, label_params: LabelParams) -> Result<Self> {
        if classifier.input_dim() != featurizer.dim() {
            return Err(Error::DimensionMismatch {
                expected: featurizer.dim(),
                got: classifier.input_dim(),
            });
        }
        Ok(ModelBundle {
            featurizer,
            classifier,
            label_params,
        })
    }

    pub fn predict_window(&self, raw: &[&[f64]]) -> Result<(Label, [f64; 3])> {
        self.classifier.predict(&self.featurizer.transform(raw)?)
    }

    pub fn info(&self) -> BundleInfo {
        let rep = &self.featurizer.representation;
        BundleInfo {
            representation: rep.name().to_string(),
            unsafe_combo: Representation::parse(rep.name(), false).is_err(),
            classifier: self.classifier.kind(),
            input_dim: self.featurizer.dim(),
            label_params: self.label_params,
            normalization_fitted_on: self.featurizer.norm.fitted_on.clone(),
            std_convention: "population".into(),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        normalization_to_artifact(&self.featurizer.norm).save(&dir.join("normalization.lobm"))?;
        if let Some(ae) = &self.featurizer.ae {
            ae.to_artifact().save(&dir.join("autoencoder.lobm"))?;
        }
        if let Some(b) = &self.featurizer.bof {
            b.to_artifact().save(&dir.join("bof.lobm"))?;
        }
        self.classifier.save(&dir.join("classifier.lobm"))?;
        let path = dir.join(BUNDLE_FILE);
        let json = serde_json::to_string_pretty(&self.info()).expect("bundle info serializes");
        fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(BUNDLE_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let info: BundleInfo = serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        let rep = Representation::parse(&info.representation, info.unsafe_combo)?;
        let norm = normalization_from_artifact(&Artifact::load(&dir.join("normalization.lobm"))?, &info.normalization_fitted_on)?;
        let ae = if rep.needs_ae() {
            Some(AutoencoderModel::from_artifact(&Artifact::load(&dir.join("autoencoder.lobm"))?)?)
        } else {
            None
        };
        let bof = if rep.needs_bof() {
            Some(BofCodebook::from_artifact(&Artifact::load(&dir.join("bof.lobm"))?)?)
        } else {
            None
        };
        let classifier = Classifier::load(&dir.join("classifier.lobm"))?;
        if classifier.kind() != info.classifier {
            return Err(Error::Format(format!("{} says {:?} but classifier.lobm holds {:?}", path.display(), info.classifier, classifier.kind())));
        }
        Self::new(Featurizer::new(rep, norm, ae, bof)?, classifier, info.label_params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::SvmModel;
    use crate::features::zscore_fit;
    use crate::seed;

    fn raw_window(shift: f64) -> Vec<Vec<f64>> {
        (0..WINDOW)
            .map(|t| (0..FEATURES).map(|j| (j as f64 * 0.1 + t as f64 + shift).sin()).collect())
            .collect()
    }

    fn norm() -> NormalizationStats {
        let rows: Vec<Vec<f64>> = (0..20).flat_map(|s| raw_window(s as f64)).collect();
        zscore_fit(rows.iter().map(Vec::as_slice), "test").unwrap()
    }

    #[test]
    fn dims_follow_the_representation() {
        let mut rng = seed::rng(1, "t");
        let ae = AutoencoderModel::new(&[144, 72, 24, 72, 144], &mut rng).unwrap();
        let bof = BofCodebook::new(vec![0.0; 128 * 144], 144, 0.01).unwrap();
        let raw = raw_window(0.3);
        let refs: Vec<&[f64]> = raw.iter().map(Vec::as_slice).collect();
        for (name, d) in Representation::NAMED.iter().zip([144, 144, 288, 720, 24, 128, 152, 272]) {
            let rep = Representation::parse(name, false).unwrap();
            let f = Featurizer::new(
                rep.clone(),
                norm(),
                rep.needs_ae().then(|| ae.clone()),
                rep.needs_bof().then(|| bof.clone()),
            )
            .unwrap();
            assert_eq!(f.dim(), d);
            let v = f.transform(&refs).unwrap();
            assert_eq!(v.len(), d);
            assert!(v.iter().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn bundle_round_trips() {
        let rep = Representation::parse("last_mean", false).unwrap();
        let f = Featurizer::new(rep, norm(), None, None).unwrap();
        let mut svm = SvmModel::zeros(288);
        svm.weights[5] = 0.25;
        svm.biases = [0.1, -0.2, 0.3];
        let b = ModelBundle::new(f, Classifier::Svm(svm), LabelParams::for_horizon(5).unwrap()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        b.save(dir.path()).unwrap();
        let back = ModelBundle::load(dir.path()).unwrap();
        assert_eq!(back, b);
        let raw = raw_window(1.0);
        let refs: Vec<&[f64]> = raw.iter().map(Vec::as_slice).collect();
        assert_eq!(back.predict_window(&refs).unwrap(), b.predict_window(&refs).unwrap());
    }
}

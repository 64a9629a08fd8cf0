use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassifierKind, MlpConfig, SlfnConfig, SvmConfig, DEFAULT_GRID};
use crate::eval::Protocol;
use crate::features::{WindowKind, FEATURES};
use crate::labeling::{default_gamma, LabelParams, DEFAULT_N_BETA};
use crate::repr::{AutoencoderConfig, BofConfig};
use crate::{Error, Result};

/// One building block of a representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Part {
    Window(WindowKind),
    /// Autoencoder code of the newest normalized vector.
    Ae,
    /// Fuzzy histogram of the whole window.
    Bof,
}

impl Part {
    fn parse(s: &str) -> Option<Part> {
        Some(match s {
            "last" => Part::Window(WindowKind::Last),
            "mean" => Part::Window(WindowKind::Mean),
            "concat" => Part::Window(WindowKind::Concat),
            "ae" => Part::Ae,
            "bof" => Part::Bof,
            _ => return None,
        })
    }
}

/// The eight named input representations, plus arbitrary `+`-joined
/// concatenations when explicitly unlocked.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Representation {
    name: String,
    parts: Vec<Part>,
}

impl Representation {
    pub const NAMED: [&'static str; 8] = ["last", "mean", "last_mean", "concat", "ae", "bof", "ae_bof", "last_bof"];

    fn named(name: &str) -> Option<Vec<Part>> {
        use WindowKind::*;
        Some(match name {
            "last" => vec![Part::Window(Last)],
            "mean" => vec![Part::Window(Mean)],
            "last_mean" => vec![Part::Window(LastMean)],
            "concat" => vec![Part::Window(Concat)],
            "ae" => vec![Part::Ae],
            "bof" => vec![Part::Bof],
            "ae_bof" => vec![Part::Ae, Part::Bof],
            "last_bof" => vec![Part::Window(Last), Part::Bof],
            _ => return None,
        })
    }

    /// Parse a named representation, or a `+`-joined combination such as
    /// `mean+ae` when `allow_combo` is set.
    pub fn parse(s: &str, allow_combo: bool) -> Result<Self> {
        if let Some(parts) = Self::named(s) {
            return Ok(Representation { name: s.to_string(), parts });
        }
        let parts: Option<Vec<Part>> = s.split('+').map(Part::parse).collect();
        match parts {
            Some(parts) if !parts.is_empty() && allow_combo => Ok(Representation { name: s.to_string(), parts }),
            Some(_) => Err(Error::InvalidParam(format!(
                "representation {s:?} is not one of {:?}; pass --unsafe-combo to allow it",
                Self::NAMED
            ))),
            None => Err(Error::InvalidParam(format!("unknown representation {s:?}"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn needs_ae(&self) -> bool {
        self.parts.contains(&Part::Ae)
    }

    pub fn needs_bof(&self) -> bool {
        self.parts.contains(&Part::Bof)
    }

    pub fn dim(&self, code_dim: usize, codebook: usize) -> usize {
        self.parts
            .iter()
            .map(|p| match p {
                Part::Window(k) => k.dim(FEATURES),
                Part::Ae => code_dim,
                Part::Bof => codebook,
            })
            .sum()
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl FromStr for Representation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s, false)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Directory of `*.events.csv` files.
    pub events: Option<PathBuf>,
    /// Feature store written by `lobcast features`.
    pub features: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    /// Candidate C values. Empty uses the classifier's own C; a single value
    /// skips the search.
    pub grid: Vec<f64>,
    /// Rows drawn (uniformly, order kept) from the training partition for
    /// the search.
    pub max_rows: usize,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            grid: DEFAULT_GRID.to_vec(),
            max_rows: 30_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub output: PathBuf,
    pub representation: String,
    pub unsafe_combo: bool,
    pub horizon: usize,
    /// Defaults to the standard value for `horizon`.
    pub gamma: Option<f64>,
    pub n_beta: usize,
    pub classifier: ClassifierKind,
    pub protocol: Protocol,
    pub seed: u64,
    /// Per-fold cap on classifier training rows (uniform, order kept).
    pub max_train_rows: Option<usize>,
    pub save_models: bool,
    pub cv: CvConfig,
    pub autoencoder: AutoencoderConfig,
    pub bof: BofConfig,
    pub svm: SvmConfig,
    pub slfn: SlfnConfig,
    pub mlp: MlpConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: DataConfig::default(),
            output: PathBuf::from("runs/default"),
            representation: "concat".into(),
            unsafe_combo: false,
            horizon: 10,
            gamma: None,
            n_beta: DEFAULT_N_BETA,
            classifier: ClassifierKind::Mlp,
            protocol: Protocol::Anchored,
            seed: 1,
            max_train_rows: None,
            save_models: true,
            cv: CvConfig::default(),
            autoencoder: AutoencoderConfig::default(),
            bof: BofConfig::default(),
            svm: SvmConfig::default(),
            slfn: SlfnConfig::default(),
            mlp: MlpConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Load `path` (or the defaults) and apply `key.path=value` overrides.
    /// Values are read as TOML and fall back to plain strings.
    pub fn load_with_overrides(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            None => String::new(),
        };
        let mut root: toml::Table = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        let cfg: Self = toml::Value::Table(root)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn representation(&self) -> Result<Representation> {
        Representation::parse(&self.representation, self.unsafe_combo)
    }

    pub fn label_params(&self) -> Result<LabelParams> {
        let gamma = match self.gamma {
            Some(g) => g,
            None => default_gamma(self.horizon).ok_or_else(|| {
                Error::Config(format!("no default gamma for horizon {}; set gamma explicitly", self.horizon))
            })?,
        };
        LabelParams::new(self.n_beta, self.horizon, gamma)
    }

    /// Input dimension implied by the representation and learner sizes.
    pub fn input_dim(&self) -> Result<usize> {
        let s = &self.autoencoder.layer_sizes;
        Ok(self.representation()?.dim(s[s.len() / 2], self.bof.k))
    }

    pub fn validate(&self) -> Result<()> {
        let rep = self.representation()?;
        self.label_params()?;
        match (&self.data.events, &self.data.features) {
            (Some(_), Some(_)) => return Err(Error::Config("set only one of data.events and data.features".into())),
            (None, None) => return Err(Error::Config("no data source: set data.events or data.features".into())),
            _ => {}
        }
        if rep.needs_ae() {
            self.autoencoder.validate()?;
            if self.autoencoder.layer_sizes[0] != FEATURES {
                return Err(Error::Config(format!(
                    "autoencoder input must be {FEATURES}, got {}",
                    self.autoencoder.layer_sizes[0]
                )));
            }
        }
        if rep.needs_bof() && (self.bof.k == 0 || !(self.bof.g > 0.0)) {
            return Err(Error::Config("bof.k and bof.g must be positive".into()));
        }
        if self.cv.max_rows < 3 {
            return Err(Error::Config("cv.max_rows must be at least 3".into()));
        }
        if self.max_train_rows == Some(0) {
            return Err(Error::Config("max_train_rows must be positive".into()));
        }
        match self.classifier {
            ClassifierKind::Svm => self.svm.validate(),
            ClassifierKind::Slfn => self.slfn.output.validate(),
            ClassifierKind::Mlp => self.mlp.validate(),
        }
    }
}

fn apply_override(root: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {spec:?} is not key=value")))?;
    let value = parse_value(raw.trim());
    let mut path: Vec<&str> = key.trim().split('.').collect();
    let last = path.pop().filter(|k| !k.is_empty()).ok_or_else(|| Error::Config(format!("empty key in {spec:?}")))?;
    let mut table = root;
    for k in path {
        let entry = table
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("{k:?} in {spec:?} is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_dimensions() {
        let want = [144, 144, 288, 720, 24, 128, 152, 272];
        for (name, d) in Representation::NAMED.iter().zip(want) {
            assert_eq!(Representation::parse(name, false).unwrap().dim(24, 128), d, "{name}");
        }
    }

    #[test]
    fn combos_need_the_flag() {
        assert!(Representation::parse("mean+ae", false).is_err());
        let r = Representation::parse("mean+ae", true).unwrap();
        assert_eq!(r.dim(24, 128), 168);
        assert!(Representation::parse("mean+nope", true).is_err());
    }

    #[test]
    fn toml_round_trip_and_unknown_keys() {
        let mut cfg = ExperimentConfig::default();
        cfg.data.events = Some("d".into());
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml("[mlp]\nlayers = [3]").is_err());
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let cfg = ExperimentConfig::load_with_overrides(
            None,
            &[
                "mlp.epochs=3".into(),
                "representation=ae_bof".into(),
                "data.events=/tmp/x".into(),
                "cv.grid=[0.01]".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.mlp.epochs, 3);
        assert_eq!(cfg.input_dim().unwrap(), 152);
        assert_eq!(cfg.data.events.as_deref(), Some(Path::new("/tmp/x")));
        assert_eq!(cfg.cv.grid, vec![0.01]);
        cfg.validate().unwrap();
        assert!(ExperimentConfig::load_with_overrides(None, &["mlp.nope=1".into()]).is_err());
    }

    #[test]
    fn validation_catches_bad_combinations() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_err());
        cfg.data.events = Some("e".into());
        cfg.validate().unwrap();
        cfg.horizon = 7;
        assert!(cfg.validate().is_err());
        cfg.gamma = Some(1e-4);
        cfg.validate().unwrap();
    }
}

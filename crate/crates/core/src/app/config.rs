use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::annotator::{LlmConfig, OracleConfig, Shot};
use crate::error::{Error, Result};
use crate::gnn::GcnConfig;
use crate::graph::{DomainCriterion, ShiftKind, SbmParams, SplitRatios, SplitSpec};
use crate::selection::{SelectionConfig, SelectionStrategy};
use crate::ttt::TttConfig;

/// Everything one `gttt` invocation needs, read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub dataset: DatasetSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub model: GcnConfig,
    #[serde(default)]
    pub pretrain: PretrainSection,
    #[serde(default)]
    pub selection: SelectionSection,
    pub annotator: AnnotatorSection,
    #[serde(default)]
    pub ttt: TttConfig,
    #[serde(default)]
    pub ablate: AblateSection,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Exactly one of `sbm` or `files`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub sbm: Option<SbmParams>,
    pub files: Option<FileSource>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSource {
    pub nodes: PathBuf,
    pub edges: PathBuf,
    pub num_classes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    #[serde(default = "default_shift")]
    pub shift: ShiftKind,
    #[serde(default = "default_criterion")]
    pub criterion: DomainCriterion,
    #[serde(default)]
    pub word_index: usize,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_train")]
    pub train: f64,
    #[serde(default = "default_val")]
    pub val: f64,
    #[serde(default = "default_test")]
    pub test: f64,
}

fn default_shift() -> ShiftKind {
    ShiftKind::Covariate
}
fn default_criterion() -> DomainCriterion {
    DomainCriterion::Degree
}
fn default_kappa() -> f64 {
    SplitSpec::new(ShiftKind::Concept, DomainCriterion::Degree).kappa
}
fn default_train() -> f64 {
    0.6
}
fn default_val() -> f64 {
    0.2
}
fn default_test() -> f64 {
    0.2
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            shift: default_shift(),
            criterion: default_criterion(),
            word_index: 0,
            kappa: default_kappa(),
            train: default_train(),
            val: default_val(),
            test: default_test(),
        }
    }
}

impl SplitSection {
    pub fn spec(&self) -> SplitSpec {
        SplitSpec {
            shift: self.shift,
            criterion: self.criterion,
            word_index: self.word_index,
            kappa: self.kappa,
        }
    }

    pub fn ratios(&self) -> SplitRatios {
        SplitRatios::new(self.train, self.val, self.test)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PretrainSection {
    #[serde(default = "default_pretrain_epochs")]
    pub epochs: usize,
    #[serde(default = "default_pretrain_lr")]
    pub lr: f64,
}

fn default_pretrain_epochs() -> usize {
    200
}
fn default_pretrain_lr() -> f64 {
    0.01
}

impl Default for PretrainSection {
    fn default() -> Self {
        PretrainSection {
            epochs: default_pretrain_epochs(),
            lr: default_pretrain_lr(),
        }
    }
}

/// Selection settings; unset fields take the [`SelectionConfig`] defaults and
/// an unset budget is 10% of the test set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionSection {
    pub budget: Option<usize>,
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
    pub damping: Option<f64>,
    pub tol: Option<f64>,
    pub hops: Option<usize>,
    pub strategy: Option<SelectionStrategy>,
}

impl SelectionSection {
    pub fn resolve(&self, test_size: usize) -> SelectionConfig {
        let mut cfg = SelectionConfig::with_budget(
            self.budget
                .unwrap_or_else(|| crate::annotator::default_budget(test_size)),
        );
        if let Some(v) = self.beta {
            cfg.beta = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.damping {
            cfg.damping = v;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.hops {
            cfg.hops = v;
        }
        if let Some(v) = self.strategy {
            cfg.strategy = v;
        }
        cfg
    }
}

/// Exactly one of `oracle` or `llm`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotatorSection {
    pub oracle: Option<OracleSection>,
    pub llm: Option<LlmSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub accuracy: f64,
    #[serde(default = "default_correct")]
    pub correct_range: [f64; 2],
    #[serde(default = "default_wrong")]
    pub wrong_range: [f64; 2],
}

fn default_correct() -> [f64; 2] {
    OracleConfig::new(1.0, 0).correct_range
}
fn default_wrong() -> [f64; 2] {
    OracleConfig::new(1.0, 0).wrong_range
}

impl OracleSection {
    pub fn to_config(&self, seed: u64) -> OracleConfig {
        OracleConfig {
            accuracy: self.accuracy,
            correct_range: self.correct_range,
            wrong_range: self.wrong_range,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmSection {
    /// Class names, indexed by label.
    pub categories: Vec<String>,
    /// Demonstrations; when unset, `client.shots` training nodes with text
    /// are drawn from the root seed.
    pub shots: Option<Vec<Shot>>,
    #[serde(default)]
    pub client: LlmConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Selection,
    Prompts,
    Filter,
    Stages,
    OracleAcc,
}

impl Axis {
    pub const ALL: [Axis; 5] = [Axis::Selection, Axis::Prompts, Axis::Filter, Axis::Stages, Axis::OracleAcc];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Selection => "selection",
            Axis::Prompts => "prompts",
            Axis::Filter => "filter",
            Axis::Stages => "stages",
            Axis::OracleAcc => "oracle_acc",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown ablation axis {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblateSection {
    /// Seeds `seed, seed + 1, ...`.
    #[serde(default = "default_ablate_seeds")]
    pub seeds: usize,
    pub axis: Option<Axis>,
}

fn default_ablate_seeds() -> usize {
    5
}

impl Default for AblateSection {
    fn default() -> Self {
        AblateSection {
            seeds: default_ablate_seeds(),
            axis: None,
        }
    }
}

pub(crate) fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let cfg: RunConfig = read_toml(path.as_ref())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.dataset.sbm, &self.dataset.files) {
            (Some(p), None) => p.validate()?,
            (None, Some(_)) => {}
            _ => return Err(Error::Config("dataset needs exactly one of [dataset.sbm] or [dataset.files]".into())),
        }
        match (&self.annotator.oracle, &self.annotator.llm) {
            (Some(o), None) => o.to_config(0).validate()?,
            (None, Some(l)) => {
                l.client.validate()?;
                if l.categories.is_empty() {
                    return Err(Error::Config("llm annotator needs categories".into()));
                }
            }
            _ => return Err(Error::Config("annotator needs exactly one of [annotator.oracle] or [annotator.llm]".into())),
        }
        if self.pretrain.epochs == 0 || !(self.pretrain.lr > 0.0 && self.pretrain.lr.is_finite()) {
            return Err(Error::Config("pretrain needs epochs >= 1 and a positive lr".into()));
        }
        if self.selection.budget == Some(0) {
            return Err(Error::Config("selection budget must be at least 1".into()));
        }
        if self.ablate.seeds == 0 {
            return Err(Error::Config("ablate.seeds must be at least 1".into()));
        }
        self.ttt.validate()
    }
}

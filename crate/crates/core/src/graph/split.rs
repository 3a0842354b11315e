//! Out-of-distribution train/val/test splits.
//!
//! Every node gets a scalar domain value (its degree, or the value of a
//! designated feature coordinate standing in for word frequency).
//!
//! * Covariate shift: nodes are sorted by domain value (ties by id). Train
//!   takes the lowest values, val the next band, test the highest.
//! * Concept shift: test is sampled uniformly. Train and val are sampled
//!   from the rest with weight `exp(kappa * agreement)`, where agreement is
//!   high when a node's normalized domain rank is close to its normalized
//!   label, so label and domain are correlated on the training side only.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftKind {
    Covariate,
    Concept,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainCriterion {
    Degree,
    Word,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub shift: ShiftKind,
    pub criterion: DomainCriterion,
    /// Feature coordinate used by the `word` criterion.
    #[serde(default)]
    pub word_index: usize,
    /// Strength of the label/domain correlation for concept shift.
    #[serde(default = "default_kappa")]
    pub kappa: f64,
}

fn default_kappa() -> f64 {
    2.0
}

impl SplitSpec {
    pub fn new(shift: ShiftKind, criterion: DomainCriterion) -> Self {
        SplitSpec {
            shift,
            criterion,
            word_index: 0,
            kappa: default_kappa(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl SplitRatios {
    pub fn new(train: f64, val: f64, test: f64) -> Self {
        SplitRatios { train, val, test }
    }

    fn validate(&self) -> Result<()> {
        let all = [self.train, self.val, self.test];
        if all.iter().any(|r| !(r.is_finite() && *r >= 0.0)) || self.train <= 0.0 || self.test <= 0.0 {
            return Err(Error::Validation(format!(
                "split ratios must be non-negative with positive train and test, got {self:?}"
            )));
        }
        if all.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(Error::Validation(format!("split ratios sum above 1: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSplit {
    pub train_mask: Vec<bool>,
    pub val_mask: Vec<bool>,
    pub test_mask: Vec<bool>,
    pub shift: ShiftKind,
    pub criterion: DomainCriterion,
}

fn ids(mask: &[bool]) -> Vec<usize> {
    mask.iter().enumerate().filter_map(|(i, &m)| m.then_some(i)).collect()
}

impl DataSplit {
    pub fn train_ids(&self) -> Vec<usize> {
        ids(&self.train_mask)
    }

    pub fn val_ids(&self) -> Vec<usize> {
        ids(&self.val_mask)
    }

    pub fn test_ids(&self) -> Vec<usize> {
        ids(&self.test_mask)
    }

    pub fn num_nodes(&self) -> usize {
        self.test_mask.len()
    }

    fn from_ids(
        n: usize,
        train: &[usize],
        val: &[usize],
        test: &[usize],
        shift: ShiftKind,
        criterion: DomainCriterion,
    ) -> Result<Self> {
        let mut owner = vec![0u8; n];
        let mut masks = [vec![false; n], vec![false; n], vec![false; n]];
        for (k, set) in [train, val, test].into_iter().enumerate() {
            for &i in set {
                if i >= n {
                    return Err(Error::Validation(format!("split node id {i} out of range (n = {n})")));
                }
                if owner[i] != 0 {
                    return Err(Error::Validation(format!("node {i} appears in two split parts")));
                }
                owner[i] = k as u8 + 1;
                masks[k][i] = true;
            }
        }
        if test.is_empty() {
            return Err(Error::Validation("test set is empty".into()));
        }
        let [train_mask, val_mask, test_mask] = masks;
        Ok(DataSplit {
            train_mask,
            val_mask,
            test_mask,
            shift,
            criterion,
        })
    }
}

/// Domain value of every node under `spec`.
pub fn domain_values(g: &Graph, spec: &SplitSpec) -> Result<Vec<f64>> {
    match spec.criterion {
        DomainCriterion::Degree => Ok(g.degrees().into_iter().map(|d| d as f64).collect()),
        DomainCriterion::Word => {
            if spec.word_index >= g.feature_dim() {
                return Err(Error::Validation(format!(
                    "word_index {} out of range for {} features",
                    spec.word_index,
                    g.feature_dim()
                )));
            }
            Ok(g.features().column(spec.word_index).to_vec())
        }
    }
}

fn count(ratio: f64, n: usize) -> usize {
    (ratio * n as f64).round() as usize
}

pub fn make_ood_split(g: &Graph, spec: &SplitSpec, ratios: SplitRatios, seed: u64) -> Result<DataSplit> {
    ratios.validate()?;
    let n = g.num_nodes();
    let values = domain_values(g, spec)?;
    let first = values.first().copied().unwrap_or(0.0);
    if values.iter().all(|&v| v == first) {
        return Err(Error::Validation("domain criterion non-informative".into()));
    }
    let n_train = count(ratios.train, n).max(1);
    let n_val = count(ratios.val, n);
    let n_test = count(ratios.test, n).max(1);
    if n_train + n_val + n_test > n {
        return Err(Error::Validation(format!(
            "split sizes {n_train}+{n_val}+{n_test} exceed {n} nodes"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));

    match spec.shift {
        ShiftKind::Covariate => {
            let train = &order[..n_train];
            let val = &order[n_train..n_train + n_val];
            let test = &order[n - n_test..];
            DataSplit::from_ids(n, train, val, test, spec.shift, spec.criterion)
        }
        ShiftKind::Concept => {
            let mut rng = seed::rng(seed);
            let mut rank = vec![0.0; n];
            for (pos, &i) in order.iter().enumerate() {
                rank[i] = pos as f64 / (n - 1).max(1) as f64;
            }
            let c = g.num_classes();
            let weight = |i: usize| {
                let label_pos = if c > 1 {
                    g.labels()[i] as f64 / (c - 1) as f64
                } else {
                    0.0
                };
                (spec.kappa * (1.0 - (rank[i] - label_pos).abs())).exp()
            };

            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut rng);
            let test: Vec<usize> = all[..n_test].to_vec();
            let mut rest: Vec<usize> = all[n_test..].to_vec();
            rest.sort_unstable();

            // weighted sampling without replacement (exponential keys)
            let mut keyed: Vec<(f64, usize)> = rest
                .iter()
                .map(|&i| {
                    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                    (u.ln() / weight(i), i)
                })
                .collect();
            keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let picked: Vec<usize> = keyed.iter().map(|&(_, i)| i).collect();
            let train = &picked[..n_train];
            let val = &picked[n_train..n_train + n_val];
            DataSplit::from_ids(n, train, val, &test, spec.shift, spec.criterion)
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SplitFile {
    shift: ShiftKind,
    criterion: DomainCriterion,
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
}

pub fn save_split(split: &DataSplit, path: impl AsRef<Path>) -> Result<()> {
    let file = SplitFile {
        shift: split.shift,
        criterion: split.criterion,
        train: split.train_ids(),
        val: split.val_ids(),
        test: split.test_ids(),
    };
    let path = path.as_ref();
    fs::write(path, serde_json::to_string(&file)?).map_err(|e| Error::io(path, e))
}

pub fn load_split(path: impl AsRef<Path>, num_nodes: usize) -> Result<DataSplit> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let f: SplitFile = serde_json::from_str(&text)?;
    DataSplit::from_ids(num_nodes, &f.train, &f.val, &f.test, f.shift, f.criterion)
}

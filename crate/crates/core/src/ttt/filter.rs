use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::annotator::AnnotationRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    /// Weight of the entropy-change term.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Fraction of annotations kept, rounded up.
    #[serde(default = "default_keep_ratio")]
    pub keep_ratio: f64,
}

fn default_gamma() -> f64 {
    0.5
}
fn default_keep_ratio() -> f64 {
    0.8
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            gamma: default_gamma(),
            keep_ratio: default_keep_ratio(),
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma = {} must be non-negative", self.gamma)));
        }
        if !(self.keep_ratio > 0.0 && self.keep_ratio <= 1.0) {
            return Err(Error::Config(format!("keep_ratio = {} outside (0, 1]", self.keep_ratio)));
        }
        Ok(())
    }

    /// `ceil(keep_ratio * n)`, robust to representation error.
    pub fn keep_count(&self, n: usize) -> usize {
        ((self.keep_ratio * n as f64 - 1e-9).ceil().max(1.0) as usize).min(n)
    }
}

/// Shannon entropy (nats) of a label histogram.
fn histogram_entropy(counts: impl Iterator<Item = usize> + Clone) -> f64 {
    let total: usize = counts.clone().sum();
    if total == 0 {
        return 0.0;
    }
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / total as f64;
            -p * p.ln()
        })
        .sum()
}

fn counts_of(labels: &[usize]) -> HashMap<usize, usize> {
    let mut counts = HashMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    counts
}

fn coe_from_counts(counts: &HashMap<usize, usize>, label: usize) -> Result<f64> {
    let total: usize = counts.values().sum();
    if total < 2 {
        return Err(Error::Validation("entropy change needs at least two labels".into()));
    }
    let Some(&own) = counts.get(&label) else {
        return Err(Error::Validation(format!("label {label} is not in the multiset")));
    };
    let full = histogram_entropy(counts.values().copied());
    let without = histogram_entropy(counts.iter().map(|(&l, &c)| if l == label { own - 1 } else { c }));
    Ok(without - full)
}

/// Change of entropy of the label multiset when one `label` is removed.
pub fn coe(labels: &[usize], label: usize) -> Result<f64> {
    coe_from_counts(&counts_of(labels), label)
}

/// `confidence/100 - gamma * COE` for each record, in input order.
pub fn filter_scores(records: &[AnnotationRecord], gamma: f64) -> Result<Vec<f64>> {
    let labels: Vec<usize> = records.iter().map(|r| r.pseudo_label).collect();
    let counts = counts_of(&labels);
    records
        .iter()
        .map(|r| Ok(r.confidence / 100.0 - gamma * coe_from_counts(&counts, r.pseudo_label)?))
        .collect()
}

/// Keep the `ceil(keep_ratio * n)` best-scoring records, best first, ties
/// by node id.
pub fn filter_annotations(records: &[AnnotationRecord], cfg: &FilterConfig) -> Result<Vec<AnnotationRecord>> {
    cfg.validate()?;
    let scores = filter_scores(records, cfg.gamma)?;
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then(records[a].node_id.cmp(&records[b].node_id))
    });
    Ok(order[..cfg.keep_count(records.len())]
        .iter()
        .map(|&k| records[k].clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotator::Provenance;

    fn rec(node_id: usize, pseudo_label: usize, confidence: f64) -> AnnotationRecord {
        AnnotationRecord {
            node_id,
            pseudo_label,
            confidence,
            provenance: Provenance::Oracle,
            raw_response: None,
            retries: 0,
            fallback: false,
        }
    }

    #[test]
    fn coe_values() {
        assert_eq!(coe(&[3, 3, 3], 3).unwrap(), 0.0);
        let h = |p: f64| -p * p.ln() - (1.0 - p) * (1.0 - p).ln();
        assert!((coe(&[0, 0, 1, 1], 1).unwrap() - (h(2.0 / 3.0) - 2f64.ln())).abs() < 1e-12);
        assert!((coe(&[0, 0, 0, 1], 1).unwrap() + h(0.75)).abs() < 1e-12);
        assert!(coe(&[1], 1).is_err());
        assert!(coe(&[0, 0], 1).is_err());
    }

    #[test]
    fn rare_label_ranks_first() {
        let recs = vec![rec(0, 0, 80.0), rec(1, 0, 80.0), rec(2, 0, 80.0), rec(3, 1, 80.0)];
        let cfg = FilterConfig {
            gamma: 1.0,
            keep_ratio: 0.25,
        };
        assert_eq!(filter_annotations(&recs, &cfg).unwrap()[0].node_id, 3);
    }

    #[test]
    fn gamma_zero_is_confidence_order() {
        let recs = vec![rec(5, 0, 40.0), rec(1, 1, 90.0), rec(7, 0, 90.0), rec(2, 2, 60.0)];
        let cfg = FilterConfig {
            gamma: 0.0,
            keep_ratio: 0.5,
        };
        let kept: Vec<usize> = filter_annotations(&recs, &cfg).unwrap().iter().map(|r| r.node_id).collect();
        assert_eq!(kept, vec![1, 7]);
    }

    #[test]
    fn keep_count_rounds_up() {
        let cfg = FilterConfig::default();
        assert_eq!(cfg.keep_count(10), 8);
        assert_eq!(cfg.keep_count(11), 9);
        assert_eq!(cfg.keep_count(2), 2);
        let all = FilterConfig {
            keep_ratio: 1.0,
            ..cfg
        };
        assert_eq!(all.keep_count(7), 7);
    }
}

//! Single-criterion selectors used in ablations.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::featprop::featprop_scores;
use super::hybrid::rank_desc;
use super::pagerank::pagerank_scores;
use crate::error::{Error, Result};
use crate::gnn::{prediction_entropy, Prediction};
use crate::graph::Graph;
use crate::seed;

/// Neighbors used by the density score.
pub const DENSITY_NEIGHBORS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Random,
    Density,
    Degree,
    Entropy,
    PageRank,
    FeatProp,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 6] = [
        BaselineKind::Random,
        BaselineKind::Density,
        BaselineKind::Degree,
        BaselineKind::Entropy,
        BaselineKind::PageRank,
        BaselineKind::FeatProp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Random => "random",
            BaselineKind::Density => "density",
            BaselineKind::Degree => "degree",
            BaselineKind::Entropy => "entropy",
            BaselineKind::PageRank => "pagerank",
            BaselineKind::FeatProp => "featprop",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown selection strategy {s:?}")))
    }
}

/// Inverse mean Euclidean distance from each candidate to its `k` nearest
/// other candidates in raw feature space.
pub fn density_scores(g: &Graph, candidates: &[usize], k: usize) -> Vec<f64> {
    let x = g.features();
    let k = k.min(candidates.len().saturating_sub(1));
    candidates
        .iter()
        .map(|&u| {
            if k == 0 {
                return 0.0;
            }
            let mut d: Vec<f64> = candidates
                .iter()
                .filter(|&&v| v != u)
                .map(|&v| {
                    x.row(u)
                        .iter()
                        .zip(x.row(v).iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect();
            d.sort_by(f64::total_cmp);
            let mean = d[..k].iter().sum::<f64>() / k as f64;
            1.0 / (mean + f64::EPSILON)
        })
        .collect()
}

/// Top-`budget` test nodes under a single criterion (uniform sampling for
/// `Random`). Ties go to the lower node id.
pub fn baseline_select(
    kind: BaselineKind,
    g: &Graph,
    pred: &Prediction,
    test_mask: &[bool],
    budget: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let n = g.num_nodes();
    if test_mask.len() != n || pred.num_nodes() != n {
        return Err(Error::Shape("prediction and test mask must cover every node".into()));
    }
    let mut test: Vec<usize> = (0..n).filter(|&i| test_mask[i]).collect();
    if budget == 0 || budget > test.len() {
        return Err(Error::Config(format!(
            "budget {budget} must be in 1..={} (test size)",
            test.len()
        )));
    }
    match kind {
        BaselineKind::Random => {
            let mut rng = seed::rng(seed);
            test.shuffle(&mut rng);
        }
        BaselineKind::Degree => rank_desc(&mut test, |i| g.degree(i) as f64),
        BaselineKind::Entropy => {
            let q = prediction_entropy(pred);
            rank_desc(&mut test, |i| q[i]);
        }
        BaselineKind::PageRank => {
            let pr = pagerank_scores(g, 0.85, 1e-8)?;
            rank_desc(&mut test, |i| pr[i]);
        }
        BaselineKind::Density => {
            let mut score = vec![0.0; n];
            for (&i, s) in test.iter().zip(density_scores(g, &test, DENSITY_NEIGHBORS)) {
                score[i] = s;
            }
            rank_desc(&mut test, |i| score[i]);
        }
        BaselineKind::FeatProp => {
            let mut score = vec![0.0; n];
            for (&i, s) in test.iter().zip(featprop_scores(g, &test, 2, budget, seed)?) {
                score[i] = s;
            }
            rank_desc(&mut test, |i| score[i]);
        }
    }
    test.truncate(budget);
    Ok(test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn uniform_pred(n: usize) -> Prediction {
        Prediction::from_logits(Array2::zeros((n, 2)))
    }

    #[test]
    fn degree_on_star_picks_center() {
        let g = Graph::from_edges(Array2::zeros((5, 1)), vec![0; 5], 1, &[(2, 0), (2, 1), (2, 3), (2, 4)], None).unwrap();
        let s = baseline_select(BaselineKind::Degree, &g, &uniform_pred(5), &[true; 5], 1, 0).unwrap();
        assert_eq!(s, vec![2]);
    }

    #[test]
    fn random_is_seeded() {
        let g = Graph::from_edges(Array2::zeros((30, 1)), vec![0; 30], 1, &[], None).unwrap();
        let a = baseline_select(BaselineKind::Random, &g, &uniform_pred(30), &[true; 30], 7, 5).unwrap();
        let b = baseline_select(BaselineKind::Random, &g, &uniform_pred(30), &[true; 30], 7, 5).unwrap();
        assert_eq!(a, b);
        let mut dedup = a.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), 7);
    }

    #[test]
    fn density_picks_one_node_per_core() {
        // two identical tight cores (exactly representable offsets) plus sparse noise
        let offsets: [(f64, f64); 11] = [
            (0.0, 0.0),
            (0.125, 0.0),
            (-0.125, 0.0),
            (0.0, 0.125),
            (0.0, -0.125),
            (0.25, 0.125),
            (-0.25, -0.125),
            (0.125, 0.25),
            (-0.125, -0.25),
            (0.375, 0.0),
            (0.0, -0.375),
        ];
        let noise = [(20.0, -40.0), (-30.0, 50.0), (60.0, 60.0), (-70.0, -10.0)];
        let n = 2 * offsets.len() + noise.len();
        let mut f = Array2::zeros((n, 2));
        for (i, &(dx, dy)) in offsets.iter().enumerate() {
            f[[i, 0]] = dx;
            f[[i, 1]] = dy;
            f[[i + 11, 0]] = 16.0 + dx;
            f[[i + 11, 1]] = dy;
        }
        for (i, &(x, y)) in noise.iter().enumerate() {
            f[[22 + i, 0]] = x;
            f[[22 + i, 1]] = y;
        }
        let g = Graph::from_edges(f, vec![0; n], 1, &[], None).unwrap();
        let s = baseline_select(BaselineKind::Density, &g, &uniform_pred(n), &vec![true; n], 2, 0).unwrap();
        assert!(s[0] < 11 && s[1] >= 11 && s[1] < 22, "{s:?}");
    }

    #[test]
    fn unknown_kind() {
        assert!("coreset".parse::<BaselineKind>().is_err());
        assert_eq!("pagerank".parse::<BaselineKind>().unwrap(), BaselineKind::PageRank);
    }
}

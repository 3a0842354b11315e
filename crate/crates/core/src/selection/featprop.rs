//! Representativeness scores in propagated-feature space.
//!
//! Features are smoothed as `Â^hops · X`, the candidate rows are clustered
//! with k-means (k-means++ seeding, a fixed number of Lloyd iterations), and
//! every candidate is scored by its proximity to the nearest centroid:
//! `1 / (1 + distance)`, divided by the maximum over candidates.

use ndarray::{Array2, ArrayView1};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{normalize_adjacency, Graph};
use crate::seed;

pub const KMEANS_ITERATIONS: usize = 50;

/// `Â^hops · X`.
pub fn propagate_features(g: &Graph, hops: usize) -> Array2<f64> {
    let adj = normalize_adjacency(g);
    let mut x = g.features().clone();
    for _ in 0..hops {
        x = adj.spmm(x.view());
    }
    x
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid (lowest index on ties) and its squared distance.
fn nearest(point: ArrayView1<'_, f64>, centroids: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.outer_iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Seeded k-means over the rows of `points`; returns the centroids.
pub fn kmeans(points: &Array2<f64>, k: usize, iterations: usize, seed: u64) -> Result<Array2<f64>> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::Validation(format!("k = {k} must be in 1..={n}")));
    }
    let dim = points.ncols();
    let mut rng = seed::rng(seed);
    let mut centroids = Array2::zeros((k, dim));
    let mut chosen = vec![false; n];

    let first = rng.random_range(0..n);
    chosen[first] = true;
    centroids.row_mut(0).assign(&points.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), points.row(first))).collect();
    for c in 1..k {
        let total: f64 = (0..n).filter(|&i| !chosen[i]).map(|i| d2[i]).sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for i in (0..n).filter(|&i| !chosen[i]) {
                target -= d2[i];
                if target < 0.0 && d2[i] > 0.0 {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can exhaust `target` early; fall back to the farthest point
            pick.unwrap_or_else(|| {
                (0..n)
                    .filter(|&i| !chosen[i])
                    .fold((0, -1.0), |b, i| if d2[i] > b.1 { (i, d2[i]) } else { b })
                    .0
            })
        } else {
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        centroids.row_mut(c).assign(&points.row(pick));
        for i in 0..n {
            d2[i] = d2[i].min(sq_dist(points.row(i), points.row(pick)));
        }
    }

    let mut assign = vec![0usize; n];
    for _ in 0..iterations {
        for i in 0..n {
            assign[i] = nearest(points.row(i), &centroids).0;
        }
        let mut sums = Array2::<f64>::zeros((k, dim));
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[assign[i]] += 1;
            let mut row = sums.row_mut(assign[i]);
            row += &points.row(i);
        }
        for c in 0..k {
            if counts[c] > 0 {
                let mean = sums.row(c).mapv(|v| v / counts[c] as f64);
                centroids.row_mut(c).assign(&mean);
            }
        }
    }
    Ok(centroids)
}

/// Scores aligned with `candidates`, max-normalized to `(0, 1]`.
pub fn featprop_scores(g: &Graph, candidates: &[usize], hops: usize, k: usize, seed: u64) -> Result<Vec<f64>> {
    let propagated = propagate_features(g, hops);
    featprop_scores_from(&propagated, candidates, k, seed)
}

/// As [`featprop_scores`], with features already propagated.
pub fn featprop_scores_from(propagated: &Array2<f64>, candidates: &[usize], k: usize, seed: u64) -> Result<Vec<f64>> {
    if candidates.is_empty() {
        return Err(Error::Validation("featprop needs at least one candidate".into()));
    }
    if k == 0 || k > candidates.len() {
        return Err(Error::Validation(format!(
            "featprop K = {k} must be in 1..={}",
            candidates.len()
        )));
    }
    if let Some(&bad) = candidates.iter().find(|&&c| c >= propagated.nrows()) {
        return Err(Error::Validation(format!("candidate {bad} out of range")));
    }
    let points = propagated.select(ndarray::Axis(0), candidates);
    let centroids = kmeans(&points, k, KMEANS_ITERATIONS, seed)?;
    let raw: Vec<f64> = points
        .outer_iter()
        .map(|p| 1.0 / (1.0 + nearest(p, &centroids).1.sqrt()))
        .collect();
    let max = raw.iter().copied().fold(0.0, f64::max);
    Ok(raw.into_iter().map(|s| s / max).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph_with(features: Array2<f64>) -> Graph {
        let n = features.nrows();
        Graph::from_edges(features, vec![0; n], 1, &[], None).unwrap()
    }

    #[test]
    fn identical_features_all_score_one() {
        let g = graph_with(Array2::from_elem((6, 3), 0.7));
        let s = featprop_scores(&g, &[0, 2, 3, 5], 2, 2, 1).unwrap();
        assert!(s.iter().all(|&v| v == 1.0), "{s:?}");
    }

    #[test]
    fn one_centroid_per_candidate() {
        let g = graph_with(Array2::from_shape_fn((5, 2), |(i, j)| (i * i + j) as f64));
        let s = featprop_scores(&g, &[0, 1, 2, 3, 4], 0, 5, 3).unwrap();
        assert!(s.iter().all(|&v| v == 1.0), "{s:?}");
    }

    #[test]
    fn planted_clusters_favor_center_nodes() {
        // two symmetric clusters far apart; node 0 and node 5 sit at the centers
        let offsets = [0.0, 1.0, -1.0, 0.5, -0.5];
        let mut f = Array2::<f64>::zeros((10, 1));
        for (i, &o) in offsets.iter().enumerate() {
            f[[i, 0]] = o;
            f[[i + 5, 0]] = 100.0 + o;
        }
        let g = graph_with(f);
        let cands: Vec<usize> = (0..10).collect();
        let s = featprop_scores(&g, &cands, 0, 2, 11).unwrap();
        for i in [1, 2, 3, 4, 6, 7, 8, 9] {
            assert!(s[0] > s[i] && s[5] > s[i], "{s:?}");
        }
    }

    #[test]
    fn k_above_candidate_count() {
        let g = graph_with(Array2::zeros((3, 1)));
        assert!(featprop_scores(&g, &[0, 1], 1, 3, 0).is_err());
        assert!(featprop_scores(&g, &[], 1, 1, 0).is_err());
    }
}

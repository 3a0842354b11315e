use crate::error::{Error, Result};
use crate::graph::Graph;

pub const DEFAULT_MAX_ITERATIONS: usize = 1000;

/// Global PageRank by power iteration on the column-normalized adjacency
/// with uniform teleportation. Dangling nodes spread their mass uniformly.
/// Iterates until the L1 change drops below `tol`.
pub fn pagerank_scores(g: &Graph, damping: f64, tol: f64) -> Result<Vec<f64>> {
    pagerank_with_limit(g, damping, tol, DEFAULT_MAX_ITERATIONS)
}

pub fn pagerank_with_limit(g: &Graph, damping: f64, tol: f64, max_iterations: usize) -> Result<Vec<f64>> {
    if !(damping > 0.0 && damping < 1.0) {
        return Err(Error::Validation(format!("damping {damping} outside (0, 1)")));
    }
    if !(tol > 0.0) {
        return Err(Error::Validation(format!("tolerance {tol} must be positive")));
    }
    let n = g.num_nodes();
    if n == 0 {
        return Ok(Vec::new());
    }
    let uniform = 1.0 / n as f64;
    let mut scores = vec![uniform; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iterations {
        let dangling: f64 = (0..n).filter(|&u| g.degree(u) == 0).map(|u| scores[u]).sum();
        let base = (1.0 - damping) * uniform + damping * dangling * uniform;
        next.iter_mut().for_each(|v| *v = base);
        for u in 0..n {
            let deg = g.degree(u);
            if deg > 0 {
                let share = damping * scores[u] / deg as f64;
                for &v in g.neighbors(u) {
                    next[v] += share;
                }
            }
        }
        residual = scores.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut scores, &mut next);
        if residual < tol {
            return Ok(scores);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iterations,
        residual,
    })
}

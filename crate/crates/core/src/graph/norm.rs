use ndarray::{Array2, ArrayView2, Zip};

use super::Graph;

/// Symmetrically normalized adjacency with self-loops,
/// `D̃^{-1/2} (A + I) D̃^{-1/2}`, stored in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct NormAdj {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
}

pub fn normalize_adjacency(g: &Graph) -> NormAdj {
    let n = g.num_nodes();
    let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / ((g.degree(i) + 1) as f64).sqrt()).collect();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut targets = Vec::with_capacity(g.targets().len() + n);
    let mut weights = Vec::with_capacity(g.targets().len() + n);
    offsets.push(0);
    for u in 0..n {
        // neighbors are sorted; splice the self-loop into place
        let mut pushed_self = false;
        for &v in g.neighbors(u) {
            if !pushed_self && v > u {
                targets.push(u);
                weights.push(inv_sqrt[u] * inv_sqrt[u]);
                pushed_self = true;
            }
            targets.push(v);
            weights.push(inv_sqrt[u] * inv_sqrt[v]);
        }
        if !pushed_self {
            targets.push(u);
            weights.push(inv_sqrt[u] * inv_sqrt[u]);
        }
        offsets.push(targets.len());
    }
    NormAdj {
        offsets,
        targets,
        weights,
    }
}

impl NormAdj {
    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// `(target, weight)` pairs of row `u`, self-loop included.
    pub fn row(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[u]..self.offsets[u + 1];
        self.targets[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        self.row(u).find(|&(t, _)| t == v).map(|(_, w)| w)
    }

    pub fn row_sum(&self, u: usize) -> f64 {
        self.row(u).map(|(_, w)| w).sum()
    }

    /// `Â · x`.
    pub fn spmm(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        assert_eq!(x.nrows(), self.num_nodes(), "spmm row mismatch");
        let mut out = Array2::zeros((x.nrows(), x.ncols()));
        Zip::indexed(out.rows_mut()).for_each(|u, mut out_row| {
            for (v, w) in self.row(u) {
                out_row.scaled_add(w, &x.row(v));
            }
        });
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.num_nodes();
        let mut d = Array2::zeros((n, n));
        for u in 0..n {
            for (v, w) in self.row(u) {
                d[[u, v]] = w;
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::from_edges(Array2::zeros((n, 1)), vec![0; n], 1, edges, None).unwrap()
    }

    #[test]
    fn isolated_node_self_loop() {
        let a = normalize_adjacency(&graph(1, &[]));
        assert_eq!(a.weight(0, 0), Some(1.0));
    }

    #[test]
    fn single_edge() {
        let a = normalize_adjacency(&graph(2, &[(0, 1)]));
        for (u, v) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert_relative_eq!(a.weight(u, v).unwrap(), 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn star_center_to_leaf() {
        let a = normalize_adjacency(&graph(4, &[(0, 1), (0, 2), (0, 3)]));
        let expected = 1.0 / (4.0f64 * 2.0).sqrt();
        assert_relative_eq!(a.weight(0, 2).unwrap(), expected, epsilon = 1e-15);
        assert_relative_eq!(a.weight(3, 0).unwrap(), expected, epsilon = 1e-15);
    }

    #[test]
    fn spmm_matches_dense() {
        let a = normalize_adjacency(&graph(5, &[(0, 1), (1, 2), (3, 4), (0, 4)]));
        let x = Array2::from_shape_fn((5, 3), |(i, j)| (i * 3 + j) as f64 * 0.1 - 0.4);
        let sparse = a.spmm(x.view());
        let dense = a.to_dense().dot(&x);
        for (s, d) in sparse.iter().zip(dense.iter()) {
            assert_relative_eq!(s, d, epsilon = 1e-14);
        }
    }
}

//! Graph data model: an undirected graph in CSR form with dense node
//! features, integer labels and optional per-node text.

mod augment;
mod io;
mod norm;
mod sbm;
mod split;

pub use augment::drop_edge;
pub use io::{load_graph, save_graph};
pub use norm::{normalize_adjacency, NormAdj};
pub use sbm::{generate_sbm, SbmParams};
pub use split::{
    load_split, make_ood_split, save_split, DataSplit, DomainCriterion, ShiftKind, SplitRatios,
    SplitSpec,
};

use ndarray::Array2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    features: Array2<f64>,
    labels: Vec<usize>,
    texts: Option<Vec<String>>,
    num_classes: usize,
}

impl Graph {
    /// Builds a graph from an undirected edge list (either orientation,
    /// duplicates allowed). Edges are symmetrized and deduplicated.
    pub fn from_edges(
        features: Array2<f64>,
        labels: Vec<usize>,
        num_classes: usize,
        edges: &[(usize, usize)],
        texts: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = features.nrows();
        if labels.len() != n {
            return Err(Error::Validation(format!(
                "{} labels for {} feature rows",
                labels.len(),
                n
            )));
        }
        if num_classes == 0 {
            return Err(Error::Validation("class count must be at least 1".into()));
        }
        if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= num_classes) {
            return Err(Error::Validation(format!(
                "node {i} has label {y}, but the class count is {num_classes}"
            )));
        }
        if let Some(t) = &texts {
            if t.len() != n {
                return Err(Error::Validation(format!("{} texts for {} nodes", t.len(), n)));
            }
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Validation(format!(
                    "edge ({u}, {v}) references a node outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::Validation(format!("self-loop on node {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(edges.len() * 2);
        offsets.push(0);
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
            targets.extend_from_slice(row);
            offsets.push(targets.len());
        }
        Ok(Graph {
            offsets,
            targets,
            features,
            labels,
            texts,
            num_classes,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.targets[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_nodes()).map(|i| self.degree(i)).collect()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn texts(&self) -> Option<&[String]> {
        self.texts.as_deref()
    }

    /// Undirected edges as `(u, v)` with `u < v`, in CSR order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    /// Same node payload, different edge set.
    pub fn with_edges(&self, edges: &[(usize, usize)]) -> Result<Self> {
        Graph::from_edges(
            self.features.clone(),
            self.labels.clone(),
            self.num_classes,
            edges,
            self.texts.clone(),
        )
    }

    /// Relabels nodes so that old node `i` becomes `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let n = self.num_nodes();
        if perm.len() != n {
            return Err(Error::Shape(format!("permutation of length {} for {n} nodes", perm.len())));
        }
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::Validation("not a permutation".into()));
            }
        }
        let mut features = Array2::zeros(self.features.raw_dim());
        let mut labels = vec![0; n];
        let mut texts = self.texts.as_ref().map(|_| vec![String::new(); n]);
        for (old, &new) in perm.iter().enumerate() {
            features.row_mut(new).assign(&self.features.row(old));
            labels[new] = self.labels[old];
            if let (Some(dst), Some(src)) = (texts.as_mut(), self.texts.as_ref()) {
                dst[new] = src[old].clone();
            }
        }
        let edges: Vec<_> = self.edges().map(|(u, v)| (perm[u], perm[v])).collect();
        Graph::from_edges(features, labels, self.num_classes, &edges, texts)
    }
}

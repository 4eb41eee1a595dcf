//! Graph structure, dataset bundles, and normalized adjacency operators.

mod geom;
mod io;

pub use geom::load_geom_gcn;
pub use io::{load_dataset, save_dataset, DatasetPaths};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, SparseMatrix};

/// Undirected graph. Edges are stored once with `src < dst`; self-loops are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(usize, usize, f64)>,
    adjacency: SparseMatrix,
}

/// What [`Graph::from_edges`] discarded while building the graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EdgeCleanup {
    pub self_loops: usize,
    pub duplicates: usize,
}

impl Graph {
    /// Builds a graph from possibly directed, duplicated edges.
    ///
    /// Each pair is symmetrized; the first weight seen for a pair wins. Self-loops are dropped
    /// and counted. Weights must be finite and strictly positive.
    pub fn from_edges(
        num_nodes: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<(Self, EdgeCleanup)> {
        let mut cleanup = EdgeCleanup::default();
        let mut unique: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (u, v, w) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::Validation(format!(
                    "edge ({u}, {v}) references a node outside 0..{num_nodes}"
                )));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Validation(format!(
                    "edge ({u}, {v}) has weight {w}; weights must be positive and finite"
                )));
            }
            if u == v {
                cleanup.self_loops += 1;
                continue;
            }
            let key = (u.min(v), u.max(v));
            match unique.entry(key) {
                std::collections::btree_map::Entry::Occupied(_) => cleanup.duplicates += 1,
                std::collections::btree_map::Entry::Vacant(slot) => {
                    slot.insert(w);
                }
            }
        }
        let edges: Vec<_> = unique.into_iter().map(|((u, v), w)| (u, v, w)).collect();
        Ok((Self::from_clean_edges(num_nodes, edges), cleanup))
    }

    fn from_clean_edges(num_nodes: usize, edges: Vec<(usize, usize, f64)>) -> Self {
        let adjacency = SparseMatrix::from_triplets(
            num_nodes,
            num_nodes,
            edges.iter().flat_map(|&(u, v, w)| [(u, v, w), (v, u, w)]),
        )
        .expect("edges validated against num_nodes");
        Self {
            num_nodes,
            edges,
            adjacency,
        }
    }

    /// Graph with the union of `self`'s edges and `extra` unit-weight edges.
    pub(crate) fn with_added_edges(&self, extra: &[(usize, usize)]) -> Result<Self> {
        let all = self
            .edges
            .iter()
            .copied()
            .chain(extra.iter().map(|&(u, v)| (u, v, 1.0)));
        Ok(Self::from_edges(self.num_nodes, all)?.0)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Undirected edges as `(src, dst, weight)` with `src < dst`, sorted.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn adjacency(&self) -> &SparseMatrix {
        &self.adjacency
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency.get(u, v) != 0.0
    }

    pub fn is_weighted(&self) -> bool {
        self.edges.iter().any(|&(_, _, w)| w != 1.0)
    }

    pub fn degrees(&self) -> Vec<f64> {
        (0..self.num_nodes)
            .map(|i| self.adjacency.row(i).1.iter().sum())
            .collect()
    }
}

/// One named train/validation/test partition of node indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub name: String,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// A graph with node features, labels, and evaluation splits.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub graph: Graph,
    pub features: DenseMatrix,
    pub labels: Vec<usize>,
    pub splits: Vec<Split>,
    pub num_classes: usize,
}

impl DatasetBundle {
    /// Checks shape, label range, and split consistency.
    pub fn new(
        graph: Graph,
        features: DenseMatrix,
        labels: Vec<usize>,
        splits: Vec<Split>,
        num_classes: usize,
    ) -> Result<Self> {
        let n = graph.num_nodes();
        if features.rows() != n {
            return Err(Error::Validation(format!(
                "feature matrix has {} rows but the graph has {n} nodes",
                features.rows()
            )));
        }
        if labels.len() != n {
            return Err(Error::Validation(format!(
                "{} labels for {n} nodes",
                labels.len()
            )));
        }
        if let Some((i, &c)) = labels.iter().enumerate().find(|(_, &c)| c >= num_classes) {
            return Err(Error::Validation(format!(
                "node {i} has label {c}, outside 0..{num_classes}"
            )));
        }
        for split in &splits {
            let mut seen = vec![false; n];
            for (part, idx) in [("train", &split.train), ("val", &split.val), ("test", &split.test)] {
                for &i in idx {
                    if i >= n {
                        return Err(Error::Validation(format!(
                            "split '{}' {part} index {i} is not below N = {n}",
                            split.name
                        )));
                    }
                    if seen[i] {
                        return Err(Error::Validation(format!(
                            "split '{}' lists node {i} more than once",
                            split.name
                        )));
                    }
                    seen[i] = true;
                }
            }
        }
        Ok(Self {
            graph,
            features,
            labels,
            splits,
            num_classes,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn split(&self, name: &str) -> Option<&Split> {
        self.splits.iter().find(|s| s.name == name)
    }

    /// Same bundle over a different edge set on the same nodes.
    pub fn with_graph(&self, graph: Graph) -> Result<Self> {
        if graph.num_nodes() != self.num_nodes() {
            return Err(Error::Validation(format!(
                "replacement graph has {} nodes, dataset has {}",
                graph.num_nodes(),
                self.num_nodes()
            )));
        }
        Ok(Self {
            graph,
            ..self.clone()
        })
    }
}

/// Symmetrically normalized adjacency `D^{-1/2} (A [+ I]) D^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    pub matrix: SparseMatrix,
    pub with_self_loops: bool,
}

impl NormalizedAdjacency {
    pub fn num_nodes(&self) -> usize {
        self.matrix.rows()
    }

    /// Dense `I - Ã`.
    pub fn laplacian_dense(&self) -> DenseMatrix {
        let n = self.num_nodes();
        let mut l = self.matrix.to_dense().scale(-1.0);
        for i in 0..n {
            l.set(i, i, l.get(i, i) + 1.0);
        }
        l
    }
}

/// Degree-normalizes the adjacency. With self-loops the degree counts the added loop, so an
/// isolated node gets a unit diagonal entry; without, it gets an empty row.
pub fn normalized_adjacency(graph: &Graph, with_self_loops: bool) -> NormalizedAdjacency {
    let n = graph.num_nodes();
    let loop_weight = if with_self_loops { 1.0 } else { 0.0 };
    let degree: Vec<f64> = graph.degrees().into_iter().map(|d| d + loop_weight).collect();
    let mut triplets: Vec<(usize, usize, f64)> = graph
        .adjacency()
        .iter()
        .map(|(i, j, w)| (i, j, w / (degree[i] * degree[j]).sqrt()))
        .collect();
    if with_self_loops {
        triplets.extend((0..n).map(|i| (i, i, 1.0 / degree[i])));
    }
    let matrix = SparseMatrix::from_triplets(n, n, triplets).expect("indices below n");
    NormalizedAdjacency {
        matrix,
        with_self_loops,
    }
}

/// L1-normalizes every nonzero row; zero rows are left untouched.
pub fn row_normalize_features(features: &DenseMatrix) -> DenseMatrix {
    let mut out = features.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let l1: f64 = row.iter().map(|v| v.abs()).sum();
        if l1 > 0.0 {
            row.iter_mut().for_each(|v| *v /= l1);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{spmm, sym_eig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn path2() -> Graph {
        Graph::from_edges(2, [(0, 1, 1.0)]).unwrap().0
    }

    fn random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Graph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random_bool(p) {
                    edges.push((i, j, 1.0));
                }
            }
        }
        Graph::from_edges(n, edges).unwrap().0
    }

    #[test]
    fn dedup_and_self_loops() {
        let (g, cleanup) =
            Graph::from_edges(3, [(0, 1, 1.0), (1, 0, 1.0), (2, 2, 1.0), (1, 2, 1.0)]).unwrap();
        assert_eq!(g.num_edges(), 2);
        assert_eq!(cleanup, EdgeCleanup { self_loops: 1, duplicates: 1 });
        assert!(g.adjacency().is_symmetric());
        assert_eq!(g.adjacency().get(2, 2), 0.0);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(Graph::from_edges(2, [(0, 2, 1.0)]).is_err());
        assert!(Graph::from_edges(2, [(0, 1, -1.0)]).is_err());
    }

    #[test]
    fn normalized_path_graph() {
        let with = normalized_adjacency(&path2(), true).matrix.to_dense();
        assert_eq!(with.as_slice(), &[0.5, 0.5, 0.5, 0.5]);
        let without = normalized_adjacency(&path2(), false).matrix.to_dense();
        assert_eq!(without.as_slice(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn isolated_nodes() {
        let g = Graph::from_edges(1, []).unwrap().0;
        assert_eq!(normalized_adjacency(&g, true).matrix.to_dense().as_slice(), &[1.0]);
        let g = Graph::from_edges(3, [(0, 1, 1.0)]).unwrap().0;
        let a = normalized_adjacency(&g, false);
        assert_eq!(a.matrix.row(2).0.len(), 0);
    }

    #[test]
    fn row_normalization() {
        let x = DenseMatrix::from_rows(&[vec![2.0, 2.0, 0.0], vec![0.0; 3], vec![1.0, 0.0, 0.0]])
            .unwrap();
        let y = row_normalize_features(&x);
        assert_eq!(y.row(0), &[0.5, 0.5, 0.0]);
        assert_eq!(y.row(1), &[0.0; 3]);
        assert_eq!(y.row(2), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn spectral_radius_and_laplacian_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..20 {
            let n = rng.random_range(2..30);
            let g = random_graph(n, 0.25, &mut rng);
            for loops in [true, false] {
                let adj = normalized_adjacency(&g, loops);
                assert!(adj.matrix.is_symmetric());
                assert!(adj.matrix.iter().all(|(_, _, v)| v >= 0.0));

                // power iteration on Ã²; its dominant eigenvalue is ρ(Ã)²
                let mut v = DenseMatrix::from_fn(n, 1, |i, _| 1.0 + (i as f64 * 0.37).sin());
                let mut rho = 0.0;
                for _ in 0..500 {
                    let w = spmm(&adj.matrix, &spmm(&adj.matrix, &v).unwrap()).unwrap();
                    let norm = w.frobenius_norm();
                    if norm == 0.0 {
                        break;
                    }
                    rho = (norm / v.frobenius_norm()).sqrt();
                    v = w.scale(1.0 / norm);
                }
                assert!(rho <= 1.0 + 1e-8, "trial {trial}: spectral radius {rho}");

                let eig = sym_eig(&adj.laplacian_dense()).unwrap();
                assert!(eig
                    .eigenvalues
                    .iter()
                    .all(|&l| (-1e-8..=2.0 + 1e-8).contains(&l)));
            }
        }
    }

    #[test]
    fn bundle_validation() {
        let g = path2();
        let x = DenseMatrix::zeros(2, 3);
        assert!(DatasetBundle::new(g.clone(), DenseMatrix::zeros(1, 3), vec![0, 1], vec![], 2).is_err());
        assert!(DatasetBundle::new(g.clone(), x.clone(), vec![0, 2], vec![], 2).is_err());
        let bad_split = Split {
            name: "s".into(),
            train: vec![0],
            val: vec![0],
            test: vec![],
        };
        assert!(DatasetBundle::new(g.clone(), x.clone(), vec![0, 1], vec![bad_split], 2).is_err());
        let oob = Split {
            name: "s".into(),
            train: vec![5],
            val: vec![],
            test: vec![],
        };
        assert!(DatasetBundle::new(g, x, vec![0, 1], vec![oob], 2).is_err());
    }
}

//! Contextual stochastic block model: class-dependent edge probabilities plus Gaussian
//! class-conditional features.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DatasetBundle, Graph, Split};
use crate::numerics::{dot, DenseMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsbmConfig {
    pub num_nodes: usize,
    pub num_classes: usize,
    pub feature_dim: usize,
    /// Probability of an edge between two nodes of the same class.
    pub p_in: f64,
    /// Probability of an edge between nodes of different classes.
    pub p_out: f64,
    /// Norm of each class mean.
    pub feature_signal: f64,
    pub feature_noise_std: f64,
    pub seed: u64,
    /// Train / validation / test fractions.
    pub split_ratios: [f64; 3],
    pub num_splits: usize,
}

impl Default for CsbmConfig {
    /// The heterophilic benchmark: edge homophily around 0.09. `feature_signal` is the smallest
    /// value on the grid {1.0, 1.5, 2.0, 2.5, 3.0} where a linear probe on the raw features
    /// clears 0.8 test accuracy (about 0.87 over five seeds).
    fn default() -> Self {
        Self {
            num_nodes: 600,
            num_classes: 3,
            feature_dim: 32,
            p_in: 0.01,
            p_out: 0.05,
            feature_signal: 2.0,
            feature_noise_std: 1.0,
            seed: 0,
            split_ratios: [0.48, 0.32, 0.20],
            num_splits: 10,
        }
    }
}

impl CsbmConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} is not a probability")));
            }
        }
        if !(self.feature_noise_std >= 0.0 && self.feature_noise_std.is_finite()) {
            return Err(Error::Config("feature_noise_std must be non-negative".into()));
        }
        if !self.feature_signal.is_finite() {
            return Err(Error::Config("feature_signal must be finite".into()));
        }
        if self.num_classes == 0 || self.num_nodes < self.num_classes || self.feature_dim == 0 {
            return Err(Error::Config(
                "need at least one class, one node per class, and one feature".into(),
            ));
        }
        if self.split_ratios.iter().any(|r| *r < 0.0)
            || (self.split_ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::Config(format!(
                "split ratios {:?} must be non-negative and sum to 1",
                self.split_ratios
            )));
        }
        Ok(())
    }

    /// Expected fraction of intra-class edges under balanced classes.
    pub fn expected_homophily(&self) -> f64 {
        let n = self.num_nodes as f64;
        let c = self.num_classes as f64;
        let per_class = n / c;
        let intra = c * per_class * (per_class - 1.0) / 2.0 * self.p_in;
        let inter = c * (c - 1.0) / 2.0 * per_class * per_class * self.p_out;
        intra / (intra + inter)
    }
}

/// Unit-norm class directions. Orthonormal when `classes <= dim`.
fn class_directions(classes: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(classes);
    for c in 0..classes {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if c < dim {
            for u in &dirs {
                let proj = dot(&v, u);
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= proj * b);
            }
        }
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        dirs.push(v);
    }
    dirs
}

pub fn generate_csbm(cfg: &CsbmConfig) -> Result<DatasetBundle> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (n, c, d) = (cfg.num_nodes, cfg.num_classes, cfg.feature_dim);

    let mut labels: Vec<usize> = (0..n).map(|i| i % c).collect();
    labels.shuffle(&mut rng);

    let dirs = class_directions(c, d, &mut rng);
    let mut features = DenseMatrix::zeros(n, d);
    for (i, &label) in labels.iter().enumerate() {
        for (j, v) in features.row_mut(i).iter_mut().enumerate() {
            let noise: f64 = rng.sample(StandardNormal);
            *v = cfg.feature_signal * dirs[label][j] + cfg.feature_noise_std * noise;
        }
    }

    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] { cfg.p_in } else { cfg.p_out };
            if rng.random::<f64>() < p {
                edges.push((i, j, 1.0));
            }
        }
    }
    let (graph, _) = Graph::from_edges(n, edges)?;

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (i, &label) in labels.iter().enumerate() {
        by_class[label].push(i);
    }
    let splits = (0..cfg.num_splits)
        .map(|s| {
            let mut split = Split {
                name: format!("split_{s}"),
                train: Vec::new(),
                val: Vec::new(),
                test: Vec::new(),
            };
            for members in &by_class {
                let mut nodes = members.clone();
                nodes.shuffle(&mut rng);
                let m = nodes.len() as f64;
                let n_train = (cfg.split_ratios[0] * m).round() as usize;
                let n_val = ((cfg.split_ratios[1] * m).round() as usize).min(nodes.len() - n_train);
                split.train.extend_from_slice(&nodes[..n_train]);
                split.val.extend_from_slice(&nodes[n_train..n_train + n_val]);
                split.test.extend_from_slice(&nodes[n_train + n_val..]);
            }
            split.train.sort_unstable();
            split.val.sort_unstable();
            split.test.sort_unstable();
            split
        })
        .collect();

    DatasetBundle::new(graph, features, labels, splits, c)
}

/// Fraction of edges whose endpoints share a label.
pub fn edge_homophily(graph: &Graph, labels: &[usize]) -> Result<f64> {
    if graph.num_edges() == 0 {
        return Err(Error::Validation("edge homophily is undefined on an edgeless graph".into()));
    }
    if labels.len() != graph.num_nodes() {
        return Err(Error::Validation(format!(
            "{} labels for {} nodes",
            labels.len(),
            graph.num_nodes()
        )));
    }
    let same = graph
        .edges()
        .iter()
        .filter(|&&(u, v, _)| labels[u] == labels[v])
        .count();
    Ok(same as f64 / graph.num_edges() as f64)
}

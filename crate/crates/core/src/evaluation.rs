//! Linear evaluation protocol: view combination, softmax-regression probe, β selection and
//! multi-seed aggregation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoders::{DualEncoder, Variant};
use crate::error::{Error, Result};
use crate::graph::{DatasetBundle, Split};
use crate::numerics::{matmul, matmul_tn, DenseMatrix};
use crate::training::{train_variant, ModelInputs, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub probe_lr: f64,
    pub probe_epochs: usize,
    pub probe_weight_decay: f64,
    pub seed: u64,
    /// How embeddings are rescaled before the probe sees them.
    pub normalize: ProbeNormalization,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            probe_lr: 0.01,
            probe_epochs: 300,
            probe_weight_decay: 1e-4,
            seed: 0,
            normalize: ProbeNormalization::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeNormalization {
    /// Raw embeddings.
    #[default]
    None,
    /// Each row scaled to unit L2 norm.
    L2,
    /// Each column centered and scaled by train-split statistics.
    Standardize,
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.probe_lr > 0.0 && self.probe_lr.is_finite()) {
            return Err(Error::Config(format!("probe_lr must be positive, got {}", self.probe_lr)));
        }
        if self.probe_epochs == 0 {
            return Err(Error::Config("probe_epochs must be at least 1".into()));
        }
        if !(self.probe_weight_decay >= 0.0 && self.probe_weight_decay.is_finite()) {
            return Err(Error::Config("probe_weight_decay must be non-negative".into()));
        }
        Ok(())
    }
}

/// `β z_s + (1 - β) z_f`.
pub fn combine_views(z_s: &DenseMatrix, z_f: &DenseMatrix, beta: f64) -> Result<DenseMatrix> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Config(format!("beta {beta} outside [0, 1]")));
    }
    if z_s.shape() != z_f.shape() {
        return Err(Error::dim(
            "combine_views",
            format!("{:?} vs {:?}", z_s.shape(), z_f.shape()),
        ));
    }
    if z_s == z_f {
        return Ok(z_s.clone());
    }
    let data = z_s
        .as_slice()
        .iter()
        .zip(z_f.as_slice())
        .map(|(a, b)| beta * a + (1.0 - beta) * b)
        .collect();
    DenseMatrix::from_vec(z_s.rows(), z_s.cols(), data)
}

/// Softmax-regression weights: `logits = z W + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProbe {
    pub weights: DenseMatrix,
    pub bias: DenseMatrix,
    pub preprocessing: Preprocessing,
}

/// Column statistics frozen at fit time so the same transform applies to any later embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub mode: ProbeNormalization,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Preprocessing {
    fn fit(mode: ProbeNormalization, z: &DenseMatrix, rows: &[usize]) -> Self {
        let d = z.cols();
        let (mut mean, mut scale) = (vec![0.0; d], vec![1.0; d]);
        if mode == ProbeNormalization::Standardize && !rows.is_empty() {
            let n = rows.len() as f64;
            for &i in rows {
                mean.iter_mut().zip(z.row(i)).for_each(|(m, v)| *m += v / n);
            }
            let mut var = vec![0.0; d];
            for &i in rows {
                for ((s, v), m) in var.iter_mut().zip(z.row(i)).zip(&mean) {
                    *s += (v - m) * (v - m) / n;
                }
            }
            scale = var
                .into_iter()
                .map(|v| if v.sqrt() > 1e-12 { 1.0 / v.sqrt() } else { 1.0 })
                .collect();
        }
        Self { mode, mean, scale }
    }

    pub fn apply(&self, z: &DenseMatrix) -> DenseMatrix {
        let mut out = z.clone();
        for i in 0..out.rows() {
            let row = out.row_mut(i);
            match self.mode {
                ProbeNormalization::None => {}
                ProbeNormalization::L2 => {
                    let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm > 1e-12 {
                        row.iter_mut().for_each(|v| *v /= norm);
                    }
                }
                ProbeNormalization::Standardize => {
                    for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
                        *v = (*v - m) * s;
                    }
                }
            }
        }
        out
    }
}

impl LinearProbe {
    pub fn logits(&self, z: &DenseMatrix) -> Result<DenseMatrix> {
        let mut logits = matmul(&self.preprocessing.apply(z), &self.weights)?;
        for i in 0..logits.rows() {
            logits
                .row_mut(i)
                .iter_mut()
                .zip(self.bias.as_slice())
                .for_each(|(l, b)| *l += b);
        }
        Ok(logits)
    }

    /// Argmax class per row; ties go to the lowest class id.
    pub fn predict(&self, z: &DenseMatrix) -> Result<Vec<usize>> {
        let logits = self.logits(z)?;
        Ok((0..logits.rows()).map(|i| argmax(logits.row(i))).collect())
    }

    /// Fraction of `nodes` whose prediction matches `labels`.
    pub fn accuracy(&self, z: &DenseMatrix, labels: &[usize], nodes: &[usize]) -> Result<f64> {
        if nodes.is_empty() {
            return Err(Error::Validation("accuracy over an empty node set".into()));
        }
        let pred = self.predict(&z.select_rows(nodes))?;
        let hits = nodes.iter().zip(&pred).filter(|(&i, &p)| labels[i] == p).count();
        Ok(hits as f64 / nodes.len() as f64)
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Mean cross-entropy over `(z, labels)` plus `wd/2 ‖W‖²`, with gradients for `W` and `b`.
pub fn probe_loss(
    z: &DenseMatrix,
    labels: &[usize],
    weights: &DenseMatrix,
    bias: &DenseMatrix,
    weight_decay: f64,
) -> Result<(f64, DenseMatrix, DenseMatrix)> {
    let n = z.rows();
    if labels.len() != n || n == 0 {
        return Err(Error::dim("probe_loss", format!("{n} rows, {} labels", labels.len())));
    }
    let mut p = matmul(z, weights)?;
    let mut loss = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let row = p.row_mut(i);
        row.iter_mut().zip(bias.as_slice()).for_each(|(l, b)| *l += b);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
        loss -= row[y].max(f64::MIN_POSITIVE).ln();
        // softmax minus one-hot, averaged
        row[y] -= 1.0;
        row.iter_mut().for_each(|v| *v /= n as f64);
    }
    loss /= n as f64;
    let mut d_w = matmul_tn(z, &p)?;
    d_w.axpy(weight_decay, weights)?;
    loss += 0.5 * weight_decay * weights.as_slice().iter().map(|w| w * w).sum::<f64>();
    Ok((loss, d_w, p.col_sums()))
}

/// Fits the probe on `split.train` by full-batch gradient descent and returns the per-epoch
/// training loss alongside it.
pub fn fit_probe(
    z: &DenseMatrix,
    labels: &[usize],
    train: &[usize],
    num_classes: usize,
    cfg: &ProbeConfig,
) -> Result<(LinearProbe, Vec<f64>)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Validation("linear probe needs a non-empty train split".into()));
    }
    let mut seen = vec![false; num_classes];
    train.iter().for_each(|&i| seen[labels[i]] = true);
    if let Some(c) = seen.iter().position(|s| !s) {
        log::warn!("class {c} has no training example for the linear probe");
    }
    let preprocessing = Preprocessing::fit(cfg.normalize, z, train);
    let x = preprocessing.apply(&z.select_rows(train));
    let y: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
    // zero init: the optimum is unique under weight decay, so no seed-dependent start is needed
    let mut weights = DenseMatrix::zeros(z.cols(), num_classes);
    let mut bias = DenseMatrix::zeros(1, num_classes);
    let mut losses = Vec::with_capacity(cfg.probe_epochs);
    for _ in 0..cfg.probe_epochs {
        let (loss, d_w, d_b) = probe_loss(&x, &y, &weights, &bias, cfg.probe_weight_decay)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("probe loss {loss}")));
        }
        losses.push(loss);
        weights.axpy(-cfg.probe_lr, &d_w)?;
        bias.axpy(-cfg.probe_lr, &d_b)?;
    }
    Ok((
        LinearProbe {
            weights,
            bias,
            preprocessing,
        },
        losses,
    ))
}

/// Trains on the split's train nodes and reports test accuracy.
pub fn linear_probe(
    z: &DenseMatrix,
    labels: &[usize],
    split: &Split,
    num_classes: usize,
    cfg: &ProbeConfig,
) -> Result<(f64, LinearProbe)> {
    let (probe, _) = fit_probe(z, labels, &split.train, num_classes, cfg)?;
    let acc = probe.accuracy(z, labels, &split.test)?;
    Ok((acc, probe))
}

/// `{0.0, 0.1, ..., 1.0}`.
pub fn default_beta_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

/// Grid value with the best validation accuracy; ties prefer 0.5, then the smaller β.
pub fn select_beta(
    z_s: &DenseMatrix,
    z_f: &DenseMatrix,
    labels: &[usize],
    split: &Split,
    grid: &[f64],
    num_classes: usize,
    cfg: &ProbeConfig,
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::Config("beta grid is empty".into()));
    }
    if let Some(b) = grid.iter().find(|b| !(0.0..=1.0).contains(*b)) {
        return Err(Error::Config(format!("beta {b} outside [0, 1]")));
    }
    if grid.len() == 1 {
        return Ok(grid[0]);
    }
    if split.val.is_empty() {
        return Err(Error::Validation(format!(
            "split {} has no validation nodes for beta selection",
            split.name
        )));
    }
    let mut scored = Vec::with_capacity(grid.len());
    for &beta in grid {
        let z = combine_views(z_s, z_f, beta)?;
        let (probe, _) = fit_probe(&z, labels, &split.train, num_classes, cfg)?;
        scored.push((beta, probe.accuracy(&z, labels, &split.val)?));
    }
    let best_acc = scored.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<f64> = scored.iter().filter(|s| s.1 == best_acc).map(|s| s.0).collect();
    if tied.contains(&0.5) {
        return Ok(0.5);
    }
    Ok(tied.into_iter().fold(f64::INFINITY, f64::min))
}

/// Either a fixed β or a grid searched on validation accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaPolicy {
    Fixed(f64),
    Grid(Vec<f64>),
}

impl Default for BetaPolicy {
    fn default() -> Self {
        BetaPolicy::Grid(default_beta_grid())
    }
}

impl BetaPolicy {
    pub fn grid(&self) -> Vec<f64> {
        match self {
            BetaPolicy::Fixed(b) => vec![*b],
            BetaPolicy::Grid(g) => g.clone(),
        }
    }
}

/// Training, probe and β settings shared by every seed of a run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub train: TrainConfig,
    pub probe: ProbeConfig,
    pub beta: BetaPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub variant: Variant,
    pub seeds: Vec<u64>,
    /// Name of the split each seed was evaluated on.
    pub splits: Vec<String>,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub betas: Vec<f64>,
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// One seed's trained model, chosen β and clean-graph results.
#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed: u64,
    pub split_index: usize,
    pub model: DualEncoder,
    pub beta: f64,
    pub probe: LinearProbe,
    pub test_accuracy: f64,
}

/// Train, embed, pick β on validation, then fit the probe on train and score test.
pub fn run_seed(
    dataset: &DatasetBundle,
    inputs: &ModelInputs,
    cfg: &EvalConfig,
    variant: Variant,
    seed: u64,
    split_index: usize,
) -> Result<SeedOutcome> {
    let split = dataset
        .splits
        .get(split_index)
        .ok_or_else(|| Error::Validation(format!("dataset has no split #{split_index}")))?;
    let train_cfg = TrainConfig { seed, ..cfg.train };
    let probe_cfg = ProbeConfig { seed, ..cfg.probe };
    let trained = train_variant(inputs, &train_cfg, variant)?;
    let [z_s, z_f] = trained.model.embed(&inputs.adjacency, &inputs.features)?;
    let c = dataset.num_classes;
    let beta = select_beta(&z_s, &z_f, &dataset.labels, split, &cfg.beta.grid(), c, &probe_cfg)?;
    let z = combine_views(&z_s, &z_f, beta)?;
    let (test_accuracy, probe) = linear_probe(&z, &dataset.labels, split, c, &probe_cfg)?;
    Ok(SeedOutcome {
        seed,
        split_index,
        model: trained.model,
        beta,
        probe,
        test_accuracy,
    })
}

/// Runs every seed of `variant`; seed at position `i` uses split `i mod #splits`.
///
/// Seeds run on the current rayon pool; results are gathered in seed order so the outcome does
/// not depend on the thread count.
pub fn run_seeds(
    dataset: &DatasetBundle,
    cfg: &EvalConfig,
    variant: Variant,
    seeds: &[u64],
) -> Result<Vec<SeedOutcome>> {
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    if dataset.splits.is_empty() {
        return Err(Error::Validation("dataset has no splits".into()));
    }
    cfg.train.validate()?;
    cfg.probe.validate()?;
    let inputs = ModelInputs::new(dataset, &cfg.train);
    let n_splits = dataset.splits.len();
    seeds
        .par_iter()
        .enumerate()
        .map(|(i, &seed)| run_seed(dataset, &inputs, cfg, variant, seed, i % n_splits))
        .collect()
}

pub fn report_from(dataset: &DatasetBundle, variant: Variant, outcomes: &[SeedOutcome]) -> EvalReport {
    let accuracies: Vec<f64> = outcomes.iter().map(|o| o.test_accuracy).collect();
    let (mean, std) = mean_std(&accuracies);
    EvalReport {
        variant,
        seeds: outcomes.iter().map(|o| o.seed).collect(),
        splits: outcomes
            .iter()
            .map(|o| dataset.splits[o.split_index].name.clone())
            .collect(),
        accuracies,
        mean,
        std,
        betas: outcomes.iter().map(|o| o.beta).collect(),
    }
}

/// The full protocol for one encoder pairing.
pub fn ablation_run(
    dataset: &DatasetBundle,
    variant: Variant,
    cfg: &EvalConfig,
    seeds: &[u64],
) -> Result<EvalReport> {
    let outcomes = run_seeds(dataset, cfg, variant, seeds)?;
    Ok(report_from(dataset, variant, &outcomes))
}

/// The full protocol for the GCN-MLP model.
pub fn evaluate_multiseed(dataset: &DatasetBundle, cfg: &EvalConfig, seeds: &[u64]) -> Result<EvalReport> {
    ablation_run(dataset, Variant::GcnMlp, cfg, seeds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn split(train: Vec<usize>, val: Vec<usize>, test: Vec<usize>) -> Split {
        Split {
            name: "s".into(),
            train,
            val,
            test,
        }
    }

    fn random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn combine_examples() {
        let a = DenseMatrix::from_rows(&[vec![2.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![0.0]]).unwrap();
        assert_eq!(combine_views(&a, &b, 1.0).unwrap(), a);
        assert_eq!(combine_views(&a, &b, 0.0).unwrap(), b);
        assert_eq!(combine_views(&a, &b, 0.5).unwrap().get(0, 0), 1.0);
        assert!(combine_views(&a, &b, 1.5).is_err());
        assert!(combine_views(&a, &b, -0.1).is_err());
        let z = random(4, 3, 1);
        assert_eq!(combine_views(&z, &z, 0.3).unwrap(), z);
    }

    #[test]
    fn separable_one_hot() {
        let labels: Vec<usize> = (0..12).map(|i| i % 3).collect();
        let z = DenseMatrix::from_fn(12, 3, |i, j| if labels[i] == j { 1.0 } else { 0.0 });
        let s = split((0..6).collect(), vec![], (6..12).collect());
        let (acc, _) = linear_probe(&z, &labels, &s, 3, &ProbeConfig::default()).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn identical_embeddings_give_half() {
        let labels: Vec<usize> = (0..8).map(|i| i % 2).collect();
        let z = DenseMatrix::from_fn(8, 3, |_, j| j as f64);
        let s = split((0..4).collect(), vec![], (4..8).collect());
        let (acc, probe) = linear_probe(&z, &labels, &s, 2, &ProbeConfig::default()).unwrap();
        assert_eq!(acc, 0.5);
        assert_eq!(probe.predict(&z).unwrap(), vec![0; 8]);
    }

    #[test]
    fn empty_train_is_an_error() {
        let z = random(4, 2, 1);
        let s = split(vec![], vec![], vec![0, 1]);
        assert!(linear_probe(&z, &[0, 1, 0, 1], &s, 2, &ProbeConfig::default()).is_err());
    }

    #[test]
    fn probe_gradient_matches_finite_differences() {
        let z = random(7, 4, 2);
        let labels = vec![0, 2, 1, 1, 0, 2, 2];
        let w = random(4, 3, 3);
        let b = random(1, 3, 4);
        let wd = 0.1;
        let (_, d_w, d_b) = probe_loss(&z, &labels, &w, &b, wd).unwrap();
        let h = 1e-6;
        let check = |analytic: f64, up: f64, down: f64| {
            let fd = (up - down) / (2.0 * h);
            assert!((fd - analytic).abs() <= 1e-4 * fd.abs().max(1e-3), "{analytic} vs {fd}");
        };
        for idx in 0..12 {
            let (mut wu, mut wdn) = (w.clone(), w.clone());
            wu.as_mut_slice()[idx] += h;
            wdn.as_mut_slice()[idx] -= h;
            check(
                d_w.as_slice()[idx],
                probe_loss(&z, &labels, &wu, &b, wd).unwrap().0,
                probe_loss(&z, &labels, &wdn, &b, wd).unwrap().0,
            );
        }
        for idx in 0..3 {
            let (mut bu, mut bd) = (b.clone(), b.clone());
            bu.as_mut_slice()[idx] += h;
            bd.as_mut_slice()[idx] -= h;
            check(
                d_b.as_slice()[idx],
                probe_loss(&z, &labels, &w, &bu, wd).unwrap().0,
                probe_loss(&z, &labels, &w, &bd, wd).unwrap().0,
            );
        }
    }

    #[test]
    fn small_lr_probe_loss_is_monotone() {
        for seed in 0..5 {
            let z = random(30, 5, seed);
            let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
            let cfg = ProbeConfig {
                probe_lr: 1e-3,
                ..ProbeConfig::default()
            };
            let (_, losses) = fit_probe(&z, &labels, &(0..30).collect::<Vec<_>>(), 3, &cfg).unwrap();
            assert!(losses.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn standardization_uses_train_statistics() {
        let z = DenseMatrix::from_rows(&[vec![1.0], vec![3.0], vec![100.0]]).unwrap();
        let p = Preprocessing::fit(ProbeNormalization::Standardize, &z, &[0, 1]);
        assert_eq!(p.mean, vec![2.0]);
        assert_eq!(p.apply(&z).as_slice(), &[-1.0, 1.0, 98.0]);
    }

    #[test]
    fn beta_rules() {
        let z_s = random(10, 2, 5);
        let z_f = random(10, 2, 6);
        let labels: Vec<usize> = (0..10).map(|i| i % 2).collect();
        let s = split((0..6).collect(), vec![6, 7], vec![8, 9]);
        let cfg = ProbeConfig::default();
        assert_eq!(select_beta(&z_s, &z_f, &labels, &s, &[0.5], 2, &cfg).unwrap(), 0.5);
        assert!(select_beta(&z_s, &z_f, &labels, &s, &[], 2, &cfg).is_err());
        // identical views: every β scores the same
        let grid = default_beta_grid();
        assert_eq!(select_beta(&z_s, &z_s, &labels, &s, &grid, 2, &cfg).unwrap(), 0.5);
        assert_eq!(select_beta(&z_s, &z_s, &labels, &s, &[0.3, 0.9, 0.1], 2, &cfg).unwrap(), 0.1);
    }

    #[test]
    fn beta_prefers_the_informative_view() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let labels: Vec<usize> = (0..60).map(|i| i % 2).collect();
        let z_s = DenseMatrix::from_fn(60, 2, |i, j| {
            let sign = if labels[i] == j { 3.0 } else { 0.0 };
            sign + rng.random_range(-0.5..0.5)
        });
        let z_f = random(60, 2, 10);
        let s = split((0..30).collect(), (30..45).collect(), (45..60).collect());
        let cfg = ProbeConfig::default();
        let grid = default_beta_grid();
        let best = select_beta(&z_s, &z_f, &labels, &s, &grid, 2, &cfg).unwrap();
        let acc = |beta: f64| {
            let z = combine_views(&z_s, &z_f, beta).unwrap();
            let (p, _) = fit_probe(&z, &labels, &s.train, 2, &cfg).unwrap();
            p.accuracy(&z, &labels, &s.val).unwrap()
        };
        let top = grid.iter().map(|&b| acc(b)).fold(0.0, f64::max);
        assert_eq!(acc(best), top);
        assert!(best >= 0.5);
    }

    #[test]
    fn population_std() {
        assert_eq!(mean_std(&[0.5]), (0.5, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
    }

    #[test]
    fn beta_policy_json() {
        let p: BetaPolicy = serde_json::from_str(r#"{"fixed":0.5}"#).unwrap();
        assert_eq!(p.grid(), vec![0.5]);
        let g: BetaPolicy = serde_json::from_str(r#"{"grid":[0.0,1.0]}"#).unwrap();
        assert_eq!(g.grid(), vec![0.0, 1.0]);
    }
}

//! Random edge-insertion attack and evasion-setting evaluation. Models and probes are fit on the
//! clean graph; only inference sees the perturbed structure.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoders::{DualEncoder, Variant};
use crate::error::{Error, Result};
use crate::evaluation::{combine_views, mean_std, run_seeds, EvalConfig, LinearProbe, SeedOutcome};
use crate::graph::{normalized_adjacency, DatasetBundle, Graph, Split};
use crate::training::ModelInputs;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    /// New edges as a fraction of the existing edge count.
    pub perturbation_rate: f64,
    pub seed: u64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            perturbation_rate: 0.0,
            seed: 0,
        }
    }
}

/// Number of edges the attack inserts into `graph`.
pub fn attack_budget(graph: &Graph, rate: f64) -> Result<usize> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::Config(format!("perturbation rate {rate} must be non-negative")));
    }
    Ok((rate * graph.num_edges() as f64).round() as usize)
}

/// Inserts `round(rate·|E|)` unit-weight edges drawn uniformly without replacement from the
/// node pairs that are not already edges.
pub fn random_edge_attack(graph: &Graph, cfg: &AttackConfig) -> Result<Graph> {
    let budget = attack_budget(graph, cfg.perturbation_rate)?;
    if budget == 0 {
        return Ok(graph.clone());
    }
    let n = graph.num_nodes();
    let pairs = n * n.saturating_sub(1) / 2;
    let available = pairs - graph.num_edges();
    if budget > available {
        return Err(Error::AttackBudget {
            requested: budget,
            available,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let added: Vec<(usize, usize)> = if 2 * budget > available {
        let mut candidates: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .filter(|&(u, v)| !graph.has_edge(u, v))
            .collect();
        candidates.partial_shuffle(&mut rng, budget);
        candidates.truncate(budget);
        candidates
    } else {
        let mut chosen = HashSet::with_capacity(budget);
        let mut order = Vec::with_capacity(budget);
        while order.len() < budget {
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            let key = (u.min(v), u.max(v));
            if u != v && !graph.has_edge(u, v) && chosen.insert(key) {
                order.push(key);
            }
        }
        order
    };
    graph.with_added_edges(&added)
}

/// Accuracy of a frozen model and probe before and after swapping in the attacked graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvasionResult {
    pub clean_accuracy: f64,
    pub attacked_accuracy: f64,
}

/// Re-embeds with frozen parameters on `attacked` and scores the probe fit on clean embeddings.
pub fn evasion_eval(
    model: &DualEncoder,
    clean: &DatasetBundle,
    attacked: &Graph,
    beta: f64,
    probe: &LinearProbe,
    split: &Split,
    row_normalize: bool,
) -> Result<EvasionResult> {
    if attacked.num_nodes() != clean.num_nodes() {
        return Err(Error::Validation(format!(
            "attacked graph has {} nodes, clean graph has {}",
            attacked.num_nodes(),
            clean.num_nodes()
        )));
    }
    let features = if row_normalize {
        crate::graph::row_normalize_features(&clean.features)
    } else {
        clean.features.clone()
    };
    let score = |graph: &Graph| -> Result<f64> {
        let [z_s, z_f] = model.embed(&normalized_adjacency(graph, true), &features)?;
        probe.accuracy(&combine_views(&z_s, &z_f, beta)?, &clean.labels, &split.test)
    };
    Ok(EvasionResult {
        clean_accuracy: score(&clean.graph)?,
        attacked_accuracy: score(attacked)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub rate: f64,
    pub variant: Variant,
    pub accuracies: Vec<f64>,
    pub mean_acc: f64,
    pub std_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    /// Always "frozen": the probe is fit on clean embeddings and never refit.
    pub probe_mode: String,
    pub seeds: Vec<u64>,
    pub rows: Vec<RobustnessRow>,
}

impl RobustnessReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rate,variant,mean_acc,std_acc\n");
        for r in &self.rows {
            writeln!(out, "{:?},{},{:?},{:?}", r.rate, r.variant, r.mean_acc, r.std_acc).unwrap();
        }
        out
    }

    pub fn row(&self, variant: Variant, rate: f64) -> Option<&RobustnessRow> {
        self.rows.iter().find(|r| r.variant == variant && r.rate == rate)
    }

    /// Mean accuracy at rate 0 minus mean accuracy at `rate`.
    pub fn drop(&self, variant: Variant, rate: f64) -> Option<f64> {
        Some(self.row(variant, 0.0)?.mean_acc - self.row(variant, rate)?.mean_acc)
    }
}

/// `0.0, 0.05, ..., 0.25`.
pub fn default_rates() -> Vec<f64> {
    (0..=5).map(|i| i as f64 / 20.0).collect()
}

/// Attack seed shared by every variant for a given training seed and rate.
fn attack_seed(seed: u64, rate_index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ rate_index as u64
}

/// Attacked copies of the dataset graph, indexed `[seed][rate]`. Every variant is evaluated on
/// the same graphs.
pub fn attacked_graphs(dataset: &DatasetBundle, rates: &[f64], seeds: &[u64]) -> Result<Vec<Vec<Graph>>> {
    seeds
        .iter()
        .map(|&seed| {
            rates
                .iter()
                .enumerate()
                .map(|(r, &rate)| {
                    random_edge_attack(
                        &dataset.graph,
                        &AttackConfig {
                            perturbation_rate: rate,
                            seed: attack_seed(seed, r),
                        },
                    )
                })
                .collect()
        })
        .collect()
}

/// Scores already-trained seed outcomes on each attacked graph, one row per rate.
pub fn robustness_rows(
    dataset: &DatasetBundle,
    row_normalize: bool,
    variant: Variant,
    outcomes: &[SeedOutcome],
    rates: &[f64],
    graphs: &[Vec<Graph>],
) -> Result<Vec<RobustnessRow>> {
    if outcomes.len() != graphs.len() {
        return Err(Error::Validation(format!(
            "{} seed outcomes for {} attacked graph sets",
            outcomes.len(),
            graphs.len()
        )));
    }
    let per_seed: Vec<Vec<f64>> = outcomes
        .par_iter()
        .zip(graphs)
        .map(|(o, attacked)| {
            let split = &dataset.splits[o.split_index];
            attacked
                .iter()
                .map(|g| {
                    evasion_eval(&o.model, dataset, g, o.beta, &o.probe, split, row_normalize)
                        .map(|r| r.attacked_accuracy)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(rates
        .iter()
        .enumerate()
        .map(|(r, &rate)| {
            let accuracies: Vec<f64> = per_seed.iter().map(|s| s[r]).collect();
            let (mean_acc, std_acc) = mean_std(&accuracies);
            RobustnessRow {
                rate,
                variant,
                accuracies,
                mean_acc,
                std_acc,
            }
        })
        .collect())
}

/// Trains each variant on the clean graph once per seed, then evaluates it under random edge
/// insertion at every rate.
pub fn robustness_sweep(
    dataset: &DatasetBundle,
    cfg: &EvalConfig,
    variants: &[Variant],
    rates: &[f64],
    seeds: &[u64],
) -> Result<RobustnessReport> {
    let graphs = attacked_graphs(dataset, rates, seeds)?;
    let mut rows = Vec::new();
    for &variant in variants {
        let outcomes = run_seeds(dataset, cfg, variant, seeds)?;
        rows.extend(robustness_rows(dataset, cfg.train.row_normalize, variant, &outcomes, rates, &graphs)?);
    }
    Ok(RobustnessReport {
        probe_mode: "frozen".into(),
        seeds: seeds.to_vec(),
        rows,
    })
}

/// Embeddings of the structure-free view on the features used by training.
pub fn feature_view(model: &DualEncoder, inputs: &ModelInputs) -> Result<crate::numerics::DenseMatrix> {
    let [z_s, z_f] = model.embed(&inputs.adjacency, &inputs.features)?;
    combine_views(&z_s, &z_f, 0.0)
}

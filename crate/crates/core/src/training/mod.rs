//! Cosmean contrastive objective, Adam, and the full-batch training loop.

mod adam;
mod loss;

pub use adam::{adam_step, AdamState};
pub use loss::cosmean_loss;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoders::{DualEncoder, EncoderDims, GcnParams, MlpParams, Variant};
use crate::error::{Error, Result};
use crate::graph::{normalized_adjacency, row_normalize_features, DatasetBundle, NormalizedAdjacency};
use crate::numerics::{norm2, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub hidden_dim: usize,
    pub gcn_layers: usize,
    pub mlp_layers: usize,
    pub final_activation: bool,
    /// L1-normalize feature rows before encoding.
    pub row_normalize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 1e-3,
            weight_decay: 0.0,
            seed: 0,
            hidden_dim: 256,
            gcn_layers: 2,
            mlp_layers: 1,
            final_activation: false,
            row_normalize: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config(format!(
                "weight_decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }

    pub fn dims(&self, input_dim: usize) -> EncoderDims {
        EncoderDims {
            input_dim,
            hidden_dim: self.hidden_dim,
            gcn_layers: self.gcn_layers,
            mlp_layers: self.mlp_layers,
            final_activation: self.final_activation,
        }
    }
}

/// The adjacency and feature matrix the encoders consume.
#[derive(Debug, Clone)]
pub struct ModelInputs {
    pub adjacency: NormalizedAdjacency,
    pub features: DenseMatrix,
}

impl ModelInputs {
    pub fn new(dataset: &DatasetBundle, cfg: &TrainConfig) -> Self {
        let features = if cfg.row_normalize {
            row_normalize_features(&dataset.features)
        } else {
            dataset.features.clone()
        };
        Self {
            adjacency: normalized_adjacency(&dataset.graph, true),
            features,
        }
    }
}

/// Per-epoch loss and embedding spread, recorded before each update.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTrace {
    pub losses: Vec<f64>,
    /// Mean per-dimension variance of the row-normalized embeddings, averaged over both views.
    /// Values near zero signal collapse to a constant output.
    pub embedding_variance: Vec<f64>,
}

impl LossTrace {
    pub fn len(&self) -> usize {
        self.losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.losses.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,embedding_variance\n");
        for (e, (l, v)) in self.losses.iter().zip(&self.embedding_variance).enumerate() {
            writeln!(out, "{e},{l:?},{v:?}").unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Mean over columns of the population variance across rows, after L2-normalizing rows.
pub fn embedding_variance(z: &DenseMatrix) -> f64 {
    let (n, d) = z.shape();
    if n == 0 || d == 0 {
        return 0.0;
    }
    let mut mean = vec![0.0; d];
    let mut sq = vec![0.0; d];
    for i in 0..n {
        let row = z.row(i);
        let norm = norm2(row);
        let inv = if norm > 0.0 { 1.0 / norm } else { 0.0 };
        for j in 0..d {
            let v = row[j] * inv;
            mean[j] += v;
            sq[j] += v * v;
        }
    }
    let nf = n as f64;
    (0..d)
        .map(|j| (sq[j] / nf - (mean[j] / nf).powi(2)).max(0.0))
        .sum::<f64>()
        / d as f64
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: DualEncoder,
    pub trace: LossTrace,
}

/// One full-graph epoch: forward both views, cosmean loss, backward, then a single Adam step
/// over the concatenated parameter list. Returns the pre-update loss and embedding variance.
pub fn train_step(
    model: &mut DualEncoder,
    adam: &mut AdamState,
    inputs: &ModelInputs,
    cfg: &TrainConfig,
) -> Result<(f64, f64)> {
    let adj = &inputs.adjacency;
    let fwd = model.forward(adj, &inputs.features)?;
    let (loss, d0, d1) = cosmean_loss(&fwd.z[0], &fwd.z[1])?;
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("loss is {loss}")));
    }
    let variance = 0.5 * (embedding_variance(&fwd.z[0]) + embedding_variance(&fwd.z[1]));
    let grads = model.backward(&fwd, adj, [&d0, &d1])?;
    adam_step(
        &mut model.tensors_mut(),
        &grads,
        adam,
        cfg.learning_rate,
        cfg.weight_decay,
    )?;
    if let Some(bad) = model.tensors().iter().position(|t| !t.is_finite()) {
        return Err(Error::NonFinite(format!("parameter tensor {bad} after update")));
    }
    Ok((loss, variance))
}

/// Trains the contrasted encoder pair of `variant` for `cfg.epochs` full-graph steps. Aborts if
/// the loss or any parameter becomes non-finite.
pub fn train_variant(
    inputs: &ModelInputs,
    cfg: &TrainConfig,
    variant: Variant,
) -> Result<TrainedModel> {
    cfg.validate()?;
    let dims = cfg.dims(inputs.features.cols());
    let mut model = DualEncoder::new(variant, &dims, cfg.seed)?;
    let mut adam = AdamState::for_params(&model.tensors());
    let mut trace = LossTrace::default();
    for epoch in 0..cfg.epochs {
        let (loss, variance) = train_step(&mut model, &mut adam, inputs, cfg).map_err(|e| match e {
            Error::NonFinite(msg) => Error::NonFinite(format!("epoch {epoch}: {msg}")),
            other => other,
        })?;
        trace.losses.push(loss);
        trace.embedding_variance.push(variance);
    }
    Ok(TrainedModel { model, trace })
}

/// Trains the GCN-MLP model on a dataset.
pub fn train(dataset: &DatasetBundle, cfg: &TrainConfig) -> Result<(GcnParams, MlpParams, LossTrace)> {
    let inputs = ModelInputs::new(dataset, cfg);
    let trained = train_variant(&inputs, cfg, Variant::GcnMlp)?;
    let (g, m) = trained.model.gcn_mlp().expect("gcn-mlp variant");
    Ok((g.clone(), m.clone(), trained.trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Graph, Split};

    fn tiny_dataset() -> DatasetBundle {
        let g = Graph::from_edges(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap().0;
        let x = DenseMatrix::from_rows(&[
            vec![1.0, 0.0, 0.5],
            vec![0.0, 1.0, 0.5],
            vec![1.0, 0.2, 0.0],
            vec![0.1, 1.0, 0.0],
        ])
        .unwrap();
        let split = Split {
            name: "s".into(),
            train: vec![0, 1],
            val: vec![2],
            test: vec![3],
        };
        DatasetBundle::new(g, x, vec![0, 1, 0, 1], vec![split], 2).unwrap()
    }

    fn small_cfg(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            hidden_dim: 4,
            learning_rate: 0.01,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn epochs_contract() {
        let ds = tiny_dataset();
        assert!(matches!(train(&ds, &small_cfg(0)), Err(Error::Config(_))));
        let (_, _, trace) = train(&ds, &small_cfg(1)).unwrap();
        assert_eq!(trace.len(), 1);
    }

    #[test]
    fn config_validation() {
        let mut c = small_cfg(3);
        c.learning_rate = 0.0;
        assert!(c.validate().is_err());
        c.learning_rate = 0.1;
        c.weight_decay = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn trace_is_reproducible_and_bounded() {
        let ds = tiny_dataset();
        let (g1, m1, t1) = train(&ds, &small_cfg(30)).unwrap();
        let (g2, m2, t2) = train(&ds, &small_cfg(30)).unwrap();
        assert_eq!(t1, t2);
        assert_eq!((g1, m1), (g2, m2));
        assert!(t1.losses.iter().all(|l| (0.0..=2.0).contains(l)));
        assert!(t1.losses.last() < t1.losses.first());
    }

    #[test]
    fn trace_csv_layout() {
        let t = LossTrace {
            losses: vec![0.5, 0.25],
            embedding_variance: vec![0.1, 0.2],
        };
        assert_eq!(t.to_csv(), "epoch,loss,embedding_variance\n0,0.5,0.1\n1,0.25,0.2\n");
    }

    #[test]
    fn collapsed_embeddings_have_zero_variance() {
        let z = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(embedding_variance(&z).abs() < 1e-15);
        let spread = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((embedding_variance(&spread) - 0.25).abs() < 1e-15);
    }
}

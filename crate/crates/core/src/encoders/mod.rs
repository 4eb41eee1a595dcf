//! The two view encoders: a `k`-layer GCN over the normalized adjacency and an `L`-layer MLP
//! over raw features. Both expose forward passes that keep their activations and exact
//! reverse-mode gradients.

mod checkpoint;
mod gcn;
mod mlp;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use gcn::{gcn_backward, gcn_forward, GcnCache, GcnParams};
pub use mlp::{mlp_backward, mlp_forward, MlpCache, MlpGrads, MlpParams};

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::numerics::DenseMatrix;

/// Glorot-uniform matrix with bound `sqrt(6 / (fan_in + fan_out))`.
pub(crate) fn glorot<R: Rng>(fan_in: usize, fan_out: usize, rng: &mut R) -> DenseMatrix {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    DenseMatrix::from_fn(fan_in, fan_out, |_, _| rng.random_range(-bound..=bound))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderDims {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub gcn_layers: usize,
    pub mlp_layers: usize,
    pub final_activation: bool,
}

impl EncoderDims {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::Config("input and hidden dimensions must be positive".into()));
        }
        if self.gcn_layers == 0 || self.mlp_layers == 0 {
            return Err(Error::Config("layer counts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Glorot-initialized GCN and MLP drawn, in that order, from one ChaCha8 stream seeded by `seed`.
pub fn init_params(seed: u64, dims: &EncoderDims) -> Result<(GcnParams, MlpParams)> {
    dims.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gcn = GcnParams::glorot(
        dims.input_dim,
        dims.hidden_dim,
        dims.gcn_layers,
        dims.final_activation,
        &mut rng,
    )?;
    let mlp = MlpParams::glorot(dims.input_dim, dims.hidden_dim, dims.mlp_layers, &mut rng)?;
    Ok((gcn, mlp))
}

/// Which pair of encoders is contrasted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "gcn-mlp")]
    GcnMlp,
    #[serde(rename = "gcn-gcn")]
    GcnGcn,
    #[serde(rename = "mlp-mlp")]
    MlpMlp,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::GcnMlp, Variant::GcnGcn, Variant::MlpMlp];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::GcnMlp => "gcn-mlp",
            Variant::GcnGcn => "gcn-gcn",
            Variant::MlpMlp => "mlp-mlp",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant '{s}' (gcn-mlp, gcn-gcn, mlp-mlp)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Encoder {
    Gcn(GcnParams),
    Mlp(MlpParams),
}

#[derive(Debug, Clone)]
pub enum EncoderCache {
    Gcn(GcnCache),
    Mlp(MlpCache),
}

impl Encoder {
    pub fn uses_graph(&self) -> bool {
        matches!(self, Encoder::Gcn(_))
    }

    pub fn forward(&self, adj: &NormalizedAdjacency, x: &DenseMatrix) -> Result<(DenseMatrix, EncoderCache)> {
        match self {
            Encoder::Gcn(p) => gcn_forward(p, adj, x).map(|(z, c)| (z, EncoderCache::Gcn(c))),
            Encoder::Mlp(p) => mlp_forward(p, x).map(|(z, c)| (z, EncoderCache::Mlp(c))),
        }
    }

    /// Gradients in the order of [`Encoder::tensors`].
    pub fn backward(
        &self,
        cache: &EncoderCache,
        adj: &NormalizedAdjacency,
        dz: &DenseMatrix,
    ) -> Result<Vec<DenseMatrix>> {
        match (self, cache) {
            (Encoder::Gcn(p), EncoderCache::Gcn(c)) => gcn_backward(p, c, adj, dz),
            (Encoder::Mlp(p), EncoderCache::Mlp(c)) => {
                let g = mlp_backward(p, c, dz)?;
                Ok(g.weights.into_iter().chain(g.biases).collect())
            }
            _ => Err(Error::StaleCache),
        }
    }

    /// GCN: `W^(0..k)`. MLP: all weights, then all biases.
    pub fn tensors(&self) -> Vec<&DenseMatrix> {
        match self {
            Encoder::Gcn(p) => p.weights().iter().collect(),
            Encoder::Mlp(p) => p.weights().iter().chain(p.biases()).collect(),
        }
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut DenseMatrix> {
        match self {
            Encoder::Gcn(p) => p.weights_mut().iter_mut().collect(),
            Encoder::Mlp(p) => {
                let (w, b) = p.params_mut();
                w.iter_mut().chain(b.iter_mut()).collect()
            }
        }
    }
}

/// Two encoders trained against each other. View 0 is the structural view for gcn-mlp.
#[derive(Debug, Clone, PartialEq)]
pub struct DualEncoder {
    pub variant: Variant,
    pub views: [Encoder; 2],
}

/// Forward outputs of both views.
#[derive(Debug, Clone)]
pub struct DualForward {
    pub z: [DenseMatrix; 2],
    caches: [EncoderCache; 2],
}

impl DualEncoder {
    pub fn new(variant: Variant, dims: &EncoderDims, seed: u64) -> Result<Self> {
        dims.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gcn = |rng: &mut ChaCha8Rng| -> Result<Encoder> {
            Ok(Encoder::Gcn(GcnParams::glorot(
                dims.input_dim,
                dims.hidden_dim,
                dims.gcn_layers,
                dims.final_activation,
                rng,
            )?))
        };
        let views = match variant {
            Variant::GcnMlp => {
                let (g, m) = init_params(seed, dims)?;
                [Encoder::Gcn(g), Encoder::Mlp(m)]
            }
            Variant::GcnGcn => [gcn(&mut rng)?, gcn(&mut rng)?],
            Variant::MlpMlp => {
                let mut mlp = || -> Result<Encoder> {
                    Ok(Encoder::Mlp(MlpParams::glorot(
                        dims.input_dim,
                        dims.hidden_dim,
                        dims.mlp_layers,
                        &mut rng,
                    )?))
                };
                [mlp()?, mlp()?]
            }
        };
        Ok(Self { variant, views })
    }

    pub fn from_params(gcn: GcnParams, mlp: MlpParams) -> Self {
        Self {
            variant: Variant::GcnMlp,
            views: [Encoder::Gcn(gcn), Encoder::Mlp(mlp)],
        }
    }

    pub fn forward(&self, adj: &NormalizedAdjacency, x: &DenseMatrix) -> Result<DualForward> {
        let (z0, c0) = self.views[0].forward(adj, x)?;
        let (z1, c1) = self.views[1].forward(adj, x)?;
        Ok(DualForward {
            z: [z0, z1],
            caches: [c0, c1],
        })
    }

    /// Both views' embeddings without keeping caches.
    pub fn embed(&self, adj: &NormalizedAdjacency, x: &DenseMatrix) -> Result<[DenseMatrix; 2]> {
        Ok(self.forward(adj, x)?.z)
    }

    /// Flat gradient list matching [`DualEncoder::tensors`].
    pub fn backward(
        &self,
        fwd: &DualForward,
        adj: &NormalizedAdjacency,
        dz: [&DenseMatrix; 2],
    ) -> Result<Vec<DenseMatrix>> {
        let mut grads = self.views[0].backward(&fwd.caches[0], adj, dz[0])?;
        grads.extend(self.views[1].backward(&fwd.caches[1], adj, dz[1])?);
        Ok(grads)
    }

    pub fn tensors(&self) -> Vec<&DenseMatrix> {
        let mut t = self.views[0].tensors();
        t.extend(self.views[1].tensors());
        t
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut DenseMatrix> {
        let [a, b] = &mut self.views;
        let mut t = a.tensors_mut();
        t.extend(b.tensors_mut());
        t
    }

    pub fn uses_graph(&self) -> bool {
        self.views.iter().any(Encoder::uses_graph)
    }

    /// The GCN and MLP of a gcn-mlp model.
    pub fn gcn_mlp(&self) -> Option<(&GcnParams, &MlpParams)> {
        match &self.views {
            [Encoder::Gcn(g), Encoder::Mlp(m)] => Some((g, m)),
            _ => None,
        }
    }
}

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::numerics::{matmul, matmul_nt, matmul_tn, relu, relu_mask, spmm, DenseMatrix};

use super::glorot;

/// Weight stack of a bias-free `k`-layer GCN, `d -> h -> ... -> h`.
#[derive(Debug, Clone)]
pub struct GcnParams {
    weights: Vec<DenseMatrix>,
    /// Apply ReLU after the last layer as well as between layers.
    pub final_activation: bool,
    generation: u64,
}

// `generation` only tracks cache validity.
impl PartialEq for GcnParams {
    fn eq(&self, other: &Self) -> bool {
        self.weights == other.weights && self.final_activation == other.final_activation
    }
}

impl GcnParams {
    pub fn new(weights: Vec<DenseMatrix>, final_activation: bool) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Config("a GCN needs at least one layer".into()));
        }
        for (l, pair) in weights.windows(2).enumerate() {
            if pair[0].cols() != pair[1].rows() {
                return Err(Error::dim(
                    "GcnParams::new",
                    format!(
                        "layer {l} outputs {} columns, layer {} expects {}",
                        pair[0].cols(),
                        l + 1,
                        pair[1].rows()
                    ),
                ));
            }
        }
        Ok(Self {
            weights,
            final_activation,
            generation: 0,
        })
    }

    pub fn glorot<R: Rng>(
        input_dim: usize,
        hidden_dim: usize,
        layers: usize,
        final_activation: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let weights = (0..layers)
            .map(|l| {
                let fan_in = if l == 0 { input_dim } else { hidden_dim };
                glorot(fan_in, hidden_dim, rng)
            })
            .collect();
        Self::new(weights, final_activation)
    }

    pub fn layers(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.last().unwrap().cols()
    }

    pub fn weights(&self) -> &[DenseMatrix] {
        &self.weights
    }

    /// Mutable access; any cache produced before this call becomes stale.
    pub fn weights_mut(&mut self) -> &mut [DenseMatrix] {
        self.generation += 1;
        &mut self.weights
    }
}

/// Activations kept from [`gcn_forward`] for [`gcn_backward`].
#[derive(Debug, Clone)]
pub struct GcnCache {
    generation: u64,
    /// `H^(0..k-1)`, the input of each layer.
    inputs: Vec<DenseMatrix>,
    /// `Ã H^(ℓ) W^(ℓ)` for each layer, before activation.
    pre_activations: Vec<DenseMatrix>,
    final_activation: bool,
}

/// Runs `H^(ℓ+1) = σ(Ã H^(ℓ) W^(ℓ))` from `H^(0) = x` and returns `H^(k)`.
///
/// The product is evaluated as `Ã (H W)`, which is the same matrix and keeps the sparse
/// product at the output width.
pub fn gcn_forward(
    p: &GcnParams,
    adj: &NormalizedAdjacency,
    x: &DenseMatrix,
) -> Result<(DenseMatrix, GcnCache)> {
    if adj.num_nodes() != x.rows() {
        return Err(Error::dim(
            "gcn_forward",
            format!("adjacency is {n}x{n} but features have {} rows", x.rows(), n = adj.num_nodes()),
        ));
    }
    if p.input_dim() != x.cols() {
        return Err(Error::dim(
            "gcn_forward",
            format!("features have {} columns, first layer expects {}", x.cols(), p.input_dim()),
        ));
    }
    let k = p.layers();
    let mut inputs = Vec::with_capacity(k);
    let mut pre_activations = Vec::with_capacity(k);
    let mut h = x.clone();
    for (l, w) in p.weights.iter().enumerate() {
        let s = spmm(&adj.matrix, &matmul(&h, w)?)?;
        let next = if l + 1 < k || p.final_activation {
            relu(&s)
        } else {
            s.clone()
        };
        inputs.push(h);
        pre_activations.push(s);
        h = next;
    }
    let cache = GcnCache {
        generation: p.generation,
        inputs,
        pre_activations,
        final_activation: p.final_activation,
    };
    Ok((h, cache))
}

/// Gradients of a scalar objective with respect to every `W^(ℓ)`, given `dZ_s`.
///
/// Uses `Ãᵀ = Ã`: with `G = Ã δ^(ℓ+1)`, `dW^(ℓ) = H^(ℓ)ᵀ G = (Ã H^(ℓ))ᵀ δ^(ℓ+1)` and the
/// signal passed down is `G W^(ℓ)ᵀ`, masked by the previous layer's ReLU.
pub fn gcn_backward(
    p: &GcnParams,
    cache: &GcnCache,
    adj: &NormalizedAdjacency,
    dz: &DenseMatrix,
) -> Result<Vec<DenseMatrix>> {
    if cache.generation != p.generation || cache.inputs.len() != p.layers() {
        return Err(Error::StaleCache);
    }
    let k = p.layers();
    let last = &cache.pre_activations[k - 1];
    if dz.shape() != last.shape() {
        return Err(Error::dim(
            "gcn_backward",
            format!("dZ is {:?}, output is {:?}", dz.shape(), last.shape()),
        ));
    }
    let mut delta = if cache.final_activation {
        dz.hadamard(&relu_mask(last))?
    } else {
        dz.clone()
    };
    let mut grads = vec![DenseMatrix::zeros(0, 0); k];
    for l in (0..k).rev() {
        let g = spmm(&adj.matrix, &delta)?;
        grads[l] = matmul_tn(&cache.inputs[l], &g)?;
        if l > 0 {
            let dh = matmul_nt(&g, &p.weights[l])?;
            delta = dh.hadamard(&relu_mask(&cache.pre_activations[l - 1]))?;
        }
    }
    Ok(grads)
}

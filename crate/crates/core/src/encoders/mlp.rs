use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{matmul, matmul_nt, matmul_tn, relu, relu_mask, DenseMatrix};

use super::glorot;

/// Affine layers with ReLU between them; the output layer is linear.
#[derive(Debug, Clone)]
pub struct MlpParams {
    weights: Vec<DenseMatrix>,
    /// One `1 x out` row per layer.
    biases: Vec<DenseMatrix>,
    generation: u64,
}

// `generation` only tracks cache validity.
impl PartialEq for MlpParams {
    fn eq(&self, other: &Self) -> bool {
        self.weights == other.weights && self.biases == other.biases
    }
}

impl MlpParams {
    pub fn new(weights: Vec<DenseMatrix>, biases: Vec<DenseMatrix>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Config("an MLP needs at least one layer".into()));
        }
        if weights.len() != biases.len() {
            return Err(Error::dim(
                "MlpParams::new",
                format!("{} weights but {} biases", weights.len(), biases.len()),
            ));
        }
        for (l, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if b.shape() != (1, w.cols()) {
                return Err(Error::dim(
                    "MlpParams::new",
                    format!("layer {l} bias is {:?}, expected (1, {})", b.shape(), w.cols()),
                ));
            }
        }
        for (l, pair) in weights.windows(2).enumerate() {
            if pair[0].cols() != pair[1].rows() {
                return Err(Error::dim(
                    "MlpParams::new",
                    format!("layer {l} outputs {} columns, next expects {}", pair[0].cols(), pair[1].rows()),
                ));
            }
        }
        Ok(Self {
            weights,
            biases,
            generation: 0,
        })
    }

    pub fn glorot<R: Rng>(
        input_dim: usize,
        hidden_dim: usize,
        layers: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let weights: Vec<_> = (0..layers)
            .map(|l| {
                let fan_in = if l == 0 { input_dim } else { hidden_dim };
                glorot(fan_in, hidden_dim, rng)
            })
            .collect();
        let biases = (0..layers).map(|_| DenseMatrix::zeros(1, hidden_dim)).collect();
        Self::new(weights, biases)
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

    pub fn biases(&self) -> &[DenseMatrix] {
        &self.biases
    }

    /// Mutable access to `(weights, biases)`; outstanding caches become stale.
    pub fn params_mut(&mut self) -> (&mut [DenseMatrix], &mut [DenseMatrix]) {
        self.generation += 1;
        (&mut self.weights, &mut self.biases)
    }
}

#[derive(Debug, Clone)]
pub struct MlpCache {
    generation: u64,
    inputs: Vec<DenseMatrix>,
    pre_activations: Vec<DenseMatrix>,
}

/// MLP gradients, one entry per layer.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub weights: Vec<DenseMatrix>,
    pub biases: Vec<DenseMatrix>,
}

fn add_bias(m: &mut DenseMatrix, b: &DenseMatrix) {
    let bias = b.as_slice();
    for i in 0..m.rows() {
        for (v, &bj) in m.row_mut(i).iter_mut().zip(bias) {
            *v += bj;
        }
    }
}

pub fn mlp_forward(p: &MlpParams, x: &DenseMatrix) -> Result<(DenseMatrix, MlpCache)> {
    if x.cols() != p.input_dim() {
        return Err(Error::dim(
            "mlp_forward",
            format!("input has {} columns, first layer expects {}", x.cols(), p.input_dim()),
        ));
    }
    let layers = p.layers();
    let mut inputs = Vec::with_capacity(layers);
    let mut pre_activations = Vec::with_capacity(layers);
    let mut h = x.clone();
    for (l, (w, b)) in p.weights.iter().zip(&p.biases).enumerate() {
        let mut s = matmul(&h, w)?;
        add_bias(&mut s, b);
        let next = if l + 1 < layers { relu(&s) } else { s.clone() };
        inputs.push(h);
        pre_activations.push(s);
        h = next;
    }
    Ok((
        h,
        MlpCache {
            generation: p.generation,
            inputs,
            pre_activations,
        },
    ))
}

pub fn mlp_backward(p: &MlpParams, cache: &MlpCache, dz: &DenseMatrix) -> Result<MlpGrads> {
    if cache.generation != p.generation || cache.inputs.len() != p.layers() {
        return Err(Error::StaleCache);
    }
    let layers = p.layers();
    if dz.shape() != cache.pre_activations[layers - 1].shape() {
        return Err(Error::dim(
            "mlp_backward",
            format!(
                "dZ is {:?}, output is {:?}",
                dz.shape(),
                cache.pre_activations[layers - 1].shape()
            ),
        ));
    }
    let mut weights = vec![DenseMatrix::zeros(0, 0); layers];
    let mut biases = vec![DenseMatrix::zeros(0, 0); layers];
    let mut delta = dz.clone();
    for l in (0..layers).rev() {
        weights[l] = matmul_tn(&cache.inputs[l], &delta)?;
        biases[l] = delta.col_sums();
        if l > 0 {
            let dh = matmul_nt(&delta, &p.weights[l])?;
            delta = dh.hadamard(&relu_mask(&cache.pre_activations[l - 1]))?;
        }
    }
    Ok(MlpGrads { weights, biases })
}

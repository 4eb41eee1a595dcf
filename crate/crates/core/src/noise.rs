//! Feature-noise and structural-noise analysis.
//!
//! Feature noise is each node's offset from its empirical class centroid. The `k`-hop
//! structural noise is the same quantity computed on `Ã^k X`. The correlation curve
//! `E_k = (1/N) Σ_i <n_i, (Ã^k N)_i>` is evaluated two ways: directly by repeated sparse
//! products, and through the eigendecomposition of `L = I - Ã`, where it becomes
//! `(1/N) Σ_i (1 - λ_i)^k Σ_j <w_i, m_j>²`. The two must agree to rounding error.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{normalized_adjacency, DatasetBundle, NormalizedAdjacency};
use crate::numerics::{
    cosine_rows, matmul_tn, norm2, spmm, sym_eig_with_cap, DenseMatrix, DEFAULT_EIGEN_CAP,
};
use crate::synth::edge_homophily;

/// Centroids below this norm make the noise-to-centroid ratio undefined.
const CENTROID_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassCentroids {
    /// Row `c` is the mean feature vector of class `c`.
    pub centroids: DenseMatrix,
    pub counts: Vec<usize>,
}

/// Empirical class means. Every class in `0..=max(label)` must have at least one node.
pub fn class_centroids(x: &DenseMatrix, labels: &[usize]) -> Result<ClassCentroids> {
    if labels.len() != x.rows() {
        return Err(Error::Validation(format!(
            "{} labels for {} feature rows",
            labels.len(),
            x.rows()
        )));
    }
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut sums = DenseMatrix::zeros(classes, x.cols());
    let mut counts = vec![0usize; classes];
    for (i, &c) in labels.iter().enumerate() {
        counts[c] += 1;
        for (s, v) in sums.row_mut(c).iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    if let Some(empty) = counts.iter().position(|&n| n == 0) {
        return Err(Error::Validation(format!("class {empty} has no nodes")));
    }
    for (c, &n) in counts.iter().enumerate() {
        sums.row_mut(c).iter_mut().for_each(|v| *v /= n as f64);
    }
    Ok(ClassCentroids {
        centroids: sums,
        counts,
    })
}

/// Mean feature matrix: row `i` is the centroid of node `i`'s class.
pub fn mean_feature_matrix(x: &DenseMatrix, labels: &[usize]) -> Result<DenseMatrix> {
    let c = class_centroids(x, labels)?;
    Ok(c.centroids.select_rows(labels))
}

/// `n_i = x_i - x̂_{c(i)}` for every node.
pub fn feature_noise(x: &DenseMatrix, labels: &[usize]) -> Result<DenseMatrix> {
    x.sub(&mean_feature_matrix(x, labels)?)
}

/// `Ã^k m` by `k` sparse products.
pub fn propagate(adj: &NormalizedAdjacency, m: &DenseMatrix, k: usize) -> Result<DenseMatrix> {
    let mut y = m.clone();
    for _ in 0..k {
        y = spmm(&adj.matrix, &y)?;
    }
    Ok(y)
}

/// Feature noise of the propagated features `Ã^k X`. `k = 0` is plain feature noise.
pub fn structural_noise(
    x: &DenseMatrix,
    labels: &[usize],
    adj: &NormalizedAdjacency,
    k: usize,
) -> Result<DenseMatrix> {
    feature_noise(&propagate(adj, x, k)?, labels)
}

/// `(1/N) trace(Aᵀ B)`.
fn mean_row_inner(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    let s: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum();
    s / a.rows() as f64
}

/// `E_0..E_{k_max}` computed as `(1/N) trace(Nᵀ Ã^k N)` by repeated propagation of the
/// noise matrix.
pub fn correlation_ek(
    x: &DenseMatrix,
    labels: &[usize],
    adj: &NormalizedAdjacency,
    k_max: usize,
) -> Result<Vec<f64>> {
    let noise = feature_noise(x, labels)?;
    let mut propagated = noise.clone();
    let mut out = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        if k > 0 {
            propagated = spmm(&adj.matrix, &propagated)?;
        }
        out.push(mean_row_inner(&noise, &propagated));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Eigenvalues of `I - Ã`, ascending.
    pub eigenvalues: Vec<f64>,
    /// `Σ_j m̂_j(i)²` for each frequency `i`.
    pub frequency_energy: Vec<f64>,
    pub spectral_ek: Vec<f64>,
    pub direct_ek: Vec<f64>,
    pub max_abs_deviation: f64,
    /// `max_k |direct - spectral| / (1 + |direct|)`.
    pub max_scaled_deviation: f64,
    /// `Σ_i energy_i` against `‖N‖_F²`.
    pub parseval_relative_error: f64,
}

pub fn spectral_ek(
    x: &DenseMatrix,
    labels: &[usize],
    adj: &NormalizedAdjacency,
    k_max: usize,
) -> Result<SpectralReport> {
    spectral_ek_with_cap(x, labels, adj, k_max, DEFAULT_EIGEN_CAP)
}

pub fn spectral_ek_with_cap(
    x: &DenseMatrix,
    labels: &[usize],
    adj: &NormalizedAdjacency,
    k_max: usize,
    cap: usize,
) -> Result<SpectralReport> {
    let n = adj.num_nodes();
    if n > cap {
        return Err(Error::CapExceeded { rows: n, cap });
    }
    let noise = feature_noise(x, labels)?;
    let eig = sym_eig_with_cap(&adj.laplacian_dense(), cap)?;
    // (i, j) entry is the Fourier coefficient <w_i, m_j>
    let coeffs = matmul_tn(&eig.eigenvectors, &noise)?;
    let energy: Vec<f64> = (0..n).map(|i| coeffs.row(i).iter().map(|c| c * c).sum()).collect();

    let spectral: Vec<f64> = (0..=k_max)
        .map(|k| {
            eig.eigenvalues
                .iter()
                .zip(&energy)
                .map(|(&lambda, &e)| (1.0 - lambda).powi(k as i32) * e)
                .sum::<f64>()
                / n as f64
        })
        .collect();
    let direct = correlation_ek(x, labels, adj, k_max)?;
    let (mut max_abs, mut max_scaled) = (0.0f64, 0.0f64);
    for (d, s) in direct.iter().zip(&spectral) {
        let diff = (d - s).abs();
        max_abs = max_abs.max(diff);
        max_scaled = max_scaled.max(diff / (1.0 + d.abs()));
    }
    let fro2 = noise.frobenius_norm().powi(2);
    let total: f64 = energy.iter().sum();
    let parseval_relative_error = if fro2 > 0.0 {
        (total - fro2).abs() / fro2
    } else {
        total.abs()
    };
    Ok(SpectralReport {
        eigenvalues: eig.eigenvalues,
        frequency_energy: energy,
        spectral_ek: spectral,
        direct_ek: direct,
        max_abs_deviation: max_abs,
        max_scaled_deviation: max_scaled,
        parseval_relative_error,
    })
}

/// Per class, mean noise norm over centroid norm. Classes whose centroid norm is below
/// `1e-12` get `f64::INFINITY`.
pub fn ncr(x: &DenseMatrix, labels: &[usize]) -> Result<Vec<f64>> {
    let c = class_centroids(x, labels)?;
    let noise = x.sub(&c.centroids.select_rows(labels))?;
    let mut noise_sum = vec![0.0; c.counts.len()];
    for (i, &label) in labels.iter().enumerate() {
        noise_sum[label] += norm2(noise.row(i));
    }
    Ok((0..c.counts.len())
        .map(|k| {
            let centroid_norm = norm2(c.centroids.row(k));
            if centroid_norm < CENTROID_EPS {
                f64::INFINITY
            } else {
                noise_sum[k] / c.counts[k] as f64 / centroid_norm
            }
        })
        .collect())
}

/// For `k = 1..=k_max`, the mean over nodes of
/// `‖n_i^(k) - noise_i(Ã^k X̄)‖ / (1 + ‖n_i^(k)‖)`, where `X̄` is the mean feature matrix.
pub fn structural_noise_closeness(
    x: &DenseMatrix,
    labels: &[usize],
    adj: &NormalizedAdjacency,
    k_max: usize,
) -> Result<Vec<f64>> {
    if k_max == 0 {
        return Err(Error::Config("structural noise comparison needs k_max >= 1".into()));
    }
    let x_bar = mean_feature_matrix(x, labels)?;
    let n = x.rows() as f64;
    let mut px = x.clone();
    let mut pxbar = x_bar;
    let mut out = Vec::with_capacity(k_max);
    for _ in 1..=k_max {
        px = spmm(&adj.matrix, &px)?;
        pxbar = spmm(&adj.matrix, &pxbar)?;
        let structural = feature_noise(&px, labels)?;
        let reference = feature_noise(&pxbar, labels)?;
        let stat: f64 = (0..x.rows())
            .map(|i| {
                let s = structural.row(i);
                let gap: f64 = s
                    .iter()
                    .zip(reference.row(i))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                gap / (1.0 + norm2(s))
            })
            .sum();
        out.push(stat / n);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryRow {
    pub angle: f64,
    pub cosine: f64,
    pub norm_of_sum: f64,
}

/// `count` evenly spaced angles from 0 to π inclusive.
pub fn uniform_angle_grid(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count)
            .map(|i| (std::f64::consts::PI * i as f64 / (count - 1) as f64).min(std::f64::consts::PI))
            .collect(),
    }
}

/// `‖v₁ + v₂‖` for vectors of fixed norms separated by each angle in `angles`, which must be
/// strictly increasing within `[0, π]`.
pub fn aggregation_geometry_sweep(norm1: f64, norm2_: f64, angles: &[f64]) -> Result<Vec<GeometryRow>> {
    if !(norm1 > 0.0 && norm2_ > 0.0) {
        return Err(Error::Config("norms must be positive".into()));
    }
    if angles
        .iter()
        .any(|a| !(0.0..=std::f64::consts::PI).contains(a))
    {
        return Err(Error::Config("angles must lie in [0, π]".into()));
    }
    if angles.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("angles must be strictly increasing".into()));
    }
    Ok(angles
        .iter()
        .map(|&angle| {
            // v₁ = norm1·e₁, v₂ = norm2·(cos a, sin a)
            let sx = norm1 + norm2_ * angle.cos();
            let sy = norm2_ * angle.sin();
            GeometryRow {
                angle,
                cosine: angle.cos(),
                norm_of_sum: sx.hypot(sy),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` edges spanning [-1, 1].
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(out, "{:?},{:?},{c}", self.edges[i], self.edges[i + 1]).unwrap();
        }
        out
    }
}

/// Uniform histogram over [-1, 1] of the per-row cosine between `a` and `b`.
pub fn cosine_histogram(a: &DenseMatrix, b: &DenseMatrix, bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::Config("histogram needs at least one bin".into()));
    }
    let cos = cosine_rows(a, b)?;
    let mut counts = vec![0usize; bins];
    for c in cos {
        let pos = ((c + 1.0) / 2.0 * bins as f64).floor();
        let idx = (pos.max(0.0) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let edges = (0..=bins)
        .map(|i| -1.0 + 2.0 * i as f64 / bins as f64)
        .collect();
    Ok(Histogram { edges, counts })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub k_max: usize,
    /// Also run the eigendecomposition route.
    pub spectral: bool,
    /// Analyze `D^{-1/2}(A + I)D^{-1/2}` instead of `D^{-1/2} A D^{-1/2}`.
    pub self_loops: bool,
    pub histogram_bins: usize,
    pub eigen_cap: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            k_max: 4,
            spectral: true,
            self_loops: false,
            histogram_bins: 20,
            eigen_cap: DEFAULT_EIGEN_CAP,
        }
    }
}

/// Everything the analysis computes for one dataset. Noise matrices stay in memory only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseReport {
    pub num_nodes: usize,
    pub num_classes: usize,
    pub self_loops: bool,
    pub edge_homophily: Option<f64>,
    pub class_counts: Vec<usize>,
    /// Noise-to-centroid ratio per class; `null` where the centroid is zero.
    pub ncr: Vec<Option<f64>>,
    /// `E_0..E_{k_max}` by direct propagation.
    pub ek: Vec<f64>,
    /// `(1/N) Σ <n_i, feature_noise(Ã^k X)_i>` for comparison with `ek`.
    pub ek_propagated_features: Vec<f64>,
    /// `E_{2l+2} <= E_{2l} + 1e-10` for every even pair in range.
    pub even_steps_nonincreasing: bool,
    /// Per `k = 1..=k_max`.
    pub structural_noise_closeness: Vec<f64>,
    /// Histogram of `cos(n_i, n_i^(k))` for `k = 1..=k_max`.
    pub histograms: Vec<Histogram>,
    pub spectral: Option<SpectralReport>,
    #[serde(skip)]
    pub noise: DenseMatrix,
    #[serde(skip)]
    pub structural: Vec<DenseMatrix>,
}

impl Default for DenseMatrix {
    fn default() -> Self {
        DenseMatrix::zeros(0, 0)
    }
}

/// True when `E_{2l+2} <= E_{2l} + tol` for every available `l`.
pub fn even_steps_nonincreasing(ek: &[f64], tol: f64) -> bool {
    (0..ek.len())
        .step_by(2)
        .filter(|&k| k + 2 < ek.len())
        .all(|k| ek[k + 2] <= ek[k] + tol)
}

/// Full noise analysis of a dataset. Uses every labeled node for the centroids.
pub fn analyze(dataset: &DatasetBundle, cfg: &AnalysisConfig) -> Result<NoiseReport> {
    let n = dataset.num_nodes();
    if cfg.spectral && n > cfg.eigen_cap {
        return Err(Error::CapExceeded {
            rows: n,
            cap: cfg.eigen_cap,
        });
    }
    let x = &dataset.features;
    let labels = &dataset.labels;
    let adj = normalized_adjacency(&dataset.graph, cfg.self_loops);
    let centroids = class_centroids(x, labels)?;
    let noise = feature_noise(x, labels)?;
    let ek = correlation_ek(x, labels, &adj, cfg.k_max)?;

    let mut structural = Vec::with_capacity(cfg.k_max);
    let mut ek_propagated_features = vec![mean_row_inner(&noise, &noise)];
    let mut histograms = Vec::with_capacity(cfg.k_max);
    let mut px = x.clone();
    for _ in 1..=cfg.k_max {
        px = spmm(&adj.matrix, &px)?;
        let s = feature_noise(&px, labels)?;
        ek_propagated_features.push(mean_row_inner(&noise, &s));
        histograms.push(cosine_histogram(&noise, &s, cfg.histogram_bins)?);
        structural.push(s);
    }
    let structural_noise_closeness = if cfg.k_max >= 1 {
        structural_noise_closeness(x, labels, &adj, cfg.k_max)?
    } else {
        Vec::new()
    };
    let spectral = if cfg.spectral {
        Some(spectral_ek_with_cap(x, labels, &adj, cfg.k_max, cfg.eigen_cap)?)
    } else {
        None
    };
    let ncr = ncr(x, labels)?
        .into_iter()
        .map(|r| r.is_finite().then_some(r))
        .collect();

    Ok(NoiseReport {
        num_nodes: n,
        num_classes: centroids.counts.len(),
        self_loops: cfg.self_loops,
        edge_homophily: edge_homophily(&dataset.graph, labels).ok(),
        class_counts: centroids.counts,
        ncr,
        even_steps_nonincreasing: even_steps_nonincreasing(&ek, 1e-10),
        ek,
        ek_propagated_features,
        structural_noise_closeness,
        histograms,
        spectral,
        noise,
        structural,
    })
}

impl NoiseReport {
    /// Writes `noise_report.json` plus `histogram_k{k}.csv` for each hop count.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = dir.join("noise_report.json");
        std::fs::write(&json, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(&json, e))?;
        for (k, h) in self.histograms.iter().enumerate() {
            let path = dir.join(format!("histogram_k{}.csv", k + 1));
            std::fs::write(&path, h.to_csv()).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

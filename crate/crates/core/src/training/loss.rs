use crate::error::{Error, Result};
use crate::numerics::{dot, norm2, DenseMatrix, COSINE_EPS};

/// Cosmean loss `1 - mean_i cos(z_s[i], z_f[i])` with its gradient for each argument.
///
/// Rows where either side has norm below [`COSINE_EPS`] count as cosine 0 and receive zero
/// gradient.
pub fn cosmean_loss(z_s: &DenseMatrix, z_f: &DenseMatrix) -> Result<(f64, DenseMatrix, DenseMatrix)> {
    if z_s.shape() != z_f.shape() {
        return Err(Error::dim(
            "cosmean_loss",
            format!("{:?} vs {:?}", z_s.shape(), z_f.shape()),
        ));
    }
    let n = z_s.rows();
    if n == 0 {
        return Err(Error::dim("cosmean_loss", "no rows"));
    }
    let scale = 1.0 / n as f64;
    let mut d_s = DenseMatrix::zeros(n, z_s.cols());
    let mut d_f = DenseMatrix::zeros(n, z_s.cols());
    let mut cos_sum = 0.0;
    for i in 0..n {
        let a = z_s.row(i);
        let b = z_f.row(i);
        let na = norm2(a);
        let nb = norm2(b);
        if na < COSINE_EPS || nb < COSINE_EPS {
            continue;
        }
        let c = dot(a, b) / (na * nb);
        cos_sum += c;
        let inv = 1.0 / (na * nb);
        let (ca, cb) = (c / (na * na), c / (nb * nb));
        for (j, g) in d_s.row_mut(i).iter_mut().enumerate() {
            *g = -scale * (b[j] * inv - ca * a[j]);
        }
        for (j, g) in d_f.row_mut(i).iter_mut().enumerate() {
            *g = -scale * (a[j] * inv - cb * b[j]);
        }
    }
    let loss = (1.0 - cos_sum * scale).clamp(0.0, 2.0);
    Ok((loss, d_s, d_f))
}

//! Cyclic Jacobi eigensolver for real symmetric matrices.

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Default maximum matrix order accepted by [`sym_eig`].
pub const DEFAULT_EIGEN_CAP: usize = 4000;

const SYMMETRY_TOL: f64 = 1e-10;
const OFFDIAG_REL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

impl EigenDecomposition {
    /// `W Λ Wᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.eigenvalues.len();
        let w = &self.eigenvectors;
        DenseMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| w.get(i, k) * self.eigenvalues[k] * w.get(j, k))
                .sum()
        })
    }
}

pub fn sym_eig(m: &DenseMatrix) -> Result<EigenDecomposition> {
    sym_eig_with_cap(m, DEFAULT_EIGEN_CAP)
}

/// Diagonalizes a symmetric matrix by cyclic Jacobi rotations.
///
/// Sweeps over every off-diagonal pair until the off-diagonal Frobenius norm drops to
/// `1e-12 * ‖m‖_F`. Rotations are applied to the full matrix, so each sweep is O(n³).
pub fn sym_eig_with_cap(m: &DenseMatrix, cap: usize) -> Result<EigenDecomposition> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::dim("sym_eig", format!("{:?} is not square", m.shape())));
    }
    if n > cap {
        return Err(Error::CapExceeded { rows: n, cap });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (m.get(i, j) - m.get(j, i)).abs() > SYMMETRY_TOL {
                return Err(Error::Validation(format!(
                    "matrix is not symmetric at ({i}, {j}): {} vs {}",
                    m.get(i, j),
                    m.get(j, i)
                )));
            }
        }
    }

    let mut a = m.clone();
    let mut v = DenseMatrix::identity(n);
    let target = OFFDIAG_REL_TOL * m.frobenius_norm();

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
    }
    if off_diagonal_norm(&a) > target.max(f64::MIN_POSITIVE) * 10.0 {
        return Err(Error::NonFinite(
            "Jacobi sweeps did not converge".to_string(),
        ));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).total_cmp(&a.get(j, j)));
    let eigenvalues = order.iter().map(|&i| a.get(i, i)).collect();
    let eigenvectors = DenseMatrix::from_fn(n, n, |r, c| v.get(r, order[c]));
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a.get(i, j) * a.get(i, j);
            }
        }
    }
    s.sqrt()
}

/// Applies the rotation `Jᵀ A J` in the (p, q) plane and accumulates `V J`.
fn rotate(a: &mut DenseMatrix, v: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.rows();
    let app = a.get(p, p);
    let aqq = a.get(q, q);
    let apq = a.get(p, q);
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        let new_kp = c * akp - s * akq;
        let new_kq = s * akp + c * akq;
        a.set(k, p, new_kp);
        a.set(p, k, new_kp);
        a.set(k, q, new_kq);
        a.set(q, k, new_kq);
    }
    a.set(p, p, c * c * app - 2.0 * s * c * apq + s * s * aqq);
    a.set(q, q, s * s * app + 2.0 * s * c * apq + c * c * aqq);
    a.set(p, q, 0.0);
    a.set(q, p, 0.0);
    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, c * vkp - s * vkq);
        v.set(k, q, s * vkp + c * vkq);
    }
}

//! Dense and sparse kernels plus the symmetric eigensolver. Everything here works on `f64`.

mod dense;
mod eigen;
mod sparse;

pub use dense::{
    cosine, cosine_rows, dot, matmul, matmul_nt, matmul_tn, norm2, relu, relu_mask, DenseMatrix,
    COSINE_EPS,
};
pub use eigen::{sym_eig, sym_eig_with_cap, EigenDecomposition, DEFAULT_EIGEN_CAP};
pub use sparse::{spmm, SparseMatrix};

//! Thin wrappers around faer's dense SVD/QR so the rest of the crate only
//! speaks ndarray. Row-major ndarray data doubles as the column-major view of
//! its transpose, which keeps the conversions copy-free on the way in.

use faer::MatRef;
use ndarray::Array2;

use crate::error::{Error, Result};

fn to_faer(a: &Array2<f64>) -> MatRef<'_, f64> {
    let (m, n) = a.dim();
    let s = a
        .as_slice()
        .expect("unfolding matrices are standard layout");
    MatRef::from_row_major_slice(s, m, n)
}

fn from_faer(m: faer::MatRef<'_, f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Economy SVD. Returns (U, s, V) with U: m x k, V: n x k, k = min(m, n),
/// singular values nonincreasing.
pub(crate) fn svd_thin(a: &Array2<f64>) -> Result<(Array2<f64>, Vec<f64>, Array2<f64>)> {
    let svd = to_faer(a)
        .thin_svd()
        .map_err(|e| Error::InvalidShape(format!("svd failed to converge: {e:?}")))?;
    let k = a.nrows().min(a.ncols());
    let s: Vec<f64> = (0..k).map(|i| svd.S()[i]).collect();
    Ok((from_faer(svd.U()), s, from_faer(svd.V())))
}

/// Row-orthonormal LQ: A = L * Q with Q: t x n (orthonormal rows), L: m x t,
/// t = min(m, n). Computed as the QR of A^T.
pub(crate) fn lq_rows(a: &Array2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    let (m, n) = a.dim();
    let s = a
        .as_slice()
        .ok_or_else(|| Error::InvalidShape("lq input must be standard layout".into()))?;
    // column-major (n, m) view of the same buffer is A^T
    let at = MatRef::from_column_major_slice(s, n, m);
    let qr = at.qr();
    let q = qr.compute_thin_Q();
    let r = qr.thin_R();
    let t = m.min(n);
    let l = Array2::from_shape_fn((m, t), |(i, j)| r[(j, i)]);
    let q_rows = Array2::from_shape_fn((t, n), |(i, j)| q[(j, i)]);
    Ok((l, q_rows))
}

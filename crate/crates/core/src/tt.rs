//! Tensor-train models and their algebra.
//!
//! A d-dimensional tensor T with shape (n_1, ..., n_d) is stored as a chain
//! of third-order cores G_k with shape (r_{k-1}, n_k, r_k), r_0 = r_d = 1:
//!
//!     T[i_1, ..., i_d] = G_1[:, i_1, :] * G_2[:, i_2, :] * ... * G_d[:, i_d, :]
//!
//! Every entry is a product of matrix slices, so storage and most operations
//! scale with the bond ranks r_k instead of prod(n_k). Compression happens in
//! two places: `tt_svd` (dense to TT, sequential SVDs of unfoldings) and
//! `round` (TT to TT, re-orthogonalize then truncate). Structural arithmetic
//! (`hadamard`, `add`, `scale`) is exact; ranks multiply / add / stay, and
//! `round` is what brings them back down.

use ndarray::{s, Array1, Array2, Array3, ArrayD, Axis};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg;

#[derive(Clone, Debug)]
pub struct TtModel {
    cores: Vec<Array3<f64>>,
}

impl TtModel {
    /// Validates boundary ranks, chain consistency, and finiteness.
    pub fn new(cores: Vec<Array3<f64>>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::InvalidShape("model needs at least one core".into()));
        }
        if cores[0].dim().0 != 1 {
            return Err(Error::RankMismatch(format!(
                "first core has left rank {}, want 1",
                cores[0].dim().0
            )));
        }
        if cores.last().unwrap().dim().2 != 1 {
            return Err(Error::RankMismatch(format!(
                "last core has right rank {}, want 1",
                cores.last().unwrap().dim().2
            )));
        }
        for (k, w) in cores.windows(2).enumerate() {
            if w[0].dim().2 != w[1].dim().0 {
                return Err(Error::RankMismatch(format!(
                    "bond {k}: right rank {} vs next left rank {}",
                    w[0].dim().2,
                    w[1].dim().0
                )));
            }
        }
        for (k, c) in cores.iter().enumerate() {
            if c.dim().1 == 0 {
                return Err(Error::InvalidShape(format!("core {k} has mode size 0")));
            }
            if !c.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite(format!("core {k}")));
            }
        }
        Ok(TtModel { cores })
    }

    pub fn d(&self) -> usize {
        self.cores.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dim().1).collect()
    }

    /// Bond ranks including the trivial boundaries: [1, r_1, ..., r_{d-1}, 1].
    pub fn ranks(&self) -> Vec<usize> {
        let mut r = vec![1];
        r.extend(self.cores.iter().map(|c| c.dim().2));
        r
    }

    pub fn max_rank(&self) -> usize {
        *self.ranks().iter().max().unwrap()
    }

    pub fn cores(&self) -> &[Array3<f64>] {
        &self.cores
    }

    pub fn into_cores(self) -> Vec<Array3<f64>> {
        self.cores
    }

    /// Entry at a multi-index: the chain of slice products.
    pub fn element(&self, idx: &[usize]) -> Result<f64> {
        if idx.len() != self.d() {
            return Err(Error::InvalidShape(format!(
                "index length {} vs {} dims",
                idx.len(),
                self.d()
            )));
        }
        let mut v: Array1<f64> = Array1::ones(1);
        for (k, (&i, core)) in idx.iter().zip(&self.cores).enumerate() {
            if i >= core.dim().1 {
                return Err(Error::InvalidShape(format!(
                    "index {i} out of range for dim {k} (size {})",
                    core.dim().1
                )));
            }
            v = v.dot(&core.index_axis(Axis(1), i));
        }
        Ok(v[0])
    }

    /// Multiplies into the first core; every entry scales by c.
    pub fn scale(&self, c: f64) -> TtModel {
        let mut cores = self.cores.clone();
        cores[0].mapv_inplace(|v| v * c);
        TtModel { cores }
    }
}

/// Continuous evaluation: each discrete slice is replaced by the linear
/// interpolation of the two slices bracketing x_k on the grid, then the chain
/// multiplies as usual. Exact at nodes; multilinear in between.
pub fn evaluate(m: &TtModel, grid: &Grid, x: &[f64]) -> Result<f64> {
    if grid.d() != m.d() || x.len() != m.d() {
        return Err(Error::InvalidShape(format!(
            "evaluate with {} coords on {}-dim model / {}-dim grid",
            x.len(),
            m.d(),
            grid.d()
        )));
    }
    if grid.node_counts() != m.shape() {
        return Err(Error::InvalidShape(
            "grid node counts do not match model shape".into(),
        ));
    }
    let mut v: Array1<f64> = Array1::ones(1);
    for (k, (&xk, core)) in x.iter().zip(m.cores()).enumerate() {
        let (j, theta) = grid.dim(k).locate(xk)?;
        let lo = v.dot(&core.index_axis(Axis(1), j));
        v = if theta > 0.0 {
            let hi = v.dot(&core.index_axis(Axis(1), j + 1));
            lo * (1.0 - theta) + hi * theta
        } else {
            lo
        };
    }
    Ok(v[0])
}

/// Smallest rank whose discarded tail energy fits under delta^2, at least 1,
/// at most max_rank.
fn choose_rank(s: &[f64], delta: f64, max_rank: usize) -> usize {
    let delta2 = delta * delta;
    let mut tail = 0.0;
    let mut r = s.len();
    while r > 1 {
        let t = tail + s[r - 1] * s[r - 1];
        if t <= delta2 {
            tail = t;
            r -= 1;
        } else {
            break;
        }
    }
    r.min(max_rank).max(1)
}

/// Dense to TT by sequential SVDs of the unfoldings, splitting the error
/// budget evenly across the d-1 bonds: each truncation keeps the discarded
/// energy below eps * ||T||_F / sqrt(d - 1), so the total reconstruction
/// error stays below eps * ||T||_F. max_rank caps every bond regardless.
pub fn tt_svd(dense: &ArrayD<f64>, eps: f64, max_rank: usize) -> Result<TtModel> {
    let shape: Vec<usize> = dense.shape().to_vec();
    let d = shape.len();
    if d == 0 || shape.iter().any(|&n| n == 0) {
        return Err(Error::InvalidShape(format!("dense shape {shape:?}")));
    }
    if max_rank == 0 {
        return Err(Error::InvalidArgument("max_rank must be >= 1".into()));
    }
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("eps {eps}")));
    }
    let mut flat = Vec::with_capacity(dense.len());
    for &v in dense.iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite("dense tensor entry".into()));
        }
        flat.push(v);
    }
    let norm = flat.iter().map(|v| v * v).sum::<f64>().sqrt();
    let delta = if d > 1 {
        eps * norm / ((d - 1) as f64).sqrt()
    } else {
        0.0
    };

    if d == 1 {
        let core = Array3::from_shape_vec((1, shape[0], 1), flat).unwrap();
        return TtModel::new(vec![core]);
    }

    let mut cores = Vec::with_capacity(d);
    let mut r_prev = 1usize;
    let mut rest: usize = shape[1..].iter().product();
    let mut c = Array2::from_shape_vec((shape[0], rest), flat).unwrap();
    for k in 0..d - 1 {
        let (u, s, v) = linalg::svd_thin(&c)?;
        let r = choose_rank(&s, delta, max_rank);
        let core = u
            .slice(s![.., ..r])
            .to_owned()
            .into_shape_with_order((r_prev, shape[k], r))
            .unwrap();
        cores.push(core);
        // carry = diag(s_r) * V_r^T feeds the next unfolding
        let mut carry = Array2::zeros((r, rest));
        for a in 0..r {
            for j in 0..rest {
                carry[(a, j)] = s[a] * v[(j, a)];
            }
        }
        rest /= shape[k + 1];
        c = carry
            .into_shape_with_order((r * shape[k + 1], rest))
            .unwrap();
        r_prev = r;
    }
    cores.push(
        c.into_shape_with_order((r_prev, shape[d - 1], 1))
            .unwrap(),
    );
    TtModel::new(cores)
}

/// Entrywise product. Slices combine as Kronecker products, so bond ranks
/// multiply.
pub fn hadamard(a: &TtModel, b: &TtModel) -> Result<TtModel> {
    if a.shape() != b.shape() {
        return Err(Error::InvalidShape(format!(
            "hadamard shapes {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let mut cores = Vec::with_capacity(a.d());
    for (ca, cb) in a.cores().iter().zip(b.cores()) {
        let (pa, n, qa) = ca.dim();
        let (pb, _, qb) = cb.dim();
        let mut out = Array3::zeros((pa * pb, n, qa * qb));
        for i in 0..n {
            for ra in 0..pa {
                for rb in 0..pb {
                    for sa in 0..qa {
                        for sb in 0..qb {
                            out[(ra * pb + rb, i, sa * qb + sb)] =
                                ca[(ra, i, sa)] * cb[(rb, i, sb)];
                        }
                    }
                }
            }
        }
        cores.push(out);
    }
    TtModel::new(cores)
}

/// Entrywise sum. Cores stack block-diagonally (concat-only at the two
/// boundary cores), so interior bond ranks add.
pub fn add(a: &TtModel, b: &TtModel) -> Result<TtModel> {
    if a.shape() != b.shape() {
        return Err(Error::InvalidShape(format!(
            "add shapes {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let d = a.d();
    if d == 1 {
        return TtModel::new(vec![&a.cores()[0] + &b.cores()[0]]);
    }
    let mut cores = Vec::with_capacity(d);
    for (k, (ca, cb)) in a.cores().iter().zip(b.cores()).enumerate() {
        let (pa, n, qa) = ca.dim();
        let (pb, _, qb) = cb.dim();
        let core = if k == 0 {
            let mut out = Array3::zeros((1, n, qa + qb));
            out.slice_mut(s![.., .., ..qa]).assign(ca);
            out.slice_mut(s![.., .., qa..]).assign(cb);
            out
        } else if k == d - 1 {
            let mut out = Array3::zeros((pa + pb, n, 1));
            out.slice_mut(s![..pa, .., ..]).assign(ca);
            out.slice_mut(s![pa.., .., ..]).assign(cb);
            out
        } else {
            let mut out = Array3::zeros((pa + pb, n, qa + qb));
            out.slice_mut(s![..pa, .., ..qa]).assign(ca);
            out.slice_mut(s![pa.., .., qa..]).assign(cb);
            out
        };
        cores.push(core);
    }
    TtModel::new(cores)
}

/// Rank truncation: right-to-left LQ sweep makes every core right-orthogonal
/// (so the whole norm concentrates in the first core), then a left-to-right
/// truncated SVD sweep cuts each bond under the same split error budget as
/// `tt_svd`. Ranks never increase.
pub fn round(m: &TtModel, eps: f64, max_rank: usize) -> Result<TtModel> {
    if max_rank == 0 {
        return Err(Error::InvalidArgument("max_rank must be >= 1".into()));
    }
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("eps {eps}")));
    }
    let d = m.d();
    if d == 1 {
        return Ok(m.clone());
    }
    let mut cores: Vec<Array3<f64>> = m.cores().to_vec();

    for k in (1..d).rev() {
        let (p, n, q) = cores[k].dim();
        let mat = cores[k]
            .to_owned()
            .into_shape_with_order((p, n * q))
            .unwrap();
        let (l, q_rows) = linalg::lq_rows(&mat)?;
        let t = l.dim().1;
        cores[k] = q_rows.into_shape_with_order((t, n, q)).unwrap();
        let (pp, nn, _) = cores[k - 1].dim();
        let prev = cores[k - 1]
            .to_owned()
            .into_shape_with_order((pp * nn, p))
            .unwrap();
        cores[k - 1] = prev.dot(&l).into_shape_with_order((pp, nn, t)).unwrap();
    }

    let norm = cores[0].iter().map(|v| v * v).sum::<f64>().sqrt();
    let delta = eps * norm / ((d - 1) as f64).sqrt();

    for k in 0..d - 1 {
        let (p, n, q) = cores[k].dim();
        let mat = cores[k]
            .to_owned()
            .into_shape_with_order((p * n, q))
            .unwrap();
        let (u, s, v) = linalg::svd_thin(&mat)?;
        let r = choose_rank(&s, delta, max_rank);
        cores[k] = u
            .slice(s![.., ..r])
            .to_owned()
            .into_shape_with_order((p, n, r))
            .unwrap();
        let mut carry = Array2::zeros((r, q));
        for a in 0..r {
            for j in 0..q {
                carry[(a, j)] = s[a] * v[(j, a)];
            }
        }
        let (_, nn, qq) = cores[k + 1].dim();
        let next = cores[k + 1]
            .to_owned()
            .into_shape_with_order((q, nn * qq))
            .unwrap();
        cores[k + 1] = carry
            .dot(&next)
            .into_shape_with_order((r, nn, qq))
            .unwrap();
    }
    TtModel::new(cores)
}

/// Sum of a core over its mode index: the r_{k-1} x r_k matrix that replaces
/// the core when its dimension is marginalized out.
pub fn core_marginal_matrix(core: &Array3<f64>) -> Array2<f64> {
    core.sum_axis(Axis(1))
}

/// Grid refinement at the core level: the mode index becomes
/// factor * (n - 1) + 1 slices, linearly interpolated between neighbors.
/// Matches `Grid::refined`, so refined nodes and refined slices line up.
pub fn refine_core(core: &Array3<f64>, factor: usize) -> Result<Array3<f64>> {
    if factor == 0 {
        return Err(Error::InvalidArgument("refinement factor 0".into()));
    }
    let (p, n, q) = core.dim();
    if factor == 1 {
        return Ok(core.clone());
    }
    if n < 2 {
        return Err(Error::InvalidShape(
            "cannot refine a mode with fewer than 2 slices".into(),
        ));
    }
    let nn = factor * (n - 1) + 1;
    let mut out = Array3::zeros((p, nn, q));
    let f = factor as f64;
    for j in 0..n - 1 {
        let a = core.index_axis(Axis(1), j);
        let b = core.index_axis(Axis(1), j + 1);
        for s_off in 0..factor {
            let t = s_off as f64 / f;
            let mut slice = out.index_axis_mut(Axis(1), j * factor + s_off);
            slice.assign(&(&a * (1.0 - t) + &b * t));
        }
    }
    out.index_axis_mut(Axis(1), nn - 1)
        .assign(&core.index_axis(Axis(1), n - 1));
    Ok(out)
}

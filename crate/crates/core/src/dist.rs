//! Unnormalized probability models on grids.
//!
//! A `TtDistribution` pairs a tensor-train model with the grid its mode
//! indices live on and reads Pr(x) proportional to |T[x]|. The normalizer is
//! never formed: marginalization replaces trailing cores by their
//! mode-summed matrices, and sampling walks the dimensions left to right,
//! drawing each 1D conditional from a slice-product chain. Both reuse the
//! same cached suffix aggregates.

use ndarray::{Array1, Array2, ArrayD, Axis, IxDyn};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::tt::{self, TtModel};

#[derive(Clone, Debug, Default)]
pub struct SampleReport {
    /// 1D conditionals that came back all-zero on an already-chosen prefix
    /// (truncation artifacts); those draws fell back to a uniform pick.
    pub degenerate_fallbacks: usize,
}

#[derive(Clone, Debug)]
pub struct TtDistribution {
    model: TtModel,
    grid: Grid,
    /// suffix[k] = (sum core_{k+1}) * ... * (sum core_{d-1}) * [1], length r_{k+1}
    suffix: Vec<Array1<f64>>,
    /// psi[k][(a, i)] = core_k[a, i, :] . suffix[k]; the 1D conditional at dim
    /// k given prefix vector phi is |phi . psi[k][:, i]| over i
    psi: Vec<Array2<f64>>,
}

impl TtDistribution {
    pub fn new(model: TtModel, grid: Grid) -> Result<Self> {
        if model.shape() != grid.node_counts() {
            return Err(Error::InvalidShape(format!(
                "model shape {:?} vs grid nodes {:?}",
                model.shape(),
                grid.node_counts()
            )));
        }
        let d = model.d();
        let mut suffix = vec![Array1::ones(1); d];
        for k in (0..d - 1).rev() {
            let m = tt::core_marginal_matrix(&model.cores()[k + 1]);
            suffix[k] = m.dot(&suffix[k + 1]);
        }
        let psi = model
            .cores()
            .iter()
            .zip(&suffix)
            .map(|(core, b)| {
                let (p, n, _) = core.dim();
                let mut out = Array2::zeros((p, n));
                for i in 0..n {
                    let slice = core.index_axis(Axis(1), i);
                    out.column_mut(i).assign(&slice.dot(b));
                }
                out
            })
            .collect();
        Ok(TtDistribution {
            model,
            grid,
            suffix,
            psi,
        })
    }

    pub fn model(&self) -> &TtModel {
        &self.model
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn d(&self) -> usize {
        self.model.d()
    }

    /// |T(x)| with multilinear interpolation between nodes.
    pub fn prob_unnormalized(&self, x: &[f64]) -> Result<f64> {
        Ok(tt::evaluate(&self.model, &self.grid, x)?.abs())
    }

    /// Distribution over the first `keep` dimensions; the dropped trailing
    /// dimensions are summed out through their mode-marginal matrices. Exact
    /// for nonnegative models (sums commute with the chain product).
    pub fn marginal(&self, keep: usize) -> Result<TtDistribution> {
        let d = self.d();
        if keep == 0 || keep > d {
            return Err(Error::InvalidArgument(format!(
                "marginal({keep}) on {d}-dim distribution"
            )));
        }
        if keep == d {
            return Ok(self.clone());
        }
        let mut cores: Vec<_> = self.model.cores()[..keep].to_vec();
        let last = cores.pop().unwrap();
        let (p, n, _) = last.dim();
        let b = &self.suffix[keep - 1];
        let mut folded = ndarray::Array3::zeros((p, n, 1));
        for i in 0..n {
            let v = last.index_axis(Axis(1), i).dot(b);
            folded
                .index_axis_mut(Axis(1), i)
                .assign(&v.insert_axis(Axis(1)));
        }
        cores.push(folded);
        TtDistribution::new(TtModel::new(cores)?, self.grid.leading(keep)?)
    }

    /// Distribution over the trailing dimensions given continuous values for
    /// the first y.len() ones (slices interpolated off-node). At least one
    /// dimension must remain free.
    pub fn condition_on_leading(&self, y: &[f64]) -> Result<TtDistribution> {
        let j = y.len();
        let d = self.d();
        if j == 0 {
            return Ok(self.clone());
        }
        if j >= d {
            return Err(Error::InvalidArgument(format!(
                "conditioning on {j} of {d} dims leaves nothing to sample"
            )));
        }
        let phi = self.prefix_vector(y)?;
        let head = &self.model.cores()[j];
        let (_, n, q) = head.dim();
        let mut first = ndarray::Array3::zeros((1, n, q));
        for i in 0..n {
            let v = phi.dot(&head.index_axis(Axis(1), i));
            first.index_axis_mut(Axis(1), i).assign(&v.insert_axis(Axis(0)));
        }
        let mut cores = vec![first];
        cores.extend_from_slice(&self.model.cores()[j + 1..]);
        TtDistribution::new(TtModel::new(cores)?, self.grid.trailing(j)?)
    }

    /// Row vector P^1(y_1) ... P^j(y_j) of length r_j.
    pub(crate) fn prefix_vector(&self, y: &[f64]) -> Result<Array1<f64>> {
        let mut v: Array1<f64> = Array1::ones(1);
        for (k, &yk) in y.iter().enumerate() {
            let core = &self.model.cores()[k];
            let (cell, theta) = self.grid.dim(k).locate(yk)?;
            let lo = v.dot(&core.index_axis(Axis(1), cell));
            v = if theta > 0.0 {
                let hi = v.dot(&core.index_axis(Axis(1), cell + 1));
                lo * (1.0 - theta) + hi * theta
            } else {
                lo
            };
        }
        Ok(v)
    }

    /// Draws `count` exact samples; each row of the result is one point (node
    /// coordinates). Errors with DegenerateDistribution when the very first
    /// conditional is all-zero (the distribution has no mass to begin with).
    pub fn sample(&self, count: usize, rng: &mut impl Rng) -> Result<(Array2<f64>, SampleReport)> {
        let d = self.d();
        let mut out = Array2::zeros((count, d));
        let mut report = SampleReport::default();
        let mut idx = vec![0usize; d];
        let mut scratch = Scratch::new(&self.model);
        for s in 0..count {
            report.degenerate_fallbacks +=
                self.sample_indices(rng, &mut idx, &mut scratch)?;
            for k in 0..d {
                out[(s, k)] = self.grid.dim(k).node(idx[k]);
            }
        }
        Ok((out, report))
    }

    /// One multi-index draw; returns how many dimensions needed the uniform
    /// fallback. Consumes exactly one uniform per dimension, fallback or not.
    pub(crate) fn sample_indices(
        &self,
        rng: &mut impl Rng,
        idx: &mut [usize],
        scratch: &mut Scratch,
    ) -> Result<usize> {
        let d = self.d();
        let mut fallbacks = 0usize;
        scratch.phi.clear();
        scratch.phi.push(1.0);
        for k in 0..d {
            let psi = &self.psi[k];
            let n = psi.ncols();
            let u = rng.gen::<f64>();
            let pick = conditional_pick(&scratch.phi, psi, u, &mut scratch.w);
            let i = match pick {
                Some(i) => i,
                None if k == 0 => {
                    return Err(Error::DegenerateDistribution(
                        "no probability mass in the leading conditional".into(),
                    ))
                }
                None => {
                    fallbacks += 1;
                    ((u * n as f64) as usize).min(n - 1)
                }
            };
            idx[k] = i;
            advance_prefix(&mut scratch.phi, &mut scratch.next, self.model.cores(), k, i);
        }
        Ok(fallbacks)
    }
}

pub(crate) struct Scratch {
    pub phi: Vec<f64>,
    pub next: Vec<f64>,
    pub w: Vec<f64>,
}

impl Scratch {
    pub(crate) fn new(model: &TtModel) -> Self {
        let rmax = model.max_rank();
        let nmax = model.shape().into_iter().max().unwrap();
        Scratch {
            phi: Vec::with_capacity(rmax),
            next: Vec::with_capacity(rmax),
            w: vec![0.0; nmax],
        }
    }
}

/// Inverse-CDF pick over |phi . psi[:, i]| in ascending node order; None when
/// every weight is exactly zero.
pub(crate) fn conditional_pick(
    phi: &[f64],
    psi: &Array2<f64>,
    u: f64,
    w: &mut Vec<f64>,
) -> Option<usize> {
    let n = psi.ncols();
    w.clear();
    w.resize(n, 0.0);
    let data = psi.as_slice().expect("psi is standard layout");
    for (a, &pa) in phi.iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        let row = &data[a * n..(a + 1) * n];
        for (wi, &x) in w.iter_mut().zip(row) {
            *wi += pa * x;
        }
    }
    let mut total = 0.0;
    for wi in w.iter_mut() {
        *wi = wi.abs();
        total += *wi;
    }
    if total <= 0.0 {
        return None;
    }
    let target = u * total;
    let mut cum = 0.0;
    for (i, &wi) in w.iter().enumerate() {
        cum += wi;
        if target < cum {
            return Some(i);
        }
    }
    Some(n - 1)
}

/// phi <- phi . core_k[:, i, :]
pub(crate) fn advance_prefix(
    phi: &mut Vec<f64>,
    next: &mut Vec<f64>,
    cores: &[ndarray::Array3<f64>],
    k: usize,
    i: usize,
) {
    let core = &cores[k];
    let (p, n, q) = core.dim();
    let data = core.as_slice().expect("cores are standard layout");
    next.clear();
    next.resize(q, 0.0);
    for (a, &pa) in phi.iter().enumerate().take(p) {
        if pa == 0.0 {
            continue;
        }
        let row = &data[(a * n + i) * q..(a * n + i) * q + q];
        for (nb, &x) in next.iter_mut().zip(row) {
            *nb += pa * x;
        }
    }
    std::mem::swap(phi, next);
}

/// Learns a 0/1 feasibility model: evaluates the predicate at every node of
/// the coarse grid, compresses the dense indicator with `tt_svd`, then
/// refines each dimension's cores and grid by the given factors (linear
/// interpolation between coarse slices).
pub fn from_indicator<F>(
    coarse: &Grid,
    predicate: F,
    eps: f64,
    max_rank: usize,
    refine: &[usize],
    max_cells: usize,
) -> Result<TtDistribution>
where
    F: Fn(&[f64]) -> bool + Sync,
{
    let cells = coarse.total_cells();
    if cells > max_cells {
        return Err(Error::Capacity(format!(
            "dense indicator needs {cells} cells ({} MB) > cap {max_cells}",
            cells * 8 / (1024 * 1024)
        )));
    }
    let counts = coarse.node_counts();
    let d = coarse.d();
    let values: Vec<f64> = (0..cells)
        .into_par_iter()
        .map_init(
            || vec![0.0f64; d],
            |coords, flat| {
                let mut rem = flat;
                for k in (0..d).rev() {
                    let n = counts[k];
                    coords[k] = coarse.dim(k).node(rem % n);
                    rem /= n;
                }
                predicate(coords) as u8 as f64
            },
        )
        .collect();
    let dense = ArrayD::from_shape_vec(IxDyn(&counts), values).unwrap();
    let model = tt::tt_svd(&dense, eps, max_rank)?;
    drop(dense);
    let refined_cores = model
        .cores()
        .iter()
        .zip(refine)
        .map(|(c, &f)| tt::refine_core(c, f))
        .collect::<Result<Vec<_>>>()?;
    TtDistribution::new(TtModel::new(refined_cores)?, coarse.refined(refine)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridDim;
    use crate::stats::chi_square_gof;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn uniform_grid(counts: &[usize]) -> Grid {
        Grid::new(
            counts
                .iter()
                .map(|&n| GridDim::new(0.0, (n - 1) as f64, n).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn random_nonneg(shape: &[usize], seed: u64) -> ArrayD<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ArrayD::from_shape_fn(IxDyn(shape), |_| rng.gen_range(0.0..1.0))
    }

    fn dist_from_dense(dense: &ArrayD<f64>) -> TtDistribution {
        let model = tt::tt_svd(dense, 1e-12, usize::MAX).unwrap();
        TtDistribution::new(model, uniform_grid(dense.shape())).unwrap()
    }

    #[test]
    fn marginal_matches_brute_force_sums() {
        let dense = random_nonneg(&[4, 4, 4], 21);
        let dist = dist_from_dense(&dense);
        let m1 = dist.marginal(1).unwrap();
        for i in 0..4 {
            let mut want = 0.0;
            for j in 0..4 {
                for k in 0..4 {
                    want += dense[[i, j, k]];
                }
            }
            let got = m1.model().element(&[i]).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-8);
        }
        let m2 = dist.marginal(2).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let mut want = 0.0;
                for k in 0..4 {
                    want += dense[[i, j, k]];
                }
                assert_relative_eq!(
                    m2.model().element(&[i, j]).unwrap(),
                    want,
                    max_relative = 1e-8
                );
            }
        }
    }

    #[test]
    fn marginal_of_uniform_is_uniform_and_keep_d_is_identity() {
        let dense = ArrayD::from_elem(IxDyn(&[3, 5]), 1.0);
        let dist = dist_from_dense(&dense);
        let m = dist.marginal(1).unwrap();
        for i in 0..3 {
            assert_relative_eq!(m.model().element(&[i]).unwrap(), 5.0, max_relative = 1e-10);
        }
        let full = dist.marginal(2).unwrap();
        assert_eq!(full.d(), 2);
        assert!(dist.marginal(0).is_err());
        assert!(dist.marginal(3).is_err());
    }

    #[test]
    fn conditioning_matches_dense_slice() {
        let dense = random_nonneg(&[3, 4, 5], 33);
        let dist = dist_from_dense(&dense);
        // condition at node 2 of dim 0 (coordinate 2.0 on this grid)
        let cond = dist.condition_on_leading(&[2.0]).unwrap();
        assert_eq!(cond.d(), 2);
        // compare normalized, conditioning only fixes scale by the slice mass
        let mut z_dense = 0.0;
        let mut z_cond = 0.0;
        for j in 0..4 {
            for k in 0..5 {
                z_dense += dense[[2, j, k]];
                z_cond += cond.model().element(&[j, k]).unwrap();
            }
        }
        for j in 0..4 {
            for k in 0..5 {
                assert_relative_eq!(
                    cond.model().element(&[j, k]).unwrap() / z_cond,
                    dense[[2, j, k]] / z_dense,
                    epsilon = 1e-8
                );
            }
        }
    }

    #[test]
    fn conditioning_midway_interpolates_between_slices() {
        let dense = random_nonneg(&[3, 4], 34);
        let dist = dist_from_dense(&dense);
        let cond = dist.condition_on_leading(&[0.5]).unwrap();
        for j in 0..4 {
            let want = 0.5 * dense[[0, j]] + 0.5 * dense[[1, j]];
            assert_relative_eq!(
                cond.model().element(&[j]).unwrap(),
                want,
                max_relative = 1e-8
            );
        }
        assert!(dist.condition_on_leading(&[0.0, 0.0]).is_err());
        assert_eq!(dist.condition_on_leading(&[]).unwrap().d(), 2);
    }

    #[test]
    fn sampling_uniform_model_is_uniform() {
        let dense = ArrayD::from_elem(IxDyn(&[10, 10]), 1.0);
        let dist = dist_from_dense(&dense);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000usize;
        let (samples, report) = dist.sample(n, &mut rng).unwrap();
        assert_eq!(report.degenerate_fallbacks, 0);
        let mut counts = vec![0u64; 100];
        for s in 0..n {
            let i = samples[(s, 0)] as usize;
            let j = samples[(s, 1)] as usize;
            counts[i * 10 + j] += 1;
        }
        let expected = vec![n as f64 / 100.0; 100];
        let (_, p) = chi_square_gof(&counts, &expected);
        assert!(p > 0.001, "uniform sampling chi-square p = {p}");
    }

    #[test]
    fn sampling_matches_enumerated_masses() {
        let dense = random_nonneg(&[5, 5, 5], 77);
        let dist = dist_from_dense(&dense);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 200_000usize;
        let (samples, _) = dist.sample(n, &mut rng).unwrap();
        let mut counts = vec![0u64; 125];
        for s in 0..n {
            let i = samples[(s, 0)] as usize;
            let j = samples[(s, 1)] as usize;
            let k = samples[(s, 2)] as usize;
            counts[(i * 5 + j) * 5 + k] += 1;
        }
        let total: f64 = dense.iter().sum();
        let expected: Vec<f64> = dense.iter().map(|v| v / total * n as f64).collect();
        let (_, p) = chi_square_gof(&counts, &expected);
        assert!(p > 0.001, "sampling chi-square p = {p}");
    }

    #[test]
    fn sampling_ignores_global_scale() {
        // structural no-Z check: scaling the model must not change the draws
        let dense = random_nonneg(&[6, 6], 88);
        let dist = dist_from_dense(&dense);
        let scaled =
            TtDistribution::new(dist.model().scale(1e6), dist.grid().clone()).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(7);
        let mut r2 = ChaCha8Rng::seed_from_u64(7);
        let (a, _) = dist.sample(500, &mut r1).unwrap();
        let (b, _) = scaled.sample(500, &mut r2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_distribution_errors_and_empty_draw_is_empty() {
        let dense = ArrayD::zeros(IxDyn(&[4, 4]));
        let dist = dist_from_dense(&dense);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        assert!(matches!(
            dist.sample(1, &mut rng),
            Err(Error::DegenerateDistribution(_))
        ));
        let nonzero = dist_from_dense(&random_nonneg(&[4, 4], 1));
        let (samples, _) = nonzero.sample(0, &mut rng).unwrap();
        assert_eq!(samples.dim(), (0, 2));
    }

    #[test]
    fn indicator_model_stays_on_support() {
        // half plane x <= 4.0 on a 10x10 grid
        let grid = uniform_grid(&[10, 10]);
        let dist = from_indicator(&grid, |c| c[0] <= 4.0, 1e-10, 100, &[1, 1], 1 << 20)
            .unwrap();
        let mut mass_on = 0.0;
        let mut mass_off = 0.0;
        for i in 0..10 {
            for j in 0..10 {
                let v = dist
                    .prob_unnormalized(&[i as f64, j as f64])
                    .unwrap();
                if i <= 4 {
                    mass_on += v;
                } else {
                    mass_off += v;
                }
            }
        }
        assert!(mass_on / (mass_on + mass_off) > 0.999);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (samples, _) = dist.sample(2000, &mut rng).unwrap();
        for s in 0..2000 {
            assert!(samples[(s, 0)] <= 4.0 + 1e-9);
        }
    }

    #[test]
    fn from_indicator_all_true_is_rank_one_uniform() {
        let grid = uniform_grid(&[6, 7]);
        let dist = from_indicator(&grid, |_| true, 1e-10, 10, &[1, 1], 1 << 20).unwrap();
        assert_eq!(dist.model().ranks(), vec![1, 1, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (samples, report) = dist.sample(50_000, &mut rng).unwrap();
        assert_eq!(report.degenerate_fallbacks, 0);
        let mut counts = vec![0u64; 42];
        for s in 0..50_000 {
            counts[samples[(s, 0)] as usize * 7 + samples[(s, 1)] as usize] += 1;
        }
        let expected = vec![50_000.0 / 42.0; 42];
        let (_, p) = chi_square_gof(&counts, &expected);
        assert!(p > 0.001, "p = {p}");
    }

    #[test]
    fn from_indicator_refines_grid_and_cores_together() {
        let grid = Grid::new(vec![
            GridDim::new(0.0, 1.0, 5).unwrap(),
            GridDim::new(-1.0, 1.0, 3).unwrap(),
        ])
        .unwrap();
        let dist =
            from_indicator(&grid, |c| c[0] + c[1] <= 1.0, 1e-10, 50, &[2, 10], 1 << 20)
                .unwrap();
        assert_eq!(dist.grid().node_counts(), vec![9, 21]);
        assert_eq!(dist.model().shape(), vec![9, 21]);
    }

    #[test]
    fn from_indicator_capacity_guard() {
        let grid = uniform_grid(&[100, 100, 100]);
        let err = from_indicator(&grid, |_| true, 1e-10, 10, &[1, 1, 1], 100_000);
        assert!(matches!(err, Err(Error::Capacity(_))));
    }

    #[test]
    fn marginal_then_condition_consistency() {
        // P(x0) * P(x1 | x0) proportional to P(x0, x1) at nodes
        let dense = random_nonneg(&[4, 5], 55);
        let dist = dist_from_dense(&dense);
        let m = dist.marginal(1).unwrap();
        for i in 0..4 {
            let cond = dist.condition_on_leading(&[i as f64]).unwrap();
            let mut z = 0.0;
            for j in 0..5 {
                z += cond.model().element(&[j]).unwrap();
            }
            for j in 0..5 {
                let joint = dense[[i, j]];
                let reconstructed =
                    m.model().element(&[i]).unwrap() * cond.model().element(&[j]).unwrap() / z;
                assert_relative_eq!(joint, reconstructed, epsilon = 1e-8);
            }
        }
    }
}

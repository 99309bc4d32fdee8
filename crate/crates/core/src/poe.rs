//! Products of experts on a shared grid.
//!
//! Two kinds of products show up. `and_combine` / `or_combine` fuse whole
//! feasibility models (entrywise product / inclusion-exclusion sum, then
//! re-rounding). `product_policy` multiplies a feasibility model over action
//! dimensions with a diagonal Gaussian policy expert: the Gaussian core for a
//! dimension is a constant across both rank axes, so the core-level product
//! reduces to scaling each mode slice by the Gaussian density at its node.

use ndarray::{Array2, Array3, Axis};
use rand::Rng;

use crate::dist::{self, TtDistribution};
use crate::error::{Error, Result};
use crate::tt::{self, TtModel};

const INV_SQRT_2PI: f64 = 0.3989422804014327;

#[derive(Clone, Debug)]
pub struct DiagonalGaussian {
    mean: Vec<f64>,
    sigma: Vec<f64>,
}

impl DiagonalGaussian {
    pub fn new(mean: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if mean.len() != sigma.len() || mean.is_empty() {
            return Err(Error::InvalidShape(format!(
                "gaussian with {} means and {} sigmas",
                mean.len(),
                sigma.len()
            )));
        }
        if !mean.iter().all(|m| m.is_finite()) {
            return Err(Error::NonFinite("gaussian mean".into()));
        }
        if !sigma.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::InvalidArgument(
                "gaussian sigmas must be positive".into(),
            ));
        }
        Ok(DiagonalGaussian { mean, sigma })
    }

    pub fn d(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// Univariate density of component k at x.
    pub fn pdf(&self, k: usize, x: f64) -> f64 {
        let z = (x - self.mean[k]) / self.sigma[k];
        INV_SQRT_2PI / self.sigma[k] * (-0.5 * z * z).exp()
    }
}

/// The TT core of the Gaussian expert for one dimension: density at each node
/// replicated across the (r_left, r_right) rank block, ready for an
/// entrywise core product.
pub fn gaussian_core(
    g: &DiagonalGaussian,
    k: usize,
    nodes: &[f64],
    r_left: usize,
    r_right: usize,
) -> Array3<f64> {
    let mut out = Array3::zeros((r_left, nodes.len(), r_right));
    for (i, &x) in nodes.iter().enumerate() {
        out.index_axis_mut(Axis(1), i).fill(g.pdf(k, x));
    }
    out
}

/// Feasibility-times-Gaussian product over every dimension of `feas` (which
/// is typically the action block of a joint model after conditioning on the
/// state). Ranks are unchanged; each mode slice scales by the density at its
/// node.
pub fn product_policy(feas: &TtDistribution, g: &DiagonalGaussian) -> Result<TtDistribution> {
    if g.d() != feas.d() {
        return Err(Error::InvalidShape(format!(
            "gaussian over {} dims, distribution over {}",
            g.d(),
            feas.d()
        )));
    }
    let cores = feas
        .model()
        .cores()
        .iter()
        .enumerate()
        .map(|(k, core)| {
            let mut out = core.clone();
            for (i, mut slice) in out.axis_iter_mut(Axis(1)).enumerate() {
                let w = g.pdf(k, feas.grid().dim(k).node(i));
                slice.mapv_inplace(|v| v * w);
            }
            out
        })
        .collect();
    TtDistribution::new(TtModel::new(cores)?, feas.grid().clone())
}

fn check_same_grid(a: &TtDistribution, b: &TtDistribution) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(Error::InvalidArgument(
            "combining distributions on different grids".into(),
        ));
    }
    Ok(())
}

/// Intersection of feasible sets: entrywise product, re-rounded.
pub fn and_combine(
    a: &TtDistribution,
    b: &TtDistribution,
    eps: f64,
    max_rank: usize,
) -> Result<TtDistribution> {
    check_same_grid(a, b)?;
    let prod = tt::hadamard(a.model(), b.model())?;
    TtDistribution::new(tt::round(&prod, eps, max_rank)?, a.grid().clone())
}

/// Union of feasible sets: a + b - a*b (exact on 0/1 indicators), re-rounded.
pub fn or_combine(
    a: &TtDistribution,
    b: &TtDistribution,
    eps: f64,
    max_rank: usize,
) -> Result<TtDistribution> {
    check_same_grid(a, b)?;
    let sum = tt::add(a.model(), b.model())?;
    let overlap = tt::hadamard(a.model(), b.model())?.scale(-1.0);
    let union = tt::add(&sum, &overlap)?;
    TtDistribution::new(tt::round(&union, eps, max_rank)?, a.grid().clone())
}

pub enum ProductSampleOutcome {
    Ok,
    /// First action conditional had no mass at the conditioning state: the
    /// state has an empty feasible action set (up to model error).
    EmptyAtState,
    /// Some later conditional was all-zero; those dims fell back to uniform.
    Fallback(usize),
}

/// Sampler for project-then-sample control: a joint feasibility model over
/// (state dims, action dims), conditioned per call on a continuous state and
/// multiplied by a diagonal Gaussian over the actions.
///
/// The Gaussian-weighted suffix aggregates do not depend on the state, so
/// they are built once here and shared by every rollout of a control step.
pub struct ProductActionSampler<'a> {
    joint: &'a TtDistribution,
    dx: usize,
    /// per action dim m: psi[(a, i)] = pdf_m(node_i) * core[a, i, :] . b_{m+1}
    psi: Vec<Array2<f64>>,
}

impl<'a> ProductActionSampler<'a> {
    pub fn new(joint: &'a TtDistribution, dx: usize, g: &DiagonalGaussian) -> Result<Self> {
        let d = joint.d();
        if dx == 0 || dx >= d || g.d() != d - dx {
            return Err(Error::InvalidShape(format!(
                "{d}-dim joint model, {dx} state dims, {}-dim gaussian",
                g.d()
            )));
        }
        let du = d - dx;
        let mut psi = vec![Array2::zeros((0, 0)); du];
        // right-to-left: b carries (sum_i pdf(i) core[:, i, :]) products
        let mut b = ndarray::Array1::ones(1);
        for m in (0..du).rev() {
            let core = &joint.model().cores()[dx + m];
            let (p, n, _) = core.dim();
            let mut mat = Array2::zeros((p, n));
            for i in 0..n {
                let w = g.pdf(m, joint.grid().dim(dx + m).node(i));
                let col = core.index_axis(Axis(1), i).dot(&b) * w;
                mat.column_mut(i).assign(&col);
            }
            b = mat.sum_axis(Axis(1));
            psi[m] = mat;
        }
        Ok(ProductActionSampler { joint, dx, psi })
    }

    /// Draws one action at the given state (clamped into the state box).
    /// Writes node coordinates into `u_out`; consumes exactly one uniform per
    /// action dimension regardless of outcome.
    pub fn sample(
        &self,
        state: &[f64],
        rng: &mut impl Rng,
        u_out: &mut [f64],
    ) -> Result<ProductSampleOutcome> {
        let du = self.psi.len();
        if state.len() != self.dx || u_out.len() != du {
            return Err(Error::InvalidShape(format!(
                "sampler got {} state / {} action dims, wants {} / {}",
                state.len(),
                u_out.len(),
                self.dx,
                du
            )));
        }
        let grid = self.joint.grid();
        let cores = self.joint.model().cores();
        let mut phi: Vec<f64> = vec![1.0];
        let mut next: Vec<f64> = Vec::new();
        for k in 0..self.dx {
            let dim = grid.dim(k);
            let (cell, theta) = dim.locate(dim.clamp(state[k]))?;
            let core = &cores[k];
            let q = core.dim().2;
            next.clear();
            next.resize(q, 0.0);
            let lo = core.index_axis(Axis(1), cell);
            for (a, &pa) in phi.iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                let w = pa * (1.0 - theta);
                for bq in 0..q {
                    next[bq] += w * lo[(a, bq)];
                }
            }
            if theta > 0.0 {
                let hi = core.index_axis(Axis(1), cell + 1);
                for (a, &pa) in phi.iter().enumerate() {
                    let w = pa * theta;
                    for bq in 0..q {
                        next[bq] += w * hi[(a, bq)];
                    }
                }
            }
            std::mem::swap(&mut phi, &mut next);
        }

        let mut w_scratch: Vec<f64> = Vec::new();
        let mut empty_at_state = false;
        let mut fallbacks = 0usize;
        for m in 0..du {
            let psi = &self.psi[m];
            let n = psi.ncols();
            let u = rng.gen::<f64>();
            let pick = if empty_at_state {
                None
            } else {
                dist::conditional_pick(&phi, psi, u, &mut w_scratch)
            };
            let i = match pick {
                Some(i) => i,
                None if m == 0 => {
                    empty_at_state = true;
                    0
                }
                None => {
                    if !empty_at_state {
                        fallbacks += 1;
                    }
                    ((u * n as f64) as usize).min(n - 1)
                }
            };
            if !empty_at_state {
                u_out[m] = grid.dim(self.dx + m).node(i);
                dist::advance_prefix(&mut phi, &mut next, cores, self.dx + m, i);
            }
        }
        if empty_at_state {
            u_out.fill(0.0);
            return Ok(ProductSampleOutcome::EmptyAtState);
        }
        if fallbacks > 0 {
            return Ok(ProductSampleOutcome::Fallback(fallbacks));
        }
        Ok(ProductSampleOutcome::Ok)
    }
}

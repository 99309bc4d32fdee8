//! Sampling-based MPC. Three step strategies share one rollout, weighting,
//! and mean-update kernel:
//!
//! * plain: Gaussian action samples, clipped to the bound;
//! * projected: each sampled action is scaled back onto the feasible set by a
//!   line search along its own direction;
//! * product: actions are drawn from the feasibility model multiplied with
//!   the Gaussian policy, conditioned per sample on its predicted state, so
//!   every draw is feasible up to model error.
//!
//! All strategies draw through per-sample substreams consuming exactly one
//! uniform per (step, action dimension). A run with an identity feasibility
//! model therefore reproduces the plain strategy's samples up to grid
//! rounding on the same seed.

use ndarray::{Array2, Array3, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erf_inv;

use crate::dist::TtDistribution;
use crate::error::{Error, Result};
use crate::poe::{DiagonalGaussian, ProductActionSampler, ProductSampleOutcome};
use crate::seeds;
use crate::worlds::{trajectory_cost, World};

#[derive(Clone, Debug)]
pub struct GaussianPolicy {
    /// horizon x action-dim
    means: Array2<f64>,
    sigmas: Array2<f64>,
}

impl GaussianPolicy {
    pub fn new(means: Array2<f64>, sigmas: Array2<f64>) -> Result<Self> {
        if means.nrows() == 0 || means.ncols() == 0 || means.dim() != sigmas.dim() {
            return Err(Error::InvalidShape(format!(
                "policy means {:?} vs sigmas {:?}",
                means.dim(),
                sigmas.dim()
            )));
        }
        if !means.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("policy means".into()));
        }
        if !sigmas.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::InvalidArgument(
                "policy sigmas must be positive".into(),
            ));
        }
        Ok(GaussianPolicy { means, sigmas })
    }

    /// Zero-mean policy with one sigma shared by every slot.
    pub fn zeros(horizon: usize, action_dim: usize, sigma: f64) -> Result<Self> {
        Self::new(
            Array2::zeros((horizon, action_dim)),
            Array2::from_elem((horizon, action_dim), sigma),
        )
    }

    pub fn horizon(&self) -> usize {
        self.means.nrows()
    }

    pub fn action_dim(&self) -> usize {
        self.means.ncols()
    }

    pub fn means(&self) -> &Array2<f64> {
        &self.means
    }

    pub fn sigmas(&self) -> &Array2<f64> {
        &self.sigmas
    }

    /// Receding-horizon advance: drop slot 0, repeat the last slot.
    pub fn shift(&mut self) {
        let h = self.horizon();
        for r in 1..h {
            let row = self.means.row(r).to_owned();
            self.means.row_mut(r - 1).assign(&row);
            let row = self.sigmas.row(r).to_owned();
            self.sigmas.row_mut(r - 1).assign(&row);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Mppi,
    ProjMppi,
    TtPoeMppi,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Mppi => "mppi",
            Method::ProjMppi => "proj_mppi",
            Method::TtPoeMppi => "tt_poe_mppi",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mppi" => Ok(Method::Mppi),
            "proj_mppi" => Ok(Method::ProjMppi),
            "tt_poe_mppi" => Ok(Method::TtPoeMppi),
            other => Err(Error::InvalidArgument(format!(
                "unknown method {other:?}; expected mppi, proj_mppi, or tt_poe_mppi"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ControllerConfig {
    pub horizon: usize,
    pub samples: usize,
    pub beta: f64,
    pub gamma: f64,
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.samples == 0 {
            return Err(Error::InvalidArgument(
                "horizon and sample count must be positive".into(),
            ));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidArgument("beta must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidArgument("gamma must be in (0, 1]".into()));
        }
        Ok(())
    }
}

pub struct RolloutBatch {
    /// samples x horizon x action-dim
    pub actions: Array3<f64>,
    /// samples x (horizon+1) x state-dim
    pub states: Array3<f64>,
    /// raw trajectory costs, one per sample
    pub costs: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct StepDiag {
    /// weights could not be formed; a zero action was returned
    pub degenerate: bool,
    /// cost floor was nonpositive and normalization had to shift
    pub cost_shifted: bool,
    /// product draws that found no feasible action at their state
    pub empty_product_samples: usize,
    /// later-dimension conditionals that fell back to uniform
    pub fallback_dims: usize,
    /// product draws violating the exact world predicate
    pub predicate_violations: usize,
    /// product draws taken (violation denominator)
    pub sampled_pairs: usize,
    pub best_cost: f64,
}

pub struct StepOutcome {
    /// action to execute now
    pub action: Vec<f64>,
    pub batch: RolloutBatch,
    pub diag: StepDiag,
}

/// Per-sample substreams, one uniform per (step, action dim) each, so the
/// plain and product strategies consume identical randomness sample by
/// sample.
pub fn sample_streams(rng: &mut impl Rng, n: usize) -> Vec<ChaCha8Rng> {
    let base = rng.gen::<u64>();
    (0..n)
        .map(|s| ChaCha8Rng::seed_from_u64(seeds::mix(&[base, s as u64])))
        .collect()
}

/// Standard-normal draw by inverse CDF, so one uniform maps to one sample.
pub fn normal_from_uniform(u: f64) -> f64 {
    let u = u.clamp(1e-12, 1.0 - 1e-12);
    std::f64::consts::SQRT_2 * erf_inv(2.0 * u - 1.0)
}

/// Divides by the smallest cost so the best sample lands at 1. A nonpositive
/// floor is first shifted to 1; the flag reports that.
pub fn normalize_costs(costs: &mut [f64]) -> bool {
    let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return false;
    }
    if min <= 0.0 {
        let shift = 1.0 - min;
        for c in costs.iter_mut() {
            *c += shift;
        }
        return true;
    }
    for c in costs.iter_mut() {
        *c /= min;
    }
    false
}

/// Exponentiated-cost weights with the minimum subtracted before the
/// exponential; adding a constant to every cost changes nothing.
pub fn mppi_weights(costs: &[f64], beta: f64) -> Result<Vec<f64>> {
    if costs.is_empty() {
        return Err(Error::InvalidArgument("no costs to weigh".into()));
    }
    if costs.iter().any(|c| c.is_nan()) {
        return Err(Error::NonFinite("cost".into()));
    }
    let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(Error::DegenerateDistribution(
            "all rollout costs are infinite".into(),
        ));
    }
    let mut w: Vec<f64> = costs.iter().map(|c| (-(c - min) / beta).exp()).collect();
    let z: f64 = w.iter().sum();
    for wi in &mut w {
        *wi /= z;
    }
    Ok(w)
}

/// Mean relaxation toward the weighted sample average; sigmas untouched.
pub fn mppi_update(
    policy: &mut GaussianPolicy,
    actions: &Array3<f64>,
    weights: &[f64],
    gamma: f64,
) {
    let (n, h, du) = actions.dim();
    debug_assert_eq!(n, weights.len());
    debug_assert_eq!((h, du), policy.means.dim());
    for hh in 0..h {
        for m in 0..du {
            let avg: f64 = (0..n).map(|s| weights[s] * actions[(s, hh, m)]).sum();
            let old = policy.means[(hh, m)];
            policy.means[(hh, m)] = (1.0 - gamma) * old + gamma * avg;
        }
    }
}

/// Propagates every action sequence from x0 and scores it.
pub fn rollout(world: &dyn World, x0: &[f64], actions: Array3<f64>) -> RolloutBatch {
    let (n, h, _du) = actions.dim();
    let dx = world.state_dim();
    let mut states = Array3::zeros((n, h + 1, dx));
    let mut costs = vec![0.0; n];
    let mut xn = vec![0.0; dx];
    for s in 0..n {
        states
            .index_axis_mut(Axis(0), s)
            .row_mut(0)
            .assign(&ndarray::ArrayView1::from(x0));
        for hh in 0..h {
            let (x, u);
            {
                let srow = states.index_axis(Axis(0), s);
                x = srow.row(hh).to_owned();
                u = actions.index_axis(Axis(0), s).row(hh).to_owned();
            }
            world.dynamics(x.as_slice().unwrap(), u.as_slice().unwrap(), &mut xn);
            states
                .index_axis_mut(Axis(0), s)
                .row_mut(hh + 1)
                .assign(&ndarray::ArrayView1::from(&xn[..]));
        }
        let srow = states.index_axis(Axis(0), s);
        let arow = actions.index_axis(Axis(0), s);
        costs[s] = trajectory_cost(
            world,
            srow.as_slice().expect("states are standard layout"),
            arow.as_slice().expect("actions are standard layout"),
            h,
        );
    }
    RolloutBatch {
        actions,
        states,
        costs,
    }
}

/// Replaces sample 0 with the all-zero action sequence and rescores it, so
/// halting is always on the menu.
pub fn inject_zero_action(batch: &mut RolloutBatch, world: &dyn World, x0: &[f64]) {
    let (_, h, _) = batch.actions.dim();
    batch.actions.index_axis_mut(Axis(0), 0).fill(0.0);
    let dx = world.state_dim();
    let mut x = x0.to_vec();
    let mut xn = vec![0.0; dx];
    let zero = vec![0.0; world.action_dim()];
    let mut srow = batch.states.index_axis_mut(Axis(0), 0);
    srow.row_mut(0).assign(&ndarray::ArrayView1::from(x0));
    for hh in 0..h {
        world.dynamics(&x, &zero, &mut xn);
        srow.row_mut(hh + 1).assign(&ndarray::ArrayView1::from(&xn[..]));
        x.copy_from_slice(&xn);
    }
    let srow = batch.states.index_axis(Axis(0), 0);
    let arow = batch.actions.index_axis(Axis(0), 0);
    batch.costs[0] = trajectory_cost(
        world,
        srow.as_slice().expect("states are standard layout"),
        arow.as_slice().expect("actions are standard layout"),
        h,
    );
}

/// Gaussian action proposals: sample 0 is the zero sequence, the rest draw
/// mean + sigma * z per slot, clipped to the action bound.
pub fn draw_gaussian_actions(
    policy: &GaussianPolicy,
    n: usize,
    u_max: f64,
    streams: &mut [ChaCha8Rng],
) -> Array3<f64> {
    let h = policy.horizon();
    let du = policy.action_dim();
    let mut actions = Array3::zeros((n, h, du));
    for s in 1..n {
        for hh in 0..h {
            for m in 0..du {
                let z = normal_from_uniform(streams[s].gen::<f64>());
                let v = policy.means[(hh, m)] + policy.sigmas[(hh, m)] * z;
                actions[(s, hh, m)] = v.clamp(-u_max, u_max);
            }
        }
    }
    actions
}

/// Largest alpha in [0, 1] with (x, alpha u) feasible: full step if allowed,
/// otherwise bisection against the feasibility boundary to 1e-4.
pub fn projection_scale(world: &dyn World, x: &[f64], u: &[f64]) -> f64 {
    if world.feasible(x, u) {
        return 1.0;
    }
    let zero = vec![0.0; u.len()];
    if !world.feasible(x, &zero) {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut scaled = vec![0.0; u.len()];
    for _ in 0..30 {
        if hi - lo <= 1e-4 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        for (sv, &uv) in scaled.iter_mut().zip(u) {
            *sv = mid * uv;
        }
        if world.feasible(x, &scaled) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn weighted_step(
    world: &dyn World,
    policy: &mut GaussianPolicy,
    cfg: &ControllerConfig,
    batch: RolloutBatch,
    mut diag: StepDiag,
) -> Result<StepOutcome> {
    diag.best_cost = batch.costs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut normalized = batch.costs.clone();
    diag.cost_shifted = normalize_costs(&mut normalized);
    let du = world.action_dim();
    let action = match mppi_weights(&normalized, cfg.beta) {
        Ok(weights) => {
            mppi_update(policy, &batch.actions, &weights, cfg.gamma);
            policy.means.row(0).to_vec()
        }
        Err(Error::DegenerateDistribution(_)) => {
            diag.degenerate = true;
            vec![0.0; du]
        }
        Err(e) => return Err(e),
    };
    policy.shift();
    Ok(StepOutcome {
        action,
        batch,
        diag,
    })
}

/// One control step of the plain strategy.
pub fn step_mppi(
    world: &dyn World,
    x0: &[f64],
    policy: &mut GaussianPolicy,
    cfg: &ControllerConfig,
    rng: &mut impl Rng,
) -> Result<StepOutcome> {
    cfg.validate()?;
    check_dims(world, x0, policy, cfg)?;
    let mut streams = sample_streams(rng, cfg.samples);
    let actions = draw_gaussian_actions(policy, cfg.samples, world.u_max(), &mut streams);
    let batch = rollout(world, x0, actions);
    weighted_step(world, policy, cfg, batch, StepDiag::default())
}

/// One control step with per-sample line-search projection: each action is
/// scaled onto the feasible set at the state its own trajectory reached.
pub fn step_proj_mppi(
    world: &dyn World,
    x0: &[f64],
    policy: &mut GaussianPolicy,
    cfg: &ControllerConfig,
    rng: &mut impl Rng,
) -> Result<StepOutcome> {
    cfg.validate()?;
    check_dims(world, x0, policy, cfg)?;
    let mut streams = sample_streams(rng, cfg.samples);
    let mut actions = draw_gaussian_actions(policy, cfg.samples, world.u_max(), &mut streams);
    let dx = world.state_dim();
    let du = world.action_dim();
    let mut xn = vec![0.0; dx];
    for s in 1..cfg.samples {
        let mut x = x0.to_vec();
        for hh in 0..cfg.horizon {
            let mut u: Vec<f64> = (0..du).map(|m| actions[(s, hh, m)]).collect();
            let alpha = projection_scale(world, &x, &u);
            for (m, uv) in u.iter_mut().enumerate() {
                *uv *= alpha;
                actions[(s, hh, m)] = *uv;
            }
            world.dynamics(&x, &u, &mut xn);
            x.copy_from_slice(&xn);
        }
    }
    let batch = rollout(world, x0, actions);
    weighted_step(world, policy, cfg, batch, StepDiag::default())
}

/// One control step of the product strategy: at every horizon slot the
/// feasibility model is scaled by that slot's Gaussian, and each sample draws
/// its action conditioned on its own predicted state.
pub fn step_tt_poe_mppi(
    world: &dyn World,
    x0: &[f64],
    policy: &mut GaussianPolicy,
    feas: &TtDistribution,
    cfg: &ControllerConfig,
    rng: &mut impl Rng,
) -> Result<StepOutcome> {
    cfg.validate()?;
    check_dims(world, x0, policy, cfg)?;
    let dx = world.state_dim();
    let du = world.action_dim();
    if feas.d() != dx + du {
        return Err(Error::InvalidShape(format!(
            "feasibility model over {} dims, world needs {} + {}",
            feas.d(),
            dx,
            du
        )));
    }
    let mut streams = sample_streams(rng, cfg.samples);
    let n = cfg.samples;
    let h = cfg.horizon;
    let mut actions = Array3::zeros((n, h, du));
    let mut states = Array3::zeros((n, h + 1, dx));
    for s in 0..n {
        states
            .index_axis_mut(Axis(0), s)
            .row_mut(0)
            .assign(&ndarray::ArrayView1::from(x0));
    }
    let mut diag = StepDiag::default();
    let mut ubuf = vec![0.0; du];
    let mut xbuf = vec![0.0; dx];
    let mut xn = vec![0.0; dx];
    for hh in 0..h {
        let g = DiagonalGaussian::new(
            policy.means.row(hh).to_vec(),
            policy.sigmas.row(hh).to_vec(),
        )?;
        let sampler = ProductActionSampler::new(feas, dx, &g)?;
        for s in 0..n {
            {
                let srow = states.index_axis(Axis(0), s);
                xbuf.copy_from_slice(srow.row(hh).as_slice().unwrap());
            }
            if s == 0 {
                ubuf.fill(0.0);
            } else {
                match sampler.sample(&xbuf, &mut streams[s], &mut ubuf)? {
                    ProductSampleOutcome::Ok => {
                        diag.sampled_pairs += 1;
                        if !world.feasible(&xbuf, &ubuf) {
                            diag.predicate_violations += 1;
                        }
                    }
                    ProductSampleOutcome::EmptyAtState => {
                        diag.empty_product_samples += 1;
                    }
                    ProductSampleOutcome::Fallback(k) => {
                        diag.fallback_dims += k;
                        diag.sampled_pairs += 1;
                        if !world.feasible(&xbuf, &ubuf) {
                            diag.predicate_violations += 1;
                        }
                    }
                }
            }
            for m in 0..du {
                actions[(s, hh, m)] = ubuf[m];
            }
            world.dynamics(&xbuf, &ubuf, &mut xn);
            states
                .index_axis_mut(Axis(0), s)
                .row_mut(hh + 1)
                .assign(&ndarray::ArrayView1::from(&xn[..]));
        }
    }
    let mut costs = vec![0.0; n];
    for s in 0..n {
        let srow = states.index_axis(Axis(0), s);
        let arow = actions.index_axis(Axis(0), s);
        costs[s] = trajectory_cost(
            world,
            srow.as_slice().expect("states are standard layout"),
            arow.as_slice().expect("actions are standard layout"),
            h,
        );
    }
    let batch = RolloutBatch {
        actions,
        states,
        costs,
    };
    weighted_step(world, policy, cfg, batch, diag)
}

fn check_dims(
    world: &dyn World,
    x0: &[f64],
    policy: &GaussianPolicy,
    cfg: &ControllerConfig,
) -> Result<()> {
    if x0.len() != world.state_dim() {
        return Err(Error::InvalidShape(format!(
            "state has {} dims, world wants {}",
            x0.len(),
            world.state_dim()
        )));
    }
    if policy.action_dim() != world.action_dim() || policy.horizon() != cfg.horizon {
        return Err(Error::InvalidShape(format!(
            "policy is {}x{}, config wants {}x{}",
            policy.horizon(),
            policy.action_dim(),
            cfg.horizon,
            world.action_dim()
        )));
    }
    Ok(())
}

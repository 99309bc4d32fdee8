//! Experiment driver. Turns a `RunConfig` into worlds, learned feasibility
//! models, and paired closed-loop trials, then scores and summarizes them.
//!
//! Pairing: trial t uses the scenario stream mix(seed, t) for its start,
//! goal, and world randomness, and the controller stream mix(seed, t, n) for
//! sampling noise at sample count n. Both are independent of the method, so
//! every method sees identical tasks and identical noise budgets.

pub mod config;
pub mod emit;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::{from_indicator, TtDistribution};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridDim};
use crate::seeds;
use crate::smpc::{self, ControllerConfig, GaussianPolicy, Method};
use crate::worlds::{
    dist2, score_history, OnlineWorld, PnGridWorld, Rect, SinusoidWorld, SphereWorld, World,
};

pub use config::{LearnSection, RunConfig, WorldKind};

pub enum Bench {
    Pngrid(PnGridWorld),
    Sphere(SphereWorld),
    Sinusoid(SinusoidWorld),
    Online(OnlineWorld),
}

impl Bench {
    pub fn as_world(&self) -> &dyn World {
        match self {
            Bench::Pngrid(w) => w,
            Bench::Sphere(w) => w,
            Bench::Sinusoid(w) => w,
            Bench::Online(w) => w,
        }
    }

    fn online_mut(&mut self) -> Option<&mut OnlineWorld> {
        match self {
            Bench::Online(w) => Some(w),
            _ => None,
        }
    }
}

fn configured_rects(cfg: &RunConfig) -> Vec<Rect> {
    match &cfg.world.obstacles {
        Some(list) => list
            .iter()
            .map(|r| Rect::new(r.center, r.half).expect("validated config"))
            .collect(),
        None => PnGridWorld::standard_rects(),
    }
}

/// World instance before any per-trial randomness: configured geometry,
/// placeholder goal.
pub fn base_world(cfg: &RunConfig) -> Bench {
    let w = &cfg.world;
    let mut bench = match w.kind {
        WorldKind::Pngrid => Bench::Pngrid(PnGridWorld::new(configured_rects(cfg), [0.0, 0.0])),
        WorldKind::Sphere => Bench::Sphere(SphereWorld::new([0.0, 0.0, 0.175])),
        WorldKind::Sinusoid => Bench::Sinusoid(SinusoidWorld::new([0.0, 0.0])),
        WorldKind::Online => Bench::Online(OnlineWorld::new(Vec::new(), [0.0, 0.0])),
    };
    match &mut bench {
        Bench::Pngrid(pw) => {
            if let Some(v) = w.dt {
                pw.dt = v;
            }
            if let Some(v) = w.u_max {
                pw.u_max = v;
            }
            if let Some(v) = w.t_succ {
                pw.t_succ = v;
            }
            if let Some(v) = w.c_succ {
                pw.c_succ = v;
            }
            if let Some(b) = w.box_half {
                pw.bounds = vec![(-b, b); 2];
            }
        }
        Bench::Sphere(sw) => {
            if let Some(v) = w.dt {
                sw.dt = v;
            }
            if let Some(v) = w.u_max {
                sw.u_max = v;
            }
            if let Some(v) = w.t_succ {
                sw.t_succ = v;
            }
            if let Some(v) = w.c_succ {
                sw.c_succ = v;
            }
        }
        Bench::Sinusoid(sw) => {
            if let Some(v) = w.dt {
                sw.dt = v;
            }
            if let Some(v) = w.u_max {
                sw.u_max = v;
            }
            if let Some(v) = w.t_succ {
                sw.t_succ = v;
            }
            if let Some(v) = w.c_succ {
                sw.c_succ = v;
            }
        }
        Bench::Online(ow) => {
            if let Some(v) = w.dt {
                ow.dt = v;
            }
            if let Some(v) = w.u_max {
                ow.u_max = v;
            }
            if let Some(v) = w.t_succ {
                ow.t_succ = v;
            }
            if let Some(v) = w.c_succ {
                ow.c_succ = v;
            }
            if let Some(b) = w.box_half {
                ow.bounds = vec![(-b, b); 2];
            }
        }
    }
    bench
}

pub struct Scenario {
    pub start: Vec<f64>,
    pub bench: Bench,
}

fn free_point(w: &dyn World, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let bounds = w.state_bounds().to_vec();
    for _ in 0..100_000 {
        let p: Vec<f64> = bounds
            .iter()
            .map(|&(lo, hi)| rng.gen_range(lo..hi))
            .collect();
        if !w.collision(&p) {
            return p;
        }
    }
    unreachable!("free space never this small");
}

fn unit3(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        if n2 > 1e-4 && n2 <= 1.0 {
            let n = n2.sqrt();
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Start, goal, and world randomness for one trial. Separations keep the
/// tasks nontrivial: half a meter in the planar worlds, a quarter of the
/// shell diameter on the sphere.
pub fn make_scenario(cfg: &RunConfig, trial: usize, master_seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(&[master_seed, trial as u64]));
    let mut bench = base_world(cfg);
    let start;
    match &mut bench {
        Bench::Pngrid(w) => {
            start = free_point(w, &mut rng);
            loop {
                let g = free_point(w, &mut rng);
                if dist2(&g, &start) >= 0.25 {
                    w.set_goal(&g);
                    break;
                }
            }
        }
        Bench::Sphere(w) => {
            let r = 0.5 * (SphereWorld::R_INNER + SphereWorld::R_OUTER);
            let s = unit3(&mut rng);
            start = vec![r * s[0], r * s[1], r * s[2]];
            loop {
                let g = unit3(&mut rng);
                let g = [r * g[0], r * g[1], r * g[2]];
                if dist2(&g, &start) >= 0.25 * 0.25 {
                    w.set_goal(&g);
                    break;
                }
            }
        }
        Bench::Sinusoid(w) => {
            let ys = rng.gen_range(-0.95..0.95);
            start = vec![ys, SinusoidWorld::surface(ys)];
            loop {
                let yg = rng.gen_range(-0.95..0.95);
                if (yg - ys).abs() >= 0.5 {
                    w.set_goal(&[yg, SinusoidWorld::surface(yg)]);
                    break;
                }
            }
        }
        Bench::Online(w) => {
            let count = cfg.world.disc_count.unwrap_or(3);
            let discs = OnlineWorld::random_discs(&mut rng, count);
            start = vec![-1.0, rng.gen_range(-0.75..0.75)];
            let goal = [1.0, rng.gen_range(-0.75..0.75)];
            let mut fresh = OnlineWorld::new(discs, goal);
            fresh.dt = w.dt;
            fresh.u_max = w.u_max;
            fresh.t_succ = w.t_succ;
            fresh.c_succ = w.c_succ;
            fresh.bounds = w.bounds.clone();
            *w = fresh;
        }
    }
    Scenario { start, bench }
}

/// Grid the feasibility model lives on: state dimensions span the world box,
/// action dimensions span the action bound.
pub fn feasibility_grid(w: &dyn World, learn: &LearnSection) -> Result<Grid> {
    let mut dims = Vec::with_capacity(w.state_dim() + w.action_dim());
    for (k, &(lo, hi)) in w.state_bounds().iter().enumerate() {
        dims.push(GridDim::new(lo, hi, learn.state_nodes[k])?);
    }
    let um = w.u_max();
    for &n in &learn.action_nodes {
        dims.push(GridDim::new(-um, um, n)?);
    }
    Grid::new(dims)
}

pub struct BuiltModel {
    pub dist: TtDistribution,
    pub seconds: f64,
}

/// Evaluates the world's exact one-step feasibility predicate on the coarse
/// grid, compresses it, and refines to the final resolution.
pub fn build_feasibility(w: &dyn World, learn: &LearnSection) -> Result<BuiltModel> {
    let grid = feasibility_grid(w, learn)?;
    let dx = w.state_dim();
    let refine: Vec<usize> = std::iter::repeat(learn.state_refine)
        .take(dx)
        .chain(std::iter::repeat(learn.action_refine).take(w.action_dim()))
        .collect();
    let t0 = Instant::now();
    let dist = from_indicator(
        &grid,
        |coords| w.feasible(&coords[..dx], &coords[dx..]),
        learn.eps,
        learn.max_rank,
        &refine,
        learn.max_cells,
    )?;
    Ok(BuiltModel {
        dist,
        seconds: t0.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub method: Method,
    pub samples: usize,
    pub trial: usize,
    pub success: bool,
    pub steps_to_reach: Option<usize>,
    pub executed_cost: f64,
    pub steps_run: usize,
    pub predicate_violations: usize,
    pub sampled_pairs: usize,
    pub empty_product_samples: usize,
    pub degenerate_steps: usize,
    pub model_builds: usize,
    pub max_rebuild_seconds: f64,
    pub wall_seconds: f64,
}

/// Closed-loop trial: plan, execute the first action, repeat until the goal
/// or the step budget. In the online world the known set is refreshed after
/// every move and the feasibility model is rebuilt whenever it grows.
pub fn run_trial(
    scenario: &mut Scenario,
    method: Method,
    cfg: &RunConfig,
    samples: usize,
    static_model: Option<&TtDistribution>,
    controller_seed: u64,
) -> Result<TrialRecord> {
    let t0 = Instant::now();
    let ccfg = ControllerConfig {
        horizon: cfg.controller.horizon,
        samples,
        beta: cfg.controller.beta,
        gamma: cfg.controller.gamma,
    };
    let (dx, du, budget, r2) = {
        let w = scenario.bench.as_world();
        let r = w.reach_radius();
        (w.state_dim(), w.action_dim(), w.t_succ(), r * r)
    };
    let mut policy = GaussianPolicy::zeros(ccfg.horizon, du, cfg.sigma())?;
    let mut rng = ChaCha8Rng::seed_from_u64(controller_seed);

    let needs_model = method == Method::TtPoeMppi;
    let mut local_model: Option<BuiltModel> = None;
    let mut model_builds = 0usize;
    let mut max_rebuild = 0.0f64;
    let start = scenario.start.clone();
    if let Some(w) = scenario.bench.online_mut() {
        w.reveal(&start);
    }
    if needs_model && static_model.is_none() {
        let built = build_feasibility(scenario.bench.as_world(), &cfg.learn)?;
        max_rebuild = max_rebuild.max(built.seconds);
        model_builds += 1;
        local_model = Some(built);
    }

    let mut states = start.clone();
    let mut actions: Vec<f64> = Vec::new();
    let mut x = start;
    let mut diag_violations = 0usize;
    let mut diag_pairs = 0usize;
    let mut diag_empty = 0usize;
    let mut diag_degenerate = 0usize;
    let mut steps_run = 0usize;

    for _ in 0..budget {
        {
            let w = scenario.bench.as_world();
            if dist2(&x, w.goal()) < r2 {
                break;
            }
        }
        let out = {
            let w = scenario.bench.as_world();
            match method {
                Method::Mppi => smpc::step_mppi(w, &x, &mut policy, &ccfg, &mut rng)?,
                Method::ProjMppi => smpc::step_proj_mppi(w, &x, &mut policy, &ccfg, &mut rng)?,
                Method::TtPoeMppi => {
                    let model = static_model
                        .or(local_model.as_ref().map(|m| &m.dist))
                        .expect("model present for the product method");
                    smpc::step_tt_poe_mppi(w, &x, &mut policy, model, &ccfg, &mut rng)?
                }
            }
        };
        diag_violations += out.diag.predicate_violations;
        diag_pairs += out.diag.sampled_pairs;
        diag_empty += out.diag.empty_product_samples;
        diag_degenerate += out.diag.degenerate as usize;

        let mut xn = vec![0.0; dx];
        scenario.bench.as_world().dynamics(&x, &out.action, &mut xn);
        actions.extend_from_slice(&out.action);
        states.extend_from_slice(&xn);
        x = xn;
        steps_run += 1;

        let grew = scenario
            .bench
            .online_mut()
            .map(|w| w.reveal(&x))
            .unwrap_or(false);
        if grew && needs_model && static_model.is_none() {
            let built = build_feasibility(scenario.bench.as_world(), &cfg.learn)?;
            max_rebuild = max_rebuild.max(built.seconds);
            model_builds += 1;
            local_model = Some(built);
        }
    }

    let score = score_history(scenario.bench.as_world(), &states, &actions);
    Ok(TrialRecord {
        method,
        samples,
        trial: 0,
        success: score.success,
        steps_to_reach: score.steps_to_reach,
        executed_cost: score.executed_cost,
        steps_run,
        predicate_violations: diag_violations,
        sampled_pairs: diag_pairs,
        empty_product_samples: diag_empty,
        degenerate_steps: diag_degenerate,
        model_builds,
        max_rebuild_seconds: max_rebuild,
        wall_seconds: t0.elapsed().as_secs_f64(),
    })
}

pub struct ExperimentResult {
    pub config: RunConfig,
    pub records: Vec<TrialRecord>,
    /// Build time of the shared model, when one was built.
    pub model_seconds: Option<f64>,
}

/// Full sweep: every (sample count, method, trial) cell, with paired
/// scenarios and controller noise across methods.
pub fn run_experiment(cfg: &RunConfig, preloaded: Option<TtDistribution>) -> Result<ExperimentResult> {
    cfg.validate()?;
    let methods: Vec<Method> = cfg
        .experiment
        .methods
        .iter()
        .map(|m| Method::parse(m))
        .collect::<Result<_>>()?;
    let master = cfg.experiment.seed;

    let needs_static = methods.contains(&Method::TtPoeMppi) && cfg.world.kind != WorldKind::Online;
    let mut model_seconds = None;
    let static_model: Option<TtDistribution> = if let Some(m) = preloaded {
        check_model_matches(cfg, &m)?;
        Some(m)
    } else if needs_static {
        let built = build_feasibility(base_world(cfg).as_world(), &cfg.learn)?;
        model_seconds = Some(built.seconds);
        Some(built.dist)
    } else {
        None
    };

    let mut records = Vec::new();
    for &n in &cfg.experiment.samples {
        for &method in &methods {
            for trial in 0..cfg.experiment.trials {
                let mut scenario = make_scenario(cfg, trial, master);
                let controller_seed = seeds::mix(&[master, trial as u64, n as u64]);
                let model = if method == Method::TtPoeMppi && cfg.world.kind != WorldKind::Online
                {
                    static_model.as_ref()
                } else {
                    None
                };
                let mut rec = run_trial(&mut scenario, method, cfg, n, model, controller_seed)?;
                rec.trial = trial;
                records.push(rec);
            }
        }
    }
    Ok(ExperimentResult {
        config: cfg.clone(),
        records,
        model_seconds,
    })
}

/// A preloaded model must live on the grid the config describes.
fn check_model_matches(cfg: &RunConfig, model: &TtDistribution) -> Result<()> {
    let expected = feasibility_grid(base_world(cfg).as_world(), &cfg.learn)?.refined(
        &std::iter::repeat(cfg.learn.state_refine)
            .take(cfg.world.kind.state_dim())
            .chain(std::iter::repeat(cfg.learn.action_refine).take(cfg.world.kind.action_dim()))
            .collect::<Vec<_>>(),
    )?;
    let got = model.grid();
    if got.d() != expected.d() {
        return Err(Error::Config(format!(
            "model has {} dims, config wants {}",
            got.d(),
            expected.d()
        )));
    }
    for k in 0..got.d() {
        let (a, b) = (got.dim(k), expected.dim(k));
        if a.n != b.n || (a.lo - b.lo).abs() > 1e-9 || (a.hi - b.hi).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "model grid dim {k} is [{}, {}] x {}, config wants [{}, {}] x {}",
                a.lo, a.hi, a.n, b.lo, b.hi, b.n
            )));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub samples: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Mean log(steps / baseline steps) over trials where this method and
    /// the plain baseline both succeeded.
    pub mean_log_steps: Option<f64>,
    pub mean_log_cost: Option<f64>,
    pub pairs: usize,
    /// Pooled sampled-action predicate violation fraction.
    pub violation_fraction: f64,
    pub mean_wall_seconds: f64,
    pub max_rebuild_seconds: f64,
}

/// Per (method, sample count) aggregation. Success rates divide by all
/// trials; normalized step and cost ratios use only trials where both the
/// method and the plain baseline at the same sample count succeeded.
pub fn summarize(records: &[TrialRecord]) -> Vec<MethodSummary> {
    let mut cells: Vec<(Method, usize)> = Vec::new();
    for r in records {
        if !cells.contains(&(r.method, r.samples)) {
            cells.push((r.method, r.samples));
        }
    }
    let mut out = Vec::new();
    for (method, n) in cells {
        let rows: Vec<&TrialRecord> = records
            .iter()
            .filter(|r| r.method == method && r.samples == n)
            .collect();
        let base: Vec<&TrialRecord> = records
            .iter()
            .filter(|r| r.method == Method::Mppi && r.samples == n)
            .collect();
        let successes = rows.iter().filter(|r| r.success).count();
        let mut log_steps = Vec::new();
        let mut log_cost = Vec::new();
        for r in rows.iter().filter(|r| r.success) {
            let Some(b) = base.iter().find(|b| b.trial == r.trial && b.success) else {
                continue;
            };
            if let (Some(sm), Some(sb)) = (r.steps_to_reach, b.steps_to_reach) {
                if sm > 0 && sb > 0 {
                    log_steps.push((sm as f64 / sb as f64).ln());
                }
            }
            if r.executed_cost > 0.0 && b.executed_cost > 0.0 {
                log_cost.push((r.executed_cost / b.executed_cost).ln());
            }
        }
        let mean = |v: &[f64]| {
            if v.is_empty() {
                None
            } else {
                Some(v.iter().sum::<f64>() / v.len() as f64)
            }
        };
        let pairs = log_steps.len();
        let tot_pairs: usize = rows.iter().map(|r| r.sampled_pairs).sum();
        let tot_viol: usize = rows.iter().map(|r| r.predicate_violations).sum();
        out.push(MethodSummary {
            method,
            samples: n,
            trials: rows.len(),
            successes,
            success_rate: successes as f64 / rows.len().max(1) as f64,
            mean_log_steps: mean(&log_steps),
            mean_log_cost: mean(&log_cost),
            pairs,
            violation_fraction: if tot_pairs == 0 {
                0.0
            } else {
                tot_viol as f64 / tot_pairs as f64
            },
            mean_wall_seconds: rows.iter().map(|r| r.wall_seconds).sum::<f64>()
                / rows.len().max(1) as f64,
            max_rebuild_seconds: rows
                .iter()
                .map(|r| r.max_rebuild_seconds)
                .fold(0.0, f64::max),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> RunConfig {
        let mut cfg = RunConfig::default_for(WorldKind::Pngrid);
        cfg.learn.state_nodes = vec![40, 40];
        cfg.learn.action_nodes = vec![10, 10];
        cfg.learn.action_refine = 4;
        cfg.experiment.trials = 2;
        cfg.experiment.samples = vec![8];
        cfg.experiment.methods = vec!["mppi".into()];
        cfg
    }

    #[test]
    fn scenarios_are_reproducible_and_separated() {
        let cfg = RunConfig::default_for(WorldKind::Pngrid);
        let a = make_scenario(&cfg, 3, 42);
        let b = make_scenario(&cfg, 3, 42);
        assert_eq!(a.start, b.start);
        assert_eq!(a.bench.as_world().goal(), b.bench.as_world().goal());
        let c = make_scenario(&cfg, 4, 42);
        assert_ne!(a.start, c.start);
        for trial in 0..20 {
            let s = make_scenario(&cfg, trial, 7);
            let w = s.bench.as_world();
            assert!(!w.collision(&s.start));
            assert!(!w.collision(w.goal()));
            assert!(dist2(&s.start, w.goal()) >= 0.25);
        }
    }

    #[test]
    fn sphere_and_sinusoid_scenarios_sit_on_the_manifold() {
        let cfg = RunConfig::default_for(WorldKind::Sphere);
        for trial in 0..10 {
            let s = make_scenario(&cfg, trial, 1);
            let w = s.bench.as_world();
            assert!(!w.collision(&s.start), "start off shell at trial {trial}");
            assert!(!w.collision(w.goal()));
        }
        let cfg = RunConfig::default_for(WorldKind::Sinusoid);
        for trial in 0..10 {
            let s = make_scenario(&cfg, trial, 1);
            let w = s.bench.as_world();
            assert!(!w.collision(&s.start));
            assert!((s.start[1] - SinusoidWorld::surface(s.start[0])).abs() < 1e-12);
            assert!((w.goal()[0] - s.start[0]).abs() >= 0.5);
        }
    }

    #[test]
    fn online_scenarios_leave_the_edges_clear() {
        let mut cfg = RunConfig::default_for(WorldKind::Online);
        cfg.world.disc_count = Some(3);
        for trial in 0..10 {
            let s = make_scenario(&cfg, trial, 5);
            let Bench::Online(w) = &s.bench else {
                panic!("wrong bench kind")
            };
            assert!(!w.collision_executed(&s.start));
            assert!(!w.collision_executed(w.goal()));
            assert_eq!(w.known_count(), 0, "knowledge starts empty");
        }
    }

    #[test]
    fn world_overrides_reach_the_instance() {
        let mut cfg = RunConfig::default_for(WorldKind::Pngrid);
        cfg.world.dt = Some(0.2);
        cfg.world.u_max = Some(0.5);
        cfg.world.t_succ = Some(33);
        cfg.world.c_succ = Some(123.0);
        cfg.world.box_half = Some(2.0);
        let s = make_scenario(&cfg, 0, 0);
        let w = s.bench.as_world();
        assert_eq!(w.dt(), 0.2);
        assert_eq!(w.u_max(), 0.5);
        assert_eq!(w.t_succ(), 33);
        assert_eq!(w.c_succ(), 123.0);
        assert_eq!(w.state_bounds()[0], (-2.0, 2.0));
        assert!(!w.feasible(&[0.5, 0.5], &[0.8, 0.0]), "tighter action bound");

        let mut cfg = RunConfig::default_for(WorldKind::Online);
        cfg.world.t_succ = Some(17);
        let s = make_scenario(&cfg, 0, 0);
        assert_eq!(s.bench.as_world().t_succ(), 17);
    }

    #[test]
    fn feasibility_grid_spans_box_and_action_bound() {
        let cfg = tiny_cfg();
        let bench = base_world(&cfg);
        let g = feasibility_grid(bench.as_world(), &cfg.learn).unwrap();
        assert_eq!(g.d(), 4);
        assert_eq!(g.dim(0).lo, -1.25);
        assert_eq!(g.dim(2).lo, -1.0);
        assert_eq!(g.dim(2).hi, 1.0);
        assert_eq!(g.dim(0).n, 40);
        assert_eq!(g.dim(2).n, 10);
    }

    #[test]
    fn mppi_experiment_is_deterministic() {
        let cfg = tiny_cfg();
        let a = run_experiment(&cfg, None).unwrap();
        let b = run_experiment(&cfg, None).unwrap();
        let strip = |r: &TrialRecord| {
            let mut r = r.clone();
            r.wall_seconds = 0.0;
            r.max_rebuild_seconds = 0.0;
            r
        };
        let av: Vec<_> = a.records.iter().map(strip).collect();
        let bv: Vec<_> = b.records.iter().map(strip).collect();
        assert_eq!(av, bv);
        assert_eq!(a.records.len(), 2);
    }

    #[test]
    fn summaries_pool_and_pair_correctly() {
        let rec = |method, trial, success, steps: Option<usize>, cost| TrialRecord {
            method,
            samples: 8,
            trial,
            success,
            steps_to_reach: steps,
            executed_cost: cost,
            steps_run: steps.unwrap_or(100),
            predicate_violations: if method == Method::TtPoeMppi { 1 } else { 0 },
            sampled_pairs: if method == Method::TtPoeMppi { 100 } else { 0 },
            empty_product_samples: 0,
            degenerate_steps: 0,
            model_builds: 0,
            max_rebuild_seconds: 0.0,
            wall_seconds: 1.0,
        };
        let records = vec![
            rec(Method::Mppi, 0, true, Some(20), 10.0),
            rec(Method::Mppi, 1, false, None, 99.0),
            rec(Method::TtPoeMppi, 0, true, Some(10), 5.0),
            rec(Method::TtPoeMppi, 1, true, Some(30), 2.0),
        ];
        let sums = summarize(&records);
        let tt = sums
            .iter()
            .find(|s| s.method == Method::TtPoeMppi)
            .unwrap();
        assert_eq!(tt.successes, 2);
        assert_eq!(tt.pairs, 1, "trial 1 lacks a successful baseline");
        let expect = (10.0f64 / 20.0).ln();
        assert!((tt.mean_log_steps.unwrap() - expect).abs() < 1e-12);
        let expect = (5.0f64 / 10.0).ln();
        assert!((tt.mean_log_cost.unwrap() - expect).abs() < 1e-12);
        assert!((tt.violation_fraction - 0.01).abs() < 1e-12, "pooled 2/200");
        let base = sums.iter().find(|s| s.method == Method::Mppi).unwrap();
        assert_eq!(base.pairs, 1);
        assert_eq!(base.mean_log_steps, Some(0.0));
        assert!((base.success_rate - 0.5).abs() < 1e-12);
    }

    #[test]
    fn preloaded_model_grid_is_checked() {
        let mut cfg = tiny_cfg();
        cfg.learn.state_nodes = vec![10, 10];
        cfg.learn.action_nodes = vec![4, 4];
        cfg.learn.state_refine = 1;
        cfg.learn.action_refine = 1;
        let built = build_feasibility(base_world(&cfg).as_world(), &cfg.learn).unwrap();
        assert!(check_model_matches(&cfg, &built.dist).is_ok());
        cfg.learn.action_nodes = vec![5, 5];
        assert!(check_model_matches(&cfg, &built.dist).is_err());
    }
}

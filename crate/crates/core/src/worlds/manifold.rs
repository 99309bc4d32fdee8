//! Manifold-following tasks: the agent must stay on a thin curved set while
//! steering to a goal on it. Learning and planning shrink the set by a 1 cm
//! margin; the cost function's collision check uses the full set.

use super::{in_box, CostWeights, World};

pub const MANIFOLD_MARGIN: f64 = 0.01;

const MANIFOLD_WEIGHTS: CostWeights = CostWeights {
    dist: 100.0,
    coll: 1e4,
    ctrl: 1e-3,
    term: 100.0,
};

/// Spherical shell 0.15 <= |x| <= 0.20 in 3-D.
pub struct SphereWorld {
    bounds: Vec<(f64, f64)>,
    goal: Vec<f64>,
    pub dt: f64,
    pub u_max: f64,
    pub t_succ: usize,
    pub c_succ: f64,
}

impl SphereWorld {
    pub const R_INNER: f64 = 0.15;
    pub const R_OUTER: f64 = 0.20;

    pub fn new(goal: [f64; 3]) -> Self {
        SphereWorld {
            bounds: vec![(-0.25, 0.25); 3],
            goal: goal.to_vec(),
            dt: 0.1,
            u_max: 1.0,
            t_succ: 400,
            c_succ: 1e6,
        }
    }

    pub fn set_goal(&mut self, goal: &[f64]) {
        self.goal = goal.to_vec();
    }

    pub fn on_shell(x: &[f64], margin: f64) -> bool {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        r >= Self::R_INNER + margin && r <= Self::R_OUTER - margin
    }
}

impl World for SphereWorld {
    fn state_dim(&self) -> usize {
        3
    }
    fn action_dim(&self) -> usize {
        3
    }
    fn dt(&self) -> f64 {
        self.dt
    }
    fn u_max(&self) -> f64 {
        self.u_max
    }
    fn state_bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }
    fn goal(&self) -> &[f64] {
        &self.goal
    }
    fn weights(&self) -> CostWeights {
        MANIFOLD_WEIGHTS
    }
    fn collision(&self, x: &[f64]) -> bool {
        !in_box(x, &self.bounds) || !Self::on_shell(x, 0.0)
    }
    fn feasible(&self, x: &[f64], u: &[f64]) -> bool {
        if u.iter().any(|v| v.abs() > self.u_max()) {
            return false;
        }
        let mut xn = [0.0; 3];
        self.dynamics(x, u, &mut xn);
        in_box(&xn, &self.bounds) && Self::on_shell(&xn, MANIFOLD_MARGIN)
    }
    fn t_succ(&self) -> usize {
        self.t_succ
    }
    fn c_succ(&self) -> f64 {
        self.c_succ
    }
}

/// Band of half-width 0.03 around z = 0.1 sin(4 pi y) in the (y, z) plane.
pub struct SinusoidWorld {
    bounds: Vec<(f64, f64)>,
    goal: Vec<f64>,
    pub dt: f64,
    pub u_max: f64,
    pub t_succ: usize,
    pub c_succ: f64,
}

impl SinusoidWorld {
    pub const HALF_WIDTH: f64 = 0.03;

    pub fn new(goal: [f64; 2]) -> Self {
        SinusoidWorld {
            bounds: vec![(-1.0, 1.0), (-0.25, 0.25)],
            goal: goal.to_vec(),
            dt: 0.1,
            u_max: 1.0,
            t_succ: 200,
            c_succ: 1e30,
        }
    }

    pub fn set_goal(&mut self, goal: &[f64]) {
        self.goal = goal.to_vec();
    }

    pub fn surface(y: f64) -> f64 {
        0.1 * (4.0 * std::f64::consts::PI * y).sin()
    }

    pub fn on_band(x: &[f64], margin: f64) -> bool {
        (x[1] - Self::surface(x[0])).abs() <= Self::HALF_WIDTH - margin
    }
}

impl World for SinusoidWorld {
    fn state_dim(&self) -> usize {
        2
    }
    fn action_dim(&self) -> usize {
        2
    }
    fn dt(&self) -> f64 {
        self.dt
    }
    fn u_max(&self) -> f64 {
        self.u_max
    }
    fn state_bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }
    fn goal(&self) -> &[f64] {
        &self.goal
    }
    fn weights(&self) -> CostWeights {
        MANIFOLD_WEIGHTS
    }
    fn collision(&self, x: &[f64]) -> bool {
        !in_box(x, &self.bounds) || !Self::on_band(x, 0.0)
    }
    fn feasible(&self, x: &[f64], u: &[f64]) -> bool {
        if u.iter().any(|v| v.abs() > self.u_max()) {
            return false;
        }
        let mut xn = [0.0; 2];
        self.dynamics(x, u, &mut xn);
        in_box(&xn, &self.bounds) && Self::on_band(&xn, MANIFOLD_MARGIN)
    }
    fn t_succ(&self) -> usize {
        self.t_succ
    }
    fn c_succ(&self) -> f64 {
        self.c_succ
    }
}

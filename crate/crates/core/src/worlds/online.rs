//! Obstacle avoidance with partial observability: discs become known to the
//! planner only once the agent is horizontally close, and knowledge is
//! monotone within a trial. Planning costs and feasibility consult the known
//! set; executed-trajectory scoring consults every disc. No clearance margin.

use rand::Rng;

use super::{in_box, CostWeights, World};

/// A disc is visible from x when the horizontal offset to its center is at
/// most this.
pub const VISIBILITY_RANGE: f64 = 0.40;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disc {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Disc {
    pub fn contains(&self, x: &[f64]) -> bool {
        let dx = x[0] - self.center[0];
        let dy = x[1] - self.center[1];
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

pub struct OnlineWorld {
    discs: Vec<Disc>,
    known: Vec<bool>,
    pub bounds: Vec<(f64, f64)>,
    goal: Vec<f64>,
    pub dt: f64,
    pub u_max: f64,
    pub t_succ: usize,
    pub c_succ: f64,
}

impl OnlineWorld {
    pub fn new(discs: Vec<Disc>, goal: [f64; 2]) -> Self {
        let known = vec![false; discs.len()];
        OnlineWorld {
            discs,
            known,
            bounds: vec![(-1.25, 1.25); 2],
            goal: goal.to_vec(),
            dt: 0.1,
            u_max: 1.0,
            t_succ: 100,
            c_succ: 1e30,
        }
    }

    pub fn set_goal(&mut self, goal: &[f64]) {
        self.goal = goal.to_vec();
    }

    pub fn discs(&self) -> &[Disc] {
        &self.discs
    }

    pub fn known(&self) -> &[bool] {
        &self.known
    }

    pub fn known_count(&self) -> usize {
        self.known.iter().filter(|k| **k).count()
    }

    /// Which discs are detectable from x right now.
    pub fn visible_mask(&self, x: &[f64]) -> Vec<bool> {
        self.discs
            .iter()
            .map(|d| (d.center[0] - x[0]).abs() <= VISIBILITY_RANGE)
            .collect()
    }

    /// Folds current visibility into the known set; true iff it grew.
    pub fn reveal(&mut self, x: &[f64]) -> bool {
        let mut grew = false;
        for (k, d) in self.known.iter_mut().zip(&self.discs) {
            if !*k && (d.center[0] - x[0]).abs() <= VISIBILITY_RANGE {
                *k = true;
                grew = true;
            }
        }
        grew
    }

    /// Random course between a left-edge start and a right-edge goal: discs
    /// confined to the middle band so the edges stay free, mutually separated
    /// so a passage survives.
    pub fn random_discs(rng: &mut impl Rng, count: usize) -> Vec<Disc> {
        let mut discs: Vec<Disc> = Vec::with_capacity(count);
        let mut attempts = 0;
        while discs.len() < count && attempts < 10_000 {
            attempts += 1;
            let radius = rng.gen_range(0.18..0.40);
            let center = [rng.gen_range(-0.55..0.55), rng.gen_range(-0.75..0.75)];
            let cand = Disc { center, radius };
            let clear = discs.iter().all(|d| {
                let dx = cand.center[0] - d.center[0];
                let dy = cand.center[1] - d.center[1];
                (dx * dx + dy * dy).sqrt() >= cand.radius + d.radius + 0.30
            });
            if clear {
                discs.push(cand);
            }
        }
        discs
    }
}

impl World for OnlineWorld {
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
        CostWeights {
            dist: 10.0,
            coll: 1e30,
            ctrl: 1e-3,
            term: 1e3,
        }
    }
    fn collision(&self, x: &[f64]) -> bool {
        !in_box(x, &self.bounds)
            || self
                .discs
                .iter()
                .zip(&self.known)
                .any(|(d, &k)| k && d.contains(x))
    }
    fn collision_executed(&self, x: &[f64]) -> bool {
        !in_box(x, &self.bounds) || self.discs.iter().any(|d| d.contains(x))
    }
    fn feasible(&self, x: &[f64], u: &[f64]) -> bool {
        if u.iter().any(|v| v.abs() > self.u_max()) {
            return false;
        }
        let mut xn = [0.0; 2];
        self.dynamics(x, u, &mut xn);
        !self.collision(&xn)
    }
    fn t_succ(&self) -> usize {
        self.t_succ
    }
    fn c_succ(&self) -> f64 {
        self.c_succ
    }
}

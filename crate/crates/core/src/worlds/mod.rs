//! Benchmark environments: dynamics, feasibility predicates, stage costs,
//! and success accounting shared by every controller.
//!
//! All worlds are single integrators, x' = x + u dt. Feasibility of a pair
//! (x, u) is judged at the successor state, so a learned feasibility model
//! over (x, u) answers "may I apply u here". Cost collision checks use the
//! same successor convention; a step is charged for where it lands.

mod manifold;
mod online;
mod pngrid;

pub use manifold::{SinusoidWorld, SphereWorld, MANIFOLD_MARGIN};
pub use online::{Disc, OnlineWorld, VISIBILITY_RANGE};
pub use pngrid::{PnGridWorld, Rect, PNGRID_MARGIN};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostWeights {
    /// squared-distance stage weight
    pub dist: f64,
    /// collision indicator weight
    pub coll: f64,
    /// squared-action stage weight
    pub ctrl: f64,
    /// terminal squared-distance weight
    pub term: f64,
}

pub trait World: Sync {
    fn state_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn dt(&self) -> f64;
    fn u_max(&self) -> f64;
    /// Axis-aligned state box; also the domain of learned feasibility models.
    fn state_bounds(&self) -> &[(f64, f64)];
    fn goal(&self) -> &[f64];
    fn weights(&self) -> CostWeights;
    /// Collision indicator used by planning costs.
    fn collision(&self, x: &[f64]) -> bool;
    /// Collision indicator used when scoring executed trajectories. Differs
    /// from `collision` only in worlds with partial observability.
    fn collision_executed(&self, x: &[f64]) -> bool {
        self.collision(x)
    }
    /// True iff applying u at x is allowed: the successor stays in the box,
    /// obeys the world's clearance margin, and |u| respects the bound.
    fn feasible(&self, x: &[f64], u: &[f64]) -> bool;

    fn dynamics(&self, x: &[f64], u: &[f64], out: &mut [f64]) {
        let dt = self.dt();
        for i in 0..x.len() {
            out[i] = x[i] + u[i] * dt;
        }
    }

    fn reach_radius(&self) -> f64 {
        0.05
    }
    /// Step budget for a successful trial.
    fn t_succ(&self) -> usize;
    /// Executed-cost budget for a successful trial.
    fn c_succ(&self) -> f64;
}

pub(crate) fn in_box(x: &[f64], bounds: &[(f64, f64)]) -> bool {
    x.iter()
        .zip(bounds)
        .all(|(&v, &(lo, hi))| v >= lo && v <= hi)
}

pub(crate) fn dist2(x: &[f64], p: &[f64]) -> f64 {
    x.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn norm2(u: &[f64]) -> f64 {
    u.iter().map(|v| v * v).sum()
}

/// One stage term without the reached indicator: distance at the current
/// state, collision at the successor, control effort.
pub fn stage_cost(w: &dyn World, x: &[f64], u: &[f64], x_next: &[f64]) -> f64 {
    let cw = w.weights();
    let coll = if w.collision(x_next) { 1.0 } else { 0.0 };
    cw.dist * dist2(x, w.goal()) + cw.coll * coll + cw.ctrl * norm2(u)
}

fn stage_cost_executed(w: &dyn World, x: &[f64], u: &[f64], x_next: &[f64]) -> f64 {
    let cw = w.weights();
    let coll = if w.collision_executed(x_next) { 1.0 } else { 0.0 };
    cw.dist * dist2(x, w.goal()) + cw.coll * coll + cw.ctrl * norm2(u)
}

/// Total cost of a planned trajectory: states x_0..x_H (flat, H+1 rows),
/// actions u_0..u_{H-1}. The reached indicator gates every term: once some
/// x_j comes within the reach radius, all later stage terms and the terminal
/// term vanish, so loitering at the goal is free.
pub fn trajectory_cost(w: &dyn World, states: &[f64], actions: &[f64], horizon: usize) -> f64 {
    let dx = w.state_dim();
    let du = w.action_dim();
    debug_assert_eq!(states.len(), (horizon + 1) * dx);
    debug_assert_eq!(actions.len(), horizon * du);
    let r2 = w.reach_radius() * w.reach_radius();
    let goal = w.goal();
    let mut total = 0.0;
    let mut reached = false;
    for h in 0..horizon {
        let x = &states[h * dx..(h + 1) * dx];
        reached = reached || dist2(x, goal) < r2;
        if !reached {
            let u = &actions[h * du..(h + 1) * du];
            let xn = &states[(h + 1) * dx..(h + 2) * dx];
            total += stage_cost(w, x, u, xn);
        }
    }
    let xh = &states[horizon * dx..(horizon + 1) * dx];
    reached = reached || dist2(xh, goal) < r2;
    if !reached {
        total += w.weights().term * dist2(xh, goal);
    }
    total
}

#[derive(Clone, Copy, Debug)]
pub struct TrialScore {
    pub success: bool,
    /// Execution step at which the goal sphere was first entered.
    pub steps_to_reach: Option<usize>,
    /// Stage costs accumulated until the reach step (or the whole history).
    pub executed_cost: f64,
}

/// Scores an executed history: states x_0..x_T, actions u_0..u_{T-1}.
/// Success needs the goal reached within the step budget and the executed
/// stage cost (scored against physical obstacles) under the cost budget.
pub fn score_history(w: &dyn World, states: &[f64], actions: &[f64]) -> TrialScore {
    let dx = w.state_dim();
    let du = w.action_dim();
    let t = actions.len() / du.max(1);
    debug_assert_eq!(states.len(), (t + 1) * dx);
    let r2 = w.reach_radius() * w.reach_radius();
    let mut cost = 0.0;
    let mut reach = None;
    for h in 0..=t {
        let x = &states[h * dx..(h + 1) * dx];
        if dist2(x, w.goal()) < r2 {
            reach = Some(h);
            break;
        }
        if h < t {
            let u = &actions[h * du..(h + 1) * du];
            let xn = &states[(h + 1) * dx..(h + 2) * dx];
            cost += stage_cost_executed(w, x, u, xn);
        }
    }
    let success = match reach {
        Some(h) => h <= w.t_succ() && cost < w.c_succ(),
        None => false,
    };
    TrialScore {
        success,
        steps_to_reach: reach,
        executed_cost: cost,
    }
}


#[cfg(test)]
mod tests {
    use super::testworlds::OpenWorld;
    use super::*;

    #[test]
    fn single_integrator_steps_and_reverses() {
        let w = OpenWorld::new_2d([0.0, 0.0]);
        let mut xn = [0.0; 2];
        w.dynamics(&[0.0, 0.0], &[1.0, 0.0], &mut xn);
        assert_eq!(xn, [0.1, 0.0]);
        let mut back = [0.0; 2];
        w.dynamics(&xn, &[-1.0, 0.0], &mut back);
        assert!((back[0] - 0.0).abs() < 1e-12 && back[1].abs() < 1e-12);
        w.dynamics(&[0.3, -0.2], &[0.0, 0.0], &mut xn);
        assert_eq!(xn, [0.3, -0.2]);
    }

    #[test]
    fn at_goal_zero_action_trajectory_costs_nothing() {
        let w = OpenWorld::new_2d([0.4, 0.4]);
        let states = [0.4, 0.4, 0.4, 0.4, 0.4, 0.4];
        let actions = [0.0, 0.0, 0.0, 0.0];
        assert_eq!(trajectory_cost(&w, &states, &actions, 2), 0.0);
    }

    #[test]
    fn two_step_cost_matches_hand_arithmetic() {
        // stage distances 1.0 and 0.9, unit actions, terminal distance 0.81:
        // 10 (1 + 0.81) + 1e-3 (1 + 1) + 1e3 * 0.81^2 = 674.202
        let w = OpenWorld::new_2d([0.0, 0.0]);
        let states = [1.0, 0.0, 0.9, 0.0, 0.81, 0.0];
        let actions = [-1.0, 0.0, -1.0, 0.0];
        let got = trajectory_cost(&w, &states, &actions, 2);
        assert!((got - 674.202).abs() < 1e-9, "got {got}");
    }

    #[test]
    fn reached_indicator_is_monotone_and_gates_terminal() {
        let w = OpenWorld::new_2d([0.0, 0.0]);
        // passes through the goal at h=1 then leaves again
        let states = [0.5, 0.0, 0.0, 0.0, 0.5, 0.0];
        let actions = [-1.0, 0.0, 1.0, 0.0];
        let got = trajectory_cost(&w, &states, &actions, 2);
        // only the h=0 stage term survives
        let want = 10.0 * 0.25 + 1e-3 * 1.0;
        assert!((got - want).abs() < 1e-12, "got {got} want {want}");
    }

    #[test]
    fn out_of_box_successor_is_charged_as_collision() {
        let w = OpenWorld::new_2d([0.0, 0.0]);
        let states = [1.2, 0.0, 1.3, 0.0];
        let actions = [1.0, 0.0];
        assert!(trajectory_cost(&w, &states, &actions, 1) > 1e29);
    }

    #[test]
    fn score_history_reach_and_budgets() {
        let w = OpenWorld::new_2d([0.2, 0.0]);
        // three steps straight at the goal, reaching on the second state
        let states = [0.0, 0.0, 0.1, 0.0, 0.2, 0.0];
        let actions = [1.0, 0.0, 1.0, 0.0];
        let s = score_history(&w, &states, &actions);
        assert!(s.success);
        assert_eq!(s.steps_to_reach, Some(2));
        // two accumulated stage terms, both unreached
        let want = (10.0 * 0.04 + 1e-3) + (10.0 * 0.01 + 1e-3);
        assert!((s.executed_cost - want).abs() < 1e-12);
        // never reaching fails regardless of cost
        let states = [0.0, 0.0, 0.0, 0.0];
        let actions = [0.0, 0.0];
        assert!(!score_history(&w, &states, &actions).success);
    }

    #[test]
    fn feasibility_is_pure() {
        let w = OpenWorld::new_2d([0.0, 0.0]);
        for _ in 0..3 {
            assert!(w.feasible(&[0.0, 0.0], &[0.5, 0.5]));
            assert!(!w.feasible(&[1.2, 0.0], &[1.0, 0.0]));
        }
    }
}

//! Fixed rectangular obstacle course on a [-1.25, 1.25]^2 box. Learning and
//! planning both inflate obstacles by a 5 cm margin, so a grazing pass counts
//! as a collision everywhere.

use rand::Rng;

use super::{in_box, CostWeights, World};
use crate::error::{Error, Result};

pub const PNGRID_MARGIN: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub center: [f64; 2],
    pub half: [f64; 2],
}

impl Rect {
    pub fn new(center: [f64; 2], half: [f64; 2]) -> Result<Self> {
        if !(half[0] > 0.0 && half[1] > 0.0) {
            return Err(Error::InvalidArgument(
                "rectangle half-extents must be positive".into(),
            ));
        }
        Ok(Rect { center, half })
    }

    /// Point-in-rectangle test with the rectangle grown by `m` on every side.
    pub fn contains_inflated(&self, x: &[f64], m: f64) -> bool {
        (x[0] - self.center[0]).abs() <= self.half[0] + m
            && (x[1] - self.center[1]).abs() <= self.half[1] + m
    }
}

pub struct PnGridWorld {
    rects: Vec<Rect>,
    pub bounds: Vec<(f64, f64)>,
    goal: Vec<f64>,
    pub dt: f64,
    pub u_max: f64,
    pub t_succ: usize,
    pub c_succ: f64,
}

impl PnGridWorld {
    /// The shipped nine-rectangle course: three ragged rows with corridors
    /// at least 0.20 m wide after inflation.
    pub fn standard_rects() -> Vec<Rect> {
        [
            ([-0.78, 0.78], [0.22, 0.20]),
            ([-0.02, 0.80], [0.20, 0.24]),
            ([0.76, 0.74], [0.24, 0.18]),
            ([-0.80, 0.00], [0.18, 0.26]),
            ([0.04, -0.02], [0.26, 0.20]),
            ([0.82, 0.02], [0.16, 0.24]),
            ([-0.74, -0.78], [0.24, 0.18]),
            ([0.02, -0.76], [0.18, 0.22]),
            ([0.78, -0.76], [0.20, 0.20]),
        ]
        .into_iter()
        .map(|(c, h)| Rect::new(c, h).unwrap())
        .collect()
    }

    pub fn new(rects: Vec<Rect>, goal: [f64; 2]) -> Self {
        PnGridWorld {
            rects,
            bounds: vec![(-1.25, 1.25); 2],
            goal: goal.to_vec(),
            dt: 0.1,
            u_max: 1.0,
            t_succ: 100,
            c_succ: 1e30,
        }
    }

    pub fn standard(goal: [f64; 2]) -> Self {
        Self::new(Self::standard_rects(), goal)
    }

    pub fn rects(&self) -> &[Rect] {
        &self.rects
    }

    pub fn set_goal(&mut self, goal: &[f64]) {
        self.goal = goal.to_vec();
    }

    /// Random course with the same 3x3 structure as the shipped one: up to
    /// nine cells, each holding a jittered rectangle sized so that every
    /// corridor stays at least 0.12 m wide after inflation.
    pub fn random_rects(rng: &mut impl Rng, count: usize) -> Vec<Rect> {
        let centers = [-0.78, 0.0, 0.78];
        let mut cells: Vec<(f64, f64)> = centers
            .iter()
            .flat_map(|&cx| centers.iter().map(move |&cy| (cx, cy)))
            .collect();
        for i in (1..cells.len()).rev() {
            cells.swap(i, rng.gen_range(0..=i));
        }
        cells
            .into_iter()
            .take(count.min(9))
            .map(|(cx, cy)| Rect {
                center: [
                    cx + rng.gen_range(-0.06..0.06),
                    cy + rng.gen_range(-0.06..0.06),
                ],
                half: [rng.gen_range(0.12..0.21), rng.gen_range(0.12..0.21)],
            })
            .collect()
    }
}

impl World for PnGridWorld {
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
                .rects
                .iter()
                .any(|r| r.contains_inflated(x, PNGRID_MARGIN))
    }
    fn feasible(&self, x: &[f64], u: &[f64]) -> bool {
        if u.iter().any(|v| v.abs() > self.u_max) {
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

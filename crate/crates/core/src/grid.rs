use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One uniformly discretized closed interval. Nodes include both endpoints,
/// so `n >= 2` always (a single node has no cell to interpolate over).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDim {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridDim {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::NonFinite(format!("grid bounds [{lo}, {hi}]")));
        }
        if lo >= hi {
            return Err(Error::InvalidArgument(format!(
                "grid bounds must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 nodes, got {n}"
            )));
        }
        Ok(GridDim { lo, hi, n })
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        debug_assert!(i < self.n);
        self.lo + i as f64 * self.spacing()
    }

    /// Nearest node index, clamped into range.
    pub fn nearest(&self, x: f64) -> usize {
        let t = ((x - self.lo) / self.spacing()).round();
        (t.max(0.0) as usize).min(self.n - 1)
    }

    /// Cell index j in [0, n-2] and interpolation weight theta in [0, 1]
    /// such that x = (1 - theta) * node(j) + theta * node(j + 1).
    pub fn locate(&self, x: f64) -> Result<(usize, f64)> {
        if !(x >= self.lo && x <= self.hi) {
            return Err(Error::Domain(format!(
                "{x} outside [{}, {}]",
                self.lo, self.hi
            )));
        }
        let t = (x - self.lo) / self.spacing();
        let j = (t.floor() as usize).min(self.n - 2);
        let theta = (t - j as f64).clamp(0.0, 1.0);
        Ok((j, theta))
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    fn refined(&self, factor: usize) -> Result<GridDim> {
        if factor == 0 {
            return Err(Error::InvalidArgument("refinement factor 0".into()));
        }
        GridDim::new(self.lo, self.hi, factor * (self.n - 1) + 1)
    }
}

/// Cartesian product of per-dimension uniform grids. Dimension order matches
/// the core order of any tensor-train model living on the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dims: Vec<GridDim>,
}

impl Grid {
    pub fn new(dims: Vec<GridDim>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidArgument("grid needs at least 1 dim".into()));
        }
        Ok(Grid { dims })
    }

    pub fn d(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[GridDim] {
        &self.dims
    }

    pub fn dim(&self, k: usize) -> &GridDim {
        &self.dims[k]
    }

    pub fn node_counts(&self) -> Vec<usize> {
        self.dims.iter().map(|d| d.n).collect()
    }

    pub fn total_cells(&self) -> usize {
        self.dims.iter().fold(1usize, |p, d| p.saturating_mul(d.n))
    }

    /// New grid with each dimension's cell count multiplied per `factors`
    /// (node count becomes factor * (n - 1) + 1; bounds unchanged, so every
    /// old node stays a node of the refined grid).
    pub fn refined(&self, factors: &[usize]) -> Result<Grid> {
        if factors.len() != self.d() {
            return Err(Error::InvalidArgument(format!(
                "got {} refinement factors for {} dims",
                factors.len(),
                self.d()
            )));
        }
        let dims = self
            .dims
            .iter()
            .zip(factors)
            .map(|(d, &f)| d.refined(f))
            .collect::<Result<Vec<_>>>()?;
        Grid::new(dims)
    }

    /// Grid over the first k dimensions.
    pub fn leading(&self, k: usize) -> Result<Grid> {
        if k == 0 || k > self.d() {
            return Err(Error::InvalidArgument(format!(
                "leading({k}) on {}-dim grid",
                self.d()
            )));
        }
        Grid::new(self.dims[..k].to_vec())
    }

    /// Grid over the dimensions after the first j.
    pub fn trailing(&self, j: usize) -> Result<Grid> {
        if j >= self.d() {
            return Err(Error::InvalidArgument(format!(
                "trailing({j}) on {}-dim grid",
                self.d()
            )));
        }
        Grid::new(self.dims[j..].to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn nodes_cover_bounds_inclusive() {
        let d = GridDim::new(-1.0, 1.0, 5).unwrap();
        assert_eq!(d.node(0), -1.0);
        assert_eq!(d.node(4), 1.0);
        assert_eq!(d.spacing(), 0.5);
    }

    #[test]
    fn single_node_rejected() {
        assert!(GridDim::new(0.0, 1.0, 1).is_err());
        assert!(GridDim::new(1.0, 0.0, 4).is_err());
        assert!(GridDim::new(f64::NAN, 1.0, 4).is_err());
    }

    #[test]
    fn locate_endpoints_and_midpoint() {
        let d = GridDim::new(0.0, 1.0, 3).unwrap();
        assert_eq!(d.locate(0.0).unwrap(), (0, 0.0));
        let (j, t) = d.locate(1.0).unwrap();
        assert_eq!(j, 1);
        assert!((t - 1.0).abs() < 1e-15);
        let (j, t) = d.locate(0.25).unwrap();
        assert_eq!(j, 0);
        assert!((t - 0.5).abs() < 1e-15);
        assert!(d.locate(1.0 + 1e-9).is_err());
        assert!(d.locate(f64::NAN).is_err());
    }

    #[test]
    fn refinement_keeps_old_nodes() {
        let g = Grid::new(vec![GridDim::new(-1.0, 1.0, 20).unwrap()]).unwrap();
        let r = g.refined(&[10]).unwrap();
        assert_eq!(r.dim(0).n, 191);
        for i in 0..20 {
            let old = g.dim(0).node(i);
            let new = r.dim(0).node(i * 10);
            assert!((old - new).abs() < 1e-12, "node {i}: {old} vs {new}");
        }
    }

    proptest! {
        #[test]
        fn index_coordinate_round_trip(n in 2usize..200, i in 0usize..200,
                                       lo in -10.0f64..10.0, span in 0.1f64..20.0) {
            let i = i % n;
            let d = GridDim::new(lo, lo + span, n).unwrap();
            prop_assert_eq!(d.nearest(d.node(i)), i);
        }

        #[test]
        fn coordinate_round_trip_within_half_cell(n in 2usize..100,
                                                  lo in -5.0f64..5.0,
                                                  span in 0.1f64..10.0,
                                                  t in 0.0f64..1.0) {
            let d = GridDim::new(lo, lo + span, n).unwrap();
            let x = lo + t * span;
            let back = d.node(d.nearest(x));
            prop_assert!((back - x).abs() <= d.spacing() / 2.0 + 1e-12);
        }
    }
}

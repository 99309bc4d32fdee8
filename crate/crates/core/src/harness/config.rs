//! Run configuration. One TOML document selects a world and its tunable
//! scalars, the controller hyperparameters, the discretization used to learn
//! the feasibility model, and experiment defaults the command line can
//! override. `RunConfig::default_for` holds the per-world defaults; shipped
//! config files mirror them.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smpc::Method;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorldKind {
    Pngrid,
    Sphere,
    Sinusoid,
    Online,
}

impl WorldKind {
    pub fn name(self) -> &'static str {
        match self {
            WorldKind::Pngrid => "pngrid",
            WorldKind::Sphere => "sphere",
            WorldKind::Sinusoid => "sinusoid",
            WorldKind::Online => "online",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "pngrid" => Ok(WorldKind::Pngrid),
            "sphere" => Ok(WorldKind::Sphere),
            "sinusoid" => Ok(WorldKind::Sinusoid),
            "online" => Ok(WorldKind::Online),
            _ => Err(Error::Config(format!(
                "unknown world {s:?}; expected pngrid, sphere, sinusoid or online"
            ))),
        }
    }

    pub fn state_dim(self) -> usize {
        match self {
            WorldKind::Sphere => 3,
            _ => 2,
        }
    }

    pub fn action_dim(self) -> usize {
        self.state_dim()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectSection {
    pub center: [f64; 2],
    pub half: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSection {
    pub kind: WorldKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_succ: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_succ: Option<f64>,
    /// Half-extent of the square state box (box worlds only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_half: Option<f64>,
    /// Obstacle course (pngrid only); omitted means the shipped course.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obstacles: Option<Vec<RectSection>>,
    /// Discs per random layout (online only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disc_count: Option<usize>,
}

impl WorldSection {
    fn bare(kind: WorldKind) -> Self {
        WorldSection {
            kind,
            dt: None,
            u_max: None,
            t_succ: None,
            c_succ: None,
            box_half: None,
            obstacles: None,
            disc_count: None,
        }
    }
}

fn default_gamma() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub horizon: usize,
    /// Per-dimension sampling variance; the policy uses its square root.
    pub variance: f64,
    pub beta: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

fn default_max_cells() -> usize {
    40_000_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnSection {
    /// Coarse nodes per state dimension (predicate evaluation grid).
    pub state_nodes: Vec<usize>,
    /// Coarse nodes per action dimension.
    pub action_nodes: Vec<usize>,
    /// Cell-split factor applied to every state dimension after compression.
    pub state_refine: usize,
    /// Same for action dimensions.
    pub action_refine: usize,
    pub eps: f64,
    pub max_rank: usize,
    #[serde(default = "default_max_cells")]
    pub max_cells: usize,
}

fn default_methods() -> Vec<String> {
    vec!["mppi".into(), "proj_mppi".into(), "tt_poe_mppi".into()]
}

fn default_samples() -> Vec<usize> {
    vec![16]
}

fn default_trials() -> usize {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    #[serde(default = "default_samples")]
    pub samples: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            methods: default_methods(),
            samples: default_samples(),
            trials: default_trials(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub world: WorldSection,
    pub controller: ControllerSection,
    pub learn: LearnSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
}

impl RunConfig {
    pub fn default_for(kind: WorldKind) -> RunConfig {
        let world = WorldSection::bare(kind);
        match kind {
            WorldKind::Pngrid | WorldKind::Online => RunConfig {
                world,
                controller: ControllerSection {
                    horizon: 15,
                    variance: 0.125,
                    beta: 0.05,
                    gamma: 1.0,
                },
                learn: LearnSection {
                    state_nodes: vec![100, 100],
                    action_nodes: vec![20, 20],
                    state_refine: 1,
                    action_refine: 10,
                    eps: 1e-3,
                    max_rank: 300,
                    max_cells: default_max_cells(),
                },
                experiment: ExperimentSection::default(),
            },
            WorldKind::Sphere => RunConfig {
                world,
                controller: ControllerSection {
                    horizon: 50,
                    variance: 0.1,
                    beta: 0.05,
                    gamma: 1.0,
                },
                learn: LearnSection {
                    state_nodes: vec![25, 25, 25],
                    action_nodes: vec![10, 10, 10],
                    state_refine: 10,
                    action_refine: 10,
                    eps: 1e-3,
                    max_rank: 300,
                    max_cells: default_max_cells(),
                },
                experiment: ExperimentSection {
                    trials: 20,
                    ..ExperimentSection::default()
                },
            },
            WorldKind::Sinusoid => RunConfig {
                world,
                controller: ControllerSection {
                    horizon: 30,
                    variance: 0.05,
                    beta: 0.05,
                    gamma: 1.0,
                },
                // the band is thin vertically, so z gets half the nodes of y
                // at the same resolution and both get a dense coarse grid
                learn: LearnSection {
                    state_nodes: vec![101, 51],
                    action_nodes: vec![10, 10],
                    state_refine: 2,
                    action_refine: 10,
                    eps: 1e-3,
                    max_rank: 300,
                    max_cells: default_max_cells(),
                },
                experiment: ExperimentSection::default(),
            },
        }
    }

    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.world.kind;
        let err = |m: String| Err(Error::Config(m));
        if self.learn.state_nodes.len() != k.state_dim() {
            return err(format!(
                "{} needs {} state node counts, got {}",
                k.name(),
                k.state_dim(),
                self.learn.state_nodes.len()
            ));
        }
        if self.learn.action_nodes.len() != k.action_dim() {
            return err(format!(
                "{} needs {} action node counts, got {}",
                k.name(),
                k.action_dim(),
                self.learn.action_nodes.len()
            ));
        }
        if self
            .learn
            .state_nodes
            .iter()
            .chain(&self.learn.action_nodes)
            .any(|&n| n < 2)
        {
            return err("node counts must be at least 2".into());
        }
        if self.learn.state_refine == 0 || self.learn.action_refine == 0 {
            return err("refinement factors must be at least 1".into());
        }
        if !(self.learn.eps > 0.0 && self.learn.eps.is_finite()) {
            return err(format!("eps must be positive, got {}", self.learn.eps));
        }
        if self.learn.max_rank == 0 {
            return err("max_rank must be at least 1".into());
        }
        if self.controller.horizon == 0 {
            return err("horizon must be at least 1".into());
        }
        if !(self.controller.variance > 0.0 && self.controller.variance.is_finite()) {
            return err(format!(
                "variance must be positive, got {}",
                self.controller.variance
            ));
        }
        if !(self.controller.beta > 0.0 && self.controller.beta.is_finite()) {
            return err(format!("beta must be positive, got {}", self.controller.beta));
        }
        if !(self.controller.gamma > 0.0 && self.controller.gamma <= 1.0) {
            return err(format!(
                "gamma must lie in (0, 1], got {}",
                self.controller.gamma
            ));
        }
        for m in &self.experiment.methods {
            Method::parse(m)?;
        }
        if self.experiment.methods.is_empty() || self.experiment.samples.is_empty() {
            return err("experiment needs at least one method and one sample count".into());
        }
        if self.experiment.samples.iter().any(|&n| n == 0) || self.experiment.trials == 0 {
            return err("sample counts and trials must be positive".into());
        }
        for (name, v) in [("dt", self.world.dt), ("u_max", self.world.u_max)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return err(format!("{name} must be positive, got {v}"));
                }
            }
        }
        if let Some(v) = self.world.c_succ {
            if !(v > 0.0) {
                return err(format!("c_succ must be positive, got {v}"));
            }
        }
        if let Some(v) = self.world.box_half {
            if !(v > 0.0 && v.is_finite()) {
                return err(format!("box_half must be positive, got {v}"));
            }
            if matches!(k, WorldKind::Sphere | WorldKind::Sinusoid) {
                return err("box_half applies to the box worlds only".into());
            }
        }
        if self.world.obstacles.is_some() && k != WorldKind::Pngrid {
            return err("obstacles apply to pngrid only".into());
        }
        if self.world.disc_count.is_some() && k != WorldKind::Online {
            return err("disc_count applies to online only".into());
        }
        Ok(())
    }

    /// Standard deviation the Gaussian policy runs with.
    pub fn sigma(&self) -> f64 {
        self.controller.variance.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_for_every_kind() {
        for kind in [
            WorldKind::Pngrid,
            WorldKind::Sphere,
            WorldKind::Sinusoid,
            WorldKind::Online,
        ] {
            let cfg = RunConfig::default_for(kind);
            cfg.validate().unwrap();
            assert_eq!(cfg.world.kind, kind);
        }
    }

    #[test]
    fn toml_round_trip_preserves_config() {
        let mut cfg = RunConfig::default_for(WorldKind::Pngrid);
        cfg.world.dt = Some(0.2);
        cfg.world.obstacles = Some(vec![RectSection {
            center: [0.0, 0.0],
            half: [0.3, 0.3],
        }]);
        cfg.experiment.samples = vec![8, 16, 32];
        let text = cfg.to_toml();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn minimal_document_fills_defaults() {
        let text = r#"
            [world]
            kind = "pngrid"

            [controller]
            horizon = 15
            variance = 0.125
            beta = 0.05

            [learn]
            state_nodes = [100, 100]
            action_nodes = [20, 20]
            state_refine = 1
            action_refine = 10
            eps = 1e-3
            max_rank = 300
        "#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.controller.gamma, 1.0);
        assert_eq!(cfg.experiment.trials, 100);
        assert_eq!(cfg.experiment.methods.len(), 3);
    }

    #[test]
    fn bad_documents_are_rejected() {
        let base = RunConfig::default_for(WorldKind::Sinusoid);

        let mut c = base.clone();
        c.learn.state_nodes = vec![101];
        assert!(c.validate().is_err(), "wrong node-count arity");

        let mut c = base.clone();
        c.controller.gamma = 0.0;
        assert!(c.validate().is_err(), "gamma out of range");

        let mut c = base.clone();
        c.experiment.methods = vec!["gradient_descent".into()];
        assert!(c.validate().is_err(), "unknown method");

        let mut c = base.clone();
        c.world.box_half = Some(1.0);
        assert!(c.validate().is_err(), "box_half on a manifold world");

        let mut c = base;
        c.world.disc_count = Some(3);
        assert!(c.validate().is_err(), "disc_count off-world");

        assert!(RunConfig::from_toml("[world]\nkind = \"hexagon\"").is_err());
        assert!(RunConfig::from_toml("not toml at all [").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut text = RunConfig::default_for(WorldKind::Pngrid).to_toml();
        text.push_str("\n[controller2]\nhorizon = 3\n");
        assert!(RunConfig::from_toml(&text).is_err());
    }
}

//! TOML run configuration.
//!
//! ```toml
//! [model]
//! name = "coupled_tanks"        # coupled_tanks | linear_decay | drift
//! monotone_class = "CSM"        # optional; sampled Kamke–Müller check when absent
//! lipschitz_x = 12.0            # optional
//!
//! [model.params]                # coupled_tanks only, Table-1 names
//! A = 4.425
//!
//! [constraints]                 # optional; model default otherwise
//! generators = [[30.0, 20.0]]
//! lower = [0.0, 0.0]
//!
//! [solver]
//! epsilon = 1.0
//! t_max = 200.0
//! h = 0.01
//! strategy = "csm_min"          # csm_min | grid:k
//! margin = 0.0
//! use_beta = false
//! max_iterations = 10000
//! grid_resolution = 0.5         # default epsilon / 2
//! tau = 1e-6
//!
//! [output]
//! dir = "out"
//! csv = true
//! svg = true
//! trajectories = true
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::SystemModel;
use crate::error::{Error, Result};
use crate::feasibility::ControlStrategy;
use crate::models::{self, TankParameters};
use crate::monotonicity::MonotoneClass;
use crate::order::{Antichain, BoxRegion, LowerSet, Vector};
use crate::solver::SolverConfig;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<ConstraintSection>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monotone_class: Option<MonotoneClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<TankParameters>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection { name: "coupled_tanks".into(), monotone_class: None, lipschitz_x: None, params: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSection {
    /// Maximal points of the constraint set.
    pub generators: Vec<Vec<f64>>,
    /// Lower corner of the ambient box; the origin when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub epsilon: f64,
    pub t_max: f64,
    pub h: f64,
    pub strategy: String,
    pub margin: f64,
    pub use_beta: bool,
    pub max_iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_resolution: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    pub tau: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSection {
            epsilon: d.epsilon,
            t_max: d.t_max,
            h: d.h,
            strategy: d.strategy.to_string(),
            margin: d.margin,
            use_beta: d.use_beta,
            max_iterations: d.max_iterations,
            grid_resolution: d.grid_resolution,
            lipschitz: d.lipschitz,
            tau: d.tau,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub csv: bool,
    pub svg: bool,
    pub trajectories: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out"), csv: true, svg: true, trajectories: true }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.solver_config()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let s = &self.solver;
        let config = SolverConfig {
            epsilon: s.epsilon,
            t_max: s.t_max,
            h: s.h,
            strategy: ControlStrategy::parse(&s.strategy).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("solver.strategy: {msg}")),
                other => other,
            })?,
            margin: s.margin,
            use_beta: s.use_beta,
            max_iterations: s.max_iterations,
            grid_resolution: s.grid_resolution,
            lipschitz: s.lipschitz,
            tau: s.tau,
        };
        config.validate()?;
        Ok(config)
    }

    /// Builds the model and its constraint set.
    pub fn build(&self) -> Result<(SystemModel, LowerSet)> {
        let m = &self.model;
        if m.params.is_some() && m.name != "coupled_tanks" {
            return Err(Error::Config(format!("model.params only applies to coupled_tanks, not `{}`", m.name)));
        }
        let (mut model, default_constraint) = models::by_name(&m.name, m.params.as_ref())?;
        if let Some(class) = m.monotone_class {
            model = model.with_monotone_class(class);
        }
        if let Some(l) = m.lipschitz_x {
            model = model.with_lipschitz(l).map_err(|_| Error::Config("model.lipschitz_x must be positive".into()))?;
        }
        let constraint = match &self.constraints {
            None => default_constraint,
            Some(c) => c.build(model.state_dim())?,
        };
        Ok((model, constraint))
    }
}

impl ConstraintSection {
    fn build(&self, n: usize) -> Result<LowerSet> {
        if self.generators.is_empty() {
            return Err(Error::Config("constraints.generators must not be empty".into()));
        }
        let mut points = Vec::with_capacity(self.generators.len());
        for (i, g) in self.generators.iter().enumerate() {
            if g.len() != n {
                return Err(Error::Config(format!("constraints.generators[{i}] has {} coordinates, model has {n}", g.len())));
            }
            points.push(Vector::new(g.clone()).map_err(|_| Error::Config(format!("constraints.generators[{i}] is not finite")))?);
        }
        let lower = match &self.lower {
            Some(l) if l.len() != n => return Err(Error::Config(format!("constraints.lower has {} coordinates, model has {n}", l.len()))),
            Some(l) => Vector::new(l.clone()).map_err(|_| Error::Config("constraints.lower is not finite".into()))?,
            None => Vector::zeros(n),
        };
        let upper = Vector::from((0..n).map(|i| points.iter().map(|p| p[i]).fold(f64::MIN, f64::max)).collect::<Vec<_>>());
        let ambient = BoxRegion::new(lower, upper).map_err(|e| Error::Config(format!("constraints: {e}")))?;
        let generators = Antichain::maximal_of(points);
        Ok(LowerSet::new(generators, ambient))
    }
}

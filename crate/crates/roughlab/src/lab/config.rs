//! Experiment configuration: JSON schema, validation, and construction of
//! drivers, fields, and integrators from declarative specs.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::calculus::VectorField;
use crate::controlled::ControlledPath;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridKind};
use crate::integral;
use crate::lift::{self, SignalSpec};
use crate::rng;
use crate::rough::{Alpha, RoughPath};
use crate::solver::SolveConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum FieldSpec {
    Constant {
        m: usize,
        q: usize,
        values: Vec<f64>,
    },
    Linear {
        m: usize,
        q: usize,
        lambda: Vec<f64>,
    },
    TanhSaturated {
        m: usize,
        q: usize,
        lambda: Vec<f64>,
        sat: f64,
    },
    Rotation {
        omega: f64,
    },
}

impl FieldSpec {
    pub fn build(&self) -> Result<VectorField> {
        match self {
            FieldSpec::Constant { m, q, values } => VectorField::constant(*m, *q, values),
            FieldSpec::Linear { m, q, lambda } => VectorField::linear(*m, *q, lambda),
            FieldSpec::TanhSaturated { m, q, lambda, sat } => {
                VectorField::tanh_saturated(*m, *q, lambda, *sat)
            }
            FieldSpec::Rotation { omega } => Ok(VectorField::rotation(*omega)),
        }
    }
}

/// How the integrator `Z` is built over the driving rough path.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ZMode {
    /// `Z = (X, id)`: the driver itself.
    Identity,
    /// `Z = ∫ G(X) dX` for a named field `G`.
    Integral { g: FieldSpec },
    /// Explicit node data: `values` is `(n+1)*w`, `derivs` is `(n+1)*w*d`.
    Custom {
        w: usize,
        values: Vec<f64>,
        derivs: Vec<f64>,
    },
}

impl Default for ZMode {
    fn default() -> Self {
        ZMode::Identity
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputSpec {
    pub path: String,
    pub format: OutputFormat,
}

fn default_trials() -> usize {
    1
}

fn default_t() -> f64 {
    1.0
}

fn default_grid_kind() -> GridKind {
    GridKind::Uniform
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub alpha: Alpha,
    #[serde(default = "default_t")]
    pub t: f64,
    pub n: usize,
    #[serde(default = "default_grid_kind")]
    pub grid: GridKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub driver: SignalSpec,
    #[serde(default)]
    pub ito: bool,
    pub field: Option<FieldSpec>,
    #[serde(default)]
    pub z_mode: ZMode,
    #[serde(default)]
    pub y0: Option<Vec<f64>>,
    #[serde(default)]
    pub levels: Vec<usize>,
    #[serde(default)]
    pub solve: Option<SolveConfig>,
    pub output: Option<OutputSpec>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("invalid config JSON: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema version {}, expected {SCHEMA_VERSION}",
                self.schema
            )));
        }
        if !(self.t > 0.0) {
            return Err(Error::Config(format!("t must be positive, got {}", self.t)));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !self.levels.is_empty() {
            if !self.n.is_power_of_two() {
                return Err(Error::Config(format!(
                    "n must be a power of two when levels are given, got {}",
                    self.n
                )));
            }
            for &f in &self.levels {
                if f == 0 || self.n % f != 0 {
                    return Err(Error::Config(format!(
                        "level {f} does not divide n = {}",
                        self.n
                    )));
                }
            }
        }
        if self.driver.d == 0 {
            return Err(Error::Config("driver dimension must be at least 1".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::make(self.t, self.n, self.grid)
    }

    /// Driver seed for one trial, derived so trials are independent and the
    /// whole experiment is a pure function of (config, seed).
    pub fn trial_seed(&self, trial: usize) -> u64 {
        rng::derive_seed(self.seed, trial as u64)
    }

    /// Samples and lifts the driving rough path for one trial.
    pub fn build_driver(&self, trial: usize) -> Result<Arc<RoughPath>> {
        let grid = self.grid()?;
        let spec = self.driver.with_seed(self.trial_seed(trial));
        let x = lift::sample_signal(&spec, &grid)?;
        let lifted = if self.ito {
            lift::lift_ito(grid, self.driver.d, x, self.alpha)?
        } else {
            lift::lift_piecewise_linear(grid, self.driver.d, x, self.alpha)?
        };
        Ok(Arc::new(lifted))
    }

    /// Builds the integrator `Z` over an already-lifted base.
    pub fn build_z(&self, base: &Arc<RoughPath>) -> Result<ControlledPath> {
        match &self.z_mode {
            ZMode::Identity => Ok(ControlledPath::identity_over(base.clone())),
            ZMode::Integral { g } => {
                let field = g.build()?;
                if field.domain_dim() != base.dim() || field.driver_dim() != base.dim() {
                    return Err(Error::Config(format!(
                        "z_mode integral field must map R^{d} to R^(w x {d}), got {}x{}",
                        field.driver_dim(),
                        field.domain_dim(),
                        d = base.dim()
                    )));
                }
                let x = ControlledPath::identity_over(base.clone());
                let gx = crate::calculus::compose(&field, &x)?;
                integral::integral_controlled(&gx, &x)
            }
            ZMode::Custom { w, values, derivs } => {
                ControlledPath::new(base.clone(), *w, 1, values.clone(), derivs.clone())
            }
        }
    }

    pub fn build_field(&self) -> Result<VectorField> {
        self.field
            .as_ref()
            .ok_or_else(|| Error::Config("this experiment requires a \"field\" entry".into()))?
            .build()
    }

    pub fn solve_config(&self) -> SolveConfig {
        self.solve.unwrap_or_default()
    }

    /// Initial condition; defaults to the ones vector in the field's domain.
    pub fn initial_value(&self, m: usize) -> Result<Vec<f64>> {
        match &self.y0 {
            Some(v) => {
                if v.len() != m {
                    return Err(Error::Config(format!(
                        "y0 has {} entries but the field domain is {}-dimensional",
                        v.len(),
                        m
                    )));
                }
                Ok(v.clone())
            }
            None => Ok(vec![1.0; m]),
        }
    }
}

use std::path::{Path, PathBuf};

use gose::{GoseOptions, Mode, ProblemParams, SolverChoice, StochasticEngine, ToleranceConfig};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Which outer method to run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriverKind {
    #[default]
    Gose,
    /// Probe for negative curvature at every iteration (deterministic mode only).
    AlwaysProbe,
}

/// Smoothness constants; unset fields fall back to the problem's declared values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothnessOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Write a per-iteration CSV trace for every run.
    pub trace: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            trace: true,
        }
    }
}

/// Sweep axes. An absent axis keeps the base configuration's value; an empty one is an error.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_h: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub engine: Option<Vec<StochasticEngine>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<Vec<SolverChoice>>,
}

impl Grid {
    pub fn check(&self) -> Result<()> {
        let empty = [
            ("eps", self.eps.as_ref().is_some_and(Vec::is_empty)),
            ("eps_h", self.eps_h.as_ref().is_some_and(Vec::is_empty)),
            ("seeds", self.seeds.as_ref().is_some_and(Vec::is_empty)),
            ("engine", self.engine.as_ref().is_some_and(Vec::is_empty)),
            ("solver", self.solver.as_ref().is_some_and(Vec::is_empty)),
        ];
        match empty.iter().find(|(_, e)| *e) {
            Some((axis, _)) => Err(HarnessError::Config(format!("grid axis `{axis}` is empty"))),
            None => Ok(()),
        }
    }
}

/// One experiment: a problem, a driver configuration and the seeds to run.
///
/// `tolerance.seed` is ignored; each run takes its seed from `seeds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: String,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub driver: DriverKind,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Independent repetitions per seed; more than one enables amplification.
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub params: ProblemParams,
    #[serde(default)]
    pub tolerance: ToleranceConfig<f64>,
    #[serde(default)]
    pub smoothness: SmoothnessOverrides,
    #[serde(default)]
    pub options: GoseOptions<f64>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
}

fn default_mode() -> Mode {
    Mode::Deterministic
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_reps() -> usize {
    1
}

impl ExperimentConfig {
    pub fn new(problem: impl Into<String>, mode: Mode) -> Self {
        Self {
            problem: problem.into(),
            mode,
            driver: DriverKind::Gose,
            seeds: default_seeds(),
            reps: 1,
            params: ProblemParams::default(),
            tolerance: ToleranceConfig::default(),
            smoothness: SmoothnessOverrides::default(),
            options: GoseOptions::default(),
            output: OutputConfig::default(),
            grid: None,
        }
    }

    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|source| HarnessError::Parse {
            path: origin.to_path_buf(),
            source,
        })?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::Config(format!("cannot serialize: {e}")))
    }

    /// Structural checks that do not need the problem.
    pub fn check(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("`seeds` must not be empty".into()));
        }
        if self.reps == 0 {
            return Err(HarnessError::Config("`reps` must be at least 1".into()));
        }
        if self.driver == DriverKind::AlwaysProbe && self.mode != Mode::Deterministic {
            return Err(HarnessError::Config(
                "the always_probe driver runs in deterministic mode only".into(),
            ));
        }
        if let Some(grid) = &self.grid {
            grid.check()?;
        }
        Ok(())
    }
}

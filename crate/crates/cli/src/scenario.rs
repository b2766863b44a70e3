//! Scenario files: JSON documents describing one run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use torus_lasso::{
    coupled_vdp, forced_vdp, linear_system_from_rows, ring_sources, EstimationPolicy, LassoSettings,
    PropagationSettings, SystemModel,
};

use crate::CliError;

/// Which system to build, with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    ForcedVdp {
        #[serde(default = "one")]
        mu: f64,
    },
    CoupledVdp {
        #[serde(default = "one")]
        alpha1: f64,
        #[serde(default = "one")]
        alpha2: f64,
        #[serde(default = "beta_default")]
        beta1: f64,
        #[serde(default = "beta_default")]
        beta2: f64,
        #[serde(default = "coupling_default")]
        mu: f64,
    },
    Linear {
        matrix: Vec<Vec<f64>>,
    },
}

fn one() -> f64 {
    1.0
}

fn beta_default() -> f64 {
    0.55
}

fn coupling_default() -> f64 {
    0.2601
}

impl SystemSpec {
    /// Build the model; `w_half_width` overrides the bundled disturbance.
    pub fn build(&self, w_half_width: Option<f64>) -> Result<SystemModel, CliError> {
        let sys = match self {
            SystemSpec::ForcedVdp { mu } => forced_vdp(*mu),
            SystemSpec::CoupledVdp { alpha1, alpha2, beta1, beta2, mu } => {
                coupled_vdp(*alpha1, *alpha2, *beta1, *beta2, *mu)
            }
            SystemSpec::Linear { matrix } => {
                linear_system_from_rows(matrix).map_err(|e| CliError::Scenario(e.to_string()))?
            }
        };
        Ok(match w_half_width {
            Some(a) => sys.with_additive_half_width(a),
            None => sys,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    pub plane: (usize, usize),
    pub count: usize,
    #[serde(default)]
    pub jitter: f64,
    /// Defaults to the scenario seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    Points(Vec<Vec<f64>>),
    Ring(RingSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub system: SystemSpec,
    pub x0: Vec<f64>,
    pub eps: f64,
    pub tau: f64,
    pub period_steps: usize,
    #[serde(default = "default_max_periods")]
    pub max_periods: usize,
    /// Half-width `a` of `W = [-a, a]`; the system default when absent.
    #[serde(default)]
    pub w_half_width: Option<f64>,
    /// Horizon of `simulate`, in steps (default: one period).
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub policy: EstimationPolicy,
    #[serde(default)]
    pub propagation: PropagationSettings,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sources: Option<SourceSpec>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_max_periods() -> usize {
    12
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let s: ScenarioFile = serde_json::from_str(text).map_err(|e| CliError::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Scenario(m));
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if self.period_steps == 0 {
            return bad("period_steps must be at least 1".into());
        }
        if self.max_periods == 0 {
            return bad("max_periods must be at least 1".into());
        }
        if let Some(a) = self.w_half_width {
            if !(a >= 0.0 && a.is_finite()) {
                return bad(format!("w_half_width must be nonnegative, got {a}"));
            }
        }
        if self.steps == Some(0) {
            return bad("steps must be at least 1".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return bad("x0 must be finite".into());
        }
        self.policy.validate().map_err(|e| CliError::Scenario(e.to_string()))?;
        self.propagation.validate().map_err(|e| CliError::Scenario(e.to_string()))?;
        let sys = self.system.build(self.w_half_width)?;
        if self.x0.len() != sys.dim {
            return bad(format!("x0 has {} entries, system {} has dimension {}", self.x0.len(), sys.name, sys.dim));
        }
        Ok(())
    }

    pub fn build_system(&self) -> Result<SystemModel, CliError> {
        self.system.build(self.w_half_width)
    }

    /// Settings with the scenario seed applied to the estimation policy.
    pub fn lasso_settings(&self) -> LassoSettings {
        let mut policy = self.policy.clone();
        policy.seed = self.seed;
        LassoSettings {
            eps: self.eps,
            tau: self.tau,
            period_steps: self.period_steps,
            max_periods: self.max_periods,
            policy,
            propagation: self.propagation.clone(),
        }
    }

    pub fn source_points(&self) -> Result<Vec<Vec<f64>>, CliError> {
        let points = match &self.sources {
            None => return Err(CliError::Scenario("scenario has no \"sources\"".into())),
            Some(SourceSpec::Points(p)) => p.clone(),
            Some(SourceSpec::Ring(r)) => {
                ring_sources(&r.center, r.radius, r.plane, r.count, r.jitter, r.seed.unwrap_or(self.seed))
                    .map_err(|e| CliError::Scenario(e.to_string()))?
            }
        };
        if points.is_empty() {
            return Err(CliError::Scenario("source list is empty".into()));
        }
        Ok(points)
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        self.build_system().map(|s| s.params).unwrap_or_default()
    }
}

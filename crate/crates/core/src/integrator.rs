//! Ball enclosures along the nominal Euler trajectory.
//!
//! Each step `i` certifies the constants on a box `S_i` around the Euler
//! segment `[x_i, x_{i+1}]`, grows the radius with [`delta`](crate::bounds::delta)
//! and re-seeds the next step with the end-of-step radius. The box is inflated by
//! `kappa * radius_i + margin_abs`; if the radius reached inside the step does not
//! fit, `kappa` is doubled and the step is redone.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{delta_with_mode, Ball, BoundError, LambdaZeroMode};
use crate::constants::{estimate_local, BoxRegion, EstimationError, EstimationPolicy, LocalConstants};
use crate::systems::{SystemError, SystemModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagationError {
    #[error("step {step}: {source}")]
    Singular { step: usize, source: SystemError },
    #[error("step {step}: step region {region:?} meets the singular set")]
    SingularRegion { step: usize, region: BoxRegion },
    #[error("step {step}: trajectory escaped ({source})")]
    Escape { step: usize, source: SystemError },
    #[error("step {step}: constant estimation failed: {source}")]
    Estimation { step: usize, source: EstimationError },
    #[error("step {step}: no enclosing region after {retries} retries")]
    StepEnclosure { step: usize, retries: usize },
    #[error("invalid propagation input: {0}")]
    Input(String),
}

impl PropagationError {
    pub fn step(&self) -> Option<usize> {
        match self {
            PropagationError::Singular { step, .. }
            | PropagationError::SingularRegion { step, .. }
            | PropagationError::Escape { step, .. }
            | PropagationError::Estimation { step, .. }
            | PropagationError::StepEnclosure { step, .. } => Some(*step),
            PropagationError::Input(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationSettings {
    /// Initial inflation of the step box, in units of the current radius.
    pub kappa: f64,
    pub margin_abs: f64,
    /// Interior times per step at which the radius is checked against the box.
    pub n_sub: usize,
    pub max_retries: usize,
    pub lambda_mode: LambdaZeroMode,
}

impl Default for PropagationSettings {
    fn default() -> Self {
        PropagationSettings {
            kappa: 1.5,
            margin_abs: 1e-6,
            n_sub: 8,
            max_retries: 8,
            lambda_mode: LambdaZeroMode::Threshold,
        }
    }
}

impl PropagationSettings {
    pub fn validate(&self) -> Result<(), PropagationError> {
        if !(self.kappa >= 1.0 && self.kappa.is_finite()) {
            return Err(PropagationError::Input(format!("kappa = {}", self.kappa)));
        }
        if !(self.margin_abs >= 0.0 && self.margin_abs.is_finite()) {
            return Err(PropagationError::Input(format!("margin_abs = {}", self.margin_abs)));
        }
        if self.n_sub == 0 {
            return Err(PropagationError::Input("n_sub must be at least 1".into()));
        }
        Ok(())
    }
}

/// Counters describing how much work a propagation did.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkCounters {
    pub steps: usize,
    pub estimations: usize,
    pub retries: usize,
    pub cache_hits: usize,
}

/// Grid-time balls and the constants used for each step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tube {
    pub tau: f64,
    pub balls: Vec<Ball>,
    /// `constants[i]` was used for the step from `balls[i]` to `balls[i + 1]`.
    pub constants: Vec<LocalConstants>,
    /// Step whose end radius was not finite; the tube stops before it.
    pub blowup: Option<usize>,
}

impl Tube {
    pub fn steps(&self) -> usize {
        self.balls.len() - 1
    }

    pub fn last(&self) -> &Ball {
        self.balls.last().expect("tube always holds the initial ball")
    }

    /// Keep the first `steps` steps.
    pub fn truncated(&self, steps: usize) -> Tube {
        let steps = steps.min(self.steps());
        Tube {
            tau: self.tau,
            balls: self.balls[..=steps].to_vec(),
            constants: self.constants[..steps].to_vec(),
            blowup: None,
        }
    }

    /// `true` if `p` lies in some ball of the tube with index in `range`.
    pub fn covers_point(&self, p: &[f64], range: std::ops::RangeInclusive<usize>) -> bool {
        self.balls[range].iter().any(|b| b.contains_point(p))
    }
}

/// One Euler step of the undisturbed system.
pub fn euler_step(sys: &SystemModel, x: &[f64], tau: f64) -> Result<Vec<f64>, SystemError> {
    let f = sys.eval_nominal(x)?;
    let next: Vec<f64> = x.iter().zip(&f).map(|(xi, fi)| xi + tau * fi).collect();
    if next.iter().any(|v| !v.is_finite()) {
        return Err(SystemError::NonFinite { system: sys.name.clone(), state: x.to_vec() });
    }
    Ok(next)
}

/// Incremental propagation, so callers can inspect the tube between periods.
pub struct Propagator<'a> {
    sys: &'a SystemModel,
    policy: &'a EstimationPolicy,
    settings: &'a PropagationSettings,
    tube: Tube,
    cache: Option<LocalConstants>,
    work: WorkCounters,
}

impl<'a> Propagator<'a> {
    pub fn new(
        sys: &'a SystemModel,
        b0: Ball,
        tau: f64,
        policy: &'a EstimationPolicy,
        settings: &'a PropagationSettings,
    ) -> Result<Self, PropagationError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(PropagationError::Input(format!("tau = {tau}")));
        }
        if b0.dim() != sys.dim {
            return Err(PropagationError::Input(format!(
                "initial ball has dimension {}, system {}",
                b0.dim(),
                sys.dim
            )));
        }
        if !(b0.radius >= 0.0 && b0.radius.is_finite()) {
            return Err(PropagationError::Input(format!("initial radius {}", b0.radius)));
        }
        policy.validate().map_err(|e| PropagationError::Input(e.to_string()))?;
        settings.validate()?;
        Ok(Propagator {
            sys,
            policy,
            settings,
            tube: Tube { tau, balls: vec![b0], constants: Vec::new(), blowup: None },
            cache: None,
            work: WorkCounters::default(),
        })
    }

    pub fn tube(&self) -> &Tube {
        &self.tube
    }

    pub fn work(&self) -> WorkCounters {
        self.work
    }

    pub fn into_parts(self) -> (Tube, WorkCounters) {
        (self.tube, self.work)
    }

    pub fn blown_up(&self) -> bool {
        self.tube.blowup.is_some()
    }

    /// Advance by `n` steps, stopping early on blow-up.
    pub fn advance(&mut self, n: usize) -> Result<(), PropagationError> {
        for _ in 0..n {
            if self.blown_up() {
                break;
            }
            self.step()?;
        }
        Ok(())
    }

    fn radius_over_step(&self, r: f64, lc: &LocalConstants) -> Result<(f64, f64), BoundError> {
        let tau = self.tube.tau;
        let n_sub = self.settings.n_sub;
        let mut max_r = r;
        let mut end = r;
        for j in 1..=n_sub {
            let s = if j == n_sub { tau } else { tau * j as f64 / n_sub as f64 };
            end = delta_with_mode(r, &lc.k, s, self.settings.lambda_mode)?;
            max_r = max_r.max(end);
        }
        Ok((end, max_r))
    }

    fn estimate(&mut self, region: BoxRegion, step: usize) -> Result<LocalConstants, PropagationError> {
        self.work.estimations += 1;
        estimate_local(self.sys, &region, self.policy, step).map_err(|e| match e {
            EstimationError::SingularRegion(region) => PropagationError::SingularRegion { step, region },
            source => PropagationError::Estimation { step, source },
        })
    }

    fn step(&mut self) -> Result<(), PropagationError> {
        let i = self.tube.steps();
        let last = self.tube.last().clone();
        let next = euler_step(self.sys, &last.center, self.tube.tau).map_err(|source| match source {
            SystemError::Singular { .. } => PropagationError::Singular { step: i, source },
            source => PropagationError::Escape { step: i, source },
        })?;
        let segment = BoxRegion::bounding(&[&last.center, &next]);
        let r = last.radius;

        let mut kappa = self.settings.kappa;
        let mut candidate = self
            .cache
            .clone()
            .filter(|c| c.region.contains_box(&segment.inflate(kappa * r + self.settings.margin_abs)));
        if candidate.is_some() {
            self.work.cache_hits += 1;
        }

        for attempt in 0..=self.settings.max_retries {
            let lc = match candidate.take() {
                Some(mut c) => {
                    c.step_index = i;
                    c
                }
                None => self.estimate(segment.inflate(kappa * r + self.settings.margin_abs), i)?,
            };
            let (end, max_r) = match self.radius_over_step(r, &lc) {
                Ok(v) => v,
                Err(BoundError::BlowUp) => {
                    self.tube.blowup = Some(i);
                    return Ok(());
                }
                Err(e) => return Err(PropagationError::Input(e.to_string())),
            };
            if lc.region.contains_box(&segment.inflate(max_r)) {
                let t = tube_time(self.tube.tau, i + 1);
                self.tube.balls.push(Ball { t, center: next, radius: end });
                self.cache = Some(lc.clone());
                self.tube.constants.push(lc);
                self.work.steps += 1;
                return Ok(());
            }
            if attempt < self.settings.max_retries {
                self.work.retries += 1;
                kappa *= 2.0;
            }
        }
        Err(PropagationError::StepEnclosure { step: i, retries: self.settings.max_retries })
    }
}

/// Grid time `i * tau`, computed by multiplication so it does not drift.
pub fn tube_time(tau: f64, i: usize) -> f64 {
    tau * i as f64
}

/// Propagate `b0` for `n_steps` Euler steps with default settings.
pub fn propagate(
    sys: &SystemModel,
    b0: Ball,
    tau: f64,
    n_steps: usize,
    policy: &EstimationPolicy,
) -> Result<Tube, PropagationError> {
    propagate_with(sys, b0, tau, n_steps, policy, &PropagationSettings::default()).map(|(t, _)| t)
}

pub fn propagate_with(
    sys: &SystemModel,
    b0: Ball,
    tau: f64,
    n_steps: usize,
    policy: &EstimationPolicy,
    settings: &PropagationSettings,
) -> Result<(Tube, WorkCounters), PropagationError> {
    if n_steps == 0 {
        return Err(PropagationError::Input("n_steps must be at least 1".into()));
    }
    let mut p = Propagator::new(sys, b0, tau, policy, settings)?;
    p.advance(n_steps)?;
    Ok(p.into_parts())
}

/// Plain Euler centers `x_0 .. x_{n_steps}` (no radii).
pub fn euler_trajectory(
    sys: &SystemModel,
    x0: &[f64],
    tau: f64,
    n_steps: usize,
) -> Result<Vec<Vec<f64>>, PropagationError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(PropagationError::Input(format!("tau = {tau}")));
    }
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(x0.to_vec());
    for i in 0..n_steps {
        let next = euler_step(sys, &out[i], tau).map_err(|source| match source {
            SystemError::Singular { .. } => PropagationError::Singular { step: i, source },
            source => PropagationError::Escape { step: i, source },
        })?;
        out.push(next);
    }
    Ok(out)
}

//! Stroboscopic inclusion test, lasso certification and multi-lasso covers.
//!
//! A tube is sampled every `k` steps (period `T = k tau`). As soon as the ball at
//! `(i + 1) T` lies inside the ball at `i T`, the union of the tube balls up to
//! `(i + 1) T` is invariant: a lasso with a linear part `[0, i T]` and a looping
//! part `[i T, (i + 1) T]`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{ball_inside, Ball};
use crate::constants::EstimationPolicy;
use crate::integrator::{PropagationError, PropagationSettings, Propagator, Tube, WorkCounters};
use crate::systems::SystemModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LassoError {
    #[error("invalid lasso input: {0}")]
    Input(String),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
}

/// Shared settings of a lasso search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoSettings {
    pub eps: f64,
    pub tau: f64,
    /// `k`, with period `T = k tau`.
    pub period_steps: usize,
    pub max_periods: usize,
    pub policy: EstimationPolicy,
    pub propagation: PropagationSettings,
}

impl LassoSettings {
    pub fn period(&self) -> f64 {
        self.tau * self.period_steps as f64
    }

    pub fn validate(&self) -> Result<(), LassoError> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(LassoError::Input(format!("eps = {}", self.eps)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(LassoError::Input(format!("tau = {}", self.tau)));
        }
        if self.period_steps == 0 {
            return Err(LassoError::Input("period_steps must be at least 1".into()));
        }
        if self.max_periods == 0 {
            return Err(LassoError::Input("max_periods must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lasso {
    /// Tube over `[0, (i0 + 1) T]`.
    pub tube: Tube,
    pub source: Vec<f64>,
    pub eps: f64,
    pub period_steps: usize,
    pub i0: usize,
    /// Balls at `0, T, ..., (i0 + 1) T`.
    pub period_balls: Vec<Ball>,
}

impl Lasso {
    pub fn period(&self) -> f64 {
        self.tube.tau * self.period_steps as f64
    }

    /// Ball indices of the looping part `[i0 T, (i0 + 1) T]`.
    pub fn looping_range(&self) -> std::ops::RangeInclusive<usize> {
        self.i0 * self.period_steps..=(self.i0 + 1) * self.period_steps
    }

    /// Ball indices of the linear part `[0, i0 T]`.
    pub fn linear_range(&self) -> std::ops::RangeInclusive<usize> {
        0..=self.i0 * self.period_steps
    }

    pub fn looping_part(&self) -> &[Ball] {
        &self.tube.balls[self.looping_range()]
    }

    /// Point lies in some ball of the lasso.
    pub fn contains(&self, p: &[f64]) -> bool {
        self.tube.covers_point(p, 0..=self.tube.steps())
    }
}

/// Result of one lasso search.
#[derive(Debug, Clone, PartialEq)]
pub enum LassoOutcome {
    Certified(Lasso),
    /// No inclusion within `max_periods`; carries the full tube.
    NoInclusion(Tube),
    /// The radius stopped being finite at `step`.
    BlowUp {
        step: usize,
        tube: Tube,
    },
    /// Propagation failed; carries the tube up to the failing step.
    Stopped {
        error: PropagationError,
        tube: Tube,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoRun {
    pub outcome: LassoOutcome,
    pub work: WorkCounters,
}

fn period_balls(tube: &Tube, k: usize, periods: usize) -> Vec<Ball> {
    (0..=periods).map(|i| tube.balls[i * k].clone()).collect()
}

/// Propagate from `B(x0, eps)` period by period until the stroboscopic balls nest.
pub fn find_lasso(sys: &SystemModel, x0: &[f64], settings: &LassoSettings) -> Result<LassoRun, LassoError> {
    settings.validate()?;
    let b0 = Ball::new(0.0, x0.to_vec(), settings.eps).map_err(|e| LassoError::Input(e.to_string()))?;
    let k = settings.period_steps;
    let mut prop = Propagator::new(sys, b0, settings.tau, &settings.policy, &settings.propagation)?;

    for i in 0..settings.max_periods {
        if let Err(error) = prop.advance(k) {
            let (tube, work) = prop.into_parts();
            return Ok(LassoRun { outcome: LassoOutcome::Stopped { error, tube }, work });
        }
        if let Some(step) = prop.tube().blowup {
            let (tube, work) = prop.into_parts();
            return Ok(LassoRun { outcome: LassoOutcome::BlowUp { step, tube }, work });
        }
        let balls = &prop.tube().balls;
        let inside = ball_inside(&balls[(i + 1) * k], &balls[i * k]).map_err(|e| LassoError::Input(e.to_string()))?;
        if inside {
            let (tube, work) = prop.into_parts();
            let lasso = Lasso {
                period_balls: period_balls(&tube, k, i + 1),
                tube,
                source: x0.to_vec(),
                eps: settings.eps,
                period_steps: k,
                i0: i,
            };
            return Ok(LassoRun { outcome: LassoOutcome::Certified(lasso), work });
        }
    }
    let (tube, work) = prop.into_parts();
    Ok(LassoRun { outcome: LassoOutcome::NoInclusion(tube), work })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    NoInclusion,
    BlowUp,
    StepEnclosure,
    Singular,
    Error,
}

impl FailureKind {
    pub fn of_error(e: &LassoError) -> Self {
        match e {
            LassoError::Propagation(p) => Self::of_propagation(p),
            LassoError::Input(_) => FailureKind::Error,
        }
    }

    pub fn of_propagation(e: &PropagationError) -> Self {
        match e {
            PropagationError::StepEnclosure { .. } => FailureKind::StepEnclosure,
            PropagationError::Singular { .. } | PropagationError::SingularRegion { .. } => FailureKind::Singular,
            _ => FailureKind::Error,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifiedSource {
    pub index: usize,
    pub lasso: Lasso,
    pub work: WorkCounters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceFailure {
    pub index: usize,
    pub source: Vec<f64>,
    pub kind: FailureKind,
    pub reason: String,
    /// Tube computed before the failure, when one exists.
    pub tube: Option<Tube>,
    pub work: WorkCounters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverReport {
    pub settings: LassoSettings,
    pub lassos: Vec<CertifiedSource>,
    pub failures: Vec<SourceFailure>,
}

impl CoverReport {
    pub fn all_certified(&self) -> bool {
        self.failures.is_empty()
    }
}

fn run_source(
    sys: &SystemModel,
    index: usize,
    x0: &[f64],
    settings: &LassoSettings,
) -> Result<CertifiedSource, SourceFailure> {
    let fail =
        |kind, reason: String, tube, work| SourceFailure { index, source: x0.to_vec(), kind, reason, tube, work };
    match find_lasso(sys, x0, settings) {
        Ok(LassoRun { outcome: LassoOutcome::Certified(lasso), work }) => Ok(CertifiedSource { index, lasso, work }),
        Ok(LassoRun { outcome: LassoOutcome::NoInclusion(tube), work }) => Err(fail(
            FailureKind::NoInclusion,
            format!("no inclusion within {} periods", settings.max_periods),
            Some(tube),
            work,
        )),
        Ok(LassoRun { outcome: LassoOutcome::BlowUp { step, tube }, work }) => {
            Err(fail(FailureKind::BlowUp, format!("bound blow-up at step {step}"), Some(tube), work))
        }
        Ok(LassoRun { outcome: LassoOutcome::Stopped { error, tube }, work }) => {
            Err(fail(FailureKind::of_propagation(&error), error.to_string(), Some(tube), work))
        }
        Err(e) => Err(fail(FailureKind::of_error(&e), e.to_string(), None, WorkCounters::default())),
    }
}

/// Run [`find_lasso`] from every source on `workers` threads.
///
/// The report lists sources in input order whatever the scheduling.
pub fn cover(
    sys: &SystemModel,
    sources: &[Vec<f64>],
    settings: &LassoSettings,
    workers: usize,
) -> Result<CoverReport, LassoError> {
    if sources.is_empty() {
        return Err(LassoError::Input("source list is empty".into()));
    }
    settings.validate()?;
    if let Some(bad) = sources.iter().position(|s| s.len() != sys.dim) {
        return Err(LassoError::Input(format!(
            "source {bad} has dimension {}, system {}",
            sources[bad].len(),
            sys.dim
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| LassoError::Input(format!("worker pool: {e}")))?;
    let results: Vec<Result<CertifiedSource, SourceFailure>> =
        pool.install(|| sources.par_iter().enumerate().map(|(i, x0)| run_source(sys, i, x0, settings)).collect());
    let mut lassos = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(c) => lassos.push(c),
            Err(f) => failures.push(f),
        }
    }
    Ok(CoverReport { settings: settings.clone(), lassos, failures })
}

/// `count` points evenly spaced on a circle in the coordinate plane `plane`,
/// each coordinate perturbed by uniform noise in `[-jitter, jitter]`.
pub fn ring_sources(
    center: &[f64],
    radius: f64,
    plane: (usize, usize),
    count: usize,
    jitter: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>, LassoError> {
    let n = center.len();
    if plane.0 >= n || plane.1 >= n || plane.0 == plane.1 {
        return Err(LassoError::Input(format!("plane axes {plane:?} invalid for dimension {n}")));
    }
    if count == 0 {
        return Err(LassoError::Input("count must be at least 1".into()));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(LassoError::Input(format!("radius = {radius}")));
    }
    if !(jitter >= 0.0 && jitter.is_finite()) {
        return Err(LassoError::Input(format!("jitter = {jitter}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..count)
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / count as f64;
            let mut p = center.to_vec();
            p[plane.0] += radius * theta.cos();
            p[plane.1] += radius * theta.sin();
            if jitter > 0.0 {
                for v in p.iter_mut() {
                    *v += rng.random_range(-jitter..=jitter);
                }
            }
            p
        })
        .collect();
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::linear_system;
    use nalgebra::DMatrix;

    fn settings(eps: f64, tau: f64, k: usize, max_periods: usize) -> LassoSettings {
        LassoSettings {
            eps,
            tau,
            period_steps: k,
            max_periods,
            policy: EstimationPolicy::default(),
            propagation: PropagationSettings::default(),
        }
    }

    #[test]
    fn contracting_fixed_point_includes_at_first_period() {
        let sys = linear_system(DMatrix::from_diagonal_element(2, 2, -1.0)).unwrap();
        let run = find_lasso(&sys, &[0.0, 0.0], &settings(0.1, 0.01, 100, 5)).unwrap();
        let LassoOutcome::Certified(lasso) = run.outcome else { panic!("{:?}", run.outcome) };
        assert_eq!(lasso.i0, 0);
        assert_eq!(lasso.period_balls.len(), 2);
        assert_eq!(lasso.tube.steps(), 100);
        assert!(ball_inside(&lasso.period_balls[1], &lasso.period_balls[0]).unwrap());
        for (i, b) in lasso.period_balls.iter().enumerate() {
            assert_eq!(b, &lasso.tube.balls[i * 100]);
        }
    }

    #[test]
    fn expanding_system_never_includes() {
        let sys = linear_system(DMatrix::from_diagonal_element(1, 1, 0.5)).unwrap();
        let run = find_lasso(&sys, &[1.0], &settings(0.01, 0.01, 50, 3)).unwrap();
        let LassoOutcome::NoInclusion(tube) = run.outcome else { panic!() };
        assert_eq!(tube.steps(), 150);
    }

    #[test]
    fn rejects_bad_settings() {
        let sys = linear_system(DMatrix::from_diagonal_element(1, 1, -1.0)).unwrap();
        assert!(find_lasso(&sys, &[1.0], &settings(0.0, 0.01, 5, 3)).is_err());
        assert!(find_lasso(&sys, &[1.0], &settings(0.1, 0.01, 0, 3)).is_err());
        assert!(find_lasso(&sys, &[1.0], &settings(0.1, 0.01, 5, 0)).is_err());
        assert!(cover(&sys, &[], &settings(0.1, 0.01, 5, 3), 1).is_err());
    }

    #[test]
    fn cover_keeps_input_order() {
        let sys = linear_system(DMatrix::from_diagonal_element(2, 2, -1.0)).unwrap();
        let sources: Vec<Vec<f64>> = (0..6).map(|i| vec![0.01 * i as f64, 0.0]).collect();
        let a = cover(&sys, &sources, &settings(0.1, 0.01, 100, 6), 1).unwrap();
        let b = cover(&sys, &sources, &settings(0.1, 0.01, 100, 6), 4).unwrap();
        assert_eq!(a, b);
        let idx: Vec<usize> = a.lassos.iter().map(|c| c.index).collect();
        assert_eq!(idx, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn ring_sources_examples() {
        let pts = ring_sources(&[3.0, 0.0, 0.0], 1.0, (1, 2), 4, 0.0, 0).unwrap();
        let want = [[3.0, 1.0, 0.0], [3.0, 0.0, 1.0], [3.0, -1.0, 0.0], [3.0, 0.0, -1.0]];
        for (p, w) in pts.iter().zip(want) {
            for (a, b) in p.iter().zip(w) {
                assert!((a - b).abs() < 1e-15);
            }
        }
        let a = ring_sources(&[3.0, 0.0, 0.0], 1.0, (1, 2), 100, 0.02, 9).unwrap();
        let b = ring_sources(&[3.0, 0.0, 0.0], 1.0, (1, 2), 100, 0.02, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 100);
        assert!(ring_sources(&[0.0, 0.0], 1.0, (0, 2), 4, 0.0, 0).is_err());
        assert!(ring_sources(&[0.0, 0.0], 1.0, (0, 0), 4, 0.0, 0).is_err());
    }
}

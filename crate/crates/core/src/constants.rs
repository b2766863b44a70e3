//! Sampled estimation of the local constants `lambda`, `C` and `gamma` over boxes.
//!
//! `lambda` is the largest logarithmic norm `mu_2(J) = max eig((J + J^T)/2)` over
//! the sample set, `C = L * max ||f(y, 0)||` with `L` the largest sampled spectral
//! norm of `J`, and `gamma` bounds the disturbance coupling. The samples are a
//! full tensor grid (which includes every corner) plus seeded uniform points, so
//! the result is a pure function of the inputs.
//!
//! These are estimates, not certified optima: soundness of any tube built from
//! them is conditional on the sampled maxima being true maxima up to the
//! safety factor and margin.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::BoundConstants;
use crate::systems::{Disturbance, SystemError, SystemModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("symmetric eigenvalue iteration did not converge at {point:?}")]
    Eigen { point: Vec<f64> },
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("region {0:?} meets the singular set of the system")]
    SingularRegion(BoxRegion),
    #[error("invalid region: {0}")]
    Region(String),
    #[error("invalid estimation policy: {0}")]
    Policy(String),
    #[error("system declares a general disturbance but provides no df/dw")]
    MissingDisturbanceJacobian,
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, EstimationError> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(EstimationError::Region(format!("corner lengths {} and {}", lo.len(), hi.len())));
        }
        if lo.iter().chain(&hi).any(|v| !v.is_finite()) {
            return Err(EstimationError::Region("non-finite corner".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(EstimationError::Region(format!("lo {lo:?} exceeds hi {hi:?}")));
        }
        Ok(BoxRegion { lo, hi })
    }

    /// Smallest box containing all `points`.
    pub fn bounding(points: &[&[f64]]) -> Self {
        let n = points[0].len();
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for p in points {
            for i in 0..n {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        BoxRegion { lo, hi }
    }

    pub fn inflate(&self, by: f64) -> Self {
        BoxRegion { lo: self.lo.iter().map(|v| v - by).collect(), hi: self.hi.iter().map(|v| v + by).collect() }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains_point(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().enumerate().all(|(i, v)| self.lo[i] <= *v && *v <= self.hi[i])
    }

    pub fn contains_box(&self, other: &BoxRegion) -> bool {
        other.dim() == self.dim() && (0..self.dim()).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i])
    }

    /// Tensor grid with `per_axis` points on each axis (corners included).
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let n = self.dim();
        let axes: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                if per_axis < 2 || self.lo[i] == self.hi[i] {
                    vec![0.5 * (self.lo[i] + self.hi[i])]
                } else {
                    let step = (self.hi[i] - self.lo[i]) / (per_axis - 1) as f64;
                    (0..per_axis)
                        .map(|k| if k + 1 == per_axis { self.hi[i] } else { self.lo[i] + step * k as f64 })
                        .collect()
                }
            })
            .collect();
        let total: usize = axes.iter().map(Vec::len).product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; n];
        for _ in 0..total {
            out.push((0..n).map(|i| axes[i][idx[i]]).collect());
            for i in 0..n {
                idx[i] += 1;
                if idx[i] < axes[i].len() {
                    break;
                }
                idx[i] = 0;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimationPolicy {
    /// Grid points per axis (at least 2, so corners are always sampled).
    pub samples_grid: usize,
    pub samples_random: usize,
    pub seed: u64,
    /// Multiplies `|estimate|` (at least 1).
    pub safety_factor: f64,
    /// Added to `lambda`.
    pub safety_margin: f64,
}

impl Default for EstimationPolicy {
    fn default() -> Self {
        EstimationPolicy { samples_grid: 3, samples_random: 8, seed: 0, safety_factor: 1.05, safety_margin: 1e-6 }
    }
}

impl EstimationPolicy {
    /// Plain sampled maxima, no inflation.
    pub fn exact(samples_grid: usize) -> Self {
        EstimationPolicy { samples_grid, samples_random: 0, seed: 0, safety_factor: 1.0, safety_margin: 0.0 }
    }

    pub fn validate(&self) -> Result<(), EstimationError> {
        if self.samples_grid < 2 {
            return Err(EstimationError::Policy(format!("samples_grid = {} < 2", self.samples_grid)));
        }
        if !(self.safety_factor >= 1.0 && self.safety_factor.is_finite()) {
            return Err(EstimationError::Policy(format!("safety_factor = {}", self.safety_factor)));
        }
        if !(self.safety_margin >= 0.0 && self.safety_margin.is_finite()) {
            return Err(EstimationError::Policy(format!("safety_margin = {}", self.safety_margin)));
        }
        Ok(())
    }

    fn inflate_lambda(&self, lambda: f64) -> f64 {
        lambda + (self.safety_factor - 1.0) * lambda.abs() + self.safety_margin
    }

    fn inflate_magnitude(&self, v: f64) -> f64 {
        self.safety_factor * v
    }
}

/// Constants certified (up to sampling) on one step region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalConstants {
    pub region: BoxRegion,
    pub k: BoundConstants,
    pub step_index: usize,
}

/// Largest eigenvalue of the symmetric part of `j`.
pub fn log_norm(j: &DMatrix<f64>) -> Option<f64> {
    let sym = (j + j.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 1000)?;
    eig.eigenvalues.iter().copied().reduce(f64::max)
}

/// Spectral norm (largest singular value) of `j`.
pub fn spectral_norm(j: &DMatrix<f64>) -> Option<f64> {
    let gram = j.transpose() * j;
    let eig = SymmetricEigen::try_new(gram, f64::EPSILON, 1000)?;
    eig.eigenvalues.iter().copied().reduce(f64::max).map(|v| v.max(0.0).sqrt())
}

fn sample_points(r: &BoxRegion, p: &EstimationPolicy) -> Vec<Vec<f64>> {
    let mut points = r.grid(p.samples_grid);
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    for _ in 0..p.samples_random {
        let x = (0..r.dim())
            .map(|i| {
                let u: f64 = rng.random();
                r.lo[i] + u * (r.hi[i] - r.lo[i])
            })
            .collect();
        points.push(x);
    }
    points
}

fn prepare(sys: &SystemModel, r: &BoxRegion, p: &EstimationPolicy) -> Result<Vec<Vec<f64>>, EstimationError> {
    p.validate()?;
    if r.dim() != sys.dim {
        return Err(EstimationError::Region(format!("region has dimension {}, system {}", r.dim(), sys.dim)));
    }
    if sys.box_meets_singular(r) {
        return Err(EstimationError::SingularRegion(r.clone()));
    }
    Ok(sample_points(r, p))
}

/// Disturbance values at which `J_x` is sampled: zero for additive/none, the
/// corners of `W` for a general disturbance.
fn disturbance_samples(d: &Disturbance) -> Vec<Vec<f64>> {
    match d {
        Disturbance::General { lo, hi } => {
            let w = BoxRegion { lo: lo.clone(), hi: hi.clone() };
            w.grid(2)
        }
        _ => vec![d.zero()],
    }
}

struct Sampled {
    lambda: f64,
    lipschitz: f64,
    field_norm: f64,
}

fn sample_all(sys: &SystemModel, points: &[Vec<f64>]) -> Result<Sampled, EstimationError> {
    let ws = disturbance_samples(&sys.disturbance);
    let zero = sys.disturbance.zero();
    let mut out = Sampled { lambda: f64::NEG_INFINITY, lipschitz: 0.0, field_norm: 0.0 };
    for x in points {
        for w in &ws {
            let j = sys.jacobian(x, w)?;
            let mu = log_norm(&j).ok_or_else(|| EstimationError::Eigen { point: x.clone() })?;
            let l = spectral_norm(&j).ok_or_else(|| EstimationError::Eigen { point: x.clone() })?;
            out.lambda = out.lambda.max(mu);
            out.lipschitz = out.lipschitz.max(l);
        }
        let f = sys.eval(x, &zero)?;
        out.field_norm = out.field_norm.max(f.iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    Ok(out)
}

/// Upper estimate of the one-sided Lipschitz constant on `r`.
pub fn estimate_lambda(sys: &SystemModel, r: &BoxRegion, p: &EstimationPolicy) -> Result<f64, EstimationError> {
    let points = prepare(sys, r, p)?;
    let ws = disturbance_samples(&sys.disturbance);
    let mut lambda = f64::NEG_INFINITY;
    for x in &points {
        for w in &ws {
            let j = sys.jacobian(x, w)?;
            let mu = log_norm(&j).ok_or_else(|| EstimationError::Eigen { point: x.clone() })?;
            lambda = lambda.max(mu);
        }
    }
    Ok(p.inflate_lambda(lambda))
}

/// Upper estimate of `C = sup L ||f(y, 0)||` on `r`.
pub fn estimate_c(sys: &SystemModel, r: &BoxRegion, p: &EstimationPolicy) -> Result<f64, EstimationError> {
    let points = prepare(sys, r, p)?;
    let s = sample_all(sys, &points)?;
    Ok(p.inflate_magnitude(s.lipschitz * s.field_norm))
}

/// Disturbance coupling `gamma` on `r`.
pub fn estimate_gamma(sys: &SystemModel, r: &BoxRegion, p: &EstimationPolicy) -> Result<f64, EstimationError> {
    match &sys.disturbance {
        Disturbance::None => {
            p.validate()?;
            Ok(0.0)
        }
        // <(w1 - w2) 1, y1 - y2> <= sqrt(n) |w1 - w2| ||y1 - y2||
        Disturbance::AdditiveAll { .. } => {
            p.validate()?;
            Ok((sys.dim as f64).sqrt())
        }
        Disturbance::General { lo, hi } => {
            let points = prepare(sys, r, p)?;
            let w_box = BoxRegion { lo: lo.clone(), hi: hi.clone() };
            let ws = w_box.grid(p.samples_grid);
            let mut gamma: f64 = 0.0;
            for x in &points {
                for w in &ws {
                    let jw = sys.dynamics().jacobian_w(x, w).ok_or(EstimationError::MissingDisturbanceJacobian)?;
                    let norm = spectral_norm(&jw).ok_or_else(|| EstimationError::Eigen { point: x.clone() })?;
                    gamma = gamma.max(norm);
                }
            }
            Ok(p.inflate_magnitude(gamma))
        }
    }
}

/// All constants for one step region, sharing one pass over the samples.
pub fn estimate_local(
    sys: &SystemModel,
    r: &BoxRegion,
    p: &EstimationPolicy,
    step_index: usize,
) -> Result<LocalConstants, EstimationError> {
    let points = prepare(sys, r, p)?;
    let s = sample_all(sys, &points)?;
    let gamma = estimate_gamma(sys, r, p)?;
    let k = BoundConstants {
        lambda: p.inflate_lambda(s.lambda),
        c: p.inflate_magnitude(s.lipschitz * s.field_norm),
        gamma,
        w_diam: sys.disturbance.diameter(),
    };
    Ok(LocalConstants { region: r.clone(), k, step_index })
}

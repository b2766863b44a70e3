//! Bundled dynamical systems with analytic Jacobians.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::BoxRegion;

/// States closer than this to a singular set are rejected.
pub const SINGULAR_GUARD: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("{system}: state {state:?} is within {guard:e} of the singular set")]
    Singular { system: String, state: Vec<f64>, guard: f64 },
    #[error("{system}: vector field is not finite at {state:?}")]
    NonFinite { system: String, state: Vec<f64> },
    #[error("{system}: expected a {expected}-vector, got {got}")]
    Dimension { system: String, expected: usize, got: usize },
    #[error("invalid system definition: {0}")]
    Invalid(String),
}

/// Structure of the bounded disturbance `w(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Disturbance {
    None,
    /// Scalar `w in [-half_width, half_width]` added to every component.
    AdditiveAll {
        half_width: f64,
    },
    /// General `w` in an axis-aligned box, entering through `Dynamics::jacobian_w`.
    General {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

impl Disturbance {
    /// Number of disturbance coordinates.
    pub fn dim(&self) -> usize {
        match self {
            Disturbance::None => 0,
            Disturbance::AdditiveAll { .. } => 1,
            Disturbance::General { lo, .. } => lo.len(),
        }
    }

    /// `|W|`, the largest distance between two admissible disturbance values.
    pub fn diameter(&self) -> f64 {
        match self {
            Disturbance::None => 0.0,
            Disturbance::AdditiveAll { half_width } => 2.0 * half_width,
            Disturbance::General { lo, hi } => crate::bounds::distance(lo, hi),
        }
    }

    pub fn zero(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Disturbance::None => (vec![], vec![]),
            Disturbance::AdditiveAll { half_width } => (vec![-half_width], vec![*half_width]),
            Disturbance::General { lo, hi } => (lo.clone(), hi.clone()),
        }
    }
}

/// The equations of a system. `w` has `Disturbance::dim()` entries.
pub trait Dynamics: Send + Sync {
    fn field(&self, x: &[f64], w: &[f64], out: &mut [f64]);

    /// `df/dx` at `(x, w)`, written into a preallocated `n x n` matrix.
    fn jacobian(&self, x: &[f64], w: &[f64], out: &mut DMatrix<f64>);

    /// `df/dw`; only needed for `Disturbance::General`.
    fn jacobian_w(&self, _x: &[f64], _w: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    /// Euclidean distance from `x` to the set where `f` is undefined.
    fn singular_distance(&self, _x: &[f64]) -> f64 {
        f64::INFINITY
    }

    /// Whether a box touches the singular set.
    fn box_meets_singular(&self, _region: &BoxRegion) -> bool {
        false
    }
}

/// A named system: equations, parameters and disturbance description.
#[derive(Clone)]
pub struct SystemModel {
    pub name: String,
    pub dim: usize,
    pub params: BTreeMap<String, f64>,
    pub disturbance: Disturbance,
    dynamics: Arc<dyn Dynamics>,
}

impl fmt::Debug for SystemModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemModel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("params", &self.params)
            .field("disturbance", &self.disturbance)
            .finish()
    }
}

impl SystemModel {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        params: BTreeMap<String, f64>,
        disturbance: Disturbance,
        dynamics: Arc<dyn Dynamics>,
    ) -> Self {
        SystemModel { name: name.into(), dim, params, disturbance, dynamics }
    }

    pub fn dynamics(&self) -> &dyn Dynamics {
        self.dynamics.as_ref()
    }

    /// Same equations with a different disturbance set.
    pub fn with_disturbance(&self, disturbance: Disturbance) -> Self {
        SystemModel { disturbance, ..self.clone() }
    }

    /// Additive disturbance of half-width `a` (or none when `a == 0`).
    pub fn with_additive_half_width(&self, a: f64) -> Self {
        if a == 0.0 {
            self.with_disturbance(Disturbance::None)
        } else {
            self.with_disturbance(Disturbance::AdditiveAll { half_width: a })
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), SystemError> {
        if x.len() != self.dim {
            return Err(SystemError::Dimension { system: self.name.clone(), expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    fn guard(&self, x: &[f64]) -> Result<(), SystemError> {
        self.check_dim(x)?;
        if self.dynamics.singular_distance(x) < SINGULAR_GUARD {
            return Err(SystemError::Singular { system: self.name.clone(), state: x.to_vec(), guard: SINGULAR_GUARD });
        }
        Ok(())
    }

    /// `f(x, w)`, checked against the singular set and for finiteness.
    pub fn eval(&self, x: &[f64], w: &[f64]) -> Result<Vec<f64>, SystemError> {
        self.guard(x)?;
        let mut out = vec![0.0; self.dim];
        self.dynamics.field(x, w, &mut out);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(SystemError::NonFinite { system: self.name.clone(), state: x.to_vec() });
        }
        Ok(out)
    }

    /// `f(x, 0)`.
    pub fn eval_nominal(&self, x: &[f64]) -> Result<Vec<f64>, SystemError> {
        self.eval(x, &self.disturbance.zero())
    }

    pub fn jacobian(&self, x: &[f64], w: &[f64]) -> Result<DMatrix<f64>, SystemError> {
        self.guard(x)?;
        let mut j = DMatrix::zeros(self.dim, self.dim);
        self.dynamics.jacobian(x, w, &mut j);
        if j.iter().any(|v| !v.is_finite()) {
            return Err(SystemError::NonFinite { system: self.name.clone(), state: x.to_vec() });
        }
        Ok(j)
    }

    pub fn box_meets_singular(&self, region: &BoxRegion) -> bool {
        self.dynamics.box_meets_singular(region)
    }
}

fn interval_contains_zero(lo: f64, hi: f64) -> bool {
    lo <= SINGULAR_GUARD && hi >= -SINGULAR_GUARD
}

struct ForcedVdp {
    mu: f64,
}

impl Dynamics for ForcedVdp {
    fn field(&self, x: &[f64], w: &[f64], out: &mut [f64]) {
        let (x1, x2, x3) = (x[0], x[1], x[2]);
        let w = w.first().copied().unwrap_or(0.0);
        let r = x1.hypot(x2);
        let rho = r - 3.0;
        let g = self.mu - rho * rho - x3 * x3;
        out[0] = x1 * rho / r * g - (x2 * x2 + x1 * x3) / r + w;
        out[1] = x2 * rho / r * g + (x1 * x2 - x2 * x3) / r + w;
        out[2] = rho + self.mu * x3 - x3 * (rho * rho + x3 * x3) + w;
    }

    fn jacobian(&self, x: &[f64], _w: &[f64], j: &mut DMatrix<f64>) {
        let (x1, x2, x3) = (x[0], x[1], x[2]);
        let r = x1.hypot(x2);
        let r3 = r * r * r;
        let rho = r - 3.0;
        let h = rho / r;
        let g = self.mu - rho * rho - x3 * x3;
        // d(h g)/dx_i = (3 g / r^3 - 2 rho h / r) x_i for i = 1, 2
        let dhg = 3.0 * g / r3 - 2.0 * rho * h / r;
        let p = x2 * x2 + x1 * x3;
        let q = x1 * x2 - x2 * x3;

        j[(0, 0)] = h * g + x1 * x1 * dhg - (x3 / r - p * x1 / r3);
        j[(0, 1)] = x1 * x2 * dhg - (2.0 * x2 / r - p * x2 / r3);
        j[(0, 2)] = -2.0 * x1 * h * x3 - x1 / r;

        j[(1, 0)] = x1 * x2 * dhg + (x2 / r - q * x1 / r3);
        j[(1, 1)] = h * g + x2 * x2 * dhg + ((x1 - x3) / r - q * x2 / r3);
        j[(1, 2)] = -2.0 * x2 * h * x3 - x2 / r;

        let s = 1.0 - 2.0 * rho * x3;
        j[(2, 0)] = x1 / r * s;
        j[(2, 1)] = x2 / r * s;
        j[(2, 2)] = self.mu - rho * rho - 3.0 * x3 * x3;
    }

    fn singular_distance(&self, x: &[f64]) -> f64 {
        x[0].hypot(x[1])
    }

    fn box_meets_singular(&self, region: &BoxRegion) -> bool {
        interval_contains_zero(region.lo[0], region.hi[0]) && interval_contains_zero(region.lo[1], region.hi[1])
    }
}

/// Forced Van der Pol system in R^3 with additive disturbance on every equation.
///
/// Default disturbance is `W = [-0.001, 0.001]`.
pub fn forced_vdp(mu: f64) -> SystemModel {
    let params = BTreeMap::from([("mu".to_string(), mu)]);
    SystemModel::new("forced_vdp", 3, params, Disturbance::AdditiveAll { half_width: 1e-3 }, Arc::new(ForcedVdp { mu }))
}

struct CoupledVdp {
    alpha1: f64,
    alpha2: f64,
    beta1: f64,
    beta2: f64,
    mu: f64,
}

impl Dynamics for CoupledVdp {
    fn field(&self, x: &[f64], w: &[f64], out: &mut [f64]) {
        let (t1, t2, r1, r2) = (x[0], x[1], x[2], x[3]);
        let w = w.first().copied().unwrap_or(0.0);
        let mu = self.mu;
        let cos_sum = (t1 + t2).cos();
        let s1 = (t1 - t2).sin() + cos_sum;
        let s2 = (t2 - t1).sin() + cos_sum;
        let a = (t1 + t2).sin() - (t1 - t2).cos();
        out[0] = self.beta1 + mu * ((2.0 * t1).cos() - r2 / r1 * s1) + w;
        out[1] = self.beta2 + mu * ((2.0 * t2).cos() - r1 / r2 * s2) + w;
        out[2] = r1 * (self.alpha1 - r1 * r1) + mu * (r1 * (1.0 - (2.0 * t1).sin()) + a * r2) + w;
        out[3] = r2 * (self.alpha2 - r2 * r2) + mu * (r2 * (1.0 - (2.0 * t2).sin()) + a * r1) + w;
    }

    fn jacobian(&self, x: &[f64], _w: &[f64], j: &mut DMatrix<f64>) {
        let (t1, t2, r1, r2) = (x[0], x[1], x[2], x[3]);
        let mu = self.mu;
        let (sin_d, cos_d) = (t1 - t2).sin_cos();
        let (sin_s, cos_s) = (t1 + t2).sin_cos();
        let s1 = sin_d + cos_s;
        let s2 = -sin_d + cos_s;
        let a = sin_s - cos_d;
        let ds1 = [cos_d - sin_s, -cos_d - sin_s];
        let ds2 = [-cos_d - sin_s, cos_d - sin_s];
        let da = [cos_s + sin_d, cos_s - sin_d];

        j[(0, 0)] = mu * (-2.0 * (2.0 * t1).sin() - r2 / r1 * ds1[0]);
        j[(0, 1)] = -mu * r2 / r1 * ds1[1];
        j[(0, 2)] = mu * r2 / (r1 * r1) * s1;
        j[(0, 3)] = -mu * s1 / r1;

        j[(1, 0)] = -mu * r1 / r2 * ds2[0];
        j[(1, 1)] = mu * (-2.0 * (2.0 * t2).sin() - r1 / r2 * ds2[1]);
        j[(1, 2)] = -mu * s2 / r2;
        j[(1, 3)] = mu * r1 / (r2 * r2) * s2;

        j[(2, 0)] = mu * (-2.0 * r1 * (2.0 * t1).cos() + r2 * da[0]);
        j[(2, 1)] = mu * r2 * da[1];
        j[(2, 2)] = self.alpha1 - 3.0 * r1 * r1 + mu * (1.0 - (2.0 * t1).sin());
        j[(2, 3)] = mu * a;

        j[(3, 0)] = mu * r1 * da[0];
        j[(3, 1)] = mu * (-2.0 * r2 * (2.0 * t2).cos() + r1 * da[1]);
        j[(3, 2)] = mu * a;
        j[(3, 3)] = self.alpha2 - 3.0 * r2 * r2 + mu * (1.0 - (2.0 * t2).sin());
    }

    fn singular_distance(&self, x: &[f64]) -> f64 {
        x[2].abs().min(x[3].abs())
    }

    fn box_meets_singular(&self, region: &BoxRegion) -> bool {
        interval_contains_zero(region.lo[2], region.hi[2]) || interval_contains_zero(region.lo[3], region.hi[3])
    }
}

/// Two coupled Van der Pol oscillators in polar form, state `(theta1, theta2, r1, r2)`.
///
/// Angles are not wrapped. Default disturbance is `W = [-1e-4, 1e-4]`.
pub fn coupled_vdp(alpha1: f64, alpha2: f64, beta1: f64, beta2: f64, mu: f64) -> SystemModel {
    let params = BTreeMap::from([
        ("alpha1".to_string(), alpha1),
        ("alpha2".to_string(), alpha2),
        ("beta1".to_string(), beta1),
        ("beta2".to_string(), beta2),
        ("mu".to_string(), mu),
    ]);
    SystemModel::new(
        "coupled_vdp",
        4,
        params,
        Disturbance::AdditiveAll { half_width: 1e-4 },
        Arc::new(CoupledVdp { alpha1, alpha2, beta1, beta2, mu }),
    )
}

struct Linear {
    a: DMatrix<f64>,
}

impl Dynamics for Linear {
    fn field(&self, x: &[f64], w: &[f64], out: &mut [f64]) {
        let w = w.first().copied().unwrap_or(0.0);
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..x.len()).map(|k| self.a[(i, k)] * x[k]).sum::<f64>() + w;
        }
    }

    fn jacobian(&self, _x: &[f64], _w: &[f64], j: &mut DMatrix<f64>) {
        j.copy_from(&self.a);
    }
}

/// `x' = A x (+ w 1)`. Built without disturbance; use `with_additive_half_width`.
pub fn linear_system(a: DMatrix<f64>) -> Result<SystemModel, SystemError> {
    if !a.is_square() || a.nrows() == 0 {
        return Err(SystemError::Invalid(format!("matrix must be square, got {}x{}", a.nrows(), a.ncols())));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(SystemError::Invalid("matrix has non-finite entries".into()));
    }
    let n = a.nrows();
    Ok(SystemModel::new("linear", n, BTreeMap::new(), Disturbance::None, Arc::new(Linear { a })))
}

/// [`linear_system`] from row-major rows.
pub fn linear_system_from_rows(rows: &[Vec<f64>]) -> Result<SystemModel, SystemError> {
    let n = rows.len();
    if let Some(r) = rows.iter().find(|r| r.len() != n) {
        return Err(SystemError::Invalid(format!(
            "matrix must be square, got a row of length {} in {n} rows",
            r.len()
        )));
    }
    linear_system(DMatrix::from_row_iterator(n, n, rows.iter().flatten().copied()))
}

/// Default settings for a bundled system, as used by the shipped scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDefaults {
    pub x0: Vec<f64>,
    pub eps: f64,
    pub tau: f64,
    pub period_steps: usize,
    pub w_half_width: f64,
}

pub fn forced_vdp_defaults() -> ScenarioDefaults {
    ScenarioDefaults {
        x0: vec![4.0, -1e-3, -4.8985872e-16],
        eps: 0.05,
        tau: 1e-3,
        period_steps: 6283,
        w_half_width: 1e-3,
    }
}

pub fn coupled_vdp_defaults() -> ScenarioDefaults {
    ScenarioDefaults {
        x0: COUPLED_VDP_SOURCES[0].to_vec(),
        eps: 0.1,
        tau: 1e-3,
        period_steps: 11425,
        w_half_width: 1e-4,
    }
}

/// Source points near the repulsive circle of the coupled oscillators
/// (`alpha = 1`, `beta = 0.55`, `mu = 0.2601`).
#[allow(clippy::approx_constant)]
pub const COUPLED_VDP_SOURCES: [[f64; 4]; 10] = [
    [0.0, 3.14159265, 1.05980274, 1.02028354],
    [0.62831853, 3.76991118, 0.95715177, 1.08632695],
    [1.25663706, 4.39822972, 1.03960697, 0.93217529],
    [1.88495559, 5.02654825, 0.99657, 1.09545089],
    [2.51327412, 5.65486678, 1.02811851, 1.0178553],
    [3.14159265, 0.0, 1.08476381, 0.97121437],
    [3.76991118, 0.62831853, 0.97369993, 0.93966289],
    [4.39822972, 1.25663706, 1.05513594, 1.00555761],
    [5.02654825, 1.88495559, 0.98407245, 1.09722914],
    [5.65486678, 2.51327412, 0.98484401, 0.93636707],
];

/// Wrap an angle into `[0, 2 pi)`; for export only.
pub fn wrap_angle(theta: f64) -> f64 {
    theta.rem_euclid(2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd_jacobian(sys: &SystemModel, x: &[f64]) -> DMatrix<f64> {
        let h = 1e-6;
        let n = sys.dim;
        let w = sys.disturbance.zero();
        let mut j = DMatrix::zeros(n, n);
        for k in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += h;
            xm[k] -= h;
            let fp = sys.eval(&xp, &w).unwrap();
            let fm = sys.eval(&xm, &w).unwrap();
            for i in 0..n {
                j[(i, k)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        j
    }

    fn assert_jacobian_matches(sys: &SystemModel, x: &[f64]) {
        let an = sys.jacobian(x, &sys.disturbance.zero()).unwrap();
        let fd = fd_jacobian(sys, x);
        let scale = an.norm().max(1.0);
        let err = (&an - &fd).norm();
        assert!(err <= 1e-4 * scale, "{} at {x:?}: err {err}, scale {scale}\n{an}\n{fd}", sys.name);
    }

    #[test]
    fn forced_vdp_hand_values() {
        let sys = forced_vdp(1.0);
        let f = sys.eval_nominal(&[4.0, 0.0, 0.0]).unwrap();
        assert_eq!(f, vec![0.0, 0.0, 1.0]);
        let f = sys.eval_nominal(&[3.0, 0.0, 0.0]).unwrap();
        assert!(f.iter().all(|v| v.abs() < 1e-15), "{f:?}");
    }

    #[test]
    fn forced_vdp_jacobian_matches_finite_differences() {
        let sys = forced_vdp(1.0);
        assert_jacobian_matches(&sys, &[4.0, 0.1, 0.1]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 1000 {
            let x: [f64; 3] = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-2.0..2.0)];
            if x[0].hypot(x[1]) < 0.5 {
                continue;
            }
            assert_jacobian_matches(&sys, &x);
            checked += 1;
        }
    }

    #[test]
    fn forced_vdp_radial_part_is_rotation_invariant() {
        // In (r, phi, x3): r' and x3' do not depend on phi, and phi' = sin(phi).
        let sys = forced_vdp(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let r: f64 = rng.random_range(2.0..4.5);
            let phi: f64 = rng.random_range(-PI..PI);
            let shift: f64 = rng.random_range(-PI..PI);
            let x3: f64 = rng.random_range(-1.5..1.5);
            let polar = |angle: f64| {
                let x = [r * angle.cos(), r * angle.sin(), x3];
                let f = sys.eval_nominal(&x).unwrap();
                let r_dot = (x[0] * f[0] + x[1] * f[1]) / r;
                let phi_dot = (x[0] * f[1] - x[1] * f[0]) / (r * r);
                (r_dot, phi_dot, f[2])
            };
            let (r_dot, phi_dot, x3_dot) = polar(phi);
            let (r_dot_s, phi_dot_s, x3_dot_s) = polar(phi + shift);
            assert!((r_dot - r_dot_s).abs() < 1e-12);
            assert!((x3_dot - x3_dot_s).abs() < 1e-12);
            assert!((phi_dot - phi.sin()).abs() < 1e-12);
            assert!((phi_dot_s - (phi + shift).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_axis_is_rejected() {
        let sys = forced_vdp(1.0);
        assert!(matches!(sys.eval_nominal(&[0.0, 0.0, 1.0]), Err(SystemError::Singular { .. })));
        assert!(matches!(sys.eval_nominal(&[1e-10, 0.0, 1.0]), Err(SystemError::Singular { .. })));
        assert!(sys.eval_nominal(&[1e-8, 0.0, 1.0]).is_ok());
        let c = coupled_vdp(1.0, 1.0, 0.55, 0.55, 0.2601);
        assert!(matches!(c.eval_nominal(&[0.0, 0.0, 1.0, 0.0]), Err(SystemError::Singular { .. })));
        assert!(matches!(c.jacobian(&[0.0, 0.0, 0.0, 1.0], &[0.0]), Err(SystemError::Singular { .. })));
    }

    #[test]
    fn coupled_vdp_decouples_at_zero_coupling() {
        let sys = coupled_vdp(1.0, 1.0, 0.55, 0.7, 0.0);
        let f = sys.eval_nominal(&[0.3, 2.0, 1.0, 1.0]).unwrap();
        assert_eq!(f, vec![0.55, 0.7, 0.0, 0.0]);
    }

    #[test]
    fn coupling_term_at_origin_angles() {
        // A = sin(0) - cos(0) = -1 enters r1' as mu * A * r2.
        let mu = 0.3;
        let sys = coupled_vdp(1.0, 1.0, 0.55, 0.55, mu);
        let f = sys.eval_nominal(&[0.0, 0.0, 1.0, 2.0]).unwrap();
        // r1(1 - r1^2) + mu (r1 (1 - 0) + A r2) = 0 + mu (1 - 2)
        assert!((f[2] - mu * (1.0 - 2.0)).abs() < 1e-15);
    }

    #[test]
    fn coupled_vdp_jacobian_matches_finite_differences() {
        let sys = coupled_vdp(1.0, 1.0, 0.55, 0.55, 0.2601);
        assert_jacobian_matches(&sys, &COUPLED_VDP_SOURCES[0]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x = [
                rng.random_range(-7.0..7.0),
                rng.random_range(-7.0..7.0),
                rng.random_range(0.3..2.0),
                rng.random_range(0.3..2.0),
            ];
            assert_jacobian_matches(&sys, &x);
        }
    }

    #[test]
    fn linear_system_field_and_jacobian() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let sys = linear_system(a.clone()).unwrap();
        assert_eq!(sys.eval_nominal(&[1.0, 2.0]).unwrap(), vec![2.0, -1.0]);
        assert_eq!(sys.jacobian(&[5.0, 5.0], &[]).unwrap(), a);
        let zero = linear_system(DMatrix::zeros(2, 2)).unwrap().with_additive_half_width(0.5);
        assert_eq!(zero.eval(&[3.0, 4.0], &[0.25]).unwrap(), vec![0.25, 0.25]);
        assert_eq!(zero.disturbance.diameter(), 1.0);
        assert!(linear_system(DMatrix::zeros(2, 3)).is_err());
        assert!(linear_system(DMatrix::from_element(1, 1, f64::NAN)).is_err());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let sys = forced_vdp(1.0);
        assert!(matches!(sys.eval_nominal(&[1.0, 2.0]), Err(SystemError::Dimension { .. })));
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(-0.5) - (2.0 * PI - 0.5)).abs() < 1e-15);
        assert_eq!(wrap_angle(0.0), 0.0);
        assert!(wrap_angle(7.0) < 2.0 * PI);
    }
}

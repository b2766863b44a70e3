//! Certified Euler error radius and elementary ball geometry.
//!
//! The radius `delta(eps, k, t)` bounds, for `t` in one Euler step `[0, tau]`,
//! the distance between any exact solution started in `B(x0, eps)` (under any
//! admissible disturbance) and the nominal Euler point `x0 + t f(x0, 0)`.
//!
//! All three branches share one shape once the exponentials are expanded:
//!
//! ```text
//! delta^2 = eps^2 e^a + (1/s) [ 2 C^2 t^3 phi3(a) + C gamma |W| t^2 phi2(a)
//!                               + gamma^2 (|W|/2)^2 t phi1(a) ]
//! ```
//!
//! with `(a, s) = (lambda t, -lambda)` for `lambda < 0`, `(3 lambda t, lambda)`
//! for `lambda > 0` and `(t, 1)` for the literal `lambda = 0` formula, where
//! `phi_k(a) = (e^a - sum_{j<k} a^j / j!) / a^k`. Evaluating `phi_k` by series
//! near zero keeps the radius accurate when `|lambda t|` is tiny, which is the
//! normal regime (`tau = 1e-3`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Width of the band around zero where `lambda` is treated as zero.
pub const LAMBDA_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("certified radius is not finite (bound blow-up)")]
    BlowUp,
    #[error("invalid bound input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// How `delta` treats a one-sided Lipschitz constant inside `(-LAMBDA_TOL, LAMBDA_TOL)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaZeroMode {
    /// Round `lambda` up to `+LAMBDA_TOL` and use the `lambda > 0` branch.
    #[default]
    Threshold,
    /// Use the printed `lambda = 0` formula (bare `e^t` terms).
    Paper,
}

/// A closed Euclidean ball tagged with the time it encloses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub t: f64,
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(t: f64, center: Vec<f64>, radius: f64) -> Result<Self, BoundError> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(BoundError::InvalidInput(format!("ball time {t}")));
        }
        if radius.is_nan() || radius < 0.0 {
            return Err(BoundError::InvalidInput(format!("ball radius {radius}")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(BoundError::InvalidInput("non-finite ball center".into()));
        }
        Ok(Ball { t, center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn contains_point(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && distance(&self.center, p) <= self.radius
    }
}

/// Constants entering the radius formula for one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    /// One-sided Lipschitz constant (upper bound).
    pub lambda: f64,
    /// `sup L ||f||` over the step region.
    pub c: f64,
    /// Disturbance coupling.
    pub gamma: f64,
    /// Diameter of the disturbance set.
    pub w_diam: f64,
}

impl BoundConstants {
    pub fn nominal(lambda: f64, c: f64) -> Self {
        BoundConstants { lambda, c, gamma: 0.0, w_diam: 0.0 }
    }

    pub fn validate(&self) -> Result<(), BoundError> {
        let ok = self.lambda.is_finite()
            && self.c.is_finite()
            && self.gamma.is_finite()
            && self.w_diam.is_finite()
            && self.c >= 0.0
            && self.gamma >= 0.0
            && self.w_diam >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(BoundError::InvalidInput(format!("bound constants {self:?}")))
        }
    }
}

/// `phi_k(a) = (e^a - sum_{j<k} a^j/j!) / a^k`, for k in 1..=3.
pub(crate) fn phi(k: u32, a: f64) -> f64 {
    if a.abs() < 0.25 {
        // sum_{j>=0} a^j / (j+k)!
        let mut term = 1.0 / factorial(k);
        let mut sum = term;
        for j in 1..24 {
            term *= a / f64::from(j + k);
            sum += term;
        }
        return sum;
    }
    let em1 = a.exp_m1();
    match k {
        1 => em1 / a,
        2 => (em1 - a) / (a * a),
        3 => (em1 - a - 0.5 * a * a) / (a * a * a),
        _ => unreachable!("phi order {k}"),
    }
}

/// `e^{-a} phi_k(a)`, finite for large positive `a`.
fn phi_scaled(k: u32, a: f64) -> f64 {
    let e = (-a).exp();
    match k {
        1 => (1.0 - e) / a,
        2 => (1.0 - e * (1.0 + a)) / (a * a),
        3 => (1.0 - e * (1.0 + a + 0.5 * a * a)) / (a * a * a),
        _ => unreachable!("phi order {k}"),
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn radius_from_parts(eps: f64, k: &BoundConstants, t: f64, a: f64, s: f64) -> Result<f64, BoundError> {
    let hw = 0.5 * k.w_diam;
    let c_term = 2.0 * k.c * k.c * t * t * t;
    let cw_term = k.c * k.gamma * k.w_diam * t * t;
    let w_term = k.gamma * k.gamma * hw * hw * t;

    let value = if a <= 30.0 {
        let sq = eps * eps * a.exp() + (c_term * phi(3, a) + cw_term * phi(2, a) + w_term * phi(1, a)) / s;
        sq.max(0.0).sqrt()
    } else {
        // delta = e^{a/2} sqrt(eps^2 + (...)/s) with the phi's rescaled by e^{-a}
        let inner =
            eps * eps + (c_term * phi_scaled(3, a) + cw_term * phi_scaled(2, a) + w_term * phi_scaled(1, a)) / s;
        (0.5 * a + 0.5 * inner.max(0.0).ln()).exp()
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(BoundError::BlowUp)
    }
}

fn check_args(eps: f64, k: &BoundConstants, t: f64) -> Result<(), BoundError> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(BoundError::InvalidInput(format!("eps {eps}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(BoundError::InvalidInput(format!("time {t}")));
    }
    k.validate()
}

/// Certified radius at time `t` of a step started from a ball of radius `eps`.
pub fn delta(eps: f64, k: &BoundConstants, t: f64) -> Result<f64, BoundError> {
    delta_with_mode(eps, k, t, LambdaZeroMode::Threshold)
}

pub fn delta_with_mode(eps: f64, k: &BoundConstants, t: f64, mode: LambdaZeroMode) -> Result<f64, BoundError> {
    check_args(eps, k, t)?;
    let mut lambda = k.lambda;
    if lambda.abs() < LAMBDA_TOL {
        match mode {
            LambdaZeroMode::Threshold => lambda = LAMBDA_TOL,
            LambdaZeroMode::Paper => return radius_from_parts(eps, k, t, t, 1.0),
        }
    }
    if lambda < 0.0 {
        radius_from_parts(eps, k, t, lambda * t, -lambda)
    } else {
        radius_from_parts(eps, k, t, 3.0 * lambda * t, lambda)
    }
}

/// The undisturbed radius, arranged as the nominal (no disturbance) bound:
/// `eps^2 e^{lambda t} + C^2/lambda^2 (...)` for `lambda < 0` and
/// `eps^2 e^{3 lambda t} + C^2/(3 lambda^2) (...)` for `lambda > 0`.
pub fn delta_nominal(eps: f64, lambda: f64, c: f64, t: f64, mode: LambdaZeroMode) -> Result<f64, BoundError> {
    let k = BoundConstants::nominal(lambda, c);
    check_args(eps, &k, t)?;
    let mut lambda = lambda;
    if lambda.abs() < LAMBDA_TOL {
        match mode {
            LambdaZeroMode::Threshold => lambda = LAMBDA_TOL,
            LambdaZeroMode::Paper => {
                // C^2 (-t^2 - 2t + 2(e^t - 1)) = 2 C^2 t^3 phi3(t)
                let sq = eps * eps * t.exp() + 2.0 * c * c * t.powi(3) * phi(3, t);
                return finite(sq.max(0.0).sqrt());
            }
        }
    }
    let sq = if lambda < 0.0 {
        // t^2 + 2t/lambda + 2/lambda^2 (1 - e^{lambda t}) = -2 lambda t^3 phi3(lambda t)
        let u = lambda * t;
        eps * eps * u.exp() + c * c / (lambda * lambda) * (-2.0 * lambda * t.powi(3) * phi(3, u))
    } else {
        // -t^2 - 2t/(3 lambda) + 2/(9 lambda^2)(e^{3 lambda t} - 1) = 6 lambda t^3 phi3(3 lambda t)
        let v = 3.0 * lambda * t;
        if v > 30.0 {
            let inner = eps * eps + 2.0 * c * c * t.powi(3) * phi_scaled(3, v) / lambda;
            return finite((0.5 * v + 0.5 * inner.max(0.0).ln()).exp());
        }
        eps * eps * v.exp() + c * c / (3.0 * lambda * lambda) * (6.0 * lambda * t.powi(3) * phi(3, v))
    };
    finite(sq.max(0.0).sqrt())
}

fn finite(x: f64) -> Result<f64, BoundError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(BoundError::BlowUp)
    }
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `true` iff `inner` is geometrically contained in `outer`.
pub fn ball_inside(inner: &Ball, outer: &Ball) -> Result<bool, BoundError> {
    if inner.dim() != outer.dim() {
        return Err(BoundError::DimensionMismatch(inner.dim(), outer.dim()));
    }
    Ok(distance(&inner.center, &outer.center) + inner.radius <= outer.radius)
}

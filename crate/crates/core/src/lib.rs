//! Guaranteed Euler integration with certified error radii, invariant lassos
//! and multi-lasso covers of attractive invariant tori.
//!
//! Module map:
//! - [`bounds`]: the error-radius formulas and ball geometry.
//! - [`constants`]: sampled local constants over boxes.
//! - [`integrator`]: ball tubes along the nominal Euler trajectory.
//! - [`lasso`]: stroboscopic inclusion test and torus covers.
//! - [`systems`]: bundled vector fields.

pub mod bounds;
pub mod constants;
pub mod integrator;
pub mod lasso;
pub mod systems;

pub use bounds::{ball_inside, delta, delta_with_mode, Ball, BoundConstants, BoundError, LambdaZeroMode};
pub use constants::{
    estimate_c, estimate_gamma, estimate_lambda, estimate_local, BoxRegion, EstimationError, EstimationPolicy,
    LocalConstants,
};
pub use integrator::{
    euler_step, euler_trajectory, propagate, propagate_with, PropagationError, PropagationSettings, Propagator, Tube,
    WorkCounters,
};
pub use lasso::{
    cover, find_lasso, ring_sources, CoverReport, FailureKind, Lasso, LassoError, LassoOutcome, LassoRun, LassoSettings,
};
pub use systems::{
    coupled_vdp, forced_vdp, linear_system, linear_system_from_rows, Disturbance, Dynamics, SystemError, SystemModel,
};

//! Numerical verification engine for Einstein warped-product and conformally
//! flat semi-Riemannian metrics.
//!
//! The crate builds coordinate metrics of the form `ĝ = g + f²g̃` on product
//! charts, computes their curvature from analytic derivative oracles or from
//! finite differences, and reports quantified residuals for the Einstein
//! condition `Ric = λg`, for its block decomposition on warped products, and
//! for the scalar identities that constrain the warping function.
//!
//! A translation-invariant ansatz (all fields functions of ξ = Σ αₖxₖ) turns
//! the Einstein condition on a conformally flat base into an ODE system in ξ;
//! the [`reduction`] module evaluates that system, integrates it as an initial
//! value problem with an algebraic constraint monitor, and lifts trajectories
//! back to full product metrics so the curvature engine can verify them
//! independently. [`catalog`] ships the closed-form solution families with
//! both their claimed and their independently derived Einstein constants.
//!
//! The `einwarp` binary drives everything from JSON scenario files; see the
//! repository README for the scenario and report schemas.

pub mod catalog;
pub mod chart;
pub mod curvature;
pub mod reduction;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod warp;

use thiserror::Error;

/// Errors produced by chart, curvature, and verification operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid signature: {0}")]
    InvalidSignature(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("metric is numerically singular (|det| = {det:.3e})")]
    SingularMetric { det: f64 },

    #[error("point violates domain constraint `{label}`")]
    OutsideDomain { label: String },

    #[error("warping function must be positive, got {value:.6e}")]
    NonPositiveWarp { value: f64 },

    #[error("negative radicand {value:.6e}: no real invariant solution for these data")]
    NegativeRadicand { value: f64 },

    #[error("conformal factor vanishes near xi = {xi:.6}")]
    VanishingConformalFactor { xi: f64 },

    #[error("initial data violates the algebraic constraint (monitor = {monitor:.3e})")]
    InadmissibleInitialData { monitor: f64 },

    #[error("fiber is not Einstein at the claimed constant (sup residual {sup:.3e})")]
    FiberNotEinstein { sup: f64 },

    #[error("lift requires a Ricci-flat fiber, got Einstein constant {mu}")]
    FiberNotRicciFlat { mu: f64 },

    #[error("could not place {requested} grid points ({found} found before giving up)")]
    GridUnsatisfiable { requested: usize, found: usize },
}

pub use chart::{Direction, ProfileFunction, SampleGrid, ScalarField, Signature};
pub use curvature::{CurvatureBundle, DerivativeMode, MetricField};

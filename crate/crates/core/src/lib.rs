//! # mmdflow
//!
//! Smoothed negative distance (SND) kernels and maximum mean discrepancy
//! (MMD) particle flows.
//!
//! The negative distance kernel `K(x, y) = -‖x - y‖` makes MMD flows behave
//! well globally, but its gradient jumps at coincident points, so an explicit
//! Euler scheme with a fixed step keeps oscillating around the target. This
//! crate builds a smooth replacement:
//!
//! 1. smooth `|x|` in one dimension by convolving with a centered cardinal
//!    B-spline `M_{m,ε}` ([`splines`]),
//! 2. lift the 1D profile to a radial function on `R^d` with the
//!    Riemann–Liouville fractional integral `I_d` ([`smoothed_norm`]),
//! 3. negate it: `Φ(x) = -I_d[|·| ∗ M_{m,ε}](‖x‖)` is conditionally positive
//!    definite of order one and has a Lipschitz gradient ([`kernels`]).
//!
//! On top of the kernels sit the discrete MMD ([`mmd`]), the explicit Euler
//! particle flow ([`flow`]), sliced fast summation ([`slicing`]), exact
//! Wasserstein-2 evaluation ([`transport`]) and the experiment targets
//! ([`datasets`]).
//!
//! ## Quick start
//!
//! ```
//! use mmdflow::{datasets, flow, FlowConfig, RadialProfile};
//!
//! let target = datasets::three_rings(8);
//! let init = datasets::init_gaussian(24, 2, 1e-4, 7);
//! let profile = RadialProfile::snd(2, 0.01, 3).unwrap();
//! let cfg = FlowConfig::new(0.01, 200).with_checkpoints(vec![0, 200]);
//! let trace = flow::run_flow(&profile, &init, &target, &cfg).unwrap();
//! assert!(trace.last().unwrap().w2 < trace.first().unwrap().w2);
//! ```

pub mod cloud;
pub mod datasets;
pub mod flow;
pub mod kernels;
pub mod mmd;
mod quadrature;
mod real;
pub mod slicing;
pub mod smoothed_norm;
pub mod special;
pub mod splines;
pub mod transport;

pub use cloud::ParticleCloud;
pub use flow::{FlowConfig, FlowTrace, Precision, Summation, TraceRow};
pub use kernels::{Kernel, KernelVariant};
pub use real::Real;
pub use slicing::SliceSet;
pub use smoothed_norm::{ProfileKind, RadialProfile};
pub use splines::SplineProfile;

use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty point cloud")]
    EmptyCloud,

    #[error("non-finite coordinate in point cloud")]
    NonFinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("weights do not sum to zero (sum = {sum}, scale = {scale})")]
    NotZeroSum { sum: f64, scale: f64 },

    #[error("input is not sorted")]
    Unsorted,

    #[error("flow diverged at iteration {iteration}: non-finite particle coordinates (step too large?)")]
    Diverged { iteration: usize },

    #[error("sliced summation is not available for the {0} profile")]
    NotSliceable(&'static str),

    #[error("csv error in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("csv error in {path}: {msg}")]
    CsvShape { path: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

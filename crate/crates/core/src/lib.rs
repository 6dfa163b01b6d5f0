//! Critical curves of the curvature energy `Θ_μ(γ) = ∫ κ e^{μ/κ} ds` in the
//! two-dimensional space forms, and the rotational surfaces of constant
//! astigmatism they generate.

// `!(a > b)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod curve;
pub mod error;
pub mod euler_lagrange;
pub mod numerics;
pub mod phase_plane;
pub mod surface;
pub mod types;

pub use error::{GeomError, Result};
pub use types::{AmbientPoint, ModelParams, PhasePoint, Signature};

//! Numerical toolkit for Bell nonlocality of PPT (bound) entangled states.
//!
//! The crate builds a PPT two-qutrit state that violates a simple Bell
//! inequality, certifies the violation exactly, searches for larger
//! violations with a see-saw of semidefinite programs, and bounds the
//! achievable violation and certifiable randomness with a PPT-constrained
//! moment hierarchy.
//!
//! Module map:
//! - [`linalg`]: dense complex matrices, Kronecker products, partial
//!   transpose and trace, Hermitian eigensolver.
//! - [`state`]: the bound entangled state, certification and noise mixing.
//! - [`bell`]: scenarios, functionals, measurements, behaviors, local bound
//!   and Bell operators.
//! - [`sdp`]: a dense primal-dual interior-point SDP solver.
//! - [`seesaw`]: alternating state/measurement optimization over PPT states.
//! - [`hierarchy`]: moment-matrix relaxations with a PPT constraint.
//! - [`robustness`]: white-noise tolerance of the violation.

pub mod bell;
pub mod config;
pub mod error;
pub mod hierarchy;
pub mod json;
pub mod linalg;
pub mod robustness;
pub mod sdp;
pub mod seesaw;
pub mod state;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use linalg::{BipartiteDims, Matrix, Party};

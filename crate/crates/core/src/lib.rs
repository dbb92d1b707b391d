//! Breathing-mode dynamics of N contact-interacting bosons in a 1D harmonic
//! trap after a trap-frequency quench.
//!
//! Engines:
//! - [`busch`]: the analytic two-body solution (relative levels, band spectrum, signal)
//! - [`fewbody`]: exact diagonalization in a bosonic Fock basis
//! - [`meanfield`]: Gross–Pitaevskii split-step solver
//!
//! [`spectral`] turns any ⟨X̂²⟩(t) series into fitted breathing frequencies.

// `!(x > 0.0)` also rejects NaN; index loops mirror the matrix formulas
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod busch;
pub mod error;
pub mod fewbody;
mod lm;
pub mod meanfield;
pub mod special;
pub mod spectral;
pub mod trap_model;
mod tridiag;

pub use error::{Error, Result};
pub use spectral::TimeSeries;
pub use trap_model::{HOBasisSpec, QuenchSpec};

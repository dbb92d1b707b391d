//! Orchestration for breathing-mode experiments: configuration, cached runs,
//! parallel (g, N) sweeps, contour tables and constant-Λ overlays.

pub mod config;
pub mod contour;
pub mod csvio;
pub mod error;
pub mod pipeline;
pub mod sweep;

pub use config::{EngineKind, ExperimentConfig};
pub use contour::{gp_hyperbola_overlay, ContourRow, ContourTable, Overlay};
pub use error::{DriverError, Result};
pub use pipeline::{run_engine, run_experiment, RunResult, RunSummary};
pub use sweep::{sweep, SweepOptions, SweepReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("orbital index {index} exceeds the stable evaluation bound {limit}")]
    OrbitalIndexTooLarge { index: usize, limit: usize },

    #[error("root of the even-level relation for level {level} at coupling {coupling} is not bracketed")]
    RootNotBracketed { level: usize, coupling: f64 },

    #[error(
        "relative-level relation disagrees with exact diagonalization at g = {g}: \
         analytic {analytic:.6}, ED {ed:.6}, envelope {envelope:.3e}"
    )]
    RelationMismatch { g: f64, analytic: f64, ed: f64, envelope: f64 },

    #[error(
        "Fock basis for N = {n_particles}, M = {n_orbitals} has {dim} states, above the cap of {cap}; \
         reduce to M <= {max_orbitals} at this N or N <= {max_particles} at this M"
    )]
    BasisTooLarge {
        n_particles: usize,
        n_orbitals: usize,
        dim: u128,
        cap: usize,
        max_orbitals: usize,
        max_particles: usize,
    },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { solver: &'static str, iterations: usize, residual: f64 },

    #[error("Krylov step refused at t = {t}: step {step:.3e} below minimum, error estimate {estimate:.3e}")]
    KrylovStepRefused { t: f64, step: f64, estimate: f64 },

    #[error("density at the grid boundary is {ratio:.3e} of the peak; enlarge the box")]
    BoxTooSmall { ratio: f64 },

    #[error("sine fit residual {residual:.3e} above threshold {threshold:.3e}; use the spectral peak pipeline")]
    SineFitRejected { residual: f64, threshold: f64 },

    #[error("time series too short: {count} samples, need at least {min}")]
    SeriesTooShort { count: usize, min: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}

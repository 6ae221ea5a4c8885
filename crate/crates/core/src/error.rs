use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field contains a non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Newton iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        /// Set for β-equations: a smaller continuation step is worth trying.
        suggest_smaller_beta_step: bool,
    },

    #[error("line search could not keep the iterate in the Kähler cone (iteration {iteration}, residual {residual:e})")]
    PositivityLoss { iteration: usize, residual: f64 },

    #[error("line search could not keep the iterate in the Γ_{k} cone (iteration {iteration}, residual {residual:e})")]
    ConeLoss { k: usize, iteration: usize, residual: f64 },

    #[error("β schedule must be increasing with at least 3 entries (got {len})")]
    ScheduleTooShort { len: usize },

    #[error("no candidate fields supplied")]
    EmptyCandidates,

    #[error("ψ ≥ u_β + 1 at grid point {index} (excess {excess:e}); increase β")]
    BetaTooSmall { index: usize, excess: f64 },

    #[error("tail never drops below the De Giorgi threshold (min 2·B₀·φ(s)^δ₀ = {min_step:e})")]
    NoValidS0 { min_step: f64 },

    #[error("input is not admissible: {what} (margin {margin:e} at grid point {index})")]
    AdmissibilityFailure { what: &'static str, margin: f64, index: usize },
}

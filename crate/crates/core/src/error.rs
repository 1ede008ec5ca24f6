use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input: malformed grid, file, parameter or dimension.
    Input,
    /// A modelling hypothesis failed (source/kernel/nonlinearity assumptions,
    /// ball membership, interval membership).
    Assumption,
    /// The fixed-point iteration did not converge.
    Convergence,
    /// Filesystem failure.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("spectrum is not Hermitian: imaginary residue {residue:.3e} (relative)")]
    NonHermitianInput { residue: f64 },
    #[error("dimension {d} is outside the admissible range {allowed}")]
    BadDimension { d: usize, allowed: &'static str },
    #[error("parameter `{0}` must be positive and finite")]
    NonPositiveInput(&'static str),
    #[error("rho = {0} must lie in (0, 1]")]
    RhoOutOfRange(f64),
    #[error("epsilon * sigma = {eps_sigma} is not below one")]
    ContractionViolated { eps_sigma: f64 },
    #[error("nonlinearity violates g(0) = g'(0) = 0: g(0) = {g0:e}, g'(0) = {g1:e}")]
    NonconformingG { g0: f64, g1: f64 },
    #[error("nonlinearity vanishes identically on the interval")]
    TrivialNonlinearity,
    #[error("sample count {0} must be odd and at least 1001")]
    InvalidSamples(usize),
    #[error("value {value} leaves the interval [-{bound}, {bound}]")]
    IntervalExceeded { value: f64, bound: f64 },
    #[error("source term vanishes identically")]
    TrivialSource,
    #[error("zero Fourier mode {zero_mode:e} exceeds the tolerance {tol:e}")]
    NonDecayingSource { zero_mode: f64, tol: f64 },
    #[error("iterate has H4 norm {norm} outside the ball of radius {rho}")]
    OutsideBall { norm: f64, rho: f64 },
    #[error("fixed-point iteration diverged at iteration {iteration}")]
    Diverged { iteration: usize },
    #[error("no convergence after {iterations} iterations (last relative step {last_step:e})")]
    NotConverged { iterations: usize, last_step: f64 },
    #[error("epsilon = {epsilon} exceeds the certified threshold {epsilon_max}")]
    Uncertified { epsilon: f64, epsilon_max: f64 },
    #[error("could not draw a non-degenerate pair after {0} attempts")]
    DegeneratePair(usize),
    #[error("{fraction:e} of the L1 mass sits in the outer shell of the box")]
    MassLeakage { fraction: f64 },
    #[error("field vanishes identically")]
    TrivialField,
    #[error("malformed field file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            InvalidGrid(_)
            | GridMismatch
            | InvalidField(_)
            | NonHermitianInput { .. }
            | BadDimension { .. }
            | NonPositiveInput(_)
            | RhoOutOfRange(_)
            | InvalidSamples(_)
            | Format(_) => ErrorClass::Input,
            ContractionViolated { .. }
            | NonconformingG { .. }
            | TrivialNonlinearity
            | IntervalExceeded { .. }
            | TrivialSource
            | NonDecayingSource { .. }
            | OutsideBall { .. }
            | Uncertified { .. }
            | DegeneratePair(_)
            | MassLeakage { .. }
            | TrivialField => ErrorClass::Assumption,
            Diverged { .. } | NotConverged { .. } => ErrorClass::Convergence,
            Io(_) => ErrorClass::Io,
        }
    }
}

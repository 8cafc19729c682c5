use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("argument outside the domain of definition: {0}")]
    Domain(String),
    #[error("kernel evaluated at its singular point x = 0")]
    Singular,
    #[error("the inner domain contains no grid node")]
    EmptyInterior,
    #[error("stencil of radius {radius} cells leaves the grid at node {node}")]
    StencilOverflow { node: usize, radius: usize },
    #[error("support of the input plus the horizon leaves the grid box")]
    SupportOverflow,
    #[error("field support is too close to the box boundary for the transform (padding too small)")]
    PaddingTooSmall,
    #[error("requested frequency {radius} exceeds the usable range {limit}")]
    NyquistExceeded { radius: f64, limit: f64 },
    #[error("Fourier transform of Q is not positive at mode {index}: {value:e}")]
    NonpositiveQhat { index: usize, value: f64 },
    #[error("fields live on incompatible grids")]
    GridMismatch,
    #[error("ensemble member {member} has a vanishing gradient norm")]
    ZeroGradient { member: usize },
    #[error("line search failed to decrease the energy at iteration {iter}")]
    LineSearchFailure { iter: usize },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;

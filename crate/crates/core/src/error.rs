use thiserror::Error;

/// Which end of a frequency grid an edge diagnostic refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Lower,
    Upper,
}

impl std::fmt::Display for Edge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Edge::Lower => f.write_str("lower"),
            Edge::Upper => f.write_str("upper"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: expected {expected} samples, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("integrand does not decay at the {edge} grid edge (local exponent {exponent:.3})")]
    TailDivergence { edge: Edge, exponent: f64 },

    #[error("singular Nambu block at omega = {omega} (|det| = {det:e})")]
    SingularBlock { omega: f64, det: f64 },

    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    #[error("|K^R_1| vanishes at omega = {omega}")]
    DegenerateDenominator { omega: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

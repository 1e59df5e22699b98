use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty sequence")]
    EmptySequence,

    #[error("illegal character {found:?} at position {position}")]
    IllegalCharacter { position: usize, found: char },

    #[error("sequence too long for exhaustive enumeration (N = {len}, guard = {guard})")]
    TooLong { len: usize, guard: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point ({u}, {v}, {w}) lies outside (0,1)^3")]
    OutsideUnitCube { u: f64, v: f64, w: f64 },

    #[error("outside region B (S^2 = {s_squared})")]
    OutsideRegionB { s_squared: f64 },

    #[error("pole in c")]
    PoleInC,

    #[error("series not converged after {terms} terms")]
    NotConverged { terms: usize },

    #[error("power iteration did not converge in {iterations} steps")]
    PowerIteration { iterations: usize },

    #[error("degenerate products: all {samples} samples hit the zero sentinel")]
    DegenerateProducts { samples: usize },

    #[error("derivative stencil crosses divergence")]
    StencilDivergence,
}

impl Error {
    /// Short machine-readable code used by the command-line front end.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptySequence => "empty-sequence",
            Error::IllegalCharacter { .. } => "illegal-character",
            Error::TooLong { .. } => "too-long",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::OutsideUnitCube { .. } => "outside-unit-cube",
            Error::OutsideRegionB { .. } => "outside-region-b",
            Error::PoleInC => "pole-in-c",
            Error::NotConverged { .. } => "not-converged",
            Error::PowerIteration { .. } => "power-iteration",
            Error::DegenerateProducts { .. } => "degenerate-products",
            Error::StencilDivergence => "stencil-divergence",
        }
    }
}

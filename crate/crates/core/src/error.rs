use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("element box [{lower}, {upper}] on axis {axis} lies outside the support [{a}, {b}]")]
    OutsideSupport {
        axis: usize,
        lower: f64,
        upper: f64,
        a: f64,
        b: f64,
    },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("germ count P={p} outside the admissible range [{min}, {max}]")]
    GermCount { p: usize, min: usize, max: usize },

    #[error("non-finite values at t={t} in element {element}")]
    NonFinite { t: f64, element: usize },

    #[error("random basis collapsed at t={t} in element {element} while the state is still random")]
    DegenerateBasis { t: f64, element: usize },

    #[error("element masses sum to {0}, expected 1")]
    MassMismatch(f64),

    #[error("time grids differ")]
    GridMismatch,

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerics (blow-up, collapsed basis) as opposed
    /// to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite { .. } | Error::DegenerateBasis { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

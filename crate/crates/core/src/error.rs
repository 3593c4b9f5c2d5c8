use thiserror::Error;

/// Errors produced by the library.
///
/// Numeric payloads are carried as `f64` regardless of the scalar type in use.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("chain length mismatch: expected {expected} bits, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource cap exceeded: {0}")]
    Resource(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The outcome has (numerically) zero probability; the event is precluded.
    #[error("outcome precluded: probability {probability:e} is below the zero threshold")]
    Precluded { probability: f64 },

    #[error("decoherence functional has imaginary residue {residue:e} on the diagonal")]
    ImaginaryResidue { residue: f64 },

    #[error("operator is not unitary: max |U†U - I| = {deviation:e}")]
    NotUnitary { deviation: f64 },

    #[error("operator is not an orthogonal projector: deviation {deviation:e}")]
    NotProjector { deviation: f64 },

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

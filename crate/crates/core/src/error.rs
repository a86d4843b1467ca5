use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("frame is not orthonormal (deviation {0:.3e})")]
    NotOrthonormal(f64),

    #[error("inversion undefined at |x| = {0:.3e}")]
    InversionDomain(f64),

    #[error("hyperplane misses L' (radius^2 = {0:.3e})")]
    HyperplaneMissesSphere(f64),

    #[error("hyperplane misses lifted L")]
    HyperplaneMissesParabola,

    #[error("line {index} is parallel to the subspace (|<u, n>| = {dot:.3e})")]
    LineParallel { index: usize, dot: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("no sign change on either branch of the planar wedge map")]
    NoSignChange,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

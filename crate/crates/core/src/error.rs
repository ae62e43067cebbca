use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("plane-wave basis too large: N_c = {n_c} exceeds the limit {limit}")]
    BasisTooLarge { n_c: usize, limit: usize },

    #[error(
        "commensurate input: composite wavevectors of entries {first} and {second} coincide \
         (enable commensurate deduplication to proceed)"
    )]
    Commensurate { first: usize, second: usize },

    #[error("empty plane-wave basis")]
    EmptyBasis,

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("matrix is not Hermitian (deviation {deviation:.3e} exceeds {tolerance:.3e})")]
    NonHermitian { deviation: f64, tolerance: f64 },

    #[error("eigensolver failed to converge: {0}")]
    EigenNonConvergence(String),

    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("torus grid axis {axis} has {got} points; at least {required} are needed to avoid aliasing")]
    Aliasing {
        axis: usize,
        required: usize,
        got: usize,
    },

    #[error(
        "insufficient basis: {target:.6e} electrons per volume requested but only {available:.6e} \
         can be accommodated"
    )]
    InsufficientBasis { target: f64, available: f64 },

    #[error("no wavevector of the basis lies in the reference reciprocal cell (cutoff too small)")]
    NoReferenceWavevectors,

    #[error("singular configuration: {0}")]
    SingularConfiguration(String),

    #[error("negative density {value:.3e} at grid point {index}")]
    NegativeDensity { index: usize, value: f64 },

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 1 for invalid input, 2 for numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::InvalidLattice(_)
            | Error::InvalidParameter { .. }
            | Error::Commensurate { .. }
            | Error::EmptyBasis
            | Error::Mismatch(_)
            | Error::IndexOutOfRange { .. }
            | Error::Aliasing { .. }
            | Error::NoReferenceWavevectors
            | Error::Config { .. }
            | Error::Io(_) => 1,
            Error::BasisTooLarge { .. }
            | Error::NonHermitian { .. }
            | Error::EigenNonConvergence(_)
            | Error::InsufficientBasis { .. }
            | Error::SingularConfiguration(_)
            | Error::NegativeDensity { .. } => 2,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

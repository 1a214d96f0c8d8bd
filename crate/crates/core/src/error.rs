use thiserror::Error;

/// Errors raised by the simulation, composition and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Fock space dimension {dim} exceeds the configured limit {limit}")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("truncation leak {leak:.3e} exceeds threshold {threshold:.3e} at photon cap {cap}")]
    TruncationLeak {
        leak: f64,
        threshold: f64,
        cap: usize,
    },

    #[error(
        "photon cap {cap} is below the required {required} (requested photons plus safety margin)"
    )]
    CapTooSmall { cap: usize, required: usize },

    #[error("singular cavity: feedback matrix condition number {cond:.3e} exceeds {bound:.3e}")]
    SingularCavity { cond: f64, bound: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix violates the symplectic condition (residual {residual:.3e})")]
    NotSymplectic { residual: f64 },

    #[error("covariance is not positive definite (minimum eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { min_eig: f64 },

    #[error("permanent of a {size}x{size} matrix exceeds the size limit {limit}")]
    PermanentTooLarge { size: usize, limit: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures of the numerics (singular cavities, truncation leaks)
    /// as opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::TruncationLeak { .. }
                | Error::SingularCavity { .. }
                | Error::Singular(_)
                | Error::NotPositiveDefinite { .. }
                | Error::DimensionOverflow { .. }
                | Error::CapTooSmall { .. }
                | Error::PermanentTooLarge { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

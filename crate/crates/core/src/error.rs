use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of the function it was passed to.
    #[error("domain error in {what}: {value} outside {range}")]
    Domain {
        what: &'static str,
        value: f64,
        range: &'static str,
    },

    /// A probability table was negative or not normalized.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// A matrix handed to the eigensolver is not Hermitian, or not positive
    /// semidefinite where a density matrix was required.
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    /// The coupling matrix has a singular value at or above one, so the
    /// squeezed state cannot be normalized.
    #[error("unnormalizable state: singular value {0} >= 1")]
    Unnormalizable(f64),

    /// Inclusion-exclusion produced a probability below the tolerated slack.
    #[error("inconsistent statistics: probability {0} for pattern {1}")]
    InconsistentStatistics(f64, String),

    /// A constraint cannot be satisfied (e.g. a CHSH score above Tsirelson's bound).
    #[error("infeasible constraint: {0}")]
    Infeasible(String),

    /// No positive key rate was found at unit efficiency.
    #[error("no positive key rate at eta = 1 (best rate {0})")]
    NoPositiveRate(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(what: &'static str, value: f64, range: &'static str) -> Error {
    Error::Domain { what, value, range }
}

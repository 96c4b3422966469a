use alloc::string::String;

/// Errors raised by the analytics and the trial engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A parameter is outside its documented domain.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// More users landed in a pilot group than the equal-weight code can address.
    #[error("pilot group {group} holds {users} users but only {capacity} codewords exist")]
    GroupCapacity { group: usize, users: usize, capacity: u64 },

    /// A Gram matrix was not positive definite (rank-deficient estimates).
    #[error("estimate matrix is rank deficient ({rows}x{cols})")]
    Singular { rows: usize, cols: usize },

    /// The SINR denominator of the finite-M rate went non-positive.
    #[error("finite-M rate denominator is not positive ({value:e}) for user {user}")]
    NegativeDenominator { user: usize, value: f64 },

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature failed to converge: estimate {estimate:e}, error {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    /// Aggregation was asked to reduce an empty record list.
    #[error("no trial records to aggregate")]
    EmptyRecords,
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter { name, reason: reason.into() }
    }
}

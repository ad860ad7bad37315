use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {context}: {left} vs {right}")]
    DimensionMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    #[error("class {class} has {count} sample(s), at least {required} required")]
    ClassTooSmall {
        class: usize,
        count: usize,
        required: usize,
    },

    #[error("matrix is not symmetric (max |m_ij - m_ji| = {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e} is below the floor {floor:e}")]
    NotPsd { eigenvalue: f64, floor: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures caused by numerically invalid matrices rather than
    /// malformed arguments.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NotPsd { .. })
    }
}

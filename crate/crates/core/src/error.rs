use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("singular tridiagonal system: zero pivot at row {row}")]
    SingularSystem { row: usize },

    #[error("inverse iteration failed to converge for level {level}")]
    EigenNonConvergence { level: usize },

    /// The occupation series was not resolved to its cutoff with the levels available.
    #[error("level truncation needs at least {required} levels but at most {available} are available")]
    NeedsMoreLevels { required: usize, available: usize },

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("Fermi level bracket could not be grown to enclose the constraint")]
    InfeasibleConstraint,

    #[error("truncation {truncation} too small: tail mass {tail_mass:e} (try {suggested})")]
    TruncationTooSmall {
        truncation: f64,
        tail_mass: f64,
        suggested: f64,
    },

    #[error("tail fit window too short ({samples} samples)")]
    FitWindow { samples: usize },

    #[error("solver failed at epsilon = {epsilon}: {source}")]
    AtEpsilon {
        epsilon: f64,
        #[source]
        source: alloc::boxed::Box<Error>,
    },

    #[error("all {attempted} epsilon values of the sweep failed")]
    SweepFailure { attempted: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn at_epsilon(self, epsilon: f64) -> Self {
        match self {
            e @ Error::AtEpsilon { .. } => e,
            other => Error::AtEpsilon {
                epsilon,
                source: alloc::boxed::Box::new(other),
            },
        }
    }

    /// The innermost error, looking through [`Error::AtEpsilon`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtEpsilon { source, .. } => source.root(),
            other => other,
        }
    }
}

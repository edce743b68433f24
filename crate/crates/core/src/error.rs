use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("coordinate {axis} = {value} lies outside the unit cube")]
    OutOfCube { axis: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("likelihood returned NaN")]
    NanLikelihood,

    #[error("need at least {needed} points, got {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("live-point covariance is singular along axis {axis} even after regularisation")]
    DegenerateGeometry { axis: usize },

    #[error("slice along axis {axis} shrank below {width:e} without an accepted point")]
    StuckWalk { axis: usize, width: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("unknown problem name `{0}`")]
    UnknownProblem(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("iteration {iter}: {source}")]
    AtIteration { iter: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn at_iteration(self, iter: usize) -> Self {
        Error::AtIteration {
            iter,
            source: Box::new(self),
        }
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scalar argument lies outside its admissible range.
    #[error("domain error: {name} = {value} ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    /// `psi` is undefined once a zero gain enters the product.
    #[error("degenerate schedule: lipschitz constant at step {step} is zero")]
    DegenerateSchedule { step: usize },

    #[error("step {step} is outside 0..={horizon}")]
    StepOutOfRange { step: usize, horizon: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid obstacle: {0}")]
    InvalidObstacle(String),

    #[error("invalid set: {0}")]
    InvalidSet(String),

    #[error("input {input:?} at step {step} lies outside the input set")]
    InputOutsideSet { input: Vec<f64>, step: usize },

    #[error("degenerate region: {0}")]
    DegenerateRegion(String),

    #[error("lipschitz constant in x is unavailable for model `{0}`")]
    LipschitzUnavailable(String),

    #[error("initial set is not contained in the safe set (probe {point:?}, clearance {clearance})")]
    InitialSetUnsafe { point: Vec<f64>, clearance: f64 },

    #[error("malformed barrier candidate: {0}")]
    MalformedCandidate(String),

    #[error("inconsistent problem: {0}")]
    Inconsistent(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            expected,
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

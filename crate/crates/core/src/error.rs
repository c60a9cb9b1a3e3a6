use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("need at least {needed} observations, found {found}")]
    InsufficientData { needed: usize, found: usize },

    #[error("data has zero sample variance")]
    DegenerateData,

    #[error("block {block} carries no variance estimate")]
    MissingVariance { block: usize },

    #[error("simplex search did not converge after {iterations} iterations (best value {value})")]
    NonConvergence {
        iterations: usize,
        best: Vec<f64>,
        value: f64,
    },

    #[error("information matrix is singular at beta = {beta}")]
    SingularInformation { beta: f64 },

    #[error("block size {h} is below the tabulated range (minimum {min})")]
    BiasRange { h: usize, min: usize },

    #[error("root of the volatility map lies outside (-1, 0)")]
    RootOutsideDomain,

    #[error("MA coefficient {beta} >= 0: no detectable noise")]
    NoNoise { beta: f64 },

    #[error("grid is not strictly increasing at index {index}")]
    NonIncreasingGrid { index: usize },

    #[error("path does not cover [0, {horizon}]")]
    PathCoverage { horizon: f64 },

    #[error("path value {value} of component {component} at t = {time} violates model constraints")]
    InvalidPath {
        component: usize,
        time: f64,
        value: f64,
    },

    #[error("non-finite barrier at event {event}")]
    NonFiniteBarrier { event: usize },
}

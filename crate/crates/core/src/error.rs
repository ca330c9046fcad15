//! Error type shared by every module in the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate grid {rows}x{cols}: lattices need at least 2 rows and 2 columns")]
    DegenerateGrid { rows: usize, cols: usize },

    #[error("node index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("self loop on node {0}")]
    SelfLoop(usize),

    #[error("nonpositive weight on edge ({i}, {j})")]
    NonpositiveWeight { i: usize, j: usize },

    #[error("duplicate edge ({i}, {j})")]
    DuplicateEdge { i: usize, j: usize },

    #[error("isolated nodes (empty neighbor set): {0:?}")]
    IsolatedNodes(Vec<usize>),

    #[error("dimension mismatch: weight matrix has n = {expected}, vector has n = {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("zero variance: field is identically zero after centering")]
    ZeroVariance,

    #[error("zero scale: a scale estimate in the GK combination is zero")]
    ZeroScale,

    #[error("|rho| must be < 1 for a row-standardized W, got {0}")]
    RhoOutOfRange(f64),

    #[error("SAR system (I - rho W) is numerically singular at rho = {0}")]
    SingularSystem(f64),

    #[error("weight matrix is not symmetric")]
    NotSymmetric,

    #[error("replication kept failing after {attempts} redraws: {source}")]
    RedrawsExhausted { attempts: usize, source: Box<Error> },

    #[error("table layout is missing cells: {0:?}")]
    MissingCells(Vec<String>),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors signalling that a statistic or solve is numerically
    /// undefined, as opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ZeroVariance
                | Error::ZeroScale
                | Error::SingularSystem(_)
                | Error::RhoOutOfRange(_)
                | Error::RedrawsExhausted { .. }
        )
    }
}

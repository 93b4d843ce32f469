use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("alpha must lie in (1/3, 1/2], got {0}")]
    InvalidAlpha(f64),

    #[error("grid index out of range: {index} (grid has {nodes} nodes)")]
    IndexOutOfRange { index: usize, nodes: usize },

    #[error("indices must be ordered: {i} > {j}")]
    UnorderedIndices { i: usize, j: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("paths are controlled by different base rough paths")]
    BaseMismatch,

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("factor {factor} does not divide cell count {n}")]
    NonDivisorFactor { factor: usize, n: usize },

    #[error("node list must be strictly increasing with at least 2 entries")]
    BadNodeList,

    #[error("vector field derivative check failed: {0}")]
    DerivativeCheck(String),

    #[error("vector field has no C_b norm bounds")]
    MissingCbNorms,

    #[error("window [{start}, {end}] too large: no contraction within iteration budget")]
    WindowTooLarge { start: usize, end: usize },

    #[error("driver too rough for this grid/alpha: window shrank below {min_cells} cells at node {at}")]
    DriverTooRough { at: usize, min_cells: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

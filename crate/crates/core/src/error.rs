use thiserror::Error;

/// Errors raised by the library. Variants map onto the CLI exit codes:
/// configuration problems exit with 2, everything else with 3.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("grid error: {0}")]
    Grid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("refinement required: {0}")]
    RefinementRequired(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("infinite stopping time on scenario {scenario}")]
    InfiniteStoppingTime { scenario: usize },
    #[error("overlapping stopping-time graphs: {0}")]
    OverlappingGraphs(String),
    #[error("tree error: {0}")]
    Tree(String),
    #[error("zero-probability atom {atom} at level {level}")]
    ZeroProbabilityAtom { level: usize, atom: usize },
    #[error("not predictable: {0}")]
    NotPredictable(String),
    #[error("not a supermartingale: {0}")]
    NotSupermartingale(String),
    #[error("not stabilized: {0}")]
    NotStabilized(String),
    #[error("unbounded columns: {0}")]
    Unbounded(String),
    #[error("hypothesis check failed: {0}")]
    Hypothesis(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

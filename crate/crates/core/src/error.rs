use thiserror::Error;

pub type Result<T, E = AvaError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AvaError {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("item {item} is not adjacent to buyer {buyer}")]
    UnknownEdge { item: String, buyer: String },

    #[error("allocation violates buyer {buyer}'s constraint after arrival {position}")]
    InfeasiblePrefix { buyer: String, position: usize },

    #[error("instance is ambiguous: item {item} has both P-edges and N-edges")]
    AmbiguousInstance { item: String },

    #[error("invalid bundling: {0}")]
    InvalidBundling(String),

    #[error("instance has no budget constraints configured")]
    MissingBudgets,

    #[error("expected arrivals below gamma for types {types:?}")]
    GammaViolated { types: Vec<String> },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("bad epsilon: {0}")]
    BadEps(String),

    #[error("search space too large: {states} states exceeds limit {limit}")]
    TooLarge { states: u128, limit: u128 },

    #[error("fractional solution violates the LP: {0}")]
    InfeasibleFractional(String),

    #[error("stream does not match model: {0}")]
    StreamModelMismatch(String),

    #[error("phase violation: {0}")]
    PhaseViolation(String),

    #[error("GAP solution is not maximal: {0}")]
    NotMaximal(String),

    #[error("GAP solution is infeasible: {0}")]
    GapInfeasible(String),

    #[error("LP solver numerical failure: {0}")]
    NumericalFailure(String),

    #[error("LP is {0}")]
    LpStatus(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl AvaError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            AvaError::TooLarge { .. } => 3,
            AvaError::Io(_) => 1,
            _ => 2,
        }
    }
}

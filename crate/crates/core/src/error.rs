use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph contains a directed cycle through {0}")]
    Cycle(String),

    #[error("latent vertex {0} has a parent")]
    LatentWithParent(String),

    #[error("duplicate vertex declaration: {0}")]
    DuplicateVertex(String),

    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(String, String),

    #[error("self edge on {0}")]
    SelfEdge(String),

    #[error("unknown vertex or variable: {0}")]
    UnknownVertex(String),

    #[error("latent vertex {0} is not allowed here")]
    LatentNotAllowed(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("graph too large for brute force: {vertices} vertices (limit {limit})")]
    GraphTooLarge { vertices: usize, limit: usize },

    #[error("table of {entries} entries exceeds the cap of {cap}")]
    SizeCap { entries: u128, cap: usize },

    #[error("conditioning event has probability {probability:e}")]
    ZeroConditioningEvent { probability: f64 },

    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),

    #[error("invalid probability table: {0}")]
    InvalidTable(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("malformed slice: {0}")]
    MalformedSlice(String),

    #[error("solver did not converge: {0}")]
    SolverFailure(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("observed table is incompatible with the graph: {0}")]
    ModelFalsified(String),
}

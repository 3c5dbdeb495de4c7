use std::path::PathBuf;
use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed record at line {line}: {msg}")]
    MalformedLine { line: usize, msg: String },

    #[error("missing required field `{field}` at line {line}")]
    MissingField { line: usize, field: String },

    #[error("input file {0} contains no records")]
    EmptyInput(PathBuf),

    #[error("no user survives the activity filter (thresholds too strict for this dataset)")]
    NoActiveUsers,

    #[error("no edge retained; the weighted graph is empty")]
    EmptyGraph,

    #[error("graph has {components} components but strict connectivity was requested")]
    DisconnectedGraph { components: usize },

    #[error("iterative solver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("k={k} exceeds the number of distinct points ({distinct})")]
    KTooLarge { k: usize, distinct: usize },

    #[error("beta={beta} is too large for spectral radius {rho} (Katz series diverges)")]
    BetaTooLarge { beta: f64, rho: f64 },

    #[error("linear solver failed: {0}")]
    SolverFailure(String),

    #[error("embedding row for node {0} is numerically zero")]
    ZeroEmbeddingRow(String),

    #[error("user {0} is absent from the embedding (cold user)")]
    ColdUser(String),

    #[error("user {0} has an empty recommendation list; excluded from MAE, never averaged")]
    ZeroRecommendation(String),

    #[error("user {0} has no rated items; coverage is undefined")]
    ZeroRated(String),

    #[error("no recommendation from embedding `{method}` for user {user}")]
    MissingRecommendation { user: String, method: String },

    #[error("training loss became non-finite at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("missing artifact: {0} (run the producing stage first)")]
    MissingArtifact(PathBuf),

    #[error("invalid configuration:\n{}", .0.join("\n"))]
    ConfigValidation(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Crate-wide error type. Variants follow the failure modes of each layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("construction error: {0}")]
    Construction(String),
    #[error("embedding error: {0}")]
    Embedding(String),
    #[error("composition error: {0}")]
    Composition(String),
    #[error("ill-posed algebraic loop: {0}")]
    AlgebraicLoop(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("not linear: {0}")]
    NotLinear(String),
    #[error("transfer function pole at s = {0}")]
    Pole(String),
    #[error("unrealizable model: {0}")]
    Unrealizable(String),
    #[error("elimination error: {0}")]
    Elimination(String),
    #[error("integration error: {0}")]
    Integration(String),
    #[error("truncation guard breached on mode '{label}': top-level population {population:.3e}")]
    Truncation { label: String, population: f64 },
    #[error("non-unique steady state: null space dimension {0}")]
    NonUniqueSteadyState(usize),
    #[error("{line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("elaboration error: {0}")]
    Elaboration(String),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced by forest construction, parsing, enumeration and
/// mechanism evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("forest must have at least one vertex")]
    EmptyForest,

    #[error("vertex {vertex} points to {parent}, outside 0..{n}")]
    IndexOutOfRange {
        vertex: usize,
        parent: usize,
        n: usize,
    },

    #[error("parent chain through vertex {vertex} revisits a vertex")]
    CycleDetected { vertex: usize },

    #[error("line {line}: {message}")]
    SyntaxError { line: usize, message: String },

    #[error("enumeration of forests on {n} vertices exceeds the cap of {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("invalid family spec: {0}")]
    InvalidSpec(String),

    #[error("mechanism spec `{0}` is not recognized")]
    UnknownMechanism(String),

    #[error("epsilon^{gap} underflows for epsilon={epsilon}")]
    NumericalOverflow { epsilon: f64, gap: usize },

    #[error("generator table covers progenies 1..={len}, but {needed} is required")]
    GeneratorDomain { needed: usize, len: usize },

    #[error("generator value for progeny {k} must be positive, got {value}")]
    InvalidGenerator { k: usize, value: f64 },

    #[error("generator extraction: isolated vertex receives probability {value} in the {k}-star probe")]
    ZeroDenominator { k: usize, value: f64 },

    #[error("no root progeny covers a positive-measure part of ({lo}, {hi}]")]
    DegenerateInterval { lo: f64, hi: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("arity mismatch: {left} outputs composed with {right} inputs")]
    Arity { left: usize, right: usize },

    #[error("trace width {x} exceeds term arity {ins} -> {outs}")]
    TraceWidth { x: usize, ins: usize, outs: usize },

    #[error("width mismatch: expected {expected}, got {got}")]
    Width { expected: usize, got: usize },

    #[error("unknown primitive `{0}`")]
    UnknownPrimitive(String),

    #[error("primitive `{name}` is {expected_in} -> {expected_out} but was used as {got_in} -> {got_out}")]
    PrimitiveArity {
        name: String,
        expected_in: usize,
        expected_out: usize,
        got_in: usize,
        got_out: usize,
    },

    #[error("invalid lattice: {0}")]
    Lattice(String),

    #[error("invalid interpretation: {0}")]
    Interpretation(String),

    #[error("not monotone: {0}")]
    NotMonotone(String),

    #[error("fixed point iteration did not converge within {0} steps")]
    NoConvergence(usize),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("invalid cospan: {0}")]
    Cospan(String),

    #[error("{0}")]
    Invalid(String),

    #[error("{line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

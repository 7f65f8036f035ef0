use thiserror::Error;

/// Errors raised by the graph primitives and estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("vertex {0} is out of range")]
    VertexOutOfRange(u32),
    #[error("self-loop at vertex {0}")]
    SelfLoop(u32),
    #[error("edge ({0}, {1}) is not in the graph")]
    MissingEdge(u32, u32),
    #[error("coloring is not proper: edge ({0}, {1}) is monochromatic")]
    ImproperColoring(u32, u32),
    #[error("{what} exceeds cap: {value} > {cap}")]
    CapExceeded {
        what: &'static str,
        value: usize,
        cap: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("all weights are zero")]
    ZeroMass,
    #[error("stream algorithm requested more than {0} passes")]
    PassCapExceeded(usize),
    #[error("insufficient type coverage: solved mass {0:.4} < 0.5")]
    InsufficientCoverage(f64),
    #[error("malformed type encoding")]
    MalformedType,
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("N-Triples parse error at line {line}: {message}")]
    NTriples { line: usize, message: String },

    #[error("query syntax error at offset {offset}: {message}")]
    QuerySyntax { offset: usize, message: String },

    #[error("unsupported query feature: {0}")]
    Unsupported(String),

    #[error("query shape error: {0}")]
    Shape(String),

    #[error("no edge {0} below this tree node")]
    EdgeLookup(String),

    #[error("column constraint {column} exceeds row count {rows}")]
    Domain { column: String, rows: String },

    #[error("distribution too large to evaluate: {0}")]
    TooLarge(String),

    #[error("cache configuration error: {0}")]
    CacheConfig(String),

    #[error("enumeration refused: {0}")]
    EnumerationBounds(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error("operation not supported for {game}: {what}")]
    UnsupportedGame { game: String, what: String },

    #[error("draw states are excluded: {0}")]
    DrawExcluded(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("sampler exhausted after {attempts} attempts for {game}")]
    Exhausted { game: String, attempts: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("manifest error at line {line}: {msg}")]
    ManifestLine { line: usize, msg: String },

    #[error("schema version mismatch: file has {found}, tool expects {expected}")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("partial run: {missing} example ids missing (first: {first})")]
    PartialRun { missing: usize, first: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("endpoint error: {0}")]
    Endpoint(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ForgeError>;

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, IqiError>;

#[derive(Debug, thiserror::Error)]
pub enum IqiError {
    #[error("invalid pilot: {0}")]
    InvalidPilot(&'static str),

    #[error("rank deficient projector: achieved rank {achieved}, expected {expected}")]
    RankDeficient { achieved: usize, expected: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("Zadoff-Chu root {root} is not coprime with length {len}")]
    InvalidRoot { root: usize, len: usize },

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("singular ratio estimate (r = -1)")]
    SingularRatio,

    #[error("compensation matrix is singular: |mu|^2 - |nu|^2 = {denominator:e}")]
    CompensationSingular { denominator: f64 },

    #[error("IF-chain reference deviates from baseband model by {deviation_db:.2} dB")]
    ModelMismatch { deviation_db: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

use std::path::PathBuf;

/// Errors produced by every fallible operation in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    /// The operation is not valid in the current state of a state machine.
    #[error("invalid state: {0}")]
    State(String),
    /// A hue-board move touched a pinned endpoint or an out-of-range slot.
    #[error("position error: {0}")]
    Position(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// Early hue submission; carries the time left on the minimum-duration gate.
    #[error("hue submission rejected: {remaining_ms} ms of minimum test time remaining")]
    HueGate { remaining_ms: u64 },
    #[error("sequence conflict: expected {expected}, got {got}")]
    Sequence { expected: u64, got: u64 },
    #[error("response source disconnected")]
    Disconnected,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable code for the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::State(_) => "state",
            Error::Position(_) => "position",
            Error::Fit(_) => "fit",
            Error::Degenerate(_) => "degenerate",
            Error::HueGate { .. } => "hue_gate",
            Error::Sequence { .. } => "sequence_conflict",
            Error::Disconnected => "disconnected",
            Error::Parse(_) => "parse",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical input outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("config parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown config key `{key}` at line {line}")]
    UnknownKey { key: String, line: usize },

    #[error("unit mismatch for `{key}` at line {line}: expected {expected}, found {found}")]
    Unit {
        key: String,
        line: usize,
        expected: &'static str,
        found: String,
    },

    #[error("numerical overflow: {0}")]
    Overflow(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    /// The measured spin has decohered; the squeezing parameter is undefined.
    #[error("degenerate signal: |<Jx>| = {mean_jx:e} below threshold {threshold:e}")]
    DegenerateSignal { mean_jx: f64, threshold: f64 },

    #[error("{diverged} of {total} trajectories diverged (limit 1%)")]
    Diverged { diverged: usize, total: usize },

    #[error("unknown figure tag `{tag}`; available: {available}")]
    UnknownTag { tag: String, available: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Parse { .. }
            | Error::UnknownKey { .. }
            | Error::Unit { .. }
            | Error::Domain(_) => 2,
            Error::UnknownTag { .. } => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

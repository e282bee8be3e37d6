use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {what}: {detail}")]
    InvalidRange { what: &'static str, detail: String },
    #[error("invalid level label {0:?} (expected one of g, a, b, r)")]
    InvalidLevel(String),
    #[error("invalid atom number {0} (expected 1 or 2)")]
    InvalidAtom(u8),
    #[error("operators live on different spaces")]
    SpaceMismatch,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operator claimed hermitian but deviates by {0:e}")]
    NotHermitian(f64),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid parameter `{key}`: {reason}")]
    InvalidParam { key: &'static str, reason: String },
    #[error("division by a vanishing {0}")]
    DivisionGuard(&'static str),
    #[error("propagation failed at t = {time} us: {reason}")]
    Propagation { time: f64, reason: String },
    #[error("photon number {n}: {source}")]
    AtPhotonNumber {
        n: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("no maximum of pop_rr inside the window; extend the horizon")]
    NoMaximum,
    #[error("ill-defined spectral gap: {0}")]
    IllDefined(String),
    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::AtPhotonNumber { source, .. } => source.is_numerical(),
            Error::Propagation { .. }
            | Error::NoMaximum
            | Error::IllDefined(_)
            | Error::NotHermitian(_)
            | Error::InvalidState(_)
            | Error::DivisionGuard(_) => true,
            _ => false,
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::InvalidParam { .. } | Error::InvalidRange { .. }
        )
    }
}

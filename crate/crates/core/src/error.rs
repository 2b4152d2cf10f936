use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("geometry violation: {0}")]
    Geometry(String),

    #[error("Lamé parameters violate strong convexity: lambda={lambda}, mu={mu}")]
    Convexity { lambda: f64, mu: f64 },

    #[error("unknown phantom id `{0}`")]
    UnknownPhantom(String),

    #[error("evaluation point at distance {distance:.3e} is closer than {required:.3e} to the boundary")]
    TooClose { distance: f64, required: f64 },

    #[error("singular or ill-conditioned system (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("non-finite value at iteration {iteration}: {what}")]
    NonFinite { iteration: usize, what: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("empty support")]
    EmptySupport,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code associated with the error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::Geometry(_)
            | Error::Convexity { .. }
            | Error::UnknownPhantom(_)
            | Error::Config(_)
            | Error::Json(_)
            | Error::Io(_) => 2,
            Error::EmptySupport => 4,
            _ => 3,
        }
    }
}

use thiserror::Error;

/// Errors across the classification / reduction / integration pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("zero denominator")]
    ZeroDenominator,

    #[error("malformed rational `{0}`: expected `p/q` or an integer")]
    InvalidRational(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular chart: r = 0 lies on the collision manifold and has no physical preimage")]
    SingularChart,

    #[error("imaginary branch: ({base})^({exponent}) is not real (even root of a negative number)")]
    ImaginaryBranch { base: f64, exponent: String },

    #[error("no branch extension: w = {w} (gamma = {gamma}) is not branch-regularizable ({reason})")]
    NotRegularizable {
        w: String,
        gamma: String,
        reason: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("fit quality: {0}")]
    FitQuality(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 usage, 3 domain obstruction, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ZeroDenominator
            | Error::InvalidRational(_)
            | Error::InvalidInput(_)
            | Error::Io(_)
            | Error::Json(_) => 2,
            Error::Domain(_)
            | Error::SingularChart
            | Error::ImaginaryBranch { .. }
            | Error::NotRegularizable { .. } => 3,
            Error::Numeric(_) | Error::InsufficientData(_) | Error::FitQuality(_) => 4,
        }
    }
}

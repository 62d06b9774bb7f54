use thiserror::Error;

/// Errors raised by the precoding library.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of its valid domain. `field` names the
    /// offending knob so CLI users can find it in their config.
    #[error("invalid `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    DimensionMismatch {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    #[error("subcarrier index {index} out of range for FFT size {fft_size}")]
    SubcarrierOutOfRange { index: usize, fft_size: usize },

    /// `A Aᴴ` is numerically singular. Usually caused by duplicate or
    /// nearly coincident frequency points.
    #[error(
        "leakage Gram matrix A·Aᴴ is rank deficient (reciprocal condition {rcond:.3e}); \
         drop duplicate frequency points"
    )]
    RankDeficient { rcond: f64 },

    #[error("Sherman-Morrison denominator {denominator:.3e} is too close to zero")]
    SingularUpdate { denominator: f64 },

    #[error("reference vector has zero norm")]
    ZeroNorm,

    #[error("spectrum span is insufficient: {0}")]
    InsufficientSpan(String),

    #[error("mask file, line {line}: {reason}")]
    MaskParse { line: usize, reason: String },

    #[error("scenario config: {0}")]
    ConfigParse(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    /// Failure while precoding one symbol of a batch.
    #[error("symbol {index}: {source}")]
    Symbol {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Whether the error stems from user input rather than a failure at run
    /// time. The CLI maps these to exit code 2.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Symbol { source, .. } => source.is_validation(),
            e => matches!(
                e,
                Error::InvalidConfig { .. }
                    | Error::MaskParse { .. }
                    | Error::ConfigParse(_)
                    | Error::UnknownPreset(_)
            ),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

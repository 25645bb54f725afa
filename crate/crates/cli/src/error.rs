use thiserror::Error;

/// Exit code for a rejected configuration or argument.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit code when an identity check fails.
pub const EXIT_IDENTITY: i32 = 3;
/// Exit code when a sampled profile leaves its envelope.
pub const EXIT_ENVELOPE: i32 = 4;
pub const EXIT_RUNTIME: i32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error(transparent)]
    Model(#[from] hsm::Error),

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

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use hsm::Error as E;
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Model(
                E::InvalidLattice(_)
                | E::SiteOutOfRange { .. }
                | E::SizeMismatch { .. }
                | E::InvalidParameter(_)
                | E::NoPinning
                | E::PinningMismatch(_)
                | E::TooLarge { .. }
                | E::InvalidPath(_)
                | E::InsufficientSamples { .. },
            ) => EXIT_VALIDATION,
            _ => EXIT_RUNTIME,
        }
    }
}

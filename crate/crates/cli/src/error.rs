use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io { .. } => EXIT_VALIDATION,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<pdm_core::Error> for CliError {
    fn from(e: pdm_core::Error) -> Self {
        use pdm_core::Error as E;
        match e {
            E::Domain { .. }
            | E::NonUniformGrid { .. }
            | E::InvalidGrid(_)
            | E::OrderingConstraint { .. }
            | E::InvalidArgument(_)
            | E::UnsupportedScheme(_)
            | E::TooManyEigenpairs { .. }
            | E::Csv(_)
            | E::Io(_) => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Numerical(format!("json: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

use thiserror::Error;

/// Top-level failure, split by exit code: bad input exits 1, anything else 2.
#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) | AppError::Input(_) => 1,
            AppError::Internal(_) => 2,
        }
    }

    pub fn input(context: impl std::fmt::Display, err: impl std::fmt::Display) -> Self {
        AppError::Input(format!("{context}: {err}"))
    }
}

pub type Result<T, E = AppError> = std::result::Result<T, E>;

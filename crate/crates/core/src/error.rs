use thiserror::Error;

/// Errors raised across the emulator.
///
/// Each variant maps onto one of the process exit codes used by the `gbs`
/// binary (see [`GbsError::exit_code`]).
#[derive(Debug, Error)]
pub enum GbsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid Gaussian state: {0}")]
    InvalidState(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("resource guard: {0}")]
    ResourceGuard(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl GbsError {
    /// 2 validation, 3 resource guard, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            GbsError::ResourceGuard(_) => 3,
            GbsError::Numerical(_) | GbsError::Degenerate(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, GbsError>;

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::error::GbsError::$variant(format!($($arg)*)))
    };
}
pub(crate) use bail;

use ordbridge_core::Error as CoreError;

/// Failure classes, each with its own process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("sampling: {0}")]
    Sampling(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Sampling(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::Sampling(_) | CoreError::NonFiniteDensity { .. } => CliError::Sampling(msg),
            CoreError::Io { .. } => CliError::Io(msg),
            _ => CliError::Validation(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_errors_map_to_exit_classes() {
        let code = |e: CoreError| CliError::from(e).exit_code();
        assert_eq!(code(CoreError::Sampling("stuck".into())), 4);
        assert_eq!(code(CoreError::NonFiniteDensity { block: "likelihood" }), 4);
        assert_eq!(code(CoreError::Dataset("empty".into())), 3);
        assert_eq!(code(CoreError::DrawsFormat("bad".into())), 3);
        let io = std::io::Error::new(std::io::ErrorKind::NotFound, "gone");
        assert_eq!(code(CoreError::Io { path: "x".into(), source: io }), 5);
        assert_eq!(CliError::Usage("flag".into()).exit_code(), 2);
    }
}

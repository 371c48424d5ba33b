use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: elasticflow::Error,
    },
}

impl CliError {
    pub fn core(context: impl Into<String>, source: elasticflow::Error) -> Self {
        Self::Core {
            context: context.into(),
            source,
        }
    }

    /// Process exit code: 1 check failure, 2 usage or config, 3 numerical
    /// nonconvergence.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Core { source, .. } => {
                if is_numerical(source) {
                    3
                } else {
                    2
                }
            }
        }
    }
}

fn is_numerical(err: &elasticflow::Error) -> bool {
    use elasticflow::Error as E;
    match err {
        E::NonConvergence { .. } | E::SeriesConvergence { .. } | E::Quadrature { .. } | E::Bracket(_) => true,
        E::Step { source, .. } => is_numerical(source),
        _ => false,
    }
}

pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError>;
}

impl<T> Context<T> for elasticflow::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError> {
        self.map_err(|e| CliError::core(what(), e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::CheckFailed("x".into()).exit_code(), 1);
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        let step = elasticflow::Error::Step {
            step: 3,
            source: Box::new(elasticflow::Error::Bracket("b".into())),
        };
        assert_eq!(CliError::core("run", step).exit_code(), 3);
        assert_eq!(CliError::core("io", elasticflow::Error::Format("f".into())).exit_code(), 2);
    }
}

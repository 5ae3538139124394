use riskrag::corpus::CorpusError;
use riskrag::evaluation::EvalError;
use riskrag::generation::GenerationError;
use riskrag::providers::ProviderError;
use riskrag::report::ReportError;
use riskrag::retrieval::RetrievalError;

/// Failure classes, one per exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("provider failure: {0}")]
    Provider(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Provider(_) => 2,
            CliError::Data(_) => 3,
        }
    }

    pub fn data(context: impl std::fmt::Display, err: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{context}: {err}"))
    }
}

impl From<ProviderError> for CliError {
    fn from(e: ProviderError) -> Self {
        match e {
            ProviderError::Config(_) => CliError::Usage(e.to_string()),
            other => CliError::Provider(other.to_string()),
        }
    }
}

impl From<RetrievalError> for CliError {
    fn from(e: RetrievalError) -> Self {
        match e {
            RetrievalError::Provider(p) => p.into(),
            RetrievalError::InvalidK | RetrievalError::MissingEmbedder => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<GenerationError> for CliError {
    fn from(e: GenerationError) -> Self {
        match e {
            GenerationError::Provider(p) => p.into(),
            GenerationError::Scorer(s) => s.into(),
            GenerationError::Config(m) => CliError::Usage(m),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Provider(p) => p.into(),
            EvalError::Retrieval(r) => r.into(),
            EvalError::Generation(g) => (*g).into(),
            EvalError::InvalidThreshold(_) | EvalError::InvalidFraction(_) | EvalError::MissingBackend(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        CliError::Data(e.to_string())
    }
}

use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration ({field}): {message}")]
    Validation { field: String, message: String },

    #[error(transparent)]
    Solver(#[from] multiscale::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("incompatible runs: {0}")]
    Incompatible(String),

    #[error("malformed report {path}: {message}")]
    Report { path: String, message: String },
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation { .. } => "validation",
            CliError::Solver(_) => "solver",
            CliError::Io { .. } => "io",
            CliError::Incompatible(_) => "incompatible",
            CliError::Report { .. } => "report",
        }
    }

    /// Process exit status: 2 for bad input, 1 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation { .. } | CliError::Incompatible(_) | CliError::Report { .. } => 2,
            CliError::Solver(_) | CliError::Io { .. } => 1,
        }
    }

    pub fn record(&self) -> serde_json::Value {
        let mut body = json!({ "kind": self.kind(), "message": self.to_string() });
        if let CliError::Validation { field, .. } = self {
            body["field"] = json!(field);
        }
        json!({ "error": body })
    }
}

pub fn io_error(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

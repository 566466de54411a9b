use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or flag values.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] uregm::Error),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Artifact { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    /// Core validation of user-supplied settings is a usage problem.
    pub fn usage(e: uregm::Error) -> Self {
        CliError::Usage(match e {
            uregm::Error::InvalidArgument(m) => m,
            other => other.to_string(),
        })
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(uregm::Error::Io { .. }) | CliError::Write { .. } => "io",
            CliError::Core(_) => "data",
            CliError::Artifact { .. } => "artifact",
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Payload<'a> {
            error: &'a str,
            kind: &'a str,
            exit_code: i32,
        }
        serde_json::to_string(&Payload {
            error: &self.to_string(),
            kind: self.kind(),
            exit_code: self.exit_code(),
        })
        .expect("error payload serializes")
    }
}

pub type CliResult<T> = Result<T, CliError>;

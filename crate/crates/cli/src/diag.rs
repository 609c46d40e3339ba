use std::fmt;
use std::path::Path;

use conflux_core::ahp::AhpError;
use conflux_core::detection::DetectionError;
use conflux_core::evaluation::EvaluationError;
use conflux_core::eventcsv::EventCsvError;
use conflux_core::ingest::IngestError;
use conflux_core::prioritization::PrioritizationError;
use conflux_core::profiles::ProfileError;
use conflux_core::resolution::ResolutionError;
use conflux_core::DomainError;
use serde::Serialize;
use serde_json::{json, Value};

/// A failed run, printed to stderr as one JSON object.
#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

impl Failure {
    pub fn new(code: impl Into<String>, message: impl Into<String>) -> Self {
        Failure {
            code: code.into(),
            message: message.into(),
            context: None,
            details: None,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Failure::new("cli::Io", err.to_string()).context(path.display().to_string())
    }

    pub fn config(path: &Path, message: impl Into<String>) -> Self {
        Failure::new("cli::Config", message).context(path.display().to_string())
    }

    pub fn context(mut self, context: impl Into<String>) -> Self {
        self.context = Some(context.into());
        self
    }

    fn details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_else(|_| format!("{{\"code\":\"{}\"}}", self.code))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl From<AhpError> for Failure {
    fn from(e: AhpError) -> Self {
        let base = Failure::new(e.code(), e.to_string());
        match &e {
            AhpError::InconsistentMatrix(r) => base.details(json!({
                "cr": r.cr,
                "ci": r.ci,
                "ri": r.ri,
                "lambda_max": r.lambda_max,
                "labels": r.labels,
                "weights": r.weights,
            })),
            AhpError::RevisionDiverged { iterations, cr } => {
                base.details(json!({ "iterations": iterations, "cr": cr }))
            }
            _ => base,
        }
    }
}

impl From<PrioritizationError> for Failure {
    fn from(e: PrioritizationError) -> Self {
        match e {
            PrioritizationError::InvalidOverride { key, source } => {
                Failure::from(source).context(format!("criteria template `{key}`"))
            }
            PrioritizationError::Ahp(source) => Failure::from(source),
            other => Failure::new(other.code(), other.to_string()),
        }
    }
}

impl From<EvaluationError> for Failure {
    fn from(e: EvaluationError) -> Self {
        match e {
            EvaluationError::Prioritization(p) => Failure::from(p),
            other => Failure::new(other.code(), other.to_string()),
        }
    }
}

macro_rules! coded {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::new(e.code(), e.to_string())
            }
        }
    )*};
}

coded!(
    DomainError,
    DetectionError,
    EventCsvError,
    IngestError,
    ProfileError,
    ResolutionError
);

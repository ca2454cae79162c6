use thiserror::Error;

/// Failure while reading a process, service, report, BPEL or binding document.
/// Every variant carries the location path of the offending element.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocumentError {
    #[error("malformed document at {path}: {message}")]
    Malformed { path: String, message: String },
    #[error("unresolved reference at {path}: {message}")]
    UnresolvedReference { path: String, message: String },
    #[error("invariant violated at {path}: {message}")]
    InvariantViolation { path: String, message: String },
    #[error("missing semantic annotation at {path}: {message}")]
    MissingAnnotation { path: String, message: String },
}

impl DocumentError {
    pub(crate) fn malformed(path: impl Into<String>, message: impl Into<String>) -> Self {
        DocumentError::Malformed {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn missing_annotation(path: impl Into<String>, message: impl Into<String>) -> Self {
        DocumentError::MissingAnnotation {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn path(&self) -> &str {
        match self {
            DocumentError::Malformed { path, .. }
            | DocumentError::UnresolvedReference { path, .. }
            | DocumentError::InvariantViolation { path, .. }
            | DocumentError::MissingAnnotation { path, .. } => path,
        }
    }
}

/// Non-fatal observation recorded while parsing, e.g. an ignored attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWarning {
    pub path: String,
    pub message: String,
}

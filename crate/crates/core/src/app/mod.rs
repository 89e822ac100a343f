//! Command implementations and the HTTP service.

pub mod cli;
pub mod comparison;
pub mod export;
pub mod run;
pub mod server;

use std::fmt;

use crate::annotate::{PipelineError, PipelineErrorKind};
use crate::ingest::IngestError;
use crate::similarity::SimilarityError;
use crate::store::StoreError;
use crate::timeline::TimelineError;

/// Process exit status classes of the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitClass {
    Internal,
    User,
    Environment,
}

impl ExitClass {
    pub fn code(self) -> i32 {
        match self {
            ExitClass::Internal => 1,
            ExitClass::User => 2,
            ExitClass::Environment => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppError {
    pub class: ExitClass,
    pub code: String,
    pub message: String,
}

impl AppError {
    pub fn new(class: ExitClass, code: &str, message: impl Into<String>) -> Self {
        Self { class, code: code.to_owned(), message: message.into() }
    }

    pub fn user(code: &str, message: impl Into<String>) -> Self {
        Self::new(ExitClass::User, code, message)
    }

    pub fn environment(code: &str, message: impl Into<String>) -> Self {
        Self::new(ExitClass::Environment, code, message)
    }

    pub fn internal(code: &str, message: impl Into<String>) -> Self {
        Self::new(ExitClass::Internal, code, message)
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for AppError {}

fn ingest_class(e: &IngestError) -> ExitClass {
    match e {
        IngestError::ArticleNotFound(_) | IngestError::RevisionNotFound { .. } => ExitClass::User,
        IngestError::SourceUnavailable(_) | IngestError::Malformed(_) => ExitClass::Environment,
    }
}

impl From<IngestError> for AppError {
    fn from(e: IngestError) -> Self {
        Self::new(ingest_class(&e), e.code(), e.to_string())
    }
}

impl From<PipelineError> for AppError {
    fn from(e: PipelineError) -> Self {
        let class = match &e.kind {
            PipelineErrorKind::Ingest(i) => ingest_class(i),
            PipelineErrorKind::Annotate(_) => ExitClass::Environment,
            PipelineErrorKind::Invalid(_) => ExitClass::Internal,
        };
        Self::new(class, e.code(), e.to_string())
    }
}

impl From<TimelineError> for AppError {
    fn from(e: TimelineError) -> Self {
        let class = match e {
            TimelineError::ReportCountMismatch { .. } => ExitClass::Internal,
            _ => ExitClass::User,
        };
        Self::new(class, e.code(), e.to_string())
    }
}

impl From<StoreError> for AppError {
    fn from(e: StoreError) -> Self {
        let class = match e {
            StoreError::NotFound(_) | StoreError::InvalidPairId(_) => ExitClass::User,
            StoreError::CorruptDocument { .. } | StoreError::Locked(_) | StoreError::Io(_) => ExitClass::Environment,
        };
        Self::new(class, e.code(), e.to_string())
    }
}

impl From<SimilarityError> for AppError {
    fn from(e: SimilarityError) -> Self {
        Self::internal("MissingFeature", e.to_string())
    }
}

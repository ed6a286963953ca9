use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::{json, Value};

use crate::analysis::AnalysisError;
use crate::journal::{JournalError, ProcessingFailed};
use crate::llm::LlmError;
use crate::pipeline::PipelineError;
use crate::store::StoreError;
use crate::study::{ScoringError, StudyError};

/// JSON error body `{"error": <code>, "message": <text>, ...extra}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub extra: serde_json::Map<String, Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            extra: serde_json::Map::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.extra.insert(key.into(), value.into());
        self
    }

    pub fn unauthorized() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or expired session")
    }

    pub fn forbidden(message: impl Into<String>) -> Self {
        Self::new(StatusCode::FORBIDDEN, "forbidden", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }

    pub fn body(&self) -> Value {
        let mut body = json!({ "error": self.code, "message": self.message });
        if let Value::Object(map) = &mut body {
            map.extend(self.extra.clone());
        }
        body
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body())).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let msg = e.to_string();
        match e {
            StoreError::TooShort { chars, min } => Self::new(StatusCode::BAD_REQUEST, "too_short", msg)
                .with("chars", chars)
                .with("min", min),
            StoreError::EmptyText | StoreError::WordLimit { .. } | StoreError::Rejected(_) => Self::bad_request(msg),
            StoreError::UnknownUser(_) | StoreError::UnknownMemory(_) | StoreError::UnknownSuggestion(_) => {
                Self::not_found(msg)
            }
            StoreError::WrongArm(_) => Self::new(StatusCode::FORBIDDEN, "wrong_arm", msg),
            StoreError::CorruptLog { .. } | StoreError::Io(_) => Self::internal(msg),
            _ => Self::new(StatusCode::CONFLICT, "conflict", msg),
        }
    }
}

impl From<ScoringError> for ApiError {
    fn from(e: ScoringError) -> Self {
        let code = match e {
            ScoringError::BadItemCount { .. } => "bad_item_count",
            ScoringError::OutOfRange { .. } => "out_of_range",
            ScoringError::UnknownItem(_) => "unknown_item",
        };
        Self::new(StatusCode::BAD_REQUEST, code, e.to_string())
    }
}

impl From<StudyError> for ApiError {
    fn from(e: StudyError) -> Self {
        let msg = e.to_string();
        match e {
            StudyError::Scoring(s) => s.into(),
            StudyError::Store(s) => s.into(),
            StudyError::AlreadyEnrolled(_) => Self::new(StatusCode::CONFLICT, "already_enrolled", msg),
            StudyError::UnknownUser(_) | StudyError::UnknownSuggestion(_) => Self::not_found(msg),
            StudyError::WrongArm(_) => Self::new(StatusCode::FORBIDDEN, "wrong_arm", msg),
            StudyError::MissingPreSample => Self::new(StatusCode::CONFLICT, "missing_pre_sample", msg),
            StudyError::FlowViolation { state, .. } => {
                Self::new(StatusCode::CONFLICT, "flow_violation", msg).with("state", state.as_str())
            }
            StudyError::TooEarly { open_at } => {
                Self::new(StatusCode::CONFLICT, "too_early", msg).with("open_at", open_at.to_rfc3339())
            }
            StudyError::WindowClosed(_) => Self::new(StatusCode::CONFLICT, "window_closed", msg),
            StudyError::AlreadyAnswered(_) => Self::new(StatusCode::CONFLICT, "already_answered", msg),
        }
    }
}

impl From<LlmError> for ApiError {
    fn from(e: LlmError) -> Self {
        let msg = e.to_string();
        match e {
            LlmError::ProviderTimeout => {
                Self::new(StatusCode::BAD_GATEWAY, "provider_timeout", msg).with("retriable", true)
            }
            LlmError::ProviderRefusal => {
                Self::new(StatusCode::BAD_GATEWAY, "provider_refusal", msg).with("retriable", true)
            }
            LlmError::Provider(_) | LlmError::ZeroVector => Self::new(StatusCode::BAD_GATEWAY, "provider_error", msg),
            LlmError::UnsupportedMedia(_) => Self::new(StatusCode::UNSUPPORTED_MEDIA_TYPE, "unsupported_media", msg),
            LlmError::EmptyInput => Self::bad_request(msg),
            LlmError::UnboundPlaceholder(_) => Self::internal(msg),
        }
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let msg = e.to_string();
        match e {
            PipelineError::GuardrailExhausted { .. } => {
                Self::new(StatusCode::SERVICE_UNAVAILABLE, "guardrail_exhausted", msg).with("retriable", true)
            }
            PipelineError::NoveltyExhausted { .. } => {
                Self::new(StatusCode::SERVICE_UNAVAILABLE, "novelty_exhausted", msg).with("retriable", true)
            }
            PipelineError::MissingEmbedding(_) => Self::new(StatusCode::CONFLICT, "missing_embedding", msg),
            PipelineError::Llm(l) => l.into(),
            PipelineError::Store(s) => s.into(),
            PipelineError::Retrieval(r) => Self::internal(r.to_string()),
        }
    }
}

impl From<JournalError> for ApiError {
    fn from(e: JournalError) -> Self {
        match e {
            JournalError::Study(s) => s.into(),
            JournalError::Pipeline(p) => p.into(),
        }
    }
}

impl From<ProcessingFailed> for ApiError {
    fn from(e: ProcessingFailed) -> Self {
        ApiError::from(e.source).with("memory_id", e.memory_id.0)
    }
}

impl From<AnalysisError> for ApiError {
    fn from(e: AnalysisError) -> Self {
        Self::internal(e.to_string())
    }
}

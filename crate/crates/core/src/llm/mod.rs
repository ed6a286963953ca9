//! Provider-agnostic chat completion, embedding and transcription.

pub mod config;
mod gateway;
pub mod http;
pub mod mock;
pub mod scripted;
pub mod template;

use std::time::Duration;

use thiserror::Error;

pub use config::LlmConfig;
pub use gateway::{Gateway, RetryPolicy};
pub use mock::MockProvider;
pub use scripted::ScriptedProvider;
pub use template::{ChatMessage, ChatRole, CompletionRequest, PromptTemplate, TemplateName};

/// What a single provider call can fail with.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProviderError {
    /// Retriable: network hiccup, 5xx, rate limiting.
    #[error("transient provider failure: {0}")]
    Transient(String),
    #[error("provider call timed out")]
    Timeout,
    /// Empty or filtered output.
    #[error("provider refused: {0}")]
    Refused(String),
    #[error("unsupported media type {0}")]
    UnsupportedMedia(String),
    /// Not retriable: bad credentials, malformed request.
    #[error("provider error: {0}")]
    Fatal(String),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LlmError {
    #[error("provider did not answer within the deadline")]
    ProviderTimeout,
    #[error("provider returned no usable output")]
    ProviderRefusal,
    #[error("unsupported media: {0}")]
    UnsupportedMedia(String),
    #[error("template placeholder {{{0}}} has no binding")]
    UnboundPlaceholder(String),
    #[error("input text is empty")]
    EmptyInput,
    #[error("embedding is a zero vector")]
    ZeroVector,
    #[error("{0}")]
    Provider(String),
}

/// A backend for the three model calls. Implementations must be thread-safe;
/// `budget` is the time left before the gateway's overall deadline.
pub trait LlmProvider: Send + Sync {
    fn complete(&self, request: &CompletionRequest, budget: Duration) -> Result<String, ProviderError>;

    fn embed(&self, text: &str, budget: Duration) -> Result<Vec<f64>, ProviderError>;

    fn transcribe(&self, audio: &[u8], media_type: &str, budget: Duration) -> Result<String, ProviderError>;
}

/// Media types accepted for transcription.
pub const AUDIO_MEDIA_TYPES: &[&str] = &[
    "audio/webm",
    "audio/wav",
    "audio/x-wav",
    "audio/mpeg",
    "audio/mp4",
    "audio/ogg",
    "audio/flac",
];

pub fn is_supported_audio(media_type: &str) -> bool {
    let base = media_type.split(';').next().unwrap_or("").trim();
    AUDIO_MEDIA_TYPES.contains(&base)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
    normalized: bool,
}

impl EmbeddingVector {
    pub fn raw(values: Vec<f64>) -> Self {
        Self {
            values,
            normalized: false,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn normalize(mut self) -> Result<Self, LlmError> {
        let norm = self.squared_norm().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(LlmError::ZeroVector);
        }
        for v in &mut self.values {
            *v /= norm;
        }
        self.normalized = true;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_gives_unit_norm() {
        let v = EmbeddingVector::raw(vec![3.0, 4.0]).normalize().unwrap();
        assert!(v.is_normalized());
        assert!((v.squared_norm() - 1.0).abs() < 1e-12);
        assert_eq!(
            EmbeddingVector::raw(vec![0.0, 0.0]).normalize(),
            Err(LlmError::ZeroVector)
        );
    }

    #[test]
    fn audio_types() {
        assert!(is_supported_audio("audio/webm;codecs=opus"));
        assert!(!is_supported_audio("text/plain"));
    }
}

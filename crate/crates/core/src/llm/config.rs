use std::sync::Arc;

use super::gateway::DEFAULT_MAX_IN_FLIGHT;
use super::http::HttpProvider;
use super::{Gateway, LlmProvider, MockProvider, RetryPolicy};

pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_CHAT_MODEL: &str = "gpt-4-1106-preview";
pub const DEFAULT_EMBEDDING_MODEL: &str = "text-embedding-ada-002";
pub const DEFAULT_TRANSCRIPTION_MODEL: &str = "whisper-1";

/// Provider settings. `from_env` reads `REVERIE_LLM_BASE_URL`,
/// `REVERIE_LLM_API_KEY`, `REVERIE_CHAT_MODEL`, `REVERIE_EMBEDDING_MODEL`,
/// `REVERIE_TRANSCRIPTION_MODEL`, `REVERIE_LLM_MOCK` and
/// `REVERIE_LLM_MAX_IN_FLIGHT`.
#[derive(Debug, Clone, PartialEq)]
pub struct LlmConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    pub chat_model: String,
    pub embedding_model: String,
    pub transcription_model: String,
    pub mock: bool,
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            base_url: DEFAULT_BASE_URL.into(),
            api_key: None,
            chat_model: DEFAULT_CHAT_MODEL.into(),
            embedding_model: DEFAULT_EMBEDDING_MODEL.into(),
            transcription_model: DEFAULT_TRANSCRIPTION_MODEL.into(),
            mock: true,
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
            retry: RetryPolicy::default(),
        }
    }
}

fn truthy(v: &str) -> bool {
    matches!(v.trim().to_ascii_lowercase().as_str(), "1" | "true" | "yes" | "on")
}

impl LlmConfig {
    pub fn from_env() -> Self {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    /// Mock mode is on unless an API key is set, or when forced by `REVERIE_LLM_MOCK`.
    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Self {
        let d = Self::default();
        let api_key = get("REVERIE_LLM_API_KEY").filter(|k| !k.is_empty());
        let mock = match get("REVERIE_LLM_MOCK") {
            Some(v) => truthy(&v),
            None => api_key.is_none(),
        };
        Self {
            base_url: get("REVERIE_LLM_BASE_URL").unwrap_or(d.base_url),
            chat_model: get("REVERIE_CHAT_MODEL").unwrap_or(d.chat_model),
            embedding_model: get("REVERIE_EMBEDDING_MODEL").unwrap_or(d.embedding_model),
            transcription_model: get("REVERIE_TRANSCRIPTION_MODEL").unwrap_or(d.transcription_model),
            max_in_flight: get("REVERIE_LLM_MAX_IN_FLIGHT")
                .and_then(|v| v.parse().ok())
                .unwrap_or(d.max_in_flight),
            api_key,
            mock,
            retry: d.retry,
        }
    }

    pub fn provider(&self) -> Arc<dyn LlmProvider> {
        if self.mock {
            Arc::new(MockProvider::default())
        } else {
            Arc::new(HttpProvider::new(self.clone()))
        }
    }

    pub fn gateway(&self) -> Gateway {
        Gateway::new(self.provider(), self.retry.clone(), self.max_in_flight)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn defaults_to_mock_without_key() {
        let c = LlmConfig::from_lookup(|_| None);
        assert!(c.mock);
        assert_eq!(c.chat_model, "gpt-4-1106-preview");
    }

    #[test]
    fn key_turns_mock_off_unless_forced() {
        let env: HashMap<&str, &str> = [("REVERIE_LLM_API_KEY", "sk-x"), ("REVERIE_CHAT_MODEL", "m")].into();
        let c = LlmConfig::from_lookup(|k| env.get(k).map(|v| v.to_string()));
        assert!(!c.mock);
        assert_eq!(c.chat_model, "m");
        let env: HashMap<&str, &str> = [("REVERIE_LLM_API_KEY", "sk-x"), ("REVERIE_LLM_MOCK", "1")].into();
        assert!(LlmConfig::from_lookup(|k| env.get(k).map(|v| v.to_string())).mock);
    }
}

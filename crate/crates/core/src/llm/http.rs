//! OpenAI-compatible HTTP provider (`/chat/completions`, `/embeddings`,
//! `/audio/transcriptions`).

use std::sync::OnceLock;
use std::time::Duration;

use reqwest::blocking::{multipart, Client, Response};
use reqwest::StatusCode;
use serde::Deserialize;
use serde_json::json;

use super::{is_supported_audio, CompletionRequest, LlmConfig, LlmProvider, ProviderError};

pub struct HttpProvider {
    config: LlmConfig,
    // Built on first use so construction never happens on an async executor thread.
    client: OnceLock<Client>,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatContent,
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ChatContent {
    content: Option<String>,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f64>,
}

#[derive(Deserialize)]
struct TranscriptionResponse {
    text: String,
}

fn classify(err: reqwest::Error) -> ProviderError {
    if err.is_timeout() {
        ProviderError::Timeout
    } else if err.is_connect() || err.is_request() {
        ProviderError::Transient(err.to_string())
    } else {
        ProviderError::Fatal(err.to_string())
    }
}

fn check(resp: Response) -> Result<Response, ProviderError> {
    let status = resp.status();
    if status.is_success() {
        return Ok(resp);
    }
    let body = resp.text().unwrap_or_default();
    let msg = format!("{status}: {}", body.chars().take(200).collect::<String>());
    if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
        Err(ProviderError::Transient(msg))
    } else {
        Err(ProviderError::Fatal(msg))
    }
}

impl HttpProvider {
    pub fn new(config: LlmConfig) -> Self {
        Self {
            config,
            client: OnceLock::new(),
        }
    }

    fn client(&self) -> &Client {
        self.client.get_or_init(Client::new)
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{path}", self.config.base_url.trim_end_matches('/'))
    }

    fn post(&self, path: &str, budget: Duration) -> reqwest::blocking::RequestBuilder {
        let mut req = self.client().post(self.url(path)).timeout(budget);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        req
    }
}

impl LlmProvider for HttpProvider {
    fn complete(&self, request: &CompletionRequest, budget: Duration) -> Result<String, ProviderError> {
        let messages = request.messages().map_err(|e| ProviderError::Fatal(e.to_string()))?;
        let body = json!({
            "model": self.config.chat_model,
            "messages": messages,
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
            "seed": request.seed,
        });
        let resp = check(
            self.post("chat/completions", budget)
                .json(&body)
                .send()
                .map_err(classify)?,
        )?;
        let parsed: ChatResponse = resp.json().map_err(|e| ProviderError::Fatal(e.to_string()))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| ProviderError::Refused("no choices".into()))?;
        if choice.finish_reason.as_deref() == Some("content_filter") {
            return Err(ProviderError::Refused("content filtered".into()));
        }
        Ok(choice.message.content.unwrap_or_default())
    }

    fn embed(&self, text: &str, budget: Duration) -> Result<Vec<f64>, ProviderError> {
        let body = json!({ "model": self.config.embedding_model, "input": text });
        let resp = check(self.post("embeddings", budget).json(&body).send().map_err(classify)?)?;
        let parsed: EmbeddingResponse = resp.json().map_err(|e| ProviderError::Fatal(e.to_string()))?;
        parsed
            .data
            .into_iter()
            .next()
            .map(|d| d.embedding)
            .ok_or_else(|| ProviderError::Refused("no embedding returned".into()))
    }

    fn transcribe(&self, audio: &[u8], media_type: &str, budget: Duration) -> Result<String, ProviderError> {
        if audio.is_empty() || !is_supported_audio(media_type) {
            return Err(ProviderError::UnsupportedMedia(media_type.to_string()));
        }
        let ext = media_type
            .split(';')
            .next()
            .and_then(|m| m.rsplit('/').next())
            .unwrap_or("webm");
        let part = multipart::Part::bytes(audio.to_vec())
            .file_name(format!("memory.{ext}"))
            .mime_str(media_type)
            .map_err(|e| ProviderError::UnsupportedMedia(e.to_string()))?;
        let form = multipart::Form::new()
            .text("model", self.config.transcription_model.clone())
            .part("file", part);
        let resp = check(
            self.post("audio/transcriptions", budget)
                .multipart(form)
                .send()
                .map_err(classify)?,
        )?;
        let parsed: TranscriptionResponse = resp.json().map_err(|e| ProviderError::Fatal(e.to_string()))?;
        Ok(parsed.text)
    }
}

//! The per-memory generation chain: title, target emotion, retrieval of
//! related memories, then an action suggestion that cites them. Emotion and
//! suggestion outputs pass a valence screen; suggestions also pass a novelty
//! check against everything already suggested to the same user.

pub mod citation;
pub mod dates;
pub mod novelty;
pub mod valence;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use chrono_tz::Tz;
use thiserror::Error;

use crate::ids::{MemoryId, UserId};
use crate::llm::template::{CURRENT_DATETIME, EMOTION, MEMORIES, NEW_MEMORY};
use crate::llm::{CompletionRequest, Gateway, LlmError, TemplateName};
use crate::retrieval::{self, RetrievalError, SimilarityHit, DEFAULT_TOP_K};
use crate::store::{
    normalize_title, EmotionTarget, Event, MemoryKind, Store, StoreError, StoreState, Suggestion, EMOTION_WORD_LIMIT,
    SUGGESTION_WORD_LIMIT,
};
use crate::study::model::Condition;
use crate::text::{collapse_whitespace, truncate_words};

pub use citation::{extract_citations, Citation};
pub use dates::{format_date, format_day};
pub use novelty::{check_novelty, NOVELTY_THRESHOLD};
pub use valence::{ValenceReport, ValenceScreen, Verdict, DEFAULT_NEGATIVE_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Emotion,
    Suggestion,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Emotion => "emotion",
            Stage::Suggestion => "suggestion",
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{stage} output failed the valence screen {attempts} times")]
    GuardrailExhausted { stage: Stage, attempts: usize },
    #[error("suggestion repeated an earlier one {attempts} times")]
    NoveltyExhausted { attempts: usize },
    #[error("memory {0} has no embedding yet")]
    MissingEmbedding(MemoryId),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
}

impl PipelineError {
    /// Whether calling again later can succeed.
    pub fn is_retriable(&self) -> bool {
        matches!(
            self,
            PipelineError::GuardrailExhausted { .. }
                | PipelineError::NoveltyExhausted { .. }
                | PipelineError::Llm(LlmError::ProviderTimeout)
                | PipelineError::Llm(LlmError::ProviderRefusal)
        )
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub top_k: usize,
    /// Extra attempts after a valence failure, per stage.
    pub valence_regenerations: usize,
    /// Extra attempts after a novelty failure.
    pub novelty_regenerations: usize,
    /// Most recent suggestions listed in the prompt as ones to avoid.
    pub avoid_cap: usize,
    /// Zone for the dates shown to the model.
    pub timezone: Tz,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            top_k: DEFAULT_TOP_K,
            valence_regenerations: 2,
            novelty_regenerations: 2,
            avoid_cap: 20,
            timezone: Tz::UTC,
        }
    }
}

/// Result of one successful chain run, already persisted.
#[derive(Debug, Clone, PartialEq)]
pub struct SuggestionOutcome {
    pub target: EmotionTarget,
    pub suggestion: Suggestion,
    pub emotion_attempts: usize,
    pub suggestion_attempts: usize,
}

pub struct SuggestionPipeline {
    gateway: Arc<Gateway>,
    screen: ValenceScreen,
    config: PipelineConfig,
    user_locks: Mutex<HashMap<UserId, Arc<Mutex<()>>>>,
}

/// Short emotion name from a generated target: the text before a colon when
/// that is at most four words, otherwise the first word.
pub fn emotion_label(target: &str) -> String {
    let stripped = crate::text::strip_markup(target);
    let head = match stripped.split_once(':') {
        Some((head, _)) if !head.trim().is_empty() && head.split_whitespace().count() <= 4 => head.to_string(),
        _ => stripped.split_whitespace().next().unwrap_or_default().to_string(),
    };
    let label = head
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric() && c != '-'))
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    if label.is_empty() {
        "positive".into()
    } else {
        label
    }
}

/// The `{memories}` binding: one `- <date>: <text>` line per retrieved memory,
/// each on a new line, or "None" for an empty pool.
pub fn memories_binding(state: &StoreState, hits: &[SimilarityHit], tz: Tz) -> Result<String, StoreError> {
    if hits.is_empty() {
        return Ok("None".into());
    }
    let mut out = String::new();
    for hit in hits {
        let m = state.memory(hit.memory_id)?;
        out.push_str(&format!(
            "\n- {}: {}",
            format_date(&m.created_at.with_timezone(&tz)),
            collapse_whitespace(&m.text)
        ));
    }
    Ok(out)
}

impl SuggestionPipeline {
    pub fn new(gateway: Arc<Gateway>, screen: ValenceScreen, config: PipelineConfig) -> Self {
        Self {
            gateway,
            screen,
            config,
            user_locks: Mutex::new(HashMap::new()),
        }
    }

    pub fn gateway(&self) -> &Arc<Gateway> {
        &self.gateway
    }

    pub fn screen(&self) -> &ValenceScreen {
        &self.screen
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    fn user_lock(&self, user: &UserId) -> Arc<Mutex<()>> {
        self.user_locks
            .lock()
            .expect("lock table poisoned")
            .entry(user.clone())
            .or_default()
            .clone()
    }

    /// A normalized three-word title.
    pub fn generate_title(&self, memory_text: &str) -> Result<String, PipelineError> {
        if memory_text.trim().is_empty() {
            return Err(LlmError::EmptyInput.into());
        }
        let raw = self.gateway.complete(&CompletionRequest::title(memory_text))?;
        Ok(normalize_title(&raw))
    }

    /// The target emotion for a memory; returns the attempts used alongside.
    pub fn generate_emotion_target(
        &self,
        memory_id: MemoryId,
        memory_text: &str,
    ) -> Result<(EmotionTarget, usize), PipelineError> {
        if memory_text.trim().is_empty() {
            return Err(LlmError::EmptyInput.into());
        }
        let limit = self.config.valence_regenerations + 1;
        for attempt in 0..limit {
            let mut req = CompletionRequest::new(TemplateName::Emotion).bind(NEW_MEMORY, memory_text);
            req.seed = attempt as u64;
            let text = truncate_words(&self.gateway.complete(&req)?, EMOTION_WORD_LIMIT);
            let report = self.screen.screen(&text);
            if report.verdict == Verdict::Pass && !text.trim().is_empty() {
                let label = emotion_label(&text);
                return Ok((EmotionTarget { memory_id, text, label }, attempt + 1));
            }
            log::warn!("emotion target for {memory_id} failed valence screen: {report:?}");
        }
        Err(PipelineError::GuardrailExhausted {
            stage: Stage::Emotion,
            attempts: limit,
        })
    }

    /// Runs the full chain for a daily memory and records the suggestion.
    /// Runs for one user are serialized.
    pub fn generate_suggestion(
        &self,
        store: &Store,
        memory_id: MemoryId,
        now: DateTime<Utc>,
    ) -> Result<SuggestionOutcome, PipelineError> {
        let user = store.read(|s| s.memory(memory_id).map(|m| m.user_id.clone()))?;
        let lock = self.user_lock(&user);
        let _guard = lock.lock().expect("user lock poisoned");

        let (memory, hits, binding, past) = store.read(|s| {
            let memory = s.memory(memory_id)?.clone();
            if memory.kind != MemoryKind::Daily {
                return Err(PipelineError::Store(StoreError::NotDaily(memory_id)));
            }
            if s.participant(&user)?.condition != Condition::Experimental {
                return Err(StoreError::WrongArm(user.clone()).into());
            }
            if s.suggestion_for(memory_id).is_some() {
                return Err(StoreError::AlreadySuggested(memory_id).into());
            }
            let query = memory
                .embedding
                .clone()
                .ok_or(PipelineError::MissingEmbedding(memory_id))?;
            let hits = retrieval::top_k_similar(s, &user, &query, self.config.top_k, &[memory_id])?;
            let binding = memories_binding(s, &hits, self.config.timezone)?;
            let past: Vec<String> = s.user_suggestions(&user).map(|x| x.suggestion_text.clone()).collect();
            Ok((memory, hits, binding, past))
        })?;

        let (target, emotion_attempts) = self.generate_emotion_target(memory_id, &memory.text)?;
        let today = format_date(&now.with_timezone(&self.config.timezone));
        let mut avoid: Vec<String> = past
            .iter()
            .skip(past.len().saturating_sub(self.config.avoid_cap))
            .cloned()
            .collect();

        let mut valence_failures = 0;
        let mut novelty_failures = 0;
        let mut attempt = 0usize;
        let text = loop {
            let mut req = CompletionRequest::new(TemplateName::Suggestion)
                .bind(MEMORIES, binding.clone())
                .bind(NEW_MEMORY, memory.text.clone())
                .bind(CURRENT_DATETIME, today.clone())
                .bind(EMOTION, target.label.clone());
            req.avoid = avoid.clone();
            req.seed = attempt as u64;
            attempt += 1;
            let candidate = truncate_words(&self.gateway.complete(&req)?, SUGGESTION_WORD_LIMIT);
            let report = self.screen.screen(&candidate);
            if report.verdict != Verdict::Pass || candidate.trim().is_empty() {
                log::warn!("suggestion for {memory_id} failed valence screen: {report:?}");
                valence_failures += 1;
                if valence_failures > self.config.valence_regenerations {
                    return Err(PipelineError::GuardrailExhausted {
                        stage: Stage::Suggestion,
                        attempts: attempt,
                    });
                }
                continue;
            }
            if !check_novelty(&candidate, &past) {
                log::info!("suggestion for {memory_id} repeats an earlier one; regenerating");
                novelty_failures += 1;
                if novelty_failures > self.config.novelty_regenerations {
                    return Err(PipelineError::NoveltyExhausted { attempts: attempt });
                }
                avoid.push(candidate);
                continue;
            }
            break candidate;
        };

        let retrieved_texts: Vec<(MemoryId, String)> = store.read(|s| {
            hits.iter()
                .map(|h| s.memory(h.memory_id).map(|m| (m.id, m.text.clone())))
                .collect::<Result<_, _>>()
        })?;
        let refs: Vec<(MemoryId, &str)> = retrieved_texts.iter().map(|(id, t)| (*id, t.as_str())).collect();
        let cited_memory_ids = citation::cited_ids(&extract_citations(&text, &refs));

        let record = store.commit(now, |s| {
            Ok::<_, StoreError>(Event::SuggestionRecorded {
                target: target.clone(),
                suggestion: Suggestion {
                    id: s.next_suggestion_id(),
                    user_id: user.clone(),
                    memory_id,
                    target_emotion_text: target.text.clone(),
                    suggestion_text: text.clone(),
                    cited_memory_ids: cited_memory_ids.clone(),
                    retrieved: hits.clone(),
                    likeliness_to_act: None,
                    created_at: now,
                    acknowledged_at: None,
                },
            })
        })?;
        let Event::SuggestionRecorded { suggestion, .. } = record.event else {
            unreachable!()
        };
        Ok(SuggestionOutcome {
            target,
            suggestion,
            emotion_attempts,
            suggestion_attempts: attempt,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels() {
        assert_eq!(emotion_label("Gratitude: being thankful for ..."), "gratitude");
        assert_eq!(emotion_label("Quiet Pride: you did it"), "quiet pride");
        assert_eq!(emotion_label("Joy, because the day was bright."), "joy");
        assert_eq!(emotion_label("A feeling that is long and wordy here: x"), "a");
        assert_eq!(emotion_label(""), "positive");
    }
}

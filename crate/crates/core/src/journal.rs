//! The journaling application: study gating plus the model calls that follow
//! each stored memory (title, embedding, suggestion).

use std::sync::Arc;

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::ids::{MemoryId, UserId};
use crate::llm::{Gateway, LlmError};
use crate::pipeline::{PipelineConfig, PipelineError, SuggestionPipeline, ValenceScreen};
use crate::store::{MemoryEntry, MemoryKind, Store, StoreError, Suggestion};
use crate::study::{Condition, StudyConfig, StudyEngine, StudyError};

#[derive(Debug, Error)]
pub enum JournalError {
    #[error(transparent)]
    Study(#[from] StudyError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl From<StoreError> for JournalError {
    fn from(e: StoreError) -> Self {
        JournalError::Study(e.into())
    }
}

impl From<LlmError> for JournalError {
    fn from(e: LlmError) -> Self {
        JournalError::Pipeline(e.into())
    }
}

/// A stored memory with whatever derived data is available.
#[derive(Debug, Clone, PartialEq)]
pub struct Processed {
    pub memory: MemoryEntry,
    pub suggestion: Option<Suggestion>,
}

/// Failure after the memory itself was stored; a retry resumes from here.
#[derive(Debug, Error)]
#[error("memory {memory_id} stored but processing failed: {source}")]
pub struct ProcessingFailed {
    pub memory_id: MemoryId,
    #[source]
    pub source: PipelineError,
}

pub struct Journal {
    store: Arc<Store>,
    study: StudyEngine,
    pipeline: SuggestionPipeline,
}

impl Journal {
    pub fn new(
        store: Arc<Store>,
        study: StudyConfig,
        gateway: Arc<Gateway>,
        screen: ValenceScreen,
        mut pipeline: PipelineConfig,
    ) -> Self {
        pipeline.timezone = study.timezone;
        Self {
            study: StudyEngine::new(store.clone(), study),
            pipeline: SuggestionPipeline::new(gateway, screen, pipeline),
            store,
        }
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }

    pub fn study(&self) -> &StudyEngine {
        &self.study
    }

    pub fn pipeline(&self) -> &SuggestionPipeline {
        &self.pipeline
    }

    pub fn gateway(&self) -> &Arc<Gateway> {
        self.pipeline.gateway()
    }

    /// Speech to editable text; the audio is not kept.
    pub fn transcribe(&self, audio: &[u8], media_type: &str) -> Result<String, LlmError> {
        self.gateway().transcribe(audio, media_type)
    }

    /// Stores a daily memory (the interaction must be waiting for one), then
    /// titles, embeds and, for the experimental arm, generates its suggestion.
    /// The outer error means nothing was stored; the inner one means the
    /// memory was stored and [`Journal::process_memory`] can finish the job.
    pub fn submit_memory(
        &self,
        user: &UserId,
        text: &str,
        now: DateTime<Utc>,
    ) -> Result<Result<Processed, ProcessingFailed>, StudyError> {
        let memory = self.study.create_daily_memory(user, text, now)?;
        Ok(self.finish(memory.id, now))
    }

    pub fn submit_seed(
        &self,
        user: &UserId,
        question: u8,
        text: &str,
        now: DateTime<Utc>,
    ) -> Result<Result<Processed, ProcessingFailed>, StudyError> {
        let memory = self.study.create_seed(user, question, text, now)?;
        Ok(self.finish(memory.id, now))
    }

    fn finish(&self, memory_id: MemoryId, now: DateTime<Utc>) -> Result<Processed, ProcessingFailed> {
        self.process_memory(memory_id, now).map_err(|e| ProcessingFailed {
            memory_id,
            source: match e {
                JournalError::Pipeline(p) => p,
                JournalError::Study(StudyError::Store(s)) => PipelineError::Store(s),
                JournalError::Study(other) => PipelineError::Store(StoreError::Rejected(other.to_string())),
            },
        })
    }

    /// Fills in whatever a memory is missing: title, embedding, and the
    /// suggestion for experimental-arm daily memories. Safe to repeat.
    pub fn process_memory(&self, memory_id: MemoryId, now: DateTime<Utc>) -> Result<Processed, JournalError> {
        let (memory, condition) = self.store.read(|s| {
            let m = s.memory(memory_id)?.clone();
            let c = s.participant(&m.user_id)?.condition;
            Ok::<_, StoreError>((m, c))
        })?;
        if memory.kind == MemoryKind::Imagination {
            return Ok(Processed {
                memory,
                suggestion: None,
            });
        }
        if memory.title.is_none() {
            let title = self.pipeline.generate_title(&memory.text)?;
            self.store.attach_title(memory_id, &title, now)?;
        }
        if memory.embedding.is_none() {
            let v = self.gateway().embed(&memory.text)?;
            self.store.attach_embedding(memory_id, v.into_values(), now)?;
        }
        let mut suggestion = self.store.read(|s| s.suggestion_for(memory_id).cloned());
        if suggestion.is_none() && memory.kind == MemoryKind::Daily && condition == Condition::Experimental {
            suggestion = Some(
                self.pipeline
                    .generate_suggestion(&self.store, memory_id, now)?
                    .suggestion,
            );
        }
        let memory = self.store.read(|s| s.memory(memory_id).cloned())?;
        Ok(Processed { memory, suggestion })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{MockProvider, RetryPolicy, ScriptedProvider, TemplateName};
    use crate::store::StoreKey;
    use crate::study::AffectPhase;
    use chrono::TimeZone;

    const TEXT: &str = "This morning I cycled to the bakery with my daughter and we shared warm cinnamon rolls \
        on the bench outside while the town slowly woke up. She told me about her drawing class and \
        we laughed at the pigeons trying to steal crumbs from our paper bag.";

    fn journal(provider: Arc<dyn crate::llm::LlmProvider>) -> Journal {
        let store = Arc::new(Store::in_memory(&StoreKey::from_bytes([1; 32])));
        let gateway = Arc::new(Gateway::new(provider, RetryPolicy::immediate(), 4));
        Journal::new(
            store,
            StudyConfig::default(),
            gateway,
            ValenceScreen::builtin(),
            PipelineConfig::default(),
        )
    }

    fn now() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 5, 2, 18, 0, 0).unwrap()
    }

    #[test]
    fn experimental_memory_gets_everything() {
        let j = journal(Arc::new(MockProvider::default()));
        let u = UserId::from("e");
        j.study().enroll_as(&u, Condition::Experimental, now()).unwrap();
        j.study().record_affect(&u, AffectPhase::Pre, 3, 2, now()).unwrap();
        let p = j.submit_memory(&u, TEXT, now()).unwrap().unwrap();
        assert_eq!(p.memory.title.as_ref().unwrap().split_whitespace().count(), 3);
        assert!(p.memory.embedding.is_some());
        assert!(p.suggestion.is_some());
        let again = j.process_memory(p.memory.id, now()).unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn control_memory_gets_no_suggestion() {
        let j = journal(Arc::new(MockProvider::default()));
        let u = UserId::from("c");
        j.study().enroll_as(&u, Condition::Control, now()).unwrap();
        j.study().record_affect(&u, AffectPhase::Pre, 3, 2, now()).unwrap();
        let p = j.submit_memory(&u, TEXT, now()).unwrap().unwrap();
        assert!(p.memory.title.is_some());
        assert!(p.suggestion.is_none());
        assert_eq!(j.store().read(|s| s.suggestions.len()), 0);
    }

    #[test]
    fn failed_generation_resumes() {
        let scripted = Arc::new(ScriptedProvider::new(Arc::new(MockProvider::default())));
        for _ in 0..4 {
            scripted.push(TemplateName::Emotion, Err(crate::llm::ProviderError::Timeout));
        }
        let j = journal(scripted);
        let u = UserId::from("e");
        j.study().enroll_as(&u, Condition::Experimental, now()).unwrap();
        j.study().record_affect(&u, AffectPhase::Pre, 3, 2, now()).unwrap();
        let failed = j.submit_memory(&u, TEXT, now()).unwrap().unwrap_err();
        assert!(failed.source.is_retriable());
        let p = j.process_memory(failed.memory_id, now()).unwrap();
        assert!(p.suggestion.is_some());
    }
}

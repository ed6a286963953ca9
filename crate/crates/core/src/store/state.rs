use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ids::{MemoryId, SuggestionId, UserId};
use crate::store::event::Event;
use crate::store::model::*;
use crate::store::StoreError;
use crate::study::model::*;
use crate::text;

/// Everything reconstructible from the event log.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StoreState {
    pub last_seq: u64,
    pub accounts: BTreeMap<UserId, Account>,
    pub participants: BTreeMap<UserId, StudyParticipant>,
    pub memories: BTreeMap<MemoryId, MemoryEntry>,
    pub emotion_targets: BTreeMap<MemoryId, EmotionTarget>,
    pub suggestions: BTreeMap<SuggestionId, Suggestion>,
    pub suggestion_for_memory: BTreeMap<MemoryId, SuggestionId>,
    pub cycles: Vec<EntryCycle>,
    pub phq8: Vec<Phq8Response>,
    pub sbi: Vec<SbiResponse>,
    pub perceptions: Vec<PerceptionResponse>,
    pub feedback: Vec<OpenEndedResponse>,
    pub reminders: Vec<ReminderRecord>,
    /// Embedding dimension fixed by the first stored embedding.
    pub embedding_dim: Option<usize>,
}

const UNIT_NORM_TOLERANCE: f64 = 1e-6;

impl StoreState {
    pub fn next_memory_id(&self) -> MemoryId {
        MemoryId(self.memories.len() as u64 + 1)
    }

    pub fn next_suggestion_id(&self) -> SuggestionId {
        SuggestionId(self.suggestions.len() as u64 + 1)
    }

    pub fn participant(&self, user: &UserId) -> Result<&StudyParticipant, StoreError> {
        self.participants
            .get(user)
            .ok_or_else(|| StoreError::UnknownUser(user.clone()))
    }

    pub fn memory(&self, id: MemoryId) -> Result<&MemoryEntry, StoreError> {
        self.memories.get(&id).ok_or(StoreError::UnknownMemory(id))
    }

    pub fn suggestion(&self, id: SuggestionId) -> Result<&Suggestion, StoreError> {
        self.suggestions.get(&id).ok_or(StoreError::UnknownSuggestion(id))
    }

    pub fn suggestion_for(&self, memory: MemoryId) -> Option<&Suggestion> {
        self.suggestion_for_memory
            .get(&memory)
            .and_then(|id| self.suggestions.get(id))
    }

    pub fn user_memories<'a>(&'a self, user: &'a UserId) -> impl Iterator<Item = &'a MemoryEntry> {
        self.memories.values().filter(move |m| &m.user_id == user)
    }

    /// A user's suggestions in creation order.
    pub fn user_suggestions<'a>(&'a self, user: &'a UserId) -> impl Iterator<Item = &'a Suggestion> {
        self.suggestions.values().filter(move |s| &s.user_id == user)
    }

    pub fn user_cycles<'a>(&'a self, user: &'a UserId) -> impl Iterator<Item = &'a EntryCycle> {
        self.cycles.iter().filter(move |c| &c.user_id == user)
    }

    pub fn open_cycle<'a>(&'a self, user: &'a UserId) -> Option<&'a EntryCycle> {
        self.user_cycles(user).last().filter(|c| c.is_open())
    }

    /// Memories newest-first (or oldest-first); with `KindFilter::All` each
    /// imagination directly follows the memory it was imagined from.
    pub fn list_memories(
        &self,
        user: &UserId,
        filter: KindFilter,
        order: Order,
    ) -> Result<Vec<MemoryEntry>, StoreError> {
        self.participant(user)?;
        let mut primary: Vec<&MemoryEntry> = self
            .user_memories(user)
            .filter(|m| match filter {
                KindFilter::All => m.kind != MemoryKind::Imagination,
                KindFilter::Only(kind) => m.kind == kind,
            })
            .collect();
        primary.sort_by(|a, b| a.created_at.cmp(&b.created_at).then(a.id.cmp(&b.id)));
        if order == Order::NewestFirst {
            primary.reverse();
        }
        let mut out = Vec::with_capacity(primary.len());
        for m in primary {
            out.push(m.clone());
            if filter == KindFilter::All {
                if let Some(img) = m.imagination_id.and_then(|id| self.memories.get(&id)) {
                    out.push(img.clone());
                }
            }
        }
        Ok(out)
    }

    /// Checks an event against store-level invariants without applying it.
    pub fn validate(&self, event: &Event) -> Result<(), StoreError> {
        match event {
            Event::AccountRegistered(account) => {
                if self.accounts.contains_key(&account.user_id) {
                    return Err(StoreError::AlreadyRegistered(account.user_id.clone()));
                }
            }
            Event::Enrolled(p) => {
                if self.participants.contains_key(&p.user_id) {
                    return Err(StoreError::AlreadyEnrolled(p.user_id.clone()));
                }
            }
            Event::MemoryCreated(m) => self.validate_memory(m)?,
            Event::TitleAttached { memory_id, title } => {
                let m = self.memory(*memory_id)?;
                if m.title.is_some() {
                    return Err(StoreError::AlreadyTitled(*memory_id));
                }
                if title.split_whitespace().count() != TITLE_WORDS {
                    return Err(StoreError::Rejected(format!("title {title:?} is not 3 words")));
                }
            }
            Event::EmbeddingAttached { memory_id, embedding } => {
                let m = self.memory(*memory_id)?;
                if m.embedding.is_some() {
                    return Err(StoreError::Rejected(format!("{memory_id} already embedded")));
                }
                if let Some(dim) = self.embedding_dim {
                    if dim != embedding.len() {
                        return Err(StoreError::DimensionMismatch {
                            expected: dim,
                            got: embedding.len(),
                        });
                    }
                }
                let sq: f64 = embedding.iter().map(|v| v * v).sum();
                if sq.is_nan() || (sq - 1.0).abs() > UNIT_NORM_TOLERANCE {
                    return Err(StoreError::Rejected(format!("embedding squared norm {sq} is not 1")));
                }
            }
            Event::SuggestionRecorded { target, suggestion } => self.validate_suggestion(target, suggestion)?,
            Event::SuggestionAcknowledged { suggestion_id, .. } => {
                if self.suggestion(*suggestion_id)?.acknowledged_at.is_some() {
                    return Err(StoreError::Rejected(format!("{suggestion_id} already acknowledged")));
                }
            }
            Event::LikelinessRecorded { suggestion_id, rating } => {
                self.suggestion(*suggestion_id)?;
                if !(1..=5).contains(rating) {
                    return Err(StoreError::Rejected(format!("likeliness {rating} not in 1..=5")));
                }
            }
            Event::AffectRecorded(sample) => {
                self.participant(&sample.user_id)?;
                if !(1..=5).contains(&sample.positive) || !(1..=5).contains(&sample.negative) {
                    return Err(StoreError::Rejected("affect outside 1..=5".into()));
                }
                match sample.phase {
                    AffectPhase::Pre => {
                        if self.open_cycle(&sample.user_id).is_some() {
                            return Err(StoreError::Rejected("entry already in progress".into()));
                        }
                    }
                    AffectPhase::Post => {
                        let open = self.open_cycle(&sample.user_id).ok_or(StoreError::MissingPreSample)?;
                        if open.memory_id.is_none() || open.memory_id != sample.memory_id {
                            return Err(StoreError::MissingPreSample);
                        }
                    }
                }
            }
            Event::Phq8Recorded(r) => {
                self.participant(&r.user_id)?;
                let sum: u32 = r.items.iter().map(|&i| u32::from(i)).sum();
                if r.items.iter().any(|&i| i > 3) || sum != u32::from(r.total) {
                    return Err(StoreError::Rejected("inconsistent PHQ-8 response".into()));
                }
            }
            Event::SbiRecorded(r) => {
                self.participant(&r.user_id)?;
            }
            Event::PerceptionRecorded(r) => {
                self.participant(&r.user_id)?;
            }
            Event::FeedbackRecorded(r) => {
                self.participant(&r.user_id)?;
            }
            Event::ReminderEmitted(r) => {
                self.participant(&r.user_id)?;
            }
        }
        Ok(())
    }

    fn validate_memory(&self, m: &MemoryEntry) -> Result<(), StoreError> {
        self.participant(&m.user_id)?;
        if m.id != self.next_memory_id() {
            return Err(StoreError::Rejected(format!("unexpected memory id {}", m.id)));
        }
        if m.title.is_some() || m.embedding.is_some() || m.imagination_id.is_some() {
            return Err(StoreError::Rejected("new memories carry no derived fields".into()));
        }
        let chars = text::char_len(&m.text);
        if m.text.trim().is_empty() {
            return Err(StoreError::EmptyText);
        }
        if m.kind.requires_min_length() && chars < MIN_MEMORY_CHARS {
            return Err(StoreError::TooShort {
                chars,
                min: MIN_MEMORY_CHARS,
            });
        }
        match (m.kind, m.seed_question_index) {
            (MemoryKind::Seed, Some(1..=5)) | (MemoryKind::Seed, None) => {}
            (MemoryKind::Seed, Some(i)) => return Err(StoreError::Rejected(format!("seed question {i} not in 1..=5"))),
            (_, Some(_)) => return Err(StoreError::Rejected("only seeds carry a question index".into())),
            _ => {}
        }
        match (m.kind, m.linked_memory_id) {
            (MemoryKind::Imagination, None) => Err(StoreError::MissingLink),
            (MemoryKind::Imagination, Some(source)) => {
                let daily = self.memory(source)?;
                if daily.user_id != m.user_id {
                    return Err(StoreError::CrossUserLink);
                }
                if daily.kind != MemoryKind::Daily {
                    return Err(StoreError::NotDaily(source));
                }
                if daily.imagination_id.is_some() {
                    return Err(StoreError::AlreadyLinked(source));
                }
                if !self.suggestion_for_memory.contains_key(&source) {
                    return Err(StoreError::NotSuggested(source));
                }
                Ok(())
            }
            (_, Some(_)) => Err(StoreError::Rejected("only imaginations link to a memory".into())),
            (_, None) => Ok(()),
        }
    }

    fn validate_suggestion(&self, target: &EmotionTarget, s: &Suggestion) -> Result<(), StoreError> {
        let memory = self.memory(s.memory_id)?;
        if memory.kind != MemoryKind::Daily {
            return Err(StoreError::NotDaily(s.memory_id));
        }
        if memory.user_id != s.user_id || target.memory_id != s.memory_id {
            return Err(StoreError::Rejected("suggestion does not match its memory".into()));
        }
        if self.participant(&s.user_id)?.condition != Condition::Experimental {
            return Err(StoreError::WrongArm(s.user_id.clone()));
        }
        if self.suggestion_for_memory.contains_key(&s.memory_id) {
            return Err(StoreError::AlreadySuggested(s.memory_id));
        }
        if s.id != self.next_suggestion_id() {
            return Err(StoreError::Rejected(format!("unexpected suggestion id {}", s.id)));
        }
        let words = text::word_count(&s.suggestion_text);
        if words > SUGGESTION_WORD_LIMIT {
            return Err(StoreError::WordLimit {
                words,
                limit: SUGGESTION_WORD_LIMIT,
            });
        }
        let words = text::word_count(&target.text);
        if words > EMOTION_WORD_LIMIT {
            return Err(StoreError::WordLimit {
                words,
                limit: EMOTION_WORD_LIMIT,
            });
        }
        for cited in &s.cited_memory_ids {
            let m = self.memory(*cited).map_err(|_| StoreError::InvalidCitation(*cited))?;
            if m.user_id != s.user_id || m.created_at > s.created_at || *cited == s.memory_id {
                return Err(StoreError::InvalidCitation(*cited));
            }
        }
        Ok(())
    }

    /// Applies a validated event.
    pub fn apply(&mut self, seq: u64, event: &Event) {
        self.last_seq = seq;
        match event {
            Event::AccountRegistered(a) => {
                self.accounts.insert(a.user_id.clone(), a.clone());
            }
            Event::Enrolled(p) => {
                self.participants.insert(p.user_id.clone(), p.clone());
            }
            Event::MemoryCreated(m) => {
                if let Some(source) = m.linked_memory_id {
                    if let Some(daily) = self.memories.get_mut(&source) {
                        daily.imagination_id = Some(m.id);
                    }
                }
                if m.kind == MemoryKind::Daily {
                    if let Some(p) = self.participants.get_mut(&m.user_id) {
                        p.last_entry_at = Some(m.created_at);
                    }
                    if let Some(cycle) = self
                        .cycles
                        .iter_mut()
                        .rev()
                        .find(|c| c.user_id == m.user_id)
                        .filter(|c| c.is_open() && c.memory_id.is_none())
                    {
                        cycle.memory_id = Some(m.id);
                    }
                }
                self.memories.insert(m.id, m.clone());
            }
            Event::TitleAttached { memory_id, title } => {
                if let Some(m) = self.memories.get_mut(memory_id) {
                    m.title = Some(title.clone());
                }
            }
            Event::EmbeddingAttached { memory_id, embedding } => {
                self.embedding_dim.get_or_insert(embedding.len());
                if let Some(m) = self.memories.get_mut(memory_id) {
                    m.embedding = Some(embedding.clone());
                }
            }
            Event::SuggestionRecorded { target, suggestion } => {
                self.emotion_targets.insert(target.memory_id, target.clone());
                self.suggestion_for_memory.insert(suggestion.memory_id, suggestion.id);
                self.suggestions.insert(suggestion.id, suggestion.clone());
            }
            Event::SuggestionAcknowledged { suggestion_id, at } => {
                if let Some(s) = self.suggestions.get_mut(suggestion_id) {
                    s.acknowledged_at = Some(*at);
                }
            }
            Event::LikelinessRecorded { suggestion_id, rating } => {
                if let Some(s) = self.suggestions.get_mut(suggestion_id) {
                    s.likeliness_to_act = Some(*rating);
                }
            }
            Event::AffectRecorded(sample) => match sample.phase {
                AffectPhase::Pre => self.cycles.push(EntryCycle {
                    user_id: sample.user_id.clone(),
                    pre: sample.clone(),
                    memory_id: None,
                    post: None,
                }),
                AffectPhase::Post => {
                    if let Some(cycle) = self.cycles.iter_mut().rev().find(|c| c.user_id == sample.user_id) {
                        cycle.post = Some(sample.clone());
                    }
                }
            },
            Event::Phq8Recorded(r) => self.phq8.push(r.clone()),
            Event::SbiRecorded(r) => self.sbi.push(r.clone()),
            Event::PerceptionRecorded(r) => self.perceptions.push(r.clone()),
            Event::FeedbackRecorded(r) => self.feedback.push(r.clone()),
            Event::ReminderEmitted(r) => self.reminders.push(r.clone()),
        }
    }
}

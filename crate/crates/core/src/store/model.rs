use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::ids::{MemoryId, SuggestionId, UserId};
use crate::retrieval::SimilarityHit;

/// Minimum length, in Unicode scalar values, of seed and daily memories.
pub const MIN_MEMORY_CHARS: usize = 200;

/// Word limits for generated text, markup excluded.
pub const EMOTION_WORD_LIMIT: usize = 40;
pub const SUGGESTION_WORD_LIMIT: usize = 60;

pub const TITLE_WORDS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryKind {
    Seed,
    Daily,
    Imagination,
}

impl MemoryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MemoryKind::Seed => "seed",
            MemoryKind::Daily => "daily",
            MemoryKind::Imagination => "imagination",
        }
    }

    pub fn requires_min_length(self) -> bool {
        !matches!(self, MemoryKind::Imagination)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub id: MemoryId,
    pub user_id: UserId,
    pub kind: MemoryKind,
    pub text: String,
    pub title: Option<String>,
    pub created_at: DateTime<Utc>,
    pub embedding: Option<Vec<f64>>,
    /// Imagination → the daily memory it was imagined from.
    pub linked_memory_id: Option<MemoryId>,
    /// Daily memory → its imagination (reverse side of the link).
    pub imagination_id: Option<MemoryId>,
    pub seed_question_index: Option<u8>,
}

/// The positive emotion chosen for a daily memory, first step of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionTarget {
    pub memory_id: MemoryId,
    pub text: String,
    /// Short emotion name bound into the suggestion prompt.
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub id: SuggestionId,
    pub user_id: UserId,
    pub memory_id: MemoryId,
    pub target_emotion_text: String,
    pub suggestion_text: String,
    pub cited_memory_ids: Vec<MemoryId>,
    /// Retrieval result the suggestion was generated from, kept for audit.
    pub retrieved: Vec<SimilarityHit>,
    pub likeliness_to_act: Option<u8>,
    pub created_at: DateTime<Utc>,
    /// When the participant started the imagination countdown.
    pub acknowledged_at: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Participant,
    Admin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Account {
    pub user_id: UserId,
    /// PHC-format salted password hash.
    pub password_hash: String,
    pub role: Role,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KindFilter {
    All,
    Only(MemoryKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    NewestFirst,
    OldestFirst,
}

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::ids::{MemoryId, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Experimental,
    Control,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Experimental => "experimental",
            Condition::Control => "control",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyParticipant {
    pub user_id: UserId,
    pub condition: Condition,
    pub enrolled_at: DateTime<Utc>,
    pub study_days: u32,
    pub last_entry_at: Option<DateTime<Utc>>,
}

impl StudyParticipant {
    pub fn study_end(&self) -> DateTime<Utc> {
        self.enrolled_at + chrono::Duration::days(i64::from(self.study_days))
    }

    pub fn within_window(&self, now: DateTime<Utc>) -> bool {
        now >= self.enrolled_at && now < self.study_end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AffectPhase {
    Pre,
    Post,
}

/// One pre- or post-interaction mood reading on two 1–5 scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffectSample {
    pub user_id: UserId,
    pub memory_id: Option<MemoryId>,
    pub phase: AffectPhase,
    pub positive: u8,
    pub negative: u8,
    pub recorded_at: DateTime<Utc>,
}

/// A journaling interaction: pre affect, the memory, then post affect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryCycle {
    pub user_id: UserId,
    pub pre: AffectSample,
    pub memory_id: Option<MemoryId>,
    pub post: Option<AffectSample>,
}

impl EntryCycle {
    pub fn is_open(&self) -> bool {
        self.post.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wave {
    PreStudy,
    PostStudy,
}

impl Wave {
    pub fn as_str(self) -> &'static str {
        match self {
            Wave::PreStudy => "pre_study",
            Wave::PostStudy => "post_study",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phq8Response {
    pub user_id: UserId,
    pub items: [u8; 8],
    pub total: u8,
    pub administered_at: DateTime<Utc>,
    pub wave: Wave,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbiResponse {
    pub user_id: UserId,
    pub items: Vec<u8>,
    pub score: f64,
    pub administered_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Battery {
    Suggestions,
    Imaginations,
}

impl Battery {
    pub fn as_str(self) -> &'static str {
        match self {
            Battery::Suggestions => "suggestions",
            Battery::Imaginations => "imaginations",
        }
    }
}

/// End-of-study agreement ratings (1–7) keyed by statement id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionResponse {
    pub user_id: UserId,
    pub battery: Battery,
    pub item_scores: BTreeMap<String, u8>,
    pub reverse_keyed_ids: Vec<String>,
    pub administered_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenEndedResponse {
    pub user_id: UserId,
    pub answers: BTreeMap<String, String>,
    pub administered_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReminderRecord {
    pub user_id: UserId,
    pub emitted_at: DateTime<Utc>,
    pub inactive_days: i64,
}

//! Where a participant is within the current journaling interaction.

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::ids::{MemoryId, SuggestionId, UserId};
use crate::store::{StoreError, StoreState};
use crate::study::model::Condition;

/// Minimum time between starting the imagination and submitting it.
pub const IMAGINATION_SECONDS: i64 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowState {
    NeedsPreAffect,
    NeedsMemory,
    NeedsSuggestionAck,
    NeedsImagination,
    NeedsPostAffect,
    CompleteForEntry,
}

impl FlowState {
    pub fn as_str(self) -> &'static str {
        match self {
            FlowState::NeedsPreAffect => "needs_pre_affect",
            FlowState::NeedsMemory => "needs_memory",
            FlowState::NeedsSuggestionAck => "needs_suggestion_ack",
            FlowState::NeedsImagination => "needs_imagination",
            FlowState::NeedsPostAffect => "needs_post_affect",
            FlowState::CompleteForEntry => "complete_for_entry",
        }
    }

    /// A new interaction can begin.
    pub fn can_start_entry(self) -> bool {
        matches!(self, FlowState::NeedsPreAffect | FlowState::CompleteForEntry)
    }
}

impl std::fmt::Display for FlowState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Flow state plus the ids the next step refers to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowStatus {
    pub state: FlowState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub memory_id: Option<MemoryId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suggestion_id: Option<SuggestionId>,
    /// Earliest time the imagination is accepted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub imagination_open_at: Option<DateTime<Utc>>,
}

pub fn flow_status(state: &StoreState, user: &UserId) -> Result<FlowStatus, StoreError> {
    let p = state.participant(user)?;
    let mut status = FlowStatus {
        state: FlowState::NeedsPreAffect,
        memory_id: None,
        suggestion_id: None,
        imagination_open_at: None,
    };
    let Some(cycle) = state.user_cycles(user).last() else {
        return Ok(status);
    };
    status.memory_id = cycle.memory_id;
    if !cycle.is_open() {
        status.state = FlowState::CompleteForEntry;
        return Ok(status);
    }
    let Some(memory_id) = cycle.memory_id else {
        status.state = FlowState::NeedsMemory;
        return Ok(status);
    };
    if p.condition == Condition::Control {
        status.state = FlowState::NeedsPostAffect;
        return Ok(status);
    }
    let memory = state.memory(memory_id)?;
    let suggestion = state.suggestion_for(memory_id);
    status.suggestion_id = suggestion.map(|s| s.id);
    status.state = match suggestion.and_then(|s| s.acknowledged_at) {
        None => FlowState::NeedsSuggestionAck,
        Some(_) if memory.imagination_id.is_some() => FlowState::NeedsPostAffect,
        Some(at) => {
            status.imagination_open_at = Some(at + Duration::seconds(IMAGINATION_SECONDS));
            FlowState::NeedsImagination
        }
    };
    Ok(status)
}

pub fn daily_flow_state(state: &StoreState, user: &UserId) -> Result<FlowState, StoreError> {
    flow_status(state, user).map(|s| s.state)
}

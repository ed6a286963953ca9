//! Study protocol: enrollment and arm assignment, onboarding seeds, gating
//! of the daily interaction, surveys, compliance and reminders.
//!
//! Every check that depends on stored state runs inside the store commit, so
//! it sees exactly the state the event is applied to.

pub mod flow;
pub mod instruments;
pub mod model;
pub mod schedule;
pub mod scoring;

use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use chrono_tz::Tz;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ids::{MemoryId, SuggestionId, UserId};
use crate::store::{Event, MemoryEntry, MemoryKind, Store, StoreError, StoreState};

pub use flow::{daily_flow_state, flow_status, FlowState, FlowStatus, IMAGINATION_SECONDS};
pub use instruments::{
    onboarding_questions, Instrument, InstrumentSet, AFFECT_QUESTIONS, DAILY_SCALE_LABELS, LIKELINESS_QUESTION,
    ONBOARDING_QUESTIONS, OPEN_ENDED_QUESTIONS,
};
pub use model::*;
pub use schedule::{
    compliance, is_compliant, reminder_due, study_day, FileOutbox, MemoryOutbox, ReminderTransport,
    COMPLIANCE_THRESHOLD,
};
pub use scoring::{phq8_severity, score_mean, score_phq8, score_sbi, Phq8Severity, ScoringError};

pub const DEFAULT_STUDY_DAYS: u32 = 14;
/// End-of-study surveys open this long after the study window closes.
pub const POST_STUDY_DELAY_HOURS: i64 = 24;

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("user {0} is already enrolled")]
    AlreadyEnrolled(UserId),
    #[error("unknown user {0}")]
    UnknownUser(UserId),
    #[error("unknown suggestion {0}")]
    UnknownSuggestion(SuggestionId),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error("no matching pre-interaction affect sample")]
    MissingPreSample,
    #[error("user {0} is in the control arm")]
    WrongArm(UserId),
    #[error("cannot {action} while {state}")]
    FlowViolation { state: FlowState, action: String },
    #[error("imagination accepted from {open_at}")]
    TooEarly { open_at: DateTime<Utc> },
    #[error("{0}")]
    WindowClosed(String),
    #[error("{0} already answered")]
    AlreadyAnswered(String),
    #[error(transparent)]
    Store(StoreError),
}

impl From<StoreError> for StudyError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::AlreadyEnrolled(u) => StudyError::AlreadyEnrolled(u),
            StoreError::UnknownUser(u) => StudyError::UnknownUser(u),
            StoreError::UnknownSuggestion(s) => StudyError::UnknownSuggestion(s),
            StoreError::WrongArm(u) => StudyError::WrongArm(u),
            StoreError::MissingPreSample => StudyError::MissingPreSample,
            other => StudyError::Store(other),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub assignment_seed: u64,
    pub study_days: u32,
    /// Zone defining calendar study days.
    pub timezone: Tz,
    pub instruments: InstrumentSet,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            assignment_seed: 0,
            study_days: DEFAULT_STUDY_DAYS,
            timezone: Tz::UTC,
            instruments: InstrumentSet::default(),
        }
    }
}

/// Arm for `user` under `seed`: a fair coin from a ChaCha stream keyed by
/// SHA-256 of the seed and user id.
pub fn assign_condition(seed: u64, user: &UserId) -> Condition {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(user.as_str().as_bytes());
    let mut rng = ChaCha8Rng::from_seed(h.finalize().into());
    if rng.gen_bool(0.5) {
        Condition::Experimental
    } else {
        Condition::Control
    }
}

fn violation(state: FlowState, action: &str) -> StudyError {
    StudyError::FlowViolation {
        state,
        action: action.to_string(),
    }
}

fn post_study_open(p: &StudyParticipant, now: DateTime<Utc>) -> Result<(), StudyError> {
    let open = p.study_end() + Duration::hours(POST_STUDY_DELAY_HOURS);
    if now < open {
        return Err(StudyError::WindowClosed(format!(
            "end-of-study surveys open at {}",
            open.to_rfc3339()
        )));
    }
    Ok(())
}

pub struct StudyEngine {
    store: Arc<Store>,
    config: StudyConfig,
}

impl StudyEngine {
    pub fn new(store: Arc<Store>, config: StudyConfig) -> Self {
        Self { store, config }
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }

    pub fn config(&self) -> &StudyConfig {
        &self.config
    }

    pub fn instruments(&self) -> &InstrumentSet {
        &self.config.instruments
    }

    pub fn enroll(&self, user: &UserId, now: DateTime<Utc>) -> Result<StudyParticipant, StudyError> {
        let condition = assign_condition(self.config.assignment_seed, user);
        self.enroll_as(user, condition, now)
    }

    /// Enrollment with a fixed arm, for fixtures and manual allocation.
    pub fn enroll_as(
        &self,
        user: &UserId,
        condition: Condition,
        now: DateTime<Utc>,
    ) -> Result<StudyParticipant, StudyError> {
        let p = StudyParticipant {
            user_id: user.clone(),
            condition,
            enrolled_at: now,
            study_days: self.config.study_days,
            last_entry_at: None,
        };
        self.store
            .commit(now, |_| Ok::<_, StudyError>(Event::Enrolled(p.clone())))?;
        Ok(p)
    }

    pub fn flow_status(&self, user: &UserId) -> Result<FlowStatus, StudyError> {
        Ok(self.store.read(|s| flow_status(s, user))?)
    }

    pub fn flow_state(&self, user: &UserId) -> Result<FlowState, StudyError> {
        Ok(self.flow_status(user)?.state)
    }

    /// Stores the answer to onboarding question `index` (1-based), once each.
    pub fn create_seed(
        &self,
        user: &UserId,
        index: u8,
        text: &str,
        now: DateTime<Utc>,
    ) -> Result<MemoryEntry, StudyError> {
        scoring::check_range("question", i64::from(index), 1, ONBOARDING_QUESTIONS.len() as i64)?;
        let record = self.store.commit(now, |s| {
            s.participant(user)?;
            if s.user_memories(user)
                .any(|m| m.kind == MemoryKind::Seed && m.seed_question_index == Some(index))
            {
                return Err(StudyError::AlreadyAnswered(format!("onboarding question {index}")));
            }
            Ok(Event::MemoryCreated(new_memory(
                s,
                user,
                MemoryKind::Seed,
                text,
                None,
                Some(index),
                now,
            )))
        })?;
        Ok(created(record.event))
    }

    /// Stores a daily memory; the interaction must be waiting for one.
    pub fn create_daily_memory(
        &self,
        user: &UserId,
        text: &str,
        now: DateTime<Utc>,
    ) -> Result<MemoryEntry, StudyError> {
        let record = self.store.commit(now, |s| {
            let state = flow_status(s, user)?.state;
            if state != FlowState::NeedsMemory {
                return Err(violation(state, "submit a memory"));
            }
            Ok(Event::MemoryCreated(new_memory(
                s,
                user,
                MemoryKind::Daily,
                text,
                None,
                None,
                now,
            )))
        })?;
        Ok(created(record.event))
    }

    pub fn record_affect(
        &self,
        user: &UserId,
        phase: AffectPhase,
        positive: i64,
        negative: i64,
        now: DateTime<Utc>,
    ) -> Result<AffectSample, StudyError> {
        scoring::check_range("positive", positive, 1, 5)?;
        scoring::check_range("negative", negative, 1, 5)?;
        let record = self.store.commit(now, |s| {
            let status = flow_status(s, user)?;
            let memory_id = match phase {
                AffectPhase::Pre if status.state.can_start_entry() => None,
                AffectPhase::Pre => return Err(violation(status.state, "record pre affect")),
                AffectPhase::Post if status.state == FlowState::NeedsPostAffect => status.memory_id,
                AffectPhase::Post if s.open_cycle(user).is_none() => return Err(StudyError::MissingPreSample),
                AffectPhase::Post => return Err(violation(status.state, "record post affect")),
            };
            Ok(Event::AffectRecorded(AffectSample {
                user_id: user.clone(),
                memory_id,
                phase,
                positive: positive as u8,
                negative: negative as u8,
                recorded_at: now,
            }))
        })?;
        match record.event {
            Event::AffectRecorded(a) => Ok(a),
            _ => unreachable!(),
        }
    }

    /// Starts the imagination period for the suggestion on `memory_id`.
    pub fn acknowledge_suggestion(
        &self,
        user: &UserId,
        memory_id: MemoryId,
        now: DateTime<Utc>,
    ) -> Result<FlowStatus, StudyError> {
        self.store.commit(now, |s| {
            require_experimental(s, user)?;
            let status = flow_status(s, user)?;
            if status.state != FlowState::NeedsSuggestionAck || status.memory_id != Some(memory_id) {
                return Err(violation(status.state, "acknowledge a suggestion"));
            }
            let suggestion_id = status
                .suggestion_id
                .ok_or_else(|| violation(status.state, "acknowledge a suggestion not yet generated"))?;
            Ok(Event::SuggestionAcknowledged { suggestion_id, at: now })
        })?;
        self.flow_status(user)
    }

    /// Stores the imagination for `memory_id`, at least
    /// [`IMAGINATION_SECONDS`] after the suggestion was acknowledged.
    pub fn submit_imagination(
        &self,
        user: &UserId,
        memory_id: MemoryId,
        text: &str,
        now: DateTime<Utc>,
    ) -> Result<MemoryEntry, StudyError> {
        let record = self.store.commit(now, |s| {
            require_experimental(s, user)?;
            let status = flow_status(s, user)?;
            if status.state != FlowState::NeedsImagination || status.memory_id != Some(memory_id) {
                return Err(violation(status.state, "submit an imagination"));
            }
            if let Some(open_at) = status.imagination_open_at.filter(|t| now < *t) {
                return Err(StudyError::TooEarly { open_at });
            }
            Ok(Event::MemoryCreated(new_memory(
                s,
                user,
                MemoryKind::Imagination,
                text,
                Some(memory_id),
                None,
                now,
            )))
        })?;
        Ok(created(record.event))
    }

    pub fn record_likeliness(
        &self,
        user: &UserId,
        suggestion_id: SuggestionId,
        rating: i64,
        now: DateTime<Utc>,
    ) -> Result<(), StudyError> {
        scoring::check_range("rating", rating, 1, 5)?;
        self.store.commit(now, |s| {
            require_experimental(s, user)?;
            let suggestion = s
                .suggestion(suggestion_id)
                .ok()
                .filter(|x| &x.user_id == user)
                .ok_or(StudyError::UnknownSuggestion(suggestion_id))?;
            if suggestion.likeliness_to_act.is_some() {
                return Err(StudyError::AlreadyAnswered(format!("likeliness for {suggestion_id}")));
            }
            Ok(Event::LikelinessRecorded {
                suggestion_id,
                rating: rating as u8,
            })
        })?;
        Ok(())
    }

    /// Pre-study wave: once, before the study ends. Post-study wave: once,
    /// from 24 hours after the study window.
    pub fn record_phq8(
        &self,
        user: &UserId,
        items: &[i64],
        wave: Wave,
        now: DateTime<Utc>,
    ) -> Result<Phq8Response, StudyError> {
        let total = score_phq8(items)?;
        let record = self.store.commit(now, |s| {
            let p = s.participant(user)?;
            match wave {
                Wave::PreStudy if now >= p.study_end() => {
                    return Err(StudyError::WindowClosed("baseline survey closed".into()))
                }
                Wave::PreStudy => {}
                Wave::PostStudy => post_study_open(p, now)?,
            }
            if s.phq8.iter().any(|r| &r.user_id == user && r.wave == wave) {
                return Err(StudyError::AlreadyAnswered(format!("PHQ-8 {}", wave.as_str())));
            }
            let mut arr = [0u8; 8];
            for (a, &v) in arr.iter_mut().zip(items) {
                *a = v as u8;
            }
            Ok(Event::Phq8Recorded(Phq8Response {
                user_id: user.clone(),
                items: arr,
                total,
                administered_at: now,
                wave,
            }))
        })?;
        match record.event {
            Event::Phq8Recorded(r) => Ok(r),
            _ => unreachable!(),
        }
    }

    pub fn record_sbi(&self, user: &UserId, items: &[i64], now: DateTime<Utc>) -> Result<SbiResponse, StudyError> {
        let instrument = &self.config.instruments.sbi;
        let score = scoring::score_sbi(instrument, items)?;
        let values = scoring::validate_items(instrument, items)?;
        let record = self.store.commit(now, |s| {
            s.participant(user)?;
            if s.sbi.iter().any(|r| &r.user_id == user) {
                return Err(StudyError::AlreadyAnswered("SBI".into()));
            }
            Ok(Event::SbiRecorded(SbiResponse {
                user_id: user.clone(),
                items: values.clone(),
                score,
                administered_at: now,
            }))
        })?;
        match record.event {
            Event::SbiRecorded(r) => Ok(r),
            _ => unreachable!(),
        }
    }

    /// End-of-study perception battery; experimental arm only, once each.
    pub fn record_perceptions(
        &self,
        user: &UserId,
        battery: Battery,
        scores: &BTreeMap<String, i64>,
        now: DateTime<Utc>,
    ) -> Result<PerceptionResponse, StudyError> {
        let instrument = self.config.instruments.battery(battery);
        let item_scores = scoring::validate_battery(instrument, scores)?;
        let record = self.store.commit(now, |s| {
            let p = require_experimental(s, user)?;
            post_study_open(p, now)?;
            if s.perceptions.iter().any(|r| &r.user_id == user && r.battery == battery) {
                return Err(StudyError::AlreadyAnswered(format!("{} battery", battery.as_str())));
            }
            Ok(Event::PerceptionRecorded(PerceptionResponse {
                user_id: user.clone(),
                battery,
                item_scores: item_scores.clone(),
                reverse_keyed_ids: instrument.reverse_keyed_ids(),
                administered_at: now,
            }))
        })?;
        match record.event {
            Event::PerceptionRecorded(r) => Ok(r),
            _ => unreachable!(),
        }
    }

    /// Open-ended answers keyed by question id (`liked`, `concerns`,
    /// `other`); unanswered questions may be left out.
    pub fn record_feedback(
        &self,
        user: &UserId,
        answers: BTreeMap<String, String>,
        now: DateTime<Utc>,
    ) -> Result<OpenEndedResponse, StudyError> {
        if let Some(k) = answers
            .keys()
            .find(|k| !instruments::OPEN_ENDED_QUESTIONS.iter().any(|(id, _)| id == k))
        {
            return Err(ScoringError::UnknownItem(k.clone()).into());
        }
        let record = self.store.commit(now, |s| {
            post_study_open(s.participant(user)?, now)?;
            if s.feedback.iter().any(|r| &r.user_id == user) {
                return Err(StudyError::AlreadyAnswered("feedback".into()));
            }
            Ok(Event::FeedbackRecorded(OpenEndedResponse {
                user_id: user.clone(),
                answers: answers.clone(),
                administered_at: now,
            }))
        })?;
        match record.event {
            Event::FeedbackRecorded(r) => Ok(r),
            _ => unreachable!(),
        }
    }

    pub fn compliance(&self, user: &UserId, as_of: DateTime<Utc>) -> Result<f64, StudyError> {
        Ok(self.store.read(|s| compliance(s, user, as_of, self.config.timezone))?)
    }

    pub fn reminder_due(&self, user: &UserId, now: DateTime<Utc>) -> Result<bool, StudyError> {
        Ok(self.store.read(|s| reminder_due(s, user, now))?)
    }

    /// Records and sends a reminder for every participant who is due one.
    pub fn emit_due_reminders(
        &self,
        now: DateTime<Utc>,
        transport: &dyn ReminderTransport,
    ) -> Result<Vec<ReminderRecord>, StudyError> {
        let users: Vec<UserId> = self.store.read(|s| s.participants.keys().cloned().collect());
        let mut sent = Vec::new();
        for user in users {
            let record = self.store.commit(now, |s| {
                if !reminder_due(s, &user, now)? {
                    return Err(StudyError::WindowClosed(String::new()));
                }
                Ok(Event::ReminderEmitted(ReminderRecord {
                    user_id: user.clone(),
                    emitted_at: now,
                    inactive_days: schedule::inactive_days(s.participant(&user)?, now),
                }))
            });
            match record {
                Ok(r) => {
                    let Event::ReminderEmitted(r) = r.event else {
                        unreachable!()
                    };
                    if let Err(e) = transport.send(&r) {
                        log::error!("reminder for {} not delivered: {e}", r.user_id);
                    }
                    sent.push(r);
                }
                Err(StudyError::WindowClosed(_)) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(sent)
    }
}

fn require_experimental<'a>(s: &'a StoreState, user: &UserId) -> Result<&'a StudyParticipant, StudyError> {
    let p = s.participant(user)?;
    if p.condition != Condition::Experimental {
        return Err(StudyError::WrongArm(user.clone()));
    }
    Ok(p)
}

fn new_memory(
    s: &StoreState,
    user: &UserId,
    kind: MemoryKind,
    text: &str,
    linked_memory_id: Option<MemoryId>,
    seed_question_index: Option<u8>,
    now: DateTime<Utc>,
) -> MemoryEntry {
    MemoryEntry {
        id: s.next_memory_id(),
        user_id: user.clone(),
        kind,
        text: text.to_string(),
        title: None,
        created_at: now,
        embedding: None,
        linked_memory_id,
        imagination_id: None,
        seed_question_index,
    }
}

fn created(event: Event) -> MemoryEntry {
    match event {
        Event::MemoryCreated(m) => m,
        _ => unreachable!(),
    }
}

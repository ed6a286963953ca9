//! Calendar rules: study days, compliance and inactivity reminders.

use std::collections::BTreeSet;
use std::fs::OpenOptions;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Duration, NaiveDate, Utc};
use chrono_tz::Tz;

use crate::ids::UserId;
use crate::store::{MemoryKind, StoreError, StoreState};
use crate::study::model::{ReminderRecord, StudyParticipant};

pub const COMPLIANCE_THRESHOLD: f64 = 0.8;
pub const REMINDER_INTERVAL_DAYS: i64 = 4;

pub fn local_date(t: DateTime<Utc>, tz: Tz) -> NaiveDate {
    t.with_timezone(&tz).date_naive()
}

/// 1-based study day of `t`; the enrollment date is day 1.
pub fn study_day(p: &StudyParticipant, t: DateTime<Utc>, tz: Tz) -> i64 {
    (local_date(t, tz) - local_date(p.enrolled_at, tz)).num_days() + 1
}

/// Study days with at least one daily memory, divided by study days elapsed
/// as of `as_of` (capped at the study length). Before day 1 the ratio is 1.
pub fn compliance(state: &StoreState, user: &UserId, as_of: DateTime<Utc>, tz: Tz) -> Result<f64, StoreError> {
    let p = state.participant(user)?;
    let elapsed = study_day(p, as_of, tz).min(i64::from(p.study_days));
    if elapsed <= 0 {
        return Ok(1.0);
    }
    let days: BTreeSet<i64> = state
        .user_memories(user)
        .filter(|m| m.kind == MemoryKind::Daily && m.created_at <= as_of)
        .map(|m| study_day(p, m.created_at, tz))
        .filter(|d| (1..=elapsed).contains(d))
        .collect();
    Ok(days.len() as f64 / elapsed as f64)
}

pub fn is_compliant(fraction: f64) -> bool {
    fraction >= COMPLIANCE_THRESHOLD
}

/// Due when, inside the study window, four whole days have passed since the
/// last daily memory (or enrollment) and since the last reminder.
pub fn reminder_due(state: &StoreState, user: &UserId, now: DateTime<Utc>) -> Result<bool, StoreError> {
    let p = state.participant(user)?;
    if !p.within_window(now) {
        return Ok(false);
    }
    let interval = Duration::days(REMINDER_INTERVAL_DAYS);
    let last_activity = p.last_entry_at.unwrap_or(p.enrolled_at);
    if now - last_activity < interval {
        return Ok(false);
    }
    let last_reminder = state
        .reminders
        .iter()
        .filter(|r| &r.user_id == user)
        .map(|r| r.emitted_at)
        .max();
    Ok(last_reminder.is_none_or(|t| now - t >= interval))
}

pub fn inactive_days(p: &StudyParticipant, now: DateTime<Utc>) -> i64 {
    (now - p.last_entry_at.unwrap_or(p.enrolled_at)).num_days()
}

/// Where reminders go. Delivery is out of scope; the default writes a line
/// per reminder to an outbox file.
pub trait ReminderTransport: Send + Sync {
    fn send(&self, reminder: &ReminderRecord) -> io::Result<()>;
}

pub const OUTBOX_FILE: &str = "reminders.log";

pub fn outbox_line(r: &ReminderRecord) -> String {
    format!(
        "{} user:{} inactive_days:{}",
        r.emitted_at.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        r.user_id,
        r.inactive_days
    )
}

pub struct FileOutbox {
    path: PathBuf,
    lock: Mutex<()>,
}

impl FileOutbox {
    pub fn new(path: impl AsRef<Path>) -> Self {
        Self {
            path: path.as_ref().to_path_buf(),
            lock: Mutex::new(()),
        }
    }

    /// `reminders.log` inside `dir`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        Self::new(dir.as_ref().join(OUTBOX_FILE))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl ReminderTransport for FileOutbox {
    fn send(&self, r: &ReminderRecord) -> io::Result<()> {
        let _g = self.lock.lock().expect("outbox lock poisoned");
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        writeln!(f, "{}", outbox_line(r))
    }
}

/// Keeps sent reminders in memory.
#[derive(Default)]
pub struct MemoryOutbox {
    pub sent: Mutex<Vec<ReminderRecord>>,
}

impl ReminderTransport for MemoryOutbox {
    fn send(&self, r: &ReminderRecord) -> io::Result<()> {
        self.sent.lock().expect("outbox lock poisoned").push(r.clone());
        Ok(())
    }
}

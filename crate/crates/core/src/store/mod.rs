//! Append-only, encrypted event log with in-memory state and snapshot rebuild.
//!
//! Every mutation is a single [`Event`] committed through [`Store::commit`]:
//! validated against the current [`StoreState`], sealed, written as one log
//! line, flushed, and only then applied. Commits are serialized by one writer
//! lock, so writes for a given user never overlap; reads take a shared lock
//! on the state and run concurrently.

mod cipher;
pub mod event;
pub mod model;
pub mod snapshot;
mod state;

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use chrono::{DateTime, Utc};
use thiserror::Error;

pub use cipher::StoreKey;
pub use event::{Event, EventRecord};
pub use model::*;
pub use state::StoreState;

use crate::ids::{MemoryId, SuggestionId, UserId};
use cipher::Cipher;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("memory text has {chars} characters; at least {min} required")]
    TooShort { chars: usize, min: usize },
    #[error("memory text is empty")]
    EmptyText,
    #[error("unknown user {0}")]
    UnknownUser(UserId),
    #[error("unknown memory {0}")]
    UnknownMemory(MemoryId),
    #[error("unknown suggestion {0}")]
    UnknownSuggestion(SuggestionId),
    #[error("user {0} is already registered")]
    AlreadyRegistered(UserId),
    #[error("user {0} is already enrolled")]
    AlreadyEnrolled(UserId),
    #[error("memory {0} already has a title")]
    AlreadyTitled(MemoryId),
    #[error("memory {0} already has an imagination")]
    AlreadyLinked(MemoryId),
    #[error("memory {0} already has a suggestion")]
    AlreadySuggested(MemoryId),
    #[error("imagination and memory belong to different users")]
    CrossUserLink,
    #[error("imaginations must link to a daily memory")]
    MissingLink,
    #[error("memory {0} is not a daily memory")]
    NotDaily(MemoryId),
    #[error("memory {0} has no suggestion yet")]
    NotSuggested(MemoryId),
    #[error("user {0} is in the control arm")]
    WrongArm(UserId),
    #[error("no matching pre-interaction affect sample")]
    MissingPreSample,
    #[error("citation of memory {0} is invalid")]
    InvalidCitation(MemoryId),
    #[error("text has {words} words; limit is {limit}")]
    WordLimit { words: usize, limit: usize },
    #[error("embedding dimension {got} differs from store dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("event rejected: {0}")]
    Rejected(String),
    #[error("corrupt log at line {line}: {reason}")]
    CorruptLog { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

enum Sink {
    File(File),
    Memory(Vec<u8>),
}

struct Writer {
    sink: Sink,
    path: Option<PathBuf>,
}

pub struct Store {
    writer: Mutex<Writer>,
    state: RwLock<StoreState>,
    cipher: Cipher,
}

/// Rebuilds state from log bytes.
pub fn replay(log: &[u8], key: &StoreKey) -> Result<StoreState, StoreError> {
    let cipher = Cipher::new(key);
    let mut state = StoreState::default();
    replay_into(&mut state, BufReader::new(log), &cipher)?;
    Ok(state)
}

fn corrupt(line: usize, reason: impl Into<String>) -> StoreError {
    StoreError::CorruptLog {
        line,
        reason: reason.into(),
    }
}

/// Replays lines onto `state`. Lines at or below `state.last_seq` (already
/// covered by a snapshot) are integrity-checked and skipped.
fn replay_into(state: &mut StoreState, reader: impl BufRead, cipher: &Cipher) -> Result<(), StoreError> {
    let mut expected = 1;
    let base = state.last_seq;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let raw = event::decode_line(&line).map_err(|r| corrupt(lineno, r))?;
        if raw.seq != expected {
            return Err(corrupt(
                lineno,
                format!("sequence gap: expected {expected}, found {}", raw.seq),
            ));
        }
        expected += 1;
        if raw.seq <= base {
            continue;
        }
        let plain = cipher.open(&raw.payload).map_err(|r| corrupt(lineno, r))?;
        let record: EventRecord = serde_json::from_slice(&plain).map_err(|e| corrupt(lineno, e.to_string()))?;
        if record.sequence_no != raw.seq || record.event.kind() != raw.kind {
            return Err(corrupt(lineno, "header does not match payload"));
        }
        state
            .validate(&record.event)
            .map_err(|e| corrupt(lineno, e.to_string()))?;
        state.apply(record.sequence_no, &record.event);
    }
    if expected - 1 < base {
        return Err(corrupt(
            expected as usize,
            format!("log ends at {} before snapshot sequence {base}", expected - 1),
        ));
    }
    Ok(())
}

impl Store {
    /// A store whose log lives in memory; used by tests and simulations.
    pub fn in_memory(key: &StoreKey) -> Self {
        Self::with_state(StoreState::default(), Sink::Memory(Vec::new()), None, key)
    }

    /// Opens (or creates) a log file, replaying existing content.
    pub fn open(path: impl AsRef<Path>, key: &StoreKey) -> Result<Self, StoreError> {
        Self::open_from(path.as_ref(), StoreState::default(), key)
    }

    /// Opens a log starting from a snapshot, replaying only newer events.
    pub fn open_with_snapshot(
        log_path: impl AsRef<Path>,
        snapshot_path: impl AsRef<Path>,
        key: &StoreKey,
    ) -> Result<Self, StoreError> {
        let state = snapshot::read(snapshot_path.as_ref(), key)?;
        Self::open_from(log_path.as_ref(), state, key)
    }

    fn open_from(path: &Path, mut state: StoreState, key: &StoreKey) -> Result<Self, StoreError> {
        let cipher = Cipher::new(key);
        if path.exists() {
            replay_into(&mut state, BufReader::new(File::open(path)?), &cipher)?;
        } else if state.last_seq > 0 {
            return Err(corrupt(0, "snapshot present but log missing"));
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self::with_state(state, Sink::File(file), Some(path.to_path_buf()), key))
    }

    fn with_state(state: StoreState, sink: Sink, path: Option<PathBuf>, key: &StoreKey) -> Self {
        Self {
            writer: Mutex::new(Writer { sink, path }),
            state: RwLock::new(state),
            cipher: Cipher::new(key),
        }
    }

    /// Runs `f` against a consistent view of the state.
    pub fn read<R>(&self, f: impl FnOnce(&StoreState) -> R) -> R {
        f(&self.state.read().expect("state lock poisoned"))
    }

    pub fn state(&self) -> StoreState {
        self.read(Clone::clone)
    }

    /// Validates, persists and applies the event built by `f`.
    pub fn commit<E, F>(&self, now: DateTime<Utc>, f: F) -> Result<EventRecord, E>
    where
        F: FnOnce(&StoreState) -> Result<Event, E>,
        E: From<StoreError>,
    {
        let mut writer = self.writer.lock().expect("writer lock poisoned");
        let (record, line) = {
            let state = self.state.read().expect("state lock poisoned");
            let event = f(&state)?;
            state.validate(&event)?;
            let record = EventRecord {
                sequence_no: state.last_seq + 1,
                recorded_at: now,
                event,
            };
            let plain = serde_json::to_vec(&record).expect("events always serialize");
            let sealed = self.cipher.seal(record.sequence_no, &plain);
            let line = event::encode_line(record.sequence_no, record.event.kind(), &sealed);
            (record, line)
        };
        match &mut writer.sink {
            Sink::File(file) => {
                file.write_all(line.as_bytes()).map_err(StoreError::from)?;
                file.flush().map_err(StoreError::from)?;
            }
            Sink::Memory(buf) => buf.extend_from_slice(line.as_bytes()),
        }
        self.state
            .write()
            .expect("state lock poisoned")
            .apply(record.sequence_no, &record.event);
        Ok(record)
    }

    /// Raw log bytes as persisted.
    pub fn log_bytes(&self) -> Result<Vec<u8>, StoreError> {
        let writer = self.writer.lock().expect("writer lock poisoned");
        match (&writer.sink, &writer.path) {
            (Sink::Memory(buf), _) => Ok(buf.clone()),
            (Sink::File(_), Some(path)) => Ok(std::fs::read(path)?),
            (Sink::File(_), None) => unreachable!("file sinks always have a path"),
        }
    }

    pub fn write_snapshot(&self, path: impl AsRef<Path>) -> Result<(), StoreError> {
        let _writer = self.writer.lock().expect("writer lock poisoned");
        let state = self.state.read().expect("state lock poisoned");
        snapshot::write(path.as_ref(), &state, &self.cipher)
    }

    pub fn create_memory(
        &self,
        user: &UserId,
        kind: MemoryKind,
        text: &str,
        now: DateTime<Utc>,
    ) -> Result<MemoryEntry, StoreError> {
        if kind == MemoryKind::Imagination {
            return Err(StoreError::MissingLink);
        }
        self.insert_memory(user, kind, text, None, None, now)
    }

    pub fn create_seed(
        &self,
        user: &UserId,
        question_index: u8,
        text: &str,
        now: DateTime<Utc>,
    ) -> Result<MemoryEntry, StoreError> {
        self.insert_memory(user, MemoryKind::Seed, text, None, Some(question_index), now)
    }

    /// Stores an imagination and links it to the daily memory it was imagined
    /// from, in one event.
    pub fn link_imagination(
        &self,
        user: &UserId,
        daily_memory_id: MemoryId,
        text: &str,
        now: DateTime<Utc>,
    ) -> Result<MemoryEntry, StoreError> {
        self.insert_memory(user, MemoryKind::Imagination, text, Some(daily_memory_id), None, now)
    }

    fn insert_memory(
        &self,
        user: &UserId,
        kind: MemoryKind,
        text: &str,
        linked_memory_id: Option<MemoryId>,
        seed_question_index: Option<u8>,
        now: DateTime<Utc>,
    ) -> Result<MemoryEntry, StoreError> {
        let record = self.commit(now, |state| {
            state.participant(user)?;
            Ok::<_, StoreError>(Event::MemoryCreated(MemoryEntry {
                id: state.next_memory_id(),
                user_id: user.clone(),
                kind,
                text: text.to_string(),
                title: None,
                created_at: now,
                embedding: None,
                linked_memory_id,
                imagination_id: None,
                seed_question_index,
            }))
        })?;
        match record.event {
            Event::MemoryCreated(m) => Ok(m),
            _ => unreachable!(),
        }
    }

    /// Stores a title, normalized to exactly three words.
    pub fn attach_title(
        &self,
        memory_id: MemoryId,
        title: &str,
        now: DateTime<Utc>,
    ) -> Result<MemoryEntry, StoreError> {
        let title = normalize_title(title);
        self.commit(now, |_| Ok::<_, StoreError>(Event::TitleAttached { memory_id, title }))?;
        self.read(|s| s.memory(memory_id).cloned())
    }

    pub fn attach_embedding(
        &self,
        memory_id: MemoryId,
        embedding: Vec<f64>,
        now: DateTime<Utc>,
    ) -> Result<(), StoreError> {
        self.commit(now, |_| {
            Ok::<_, StoreError>(Event::EmbeddingAttached { memory_id, embedding })
        })?;
        Ok(())
    }

    pub fn list_memories(
        &self,
        user: &UserId,
        filter: KindFilter,
        order: Order,
    ) -> Result<Vec<MemoryEntry>, StoreError> {
        self.read(|s| s.list_memories(user, filter, order))
    }
}

const TITLE_PADDING: [&str; 2] = ["Memory", "Entry"];

/// Forces a generated title into exactly three words: surrounding quotes are
/// stripped, extra words dropped, and missing words filled from
/// "Memory Entry" (an empty title becomes "Untitled Memory Entry").
pub fn normalize_title(raw: &str) -> String {
    const QUOTES: &[char] = &['"', '\'', '\u{201c}', '\u{201d}', '\u{2018}', '\u{2019}', '`'];
    let mut words: Vec<String> = raw
        .split_whitespace()
        .map(|w| w.trim_matches(QUOTES).to_string())
        .filter(|w| !w.is_empty())
        .take(TITLE_WORDS)
        .collect();
    if words.is_empty() {
        words.push("Untitled".into());
    }
    let mut pad = TITLE_PADDING.iter();
    while words.len() < TITLE_WORDS {
        words.push(pad.next().copied().unwrap_or("Entry").to_string());
    }
    words.join(" ")
}

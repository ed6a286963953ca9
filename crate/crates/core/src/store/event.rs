//! Event-log line codec.
//!
//! Each line is `seq:<n> kind:<k> len:<bytes> payload:<base64> crc32:<hex>`.
//! `len` is the decoded payload length; the CRC-32 covers the decoded payload
//! bytes, which are ciphertext.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::ids::{MemoryId, SuggestionId};
use crate::store::model::{Account, EmotionTarget, MemoryEntry, Suggestion};
use crate::study::model::{
    AffectSample, OpenEndedResponse, PerceptionResponse, Phq8Response, ReminderRecord, SbiResponse, StudyParticipant,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    AccountRegistered(Account),
    Enrolled(StudyParticipant),
    MemoryCreated(MemoryEntry),
    TitleAttached {
        memory_id: MemoryId,
        title: String,
    },
    EmbeddingAttached {
        memory_id: MemoryId,
        embedding: Vec<f64>,
    },
    SuggestionRecorded {
        target: EmotionTarget,
        suggestion: Suggestion,
    },
    SuggestionAcknowledged {
        suggestion_id: SuggestionId,
        at: DateTime<Utc>,
    },
    LikelinessRecorded {
        suggestion_id: SuggestionId,
        rating: u8,
    },
    AffectRecorded(AffectSample),
    Phq8Recorded(Phq8Response),
    SbiRecorded(SbiResponse),
    PerceptionRecorded(PerceptionResponse),
    FeedbackRecorded(OpenEndedResponse),
    ReminderEmitted(ReminderRecord),
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::AccountRegistered(_) => "account_registered",
            Event::Enrolled(_) => "enrolled",
            Event::MemoryCreated(_) => "memory_created",
            Event::TitleAttached { .. } => "title_attached",
            Event::EmbeddingAttached { .. } => "embedding_attached",
            Event::SuggestionRecorded { .. } => "suggestion_recorded",
            Event::SuggestionAcknowledged { .. } => "suggestion_acknowledged",
            Event::LikelinessRecorded { .. } => "likeliness_recorded",
            Event::AffectRecorded(_) => "affect_recorded",
            Event::Phq8Recorded(_) => "phq8_recorded",
            Event::SbiRecorded(_) => "sbi_recorded",
            Event::PerceptionRecorded(_) => "perception_recorded",
            Event::FeedbackRecorded(_) => "feedback_recorded",
            Event::ReminderEmitted(_) => "reminder_emitted",
        }
    }
}

/// Decrypted payload of one log line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub sequence_no: u64,
    pub recorded_at: DateTime<Utc>,
    pub event: Event,
}

impl EventRecord {
    pub fn event_kind(&self) -> &'static str {
        self.event.kind()
    }
}

/// A parsed but not yet decrypted log line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawLine {
    pub seq: u64,
    pub kind: String,
    pub payload: Vec<u8>,
}

pub fn encode_line(seq: u64, kind: &str, payload: &[u8]) -> String {
    format!(
        "seq:{seq} kind:{kind} len:{} payload:{} crc32:{:08x}\n",
        payload.len(),
        B64.encode(payload),
        crc32fast::hash(payload)
    )
}

fn field<'a>(part: Option<&'a str>, name: &str) -> Result<&'a str, String> {
    let part = part.ok_or_else(|| format!("missing field {name}"))?;
    part.strip_prefix(name)
        .and_then(|rest| rest.strip_prefix(':'))
        .ok_or_else(|| format!("expected field {name}"))
}

/// Parses and integrity-checks one line (without its trailing newline).
pub fn decode_line(line: &str) -> Result<RawLine, String> {
    let mut parts = line.split(' ');
    let seq = field(parts.next(), "seq")?
        .parse::<u64>()
        .map_err(|e| format!("bad seq: {e}"))?;
    let kind = field(parts.next(), "kind")?.to_string();
    let len = field(parts.next(), "len")?
        .parse::<usize>()
        .map_err(|e| format!("bad len: {e}"))?;
    let payload = B64
        .decode(field(parts.next(), "payload")?)
        .map_err(|e| format!("bad base64: {e}"))?;
    let crc = u32::from_str_radix(field(parts.next(), "crc32")?, 16).map_err(|e| format!("bad crc32: {e}"))?;
    if parts.next().is_some() {
        return Err("trailing fields".into());
    }
    if payload.len() != len {
        return Err(format!("length {} != declared {len}", payload.len()));
    }
    if crc32fast::hash(&payload) != crc {
        return Err("checksum mismatch".into());
    }
    Ok(RawLine { seq, kind, payload })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_round_trip() {
        let line = encode_line(7, "memory_created", b"\x00\x01cipher");
        assert!(line.starts_with("seq:7 kind:memory_created len:8 payload:"));
        let raw = decode_line(line.trim_end()).unwrap();
        assert_eq!(raw.seq, 7);
        assert_eq!(raw.kind, "memory_created");
        assert_eq!(raw.payload, b"\x00\x01cipher");
    }

    #[test]
    fn flipped_payload_fails_checksum() {
        let line = encode_line(1, "enrolled", b"abcdef");
        let tampered = line.replace("payload:YWJjZGVm", "payload:YWJjZGVn");
        assert_eq!(decode_line(tampered.trim_end()).unwrap_err(), "checksum mismatch");
    }

    #[test]
    fn wrong_length_is_rejected() {
        let line = encode_line(1, "enrolled", b"abcdef").replace("len:6", "len:5");
        assert!(decode_line(line.trim_end()).unwrap_err().starts_with("length"));
    }
}

//! Deterministic CSV export of the study data (RFC 4180: CRLF line ends,
//! fields quoted only when needed). Column orders are fixed; rows are sorted
//! by id. Timestamps are RFC 3339 UTC with second precision; lists of ids are
//! space-separated; missing values are empty fields.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Utc};
use chrono_tz::Tz;

use super::{mean_sd, AnalysisError};
use crate::store::{MemoryKind, StoreState};
use crate::study::instruments::InstrumentSet;
use crate::study::model::{Battery, Wave};
use crate::study::schedule::study_day;
use crate::text::{char_len, word_count};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExportTable {
    Participants,
    Memories,
    Suggestions,
    Affect,
    Surveys,
    Perceptions,
    Feedback,
    Reminders,
    ParticipantSummary,
}

impl ExportTable {
    pub const ALL: [ExportTable; 9] = [
        ExportTable::Participants,
        ExportTable::Memories,
        ExportTable::Suggestions,
        ExportTable::Affect,
        ExportTable::Surveys,
        ExportTable::Perceptions,
        ExportTable::Feedback,
        ExportTable::Reminders,
        ExportTable::ParticipantSummary,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            ExportTable::Participants => "participants.csv",
            ExportTable::Memories => "memories.csv",
            ExportTable::Suggestions => "suggestions.csv",
            ExportTable::Affect => "affect.csv",
            ExportTable::Surveys => "surveys.csv",
            ExportTable::Perceptions => "perceptions.csv",
            ExportTable::Feedback => "feedback.csv",
            ExportTable::Reminders => "reminders.csv",
            ExportTable::ParticipantSummary => "participant_summary.csv",
        }
    }

    pub fn from_file_name(name: &str) -> Option<Self> {
        let name = name.strip_suffix(".csv").unwrap_or(name);
        Self::ALL
            .into_iter()
            .find(|t| t.file_name().strip_suffix(".csv") == Some(name))
    }
}

pub const PARTICIPANT_COLUMNS: [&str; 6] = [
    "user_id",
    "condition",
    "enrolled_at",
    "study_days",
    "entry_days",
    "last_entry_at",
];
pub const MEMORY_COLUMNS: [&str; 12] = [
    "memory_id",
    "user_id",
    "condition",
    "kind",
    "created_at",
    "study_day",
    "seed_question",
    "linked_memory_id",
    "title",
    "char_count",
    "word_count",
    "text",
];
pub const SUGGESTION_COLUMNS: [&str; 13] = [
    "suggestion_id",
    "user_id",
    "memory_id",
    "created_at",
    "emotion_label",
    "target_emotion_text",
    "suggestion_text",
    "word_count",
    "retrieved_memory_ids",
    "cited_memory_ids",
    "acknowledged_at",
    "likeliness_to_act",
    "imagination_id",
];
pub const AFFECT_SAMPLE_COLUMNS: [&str; 8] = [
    "user_id",
    "condition",
    "cycle",
    "memory_id",
    "phase",
    "positive",
    "negative",
    "recorded_at",
];
pub const SURVEY_COLUMNS: [&str; 7] = [
    "user_id",
    "condition",
    "instrument",
    "wave",
    "administered_at",
    "score",
    "items",
];
pub const PERCEPTION_COLUMNS: [&str; 6] = [
    "user_id",
    "battery",
    "item_id",
    "score",
    "reverse_keyed",
    "administered_at",
];
pub const FEEDBACK_COLUMNS: [&str; 5] = ["user_id", "condition", "question_id", "answer", "administered_at"];
pub const REMINDER_COLUMNS: [&str; 3] = ["user_id", "emitted_at", "inactive_days"];
/// Leading columns of `participant_summary.csv`; raw perception ratings
/// follow, one column per statement id.
pub const SUMMARY_COLUMNS: [&str; 8] = [
    "user_id",
    "condition",
    "entry_days",
    "phq8_pre",
    "phq8_post",
    "sbi",
    "mean_likeliness",
    "n_likeliness",
];

fn ts(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn csv_bytes(header: &[String], rows: Vec<Vec<String>>) -> Result<String, AnalysisError> {
    let io = |e: csv::Error| AnalysisError::IoFailure(e.to_string());
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| AnalysisError::IoFailure(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| AnalysisError::IoFailure(e.to_string()))
}

fn strings(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

fn condition_of(state: &StoreState, user: &crate::ids::UserId) -> String {
    state
        .participants
        .get(user)
        .map(|p| p.condition.as_str().to_string())
        .unwrap_or_default()
}

fn entry_days(state: &StoreState, user: &crate::ids::UserId, tz: Tz) -> usize {
    let Some(p) = state.participants.get(user) else {
        return 0;
    };
    let mut days: Vec<i64> = state
        .user_memories(user)
        .filter(|m| m.kind == MemoryKind::Daily)
        .map(|m| study_day(p, m.created_at, tz))
        .filter(|d| (1..=i64::from(p.study_days)).contains(d))
        .collect();
    days.sort_unstable();
    days.dedup();
    days.len()
}

/// One export table as CSV text.
pub fn export_table(
    state: &StoreState,
    table: ExportTable,
    instruments: &InstrumentSet,
    tz: Tz,
) -> Result<String, AnalysisError> {
    let (header, rows): (Vec<String>, Vec<Vec<String>>) = match table {
        ExportTable::Participants => (
            strings(&PARTICIPANT_COLUMNS),
            state
                .participants
                .values()
                .map(|p| {
                    vec![
                        p.user_id.to_string(),
                        p.condition.as_str().into(),
                        ts(p.enrolled_at),
                        p.study_days.to_string(),
                        entry_days(state, &p.user_id, tz).to_string(),
                        opt(p.last_entry_at.map(ts)),
                    ]
                })
                .collect(),
        ),
        ExportTable::Memories => (
            strings(&MEMORY_COLUMNS),
            state
                .memories
                .values()
                .map(|m| {
                    let day = state
                        .participants
                        .get(&m.user_id)
                        .map(|p| study_day(p, m.created_at, tz));
                    vec![
                        m.id.to_string(),
                        m.user_id.to_string(),
                        condition_of(state, &m.user_id),
                        m.kind.as_str().into(),
                        ts(m.created_at),
                        opt(day),
                        opt(m.seed_question_index),
                        opt(m.linked_memory_id),
                        m.title.clone().unwrap_or_default(),
                        char_len(&m.text).to_string(),
                        word_count(&m.text).to_string(),
                        m.text.clone(),
                    ]
                })
                .collect(),
        ),
        ExportTable::Suggestions => (
            strings(&SUGGESTION_COLUMNS),
            state
                .suggestions
                .values()
                .map(|s| {
                    vec![
                        s.id.to_string(),
                        s.user_id.to_string(),
                        s.memory_id.to_string(),
                        ts(s.created_at),
                        opt(state.emotion_targets.get(&s.memory_id).map(|t| t.label.clone())),
                        s.target_emotion_text.clone(),
                        s.suggestion_text.clone(),
                        word_count(&s.suggestion_text).to_string(),
                        join(s.retrieved.iter().map(|h| h.memory_id)),
                        join(&s.cited_memory_ids),
                        opt(s.acknowledged_at.map(ts)),
                        opt(s.likeliness_to_act),
                        opt(state.memories.get(&s.memory_id).and_then(|m| m.imagination_id)),
                    ]
                })
                .collect(),
        ),
        ExportTable::Affect => {
            let mut counters: BTreeMap<&crate::ids::UserId, usize> = BTreeMap::new();
            let mut rows = Vec::new();
            for c in &state.cycles {
                let n = counters.entry(&c.user_id).or_default();
                *n += 1;
                for sample in std::iter::once(&c.pre).chain(c.post.as_ref()) {
                    rows.push(vec![
                        c.user_id.to_string(),
                        condition_of(state, &c.user_id),
                        n.to_string(),
                        opt(c.memory_id),
                        match sample.phase {
                            crate::study::model::AffectPhase::Pre => "pre".into(),
                            crate::study::model::AffectPhase::Post => "post".into(),
                        },
                        sample.positive.to_string(),
                        sample.negative.to_string(),
                        ts(sample.recorded_at),
                    ]);
                }
            }
            rows.sort_by(|a, b| {
                a[0].cmp(&b[0])
                    .then(a[2].parse::<usize>().ok().cmp(&b[2].parse().ok()))
                    .then(b[4].cmp(&a[4]))
            });
            (strings(&AFFECT_SAMPLE_COLUMNS), rows)
        }
        ExportTable::Surveys => {
            let mut rows: Vec<Vec<String>> = state
                .phq8
                .iter()
                .map(|r| {
                    vec![
                        r.user_id.to_string(),
                        condition_of(state, &r.user_id),
                        "phq8".into(),
                        r.wave.as_str().into(),
                        ts(r.administered_at),
                        r.total.to_string(),
                        join(r.items),
                    ]
                })
                .chain(state.sbi.iter().map(|r| {
                    vec![
                        r.user_id.to_string(),
                        condition_of(state, &r.user_id),
                        "sbi".into(),
                        String::new(),
                        ts(r.administered_at),
                        r.score.to_string(),
                        join(&r.items),
                    ]
                }))
                .collect();
            rows.sort();
            (strings(&SURVEY_COLUMNS), rows)
        }
        ExportTable::Perceptions => {
            let mut rows = Vec::new();
            for r in &state.perceptions {
                for (item, score) in &r.item_scores {
                    rows.push(vec![
                        r.user_id.to_string(),
                        r.battery.as_str().into(),
                        item.clone(),
                        score.to_string(),
                        r.reverse_keyed_ids.contains(item).to_string(),
                        ts(r.administered_at),
                    ]);
                }
            }
            rows.sort();
            (strings(&PERCEPTION_COLUMNS), rows)
        }
        ExportTable::Feedback => {
            let mut rows = Vec::new();
            for r in &state.feedback {
                for (q, a) in &r.answers {
                    rows.push(vec![
                        r.user_id.to_string(),
                        condition_of(state, &r.user_id),
                        q.clone(),
                        a.clone(),
                        ts(r.administered_at),
                    ]);
                }
            }
            rows.sort();
            (strings(&FEEDBACK_COLUMNS), rows)
        }
        ExportTable::Reminders => {
            let mut rows: Vec<Vec<String>> = state
                .reminders
                .iter()
                .map(|r| vec![r.user_id.to_string(), ts(r.emitted_at), r.inactive_days.to_string()])
                .collect();
            rows.sort();
            (strings(&REMINDER_COLUMNS), rows)
        }
        ExportTable::ParticipantSummary => summary(state, instruments, tz),
    };
    csv_bytes(&header, rows)
}

fn summary(state: &StoreState, instruments: &InstrumentSet, tz: Tz) -> (Vec<String>, Vec<Vec<String>>) {
    let sug_ids = instruments.suggestions.item_ids();
    let img_ids = instruments.imaginations.item_ids();
    let mut header = strings(&SUMMARY_COLUMNS);
    header.extend(sug_ids.iter().cloned());
    header.extend(img_ids.iter().cloned());
    let rows = state
        .participants
        .values()
        .map(|p| {
            let u = &p.user_id;
            let phq = |wave: Wave| {
                opt(state
                    .phq8
                    .iter()
                    .find(|r| &r.user_id == u && r.wave == wave)
                    .map(|r| r.total))
            };
            let ratings: Vec<f64> = state
                .user_suggestions(u)
                .filter_map(|s| s.likeliness_to_act.map(f64::from))
                .collect();
            let mut row = vec![
                u.to_string(),
                p.condition.as_str().into(),
                entry_days(state, u, tz).to_string(),
                phq(Wave::PreStudy),
                phq(Wave::PostStudy),
                opt(state.sbi.iter().find(|r| &r.user_id == u).map(|r| r.score)),
                if ratings.is_empty() {
                    String::new()
                } else {
                    mean_sd(&ratings).0.to_string()
                },
                ratings.len().to_string(),
            ];
            for (battery, ids) in [(Battery::Suggestions, &sug_ids), (Battery::Imaginations, &img_ids)] {
                let resp = state
                    .perceptions
                    .iter()
                    .find(|r| &r.user_id == u && r.battery == battery);
                for id in ids {
                    row.push(opt(resp.and_then(|r| r.item_scores.get(id))));
                }
            }
            row
        })
        .collect();
    (header, rows)
}

/// Every table, keyed by file name.
pub fn export_all(
    state: &StoreState,
    instruments: &InstrumentSet,
    tz: Tz,
) -> Result<BTreeMap<&'static str, String>, AnalysisError> {
    ExportTable::ALL
        .into_iter()
        .map(|t| export_table(state, t, instruments, tz).map(|csv| (t.file_name(), csv)))
        .collect()
}

pub fn write_export(
    dir: &Path,
    state: &StoreState,
    instruments: &InstrumentSet,
    tz: Tz,
) -> Result<Vec<String>, AnalysisError> {
    let io = |e: std::io::Error| AnalysisError::IoFailure(e.to_string());
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut written = Vec::new();
    for (name, csv) in export_all(state, instruments, tz)? {
        std::fs::write(dir.join(name), csv).map_err(io)?;
        written.push(name.to_string());
    }
    Ok(written)
}

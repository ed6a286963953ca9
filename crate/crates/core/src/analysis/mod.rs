//! Offline analysis: affect deltas, rank tests, lexicon counts, text length
//! statistics and CSV export.

pub mod export;
pub mod stats;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::UserId;
use crate::lexicon::{Lexicon, NEGATIVE, POSITIVE};
use crate::store::{MemoryKind, StoreState};
use crate::study::model::{Battery, Condition};
use crate::study::Instrument;
use crate::text::{char_len, word_count};

pub use export::{export_all, export_table, write_export, ExportTable};
pub use stats::{midranks, spearman, wilcoxon_signed_rank, Method, TestResult};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AnalysisError {
    #[error("all samples equal the hypothesized median")]
    AllZeroDifferences,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("no paired affect samples")]
    EmptyCohort,
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("i/o failure: {0}")]
    IoFailure(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconCountResult {
    pub text_id: String,
    pub word_count: usize,
    pub positive_count: usize,
    pub negative_count: usize,
    pub category_counts: BTreeMap<String, usize>,
}

/// Category counts over lowercase alphanumeric tokens.
pub fn lexicon_counts(text_id: &str, text: &str, lexicon: &Lexicon) -> LexiconCountResult {
    let (word_count, category_counts) = lexicon.count(text);
    LexiconCountResult {
        text_id: text_id.to_string(),
        word_count,
        positive_count: category_counts.get(POSITIVE).copied().unwrap_or(0),
        negative_count: category_counts.get(NEGATIVE).copied().unwrap_or(0),
        category_counts,
    }
}

/// Text source for corpus-level summaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextType {
    Seed,
    Daily,
    Imagination,
    Suggestion,
}

impl TextType {
    pub const ALL: [TextType; 4] = [
        TextType::Seed,
        TextType::Daily,
        TextType::Imagination,
        TextType::Suggestion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TextType::Seed => "seed",
            TextType::Daily => "daily",
            TextType::Imagination => "imagination",
            TextType::Suggestion => "suggestion",
        }
    }
}

impl From<MemoryKind> for TextType {
    fn from(k: MemoryKind) -> Self {
        match k {
            MemoryKind::Seed => TextType::Seed,
            MemoryKind::Daily => TextType::Daily,
            MemoryKind::Imagination => TextType::Imagination,
        }
    }
}

/// Every stored text with its id and type, in id order.
pub fn corpus(state: &StoreState) -> Vec<(String, TextType, String)> {
    let mut out: Vec<_> = state
        .memories
        .values()
        .map(|m| (m.id.to_string(), m.kind.into(), m.text.clone()))
        .collect();
    out.extend(
        state
            .suggestions
            .values()
            .map(|s| (s.id.to_string(), TextType::Suggestion, s.suggestion_text.clone())),
    );
    out
}

/// Mean and sample standard deviation (0 when fewer than two values).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub text_type: TextType,
    pub n: usize,
    pub mean_chars: f64,
    pub sd_chars: f64,
    pub mean_words: f64,
    pub sd_words: f64,
}

/// Character and word length per text type; types with no texts are omitted.
pub fn length_stats(state: &StoreState) -> Vec<LengthStats> {
    let corpus = corpus(state);
    TextType::ALL
        .into_iter()
        .filter_map(|ty| {
            let texts: Vec<&str> = corpus
                .iter()
                .filter(|(_, t, _)| *t == ty)
                .map(|(_, _, s)| s.as_str())
                .collect();
            if texts.is_empty() {
                return None;
            }
            let chars: Vec<f64> = texts.iter().map(|t| char_len(t) as f64).collect();
            let words: Vec<f64> = texts.iter().map(|t| word_count(t) as f64).collect();
            let (mean_chars, sd_chars) = mean_sd(&chars);
            let (mean_words, sd_words) = mean_sd(&words);
            Some(LengthStats {
                text_type: ty,
                n: texts.len(),
                mean_chars,
                sd_chars,
                mean_words,
                sd_words,
            })
        })
        .collect()
}

/// One completed interaction: pre and post affect on both scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffectPair {
    pub user_id: UserId,
    pub condition: Condition,
    pub pre_positive: f64,
    pub pre_negative: f64,
    pub post_positive: f64,
    pub post_negative: f64,
}

pub fn affect_pairs(state: &StoreState) -> Vec<AffectPair> {
    state
        .cycles
        .iter()
        .filter_map(|c| {
            let post = c.post.as_ref()?;
            let condition = state.participants.get(&c.user_id)?.condition;
            Some(AffectPair {
                user_id: c.user_id.clone(),
                condition,
                pre_positive: f64::from(c.pre.positive),
                pre_negative: f64::from(c.pre.negative),
                post_positive: f64::from(post.positive),
                post_negative: f64::from(post.negative),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffectRow {
    pub condition: Condition,
    pub participants: usize,
    pub n: usize,
    pub pre_positive_mean: f64,
    pub pre_positive_sd: f64,
    pub post_positive_mean: f64,
    pub post_positive_sd: f64,
    pub pre_negative_mean: f64,
    pub pre_negative_sd: f64,
    pub post_negative_mean: f64,
    pub post_negative_sd: f64,
    pub delta_positive_mean: f64,
    pub delta_positive_sd: f64,
    pub delta_negative_mean: f64,
    pub delta_negative_sd: f64,
}

pub const AFFECT_COLUMNS: [&str; 15] = [
    "condition",
    "participants",
    "n",
    "pre_positive_mean",
    "pre_positive_sd",
    "post_positive_mean",
    "post_positive_sd",
    "pre_negative_mean",
    "pre_negative_sd",
    "post_negative_mean",
    "post_negative_sd",
    "delta_positive_mean",
    "delta_positive_sd",
    "delta_negative_mean",
    "delta_negative_sd",
];

impl AffectRow {
    pub fn values(&self) -> Vec<String> {
        let mut v = vec![
            self.condition.as_str().to_string(),
            self.participants.to_string(),
            self.n.to_string(),
        ];
        v.extend(
            [
                self.pre_positive_mean,
                self.pre_positive_sd,
                self.post_positive_mean,
                self.post_positive_sd,
                self.pre_negative_mean,
                self.pre_negative_sd,
                self.post_negative_mean,
                self.post_negative_sd,
                self.delta_positive_mean,
                self.delta_positive_sd,
                self.delta_negative_mean,
                self.delta_negative_sd,
            ]
            .map(|x| format!("{x:.4}")),
        );
        v
    }
}

/// Per-arm pre/post means and SDs over all completed interactions, plus the
/// paired (post - pre) deltas. Arms without data are omitted.
pub fn affect_delta_table(pairs: &[AffectPair]) -> Result<Vec<AffectRow>, AnalysisError> {
    if pairs.is_empty() {
        return Err(AnalysisError::EmptyCohort);
    }
    let mut rows = Vec::new();
    for condition in [Condition::Experimental, Condition::Control] {
        let arm: Vec<&AffectPair> = pairs.iter().filter(|p| p.condition == condition).collect();
        if arm.is_empty() {
            continue;
        }
        let col = |f: &dyn Fn(&AffectPair) -> f64| mean_sd(&arm.iter().map(|p| f(p)).collect::<Vec<_>>());
        let mut users: Vec<&UserId> = arm.iter().map(|p| &p.user_id).collect();
        users.sort();
        users.dedup();
        let (pre_positive_mean, pre_positive_sd) = col(&|p| p.pre_positive);
        let (post_positive_mean, post_positive_sd) = col(&|p| p.post_positive);
        let (pre_negative_mean, pre_negative_sd) = col(&|p| p.pre_negative);
        let (post_negative_mean, post_negative_sd) = col(&|p| p.post_negative);
        let (delta_positive_mean, delta_positive_sd) = col(&|p| p.post_positive - p.pre_positive);
        let (delta_negative_mean, delta_negative_sd) = col(&|p| p.post_negative - p.pre_negative);
        rows.push(AffectRow {
            condition,
            participants: users.len(),
            n: arm.len(),
            pre_positive_mean,
            pre_positive_sd,
            post_positive_mean,
            post_positive_sd,
            pre_negative_mean,
            pre_negative_sd,
            post_negative_mean,
            post_negative_sd,
            delta_positive_mean,
            delta_positive_sd,
            delta_negative_mean,
            delta_negative_sd,
        });
    }
    Ok(rows)
}

/// Signed-rank test of one perception statement's ratings against `mu`
/// (4 = the scale midpoint). Ratings are tested as given, in the
/// statement's own direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemTest {
    pub item_id: String,
    pub text: String,
    pub reverse_keyed: bool,
    pub n: usize,
    pub mean: f64,
    pub result: Result<TestResult, AnalysisError>,
}

pub fn perception_item_tests(state: &StoreState, instrument: &Instrument, battery: Battery, mu: f64) -> Vec<ItemTest> {
    instrument
        .items
        .iter()
        .map(|item| {
            let scores: Vec<f64> = state
                .perceptions
                .iter()
                .filter(|r| r.battery == battery)
                .filter_map(|r| r.item_scores.get(&item.id))
                .map(|&x| f64::from(x))
                .collect();
            let result = if scores.is_empty() {
                Err(AnalysisError::EmptyCohort)
            } else {
                wilcoxon_signed_rank(&scores, mu)
            };
            ItemTest {
                item_id: item.id.clone(),
                text: item.text.clone(),
                reverse_keyed: item.reverse,
                n: scores.len(),
                mean: mean_sd(&scores).0,
                result,
            }
        })
        .collect()
}

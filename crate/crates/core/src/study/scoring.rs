//! Pure scoring functions for the survey instruments.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::study::instruments::Instrument;

pub const PHQ8_ITEMS: usize = 8;
pub const PHQ8_ITEM_MAX: u8 = 3;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ScoringError {
    #[error("expected {expected} items, got {got}")]
    BadItemCount { expected: usize, got: usize },
    #[error("{field} = {value} is outside {min}..={max}")]
    OutOfRange {
        field: String,
        value: i64,
        min: i64,
        max: i64,
    },
    #[error("unknown item {0}")]
    UnknownItem(String),
}

pub(crate) fn check_range(field: &str, value: i64, min: i64, max: i64) -> Result<(), ScoringError> {
    if (min..=max).contains(&value) {
        Ok(())
    } else {
        Err(ScoringError::OutOfRange {
            field: field.to_string(),
            value,
            min,
            max,
        })
    }
}

/// Sum of eight 0–3 items.
pub fn score_phq8(items: &[i64]) -> Result<u8, ScoringError> {
    if items.len() != PHQ8_ITEMS {
        return Err(ScoringError::BadItemCount {
            expected: PHQ8_ITEMS,
            got: items.len(),
        });
    }
    for (i, &v) in items.iter().enumerate() {
        check_range(&format!("item {}", i + 1), v, 0, i64::from(PHQ8_ITEM_MAX))?;
    }
    Ok(items.iter().sum::<i64>() as u8)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phq8Severity {
    None,
    Mild,
    Moderate,
    ModeratelySevere,
    Severe,
}

/// Conventional cut points 5, 10, 15, 20.
pub fn phq8_severity(total: u8) -> Phq8Severity {
    match total {
        0..=4 => Phq8Severity::None,
        5..=9 => Phq8Severity::Mild,
        10..=14 => Phq8Severity::Moderate,
        15..=19 => Phq8Severity::ModeratelySevere,
        _ => Phq8Severity::Severe,
    }
}

/// Validates item count and range for any instrument.
pub fn validate_items(instrument: &Instrument, items: &[i64]) -> Result<Vec<u8>, ScoringError> {
    if items.len() != instrument.items.len() {
        return Err(ScoringError::BadItemCount {
            expected: instrument.items.len(),
            got: items.len(),
        });
    }
    items
        .iter()
        .zip(&instrument.items)
        .map(|(&v, item)| {
            check_range(
                &item.id,
                v,
                i64::from(instrument.scale_min),
                i64::from(instrument.scale_max),
            )
            .map(|_| v as u8)
        })
        .collect()
}

/// Mean of reverse-keyed item values; lies within the instrument's scale.
pub fn score_mean(instrument: &Instrument, items: &[i64]) -> Result<f64, ScoringError> {
    let values = validate_items(instrument, items)?;
    let total: f64 = values
        .iter()
        .zip(&instrument.items)
        .map(|(&v, item)| f64::from(instrument.keyed(item, v)))
        .sum();
    Ok(total / values.len() as f64)
}

pub fn score_sbi(instrument: &Instrument, items: &[i64]) -> Result<f64, ScoringError> {
    score_mean(instrument, items)
}

/// Checks a perception battery answer: every statement rated exactly once,
/// on the instrument's scale. Raw ratings are kept; keying is reported
/// alongside rather than applied.
pub fn validate_battery(
    instrument: &Instrument,
    scores: &BTreeMap<String, i64>,
) -> Result<BTreeMap<String, u8>, ScoringError> {
    if let Some(unknown) = scores.keys().find(|k| !instrument.items.iter().any(|i| &i.id == *k)) {
        return Err(ScoringError::UnknownItem(unknown.clone()));
    }
    if scores.len() != instrument.items.len() {
        return Err(ScoringError::BadItemCount {
            expected: instrument.items.len(),
            got: scores.len(),
        });
    }
    scores
        .iter()
        .map(|(k, &v)| {
            check_range(k, v, i64::from(instrument.scale_min), i64::from(instrument.scale_max))
                .map(|_| (k.clone(), v as u8))
        })
        .collect()
}

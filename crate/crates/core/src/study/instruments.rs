//! Survey instruments and fixed question texts.
//!
//! Scored instruments are TOML files: an `id`, `scale_min`/`scale_max`,
//! `scoring` (`sum`, `mean` or `none`) and an `[[items]]` list with `id`,
//! `text` and an optional `reverse = true`. Built-in copies are compiled in;
//! any of them can be replaced by a file at runtime.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::study::model::Battery;

/// Onboarding prompts for the five seed memories, in order.
pub const ONBOARDING_QUESTIONS: [&str; 5] = [
    "Describe a travel experience that deeply moved or changed you. What was it about this experience that was so impactful?",
    "What has been the biggest challenge you've faced in life, and how did you overcome it? What did you learn from this experience?",
    "Is there a particular cultural event or practice you\u{2019}ve experienced that left a lasting impression on you?",
    "What is your most cherished memory from your childhood, and why does it stand out to you?",
    "Can you recall a family tradition that you particularly loved? How did it shape your understanding of family?",
];

pub const AFFECT_QUESTIONS: [&str; 2] = ["How positive are you feeling?", "How negative are you feeling?"];

pub const LIKELINESS_QUESTION: &str = "How likely are you to act on this suggestion?";

/// Labels of the 5-point daily scale, 1 through 5.
pub const DAILY_SCALE_LABELS: [&str; 5] = ["Not at all", "Slightly", "Moderately", "Very", "Extremely"];

pub const OPEN_ENDED_QUESTIONS: [(&str, &str); 3] = [
    ("liked", "What did you like about the tool?"),
    ("concerns", "What concerns do you have with such a tool?"),
    (
        "other",
        "Is there anything else you would like to share about your experience?",
    ),
];

pub fn onboarding_questions() -> Vec<&'static str> {
    ONBOARDING_QUESTIONS.to_vec()
}

const PHQ8: &str = include_str!("../../data/instruments/phq8.toml");
const SBI: &str = include_str!("../../data/instruments/sbi.toml");
const SUGGESTIONS: &str = include_str!("../../data/instruments/perceptions_suggestions.toml");
const IMAGINATIONS: &str = include_str!("../../data/instruments/perceptions_imaginations.toml");

#[derive(Debug, Error, PartialEq)]
pub enum InstrumentError {
    #[error("instrument file {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("invalid instrument: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scoring {
    Sum,
    Mean,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub reverse: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instrument {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub instructions: String,
    pub scale_min: u8,
    pub scale_max: u8,
    #[serde(default)]
    pub scale_labels: Vec<String>,
    pub scoring: Scoring,
    pub items: Vec<Item>,
}

impl Instrument {
    pub fn parse(text: &str) -> Result<Self, InstrumentError> {
        let inst: Instrument = toml::from_str(text).map_err(|e| InstrumentError::Invalid(e.to_string()))?;
        if inst.items.is_empty() {
            return Err(InstrumentError::Invalid(format!("{} has no items", inst.id)));
        }
        if inst.scale_min >= inst.scale_max {
            return Err(InstrumentError::Invalid(format!("{} has an empty scale", inst.id)));
        }
        let mut ids: Vec<&str> = inst.items.iter().map(|i| i.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(InstrumentError::Invalid(format!("{} repeats an item id", inst.id)));
        }
        Ok(inst)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, InstrumentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| InstrumentError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn phq8() -> Self {
        Self::parse(PHQ8).expect("builtin instrument")
    }

    pub fn sbi() -> Self {
        Self::parse(SBI).expect("builtin instrument")
    }

    pub fn perceptions(battery: Battery) -> Self {
        Self::parse(match battery {
            Battery::Suggestions => SUGGESTIONS,
            Battery::Imaginations => IMAGINATIONS,
        })
        .expect("builtin instrument")
    }

    pub fn item_ids(&self) -> Vec<String> {
        self.items.iter().map(|i| i.id.clone()).collect()
    }

    pub fn reverse_keyed_ids(&self) -> Vec<String> {
        self.items.iter().filter(|i| i.reverse).map(|i| i.id.clone()).collect()
    }

    /// `scale_min + scale_max - x` for reverse-keyed items, `x` otherwise.
    pub fn keyed(&self, item: &Item, x: u8) -> u8 {
        if item.reverse {
            self.scale_min + self.scale_max - x
        } else {
            x
        }
    }
}

/// Instruments in use; each may come from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentSet {
    pub phq8: Instrument,
    pub sbi: Instrument,
    pub suggestions: Instrument,
    pub imaginations: Instrument,
}

impl Default for InstrumentSet {
    fn default() -> Self {
        Self {
            phq8: Instrument::phq8(),
            sbi: Instrument::sbi(),
            suggestions: Instrument::perceptions(Battery::Suggestions),
            imaginations: Instrument::perceptions(Battery::Imaginations),
        }
    }
}

impl InstrumentSet {
    pub fn battery(&self, battery: Battery) -> &Instrument {
        match battery {
            Battery::Suggestions => &self.suggestions,
            Battery::Imaginations => &self.imaginations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn onboarding_is_fixed() {
        assert_eq!(onboarding_questions().len(), 5);
        assert!(ONBOARDING_QUESTIONS[4].contains("family tradition"));
        assert_eq!(onboarding_questions(), onboarding_questions());
    }

    #[test]
    fn builtins_parse() {
        let set = InstrumentSet::default();
        assert_eq!(set.phq8.items.len(), 8);
        assert_eq!(set.sbi.items.len(), 24);
        assert_eq!(set.sbi.reverse_keyed_ids().len(), 12);
        assert_eq!(set.suggestions.items.len(), 11);
        assert_eq!(
            set.suggestions.reverse_keyed_ids(),
            ["sug_04", "sug_05", "sug_08", "sug_10"]
        );
        assert_eq!(set.imaginations.items.len(), 8);
        assert_eq!(set.imaginations.reverse_keyed_ids(), ["img_03", "img_05"]);
        assert_eq!(
            set.imaginations.items[7].text,
            "Imagining the suggestion made me look forward to it more, if I was to act on it."
        );
    }

    #[test]
    fn reverse_keying() {
        let sbi = Instrument::sbi();
        assert_eq!(sbi.keyed(&sbi.items[1], 7), 1);
        assert_eq!(sbi.keyed(&sbi.items[0], 7), 7);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(Instrument::parse("id='x'\nname='x'\nscale_min=1\nscale_max=7\nscoring='sum'\nitems=[]").is_err());
        assert!(matches!(
            Instrument::load("/nope.toml"),
            Err(InstrumentError::Io { .. })
        ));
    }
}

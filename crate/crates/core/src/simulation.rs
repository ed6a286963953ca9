//! A synthetic cohort run end to end on the mock provider.
//!
//! Every random choice comes from a ChaCha stream keyed by the config seed,
//! and every timestamp is computed from the start time, so two runs with the
//! same config produce byte-identical event logs.

use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::{DateTime, Duration, TimeZone, Utc};
use chrono_tz::Tz;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::ids::UserId;
use crate::journal::{Journal, JournalError};
use crate::llm::{Gateway, LlmProvider, MockProvider, RetryPolicy};
use crate::pipeline::{PipelineConfig, ValenceScreen};
use crate::store::{Store, StoreKey};
use crate::study::{
    AffectPhase, Battery, Condition, MemoryOutbox, StudyConfig, Wave, IMAGINATION_SECONDS, OPEN_ENDED_QUESTIONS,
};

#[derive(Debug, Clone)]
pub struct CohortConfig {
    pub users: usize,
    pub days: u32,
    pub seed: u64,
    pub start: DateTime<Utc>,
    pub timezone: Tz,
    /// Chance a participant skips a given day.
    pub skip_probability: f64,
    /// Attempts at finishing a memory whose processing failed.
    pub processing_attempts: u32,
}

impl Default for CohortConfig {
    fn default() -> Self {
        Self {
            users: 8,
            days: 14,
            seed: 7,
            start: Utc.with_ymd_and_hms(2024, 3, 4, 8, 0, 0).unwrap(),
            timezone: Tz::UTC,
            skip_probability: 0.1,
            processing_attempts: 3,
        }
    }
}

pub struct Cohort {
    pub journal: Journal,
    pub users: Vec<UserId>,
    pub reminders: MemoryOutbox,
    /// Time after the last simulated action.
    pub finished_at: DateTime<Utc>,
}

const PLACES: &[&str] = &[
    "the farmers market",
    "the old harbour",
    "my grandmother's garden",
    "the botanical gardens",
    "a small cafe on the corner",
    "the hill behind our house",
    "the public library",
    "the lake trail",
    "the community pool",
    "the bakery down the street",
    "the train station",
    "my friend's balcony",
];

const PEOPLE: &[&str] = &[
    "my sister",
    "my best friend",
    "my father",
    "two colleagues",
    "my neighbour",
    "my cousin",
    "my partner",
    "an old classmate",
    "my daughter",
    "my roommate",
];

const ACTIONS: &[&str] = &[
    "shared a pot of jasmine tea",
    "played a long round of cards",
    "picked ripe strawberries",
    "watched the boats drift past",
    "tried a new noodle recipe",
    "sketched the rooftops",
    "fed the ducks with leftover bread",
    "listened to a street musician",
    "planned a weekend trip",
    "repotted a stubborn cactus",
    "flew a red kite",
    "browsed second-hand books",
];

const DETAILS: &[&str] = &[
    "The air smelled of rain and cut grass, and the light turned golden just before sunset.",
    "A little dog kept running in circles around our bench, which made everyone laugh.",
    "We talked about the summer we spent by the sea years ago and all the silly things we did.",
    "The windows were open and someone nearby was practising piano scales over and over.",
    "I remember the warm mug in my hands and the sound of the wind in the tall trees.",
    "Afterwards we walked home slowly, taking the long way past the blossoming cherry trees.",
    "There was a moment of complete quiet when we both just watched the clouds roll by.",
    "The owner gave us an extra pastry because it was the last day of the spring festival.",
];

const IMAGININGS: &[&str] = &[
    "I can see myself there in the late afternoon, the light soft, laughing with people I care about.",
    "I picture the smell of coffee, the noise of the street, and feeling relaxed and open.",
    "I imagine arriving early, the air still cool, and feeling proud that I made time for this.",
    "I see the colours clearly and hear friendly voices around me while I take it all in.",
];

fn rng_for(seed: u64, label: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// An episodic memory of at least 200 characters.
pub fn synthetic_memory(rng: &mut ChaCha8Rng) -> String {
    let pick = |rng: &mut ChaCha8Rng, xs: &[&'static str]| *xs.choose(rng).expect("non-empty");
    let mut text = format!(
        "This afternoon I went to {} with {} and we {}.",
        pick(rng, PLACES),
        pick(rng, PEOPLE),
        pick(rng, ACTIONS)
    );
    let mut details = DETAILS.to_vec();
    details.shuffle(rng);
    for d in details {
        text.push(' ');
        text.push_str(d);
        if text.chars().count() >= 260 {
            break;
        }
    }
    text
}

/// The mock provider behind a gateway with no retry delays.
pub fn mock_gateway() -> Arc<Gateway> {
    let provider: Arc<dyn LlmProvider> = Arc::new(MockProvider::default());
    Arc::new(Gateway::new(provider, RetryPolicy::immediate(), 4))
}

pub fn cohort_journal(config: &CohortConfig, gateway: Arc<Gateway>) -> Journal {
    let key = StoreKey::from_passphrase(&format!("cohort-{}", config.seed));
    let study = StudyConfig {
        assignment_seed: config.seed,
        study_days: config.days,
        timezone: config.timezone,
        ..StudyConfig::default()
    };
    Journal::new(
        Arc::new(Store::in_memory(&key)),
        study,
        gateway,
        ValenceScreen::builtin(),
        PipelineConfig::default(),
    )
}

/// Runs the full protocol: enrolment with alternating arms, five seed
/// memories, daily entries, reminders, and the end-of-study surveys.
pub fn run_cohort(config: &CohortConfig) -> Result<Cohort, JournalError> {
    run_cohort_with(config, mock_gateway())
}

pub fn run_cohort_with(config: &CohortConfig, gateway: Arc<Gateway>) -> Result<Cohort, JournalError> {
    let journal = cohort_journal(config, gateway);
    let study = journal.study();
    let reminders = MemoryOutbox::default();
    let users: Vec<UserId> = (1..=config.users).map(|i| UserId::new(format!("p{i:02}"))).collect();
    let mut rngs: BTreeMap<UserId, ChaCha8Rng> = users
        .iter()
        .map(|u| (u.clone(), rng_for(config.seed, u.as_str())))
        .collect();

    for (i, user) in users.iter().enumerate() {
        let t = config.start + Duration::minutes(i as i64);
        let condition = if i % 2 == 0 {
            Condition::Experimental
        } else {
            Condition::Control
        };
        study.enroll_as(user, condition, t)?;
        let rng = rngs.get_mut(user).expect("rng per user");
        let phq: Vec<i64> = (0..8).map(|_| rng.gen_range(0..=2)).collect();
        study.record_phq8(user, &phq, Wave::PreStudy, t)?;
        for q in 1..=5u8 {
            let text = synthetic_memory(rng);
            finish(&journal, journal.submit_seed(user, q, &text, t)?, t, config)?;
        }
    }

    for day in 0..config.days {
        let morning = config.start + Duration::days(i64::from(day)) + Duration::minutes(30);
        study.emit_due_reminders(morning, &reminders)?;
        for (i, user) in users.iter().enumerate() {
            let rng = rngs.get_mut(user).expect("rng per user");
            if rng.gen_bool(config.skip_probability) {
                continue;
            }
            let mut t =
                config.start + Duration::days(i64::from(day)) + Duration::hours(10) + Duration::minutes(7 * i as i64);
            let pre_pos = rng.gen_range(1..=5);
            let pre_neg = rng.gen_range(1..=5);
            study.record_affect(user, AffectPhase::Pre, pre_pos, pre_neg, t)?;
            let text = synthetic_memory(rng);
            let processed = finish(&journal, journal.submit_memory(user, &text, t)?, t, config)?;
            if let Some(s) = processed.suggestion {
                t += Duration::minutes(2);
                study.record_likeliness(user, s.id, rng.gen_range(1..=5), t)?;
                study.acknowledge_suggestion(user, s.memory_id, t)?;
                t += Duration::seconds(IMAGINATION_SECONDS + 15);
                let imagining = *IMAGININGS.choose(rng).expect("non-empty");
                study.submit_imagination(user, s.memory_id, imagining, t)?;
            }
            t += Duration::minutes(1);
            let post_pos = (pre_pos + rng.gen_range(-1..=1)).clamp(1, 5);
            let post_neg = (pre_neg + rng.gen_range(-1..=1)).clamp(1, 5);
            study.record_affect(user, AffectPhase::Post, post_pos, post_neg, t)?;
        }
    }

    let mut finished_at = config.start;
    for (i, user) in users.iter().enumerate() {
        let rng = rngs.get_mut(user).expect("rng per user");
        let end = study.store().read(|s| s.participant(user).map(|p| p.study_end()))?;
        let t = end + Duration::hours(25) + Duration::minutes(i as i64);
        let phq: Vec<i64> = (0..8).map(|_| rng.gen_range(0..=2)).collect();
        study.record_phq8(user, &phq, Wave::PostStudy, t)?;
        let sbi: Vec<i64> = (0..study.instruments().sbi.items.len())
            .map(|_| rng.gen_range(1..=7))
            .collect();
        study.record_sbi(user, &sbi, t)?;
        if study.store().read(|s| s.participant(user).map(|p| p.condition))? == Condition::Experimental {
            for battery in [Battery::Suggestions, Battery::Imaginations] {
                let scores: BTreeMap<String, i64> = study
                    .instruments()
                    .battery(battery)
                    .item_ids()
                    .into_iter()
                    .map(|id| (id, rng.gen_range(3..=7)))
                    .collect();
                study.record_perceptions(user, battery, &scores, t)?;
            }
        }
        let answers = OPEN_ENDED_QUESTIONS
            .iter()
            .map(|(id, _)| (id.to_string(), format!("Answer from {user} to {id}.")))
            .collect();
        study.record_feedback(user, answers, t)?;
        finished_at = finished_at.max(t);
    }

    Ok(Cohort {
        journal,
        users,
        reminders,
        finished_at,
    })
}

fn finish(
    journal: &Journal,
    first: Result<crate::journal::Processed, crate::journal::ProcessingFailed>,
    now: DateTime<Utc>,
    config: &CohortConfig,
) -> Result<crate::journal::Processed, JournalError> {
    let mut failure = match first {
        Ok(p) => return Ok(p),
        Err(f) => f,
    };
    for _ in 1..config.processing_attempts {
        match journal.process_memory(failure.memory_id, now) {
            Ok(p) => return Ok(p),
            Err(JournalError::Pipeline(e)) => failure.source = e,
            Err(e) => return Err(e),
        }
    }
    Err(JournalError::Pipeline(failure.source))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn memories_meet_minimum_length() {
        let mut rng = rng_for(1, "x");
        for _ in 0..200 {
            assert!(synthetic_memory(&mut rng).chars().count() >= 200);
        }
    }

    #[test]
    fn small_cohort_runs() {
        let config = CohortConfig {
            users: 2,
            days: 3,
            ..CohortConfig::default()
        };
        let cohort = run_cohort(&config).unwrap();
        let (suggestions, imaginations) = cohort.journal.store().read(|s| {
            (
                s.suggestions.len(),
                s.memories
                    .values()
                    .filter(|m| m.kind == crate::store::MemoryKind::Imagination)
                    .count(),
            )
        });
        assert_eq!(suggestions, imaginations);
        assert!(suggestions > 0);
    }
}

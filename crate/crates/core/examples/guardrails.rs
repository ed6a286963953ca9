//! The valence screen and what the suggestion chain does when a model keeps
//! producing blocked or negative-heavy text.
//!
//!     cargo run --example guardrails

use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};
use reverie::ids::UserId;
use reverie::journal::Journal;
use reverie::llm::{Gateway, MockProvider, RetryPolicy, ScriptedProvider, TemplateName};
use reverie::pipeline::{PipelineConfig, ValenceScreen};
use reverie::store::{Store, StoreKey};
use reverie::study::{AffectPhase, Condition, StudyConfig};

const ENTRY: &str = "We finally finished painting the spare room this afternoon. My partner kept humming \
    terrible pop songs, the cat walked across the wet skirting board twice, and we ordered pizza to eat on the \
    floor surrounded by dust sheets and open windows while it got dark outside.";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let screen = ValenceScreen::builtin();
    for text in [
        "Joy: a warm, proud delight at making a home together.",
        "Sadness: lonely, hurt and miserable about the mess.",
        "Treat yourself to an overdose of pizza tonight.",
    ] {
        let r = screen.screen(text);
        println!(
            "{:?} +{} -{} blocked={:?}  {text}",
            r.verdict, r.positive_count, r.negative_count, r.blocked_terms
        );
    }

    let scripted = Arc::new(ScriptedProvider::new(Arc::new(MockProvider::default())));
    let gateway = Arc::new(Gateway::new(scripted.clone(), RetryPolicy::immediate(), 4));
    let journal = Journal::new(
        Arc::new(Store::in_memory(&StoreKey::from_passphrase("guardrails"))),
        StudyConfig::default(),
        gateway,
        screen,
        PipelineConfig::default(),
    );
    let user = UserId::from("cy");
    let now = Utc.with_ymd_and_hms(2024, 4, 2, 20, 0, 0).unwrap();
    journal.study().enroll_as(&user, Condition::Experimental, now)?;
    journal.study().record_affect(&user, AffectPhase::Pre, 3, 3, now)?;

    // Two blocked drafts, then the mock's clean one.
    scripted.repeat(
        TemplateName::Suggestion,
        "Treat yourself to an overdose of pizza tonight.",
        2,
    );
    let p = journal.submit_memory(&user, ENTRY, now)?.map_err(|f| f.source)?;
    let s = p.suggestion.unwrap();
    println!(
        "\nafter {} suggestion calls: {}",
        scripted.requests_for(TemplateName::Suggestion).len(),
        s.suggestion_text
    );
    journal.study().acknowledge_suggestion(&user, s.memory_id, now)?;
    let later = now + Duration::minutes(1);
    journal
        .study()
        .submit_imagination(&user, s.memory_id, "Sitting with a note and a pen, smiling.", later)?;
    journal.study().record_affect(&user, AffectPhase::Post, 3, 3, later)?;

    // Negative-heavy emotion targets on every attempt: nothing is stored.
    journal.study().record_affect(&user, AffectPhase::Pre, 3, 3, later)?;
    scripted.repeat(
        TemplateName::Emotion,
        "Sadness: lonely, hurt and miserable about the mess.",
        3,
    );
    let before = journal.store().read(|s| s.suggestions.len());
    match journal.submit_memory(&user, ENTRY, later)? {
        Ok(_) => println!("unexpected success"),
        Err(failed) => println!(
            "memory {} stored, processing failed: {} (retriable: {})",
            failed.memory_id,
            failed.source,
            failed.source.is_retriable()
        ),
    }
    assert_eq!(before, journal.store().read(|s| s.suggestions.len()));
    Ok(())
}

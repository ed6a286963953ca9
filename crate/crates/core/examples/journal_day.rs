//! One experimental-arm participant through onboarding and a full daily
//! entry, printing the flow state after each step.
//!
//!     cargo run --example journal_day

use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};
use reverie::ids::UserId;
use reverie::journal::Journal;
use reverie::pipeline::{emotion_label, PipelineConfig, ValenceScreen};
use reverie::simulation::mock_gateway;
use reverie::store::{Store, StoreKey};
use reverie::study::{onboarding_questions, AffectPhase, Condition, StudyConfig};

const TODAY: &str = "After work I met my sister at the lake trail and we walked until the light went orange. \
    She brought warm cinnamon buns from the bakery near her flat and we ate them on the jetty, talking about \
    the trip to the coast we took as kids and how our dad always got lost on the way there.";

const SEEDS: [&str; 5] = [
    "When I was nine my grandmother taught me to bake bread in her tiny kitchen. Flour went everywhere, the \
     radio played old songs, and she let me shape the last loaf into a lopsided turtle that we ate warm with butter.",
    "On my first solo trip I got lost in Lisbon and ended up in a tiny bar where an old man sang fado. Nobody \
     spoke English, but they poured me a glass of wine and clapped when I tried to hum along with the chorus.",
    "I lost my wallet on a train once and a stranger posted it back to me with a handwritten note and a bus \
     ticket tucked inside. I still keep the note in my desk drawer and read it whenever I need a reminder.",
    "At university my roommate and I climbed the hill behind campus at dawn to watch the sunrise before our \
     final exam. It was freezing, we shared one scarf, and we laughed so hard we nearly missed the moment.",
    "Every December my family folds paper stars together at the kitchen table. My uncle always insists his are \
     the best, my mother hums carols, and the youngest child gets to hang the first star in the window.",
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = Arc::new(Store::in_memory(&StoreKey::from_passphrase("journal-day")));
    let journal = Journal::new(
        store,
        StudyConfig::default(),
        mock_gateway(),
        ValenceScreen::builtin(),
        PipelineConfig::default(),
    );
    let study = journal.study();
    let user = UserId::from("ana");
    let mut now = Utc.with_ymd_and_hms(2023, 11, 20, 18, 0, 0).unwrap();

    study.enroll_as(&user, Condition::Experimental, now)?;
    for (i, (question, text)) in onboarding_questions().into_iter().zip(SEEDS).enumerate() {
        let seed = journal
            .submit_seed(&user, i as u8 + 1, text, now)?
            .map_err(|f| f.source)?;
        println!(
            "seed {}: {:?}\n  q: {question}",
            seed.memory.id,
            seed.memory.title.unwrap_or_default()
        );
    }

    now += Duration::days(3);
    println!("\nflow: {}", study.flow_state(&user)?);
    study.record_affect(&user, AffectPhase::Pre, 3, 2, now)?;
    println!("flow: {}", study.flow_state(&user)?);

    let processed = journal.submit_memory(&user, TODAY, now)?.map_err(|f| f.source)?;
    let suggestion = processed.suggestion.expect("experimental arm gets a suggestion");
    println!(
        "memory {}: {:?}",
        processed.memory.id,
        processed.memory.title.unwrap_or_default()
    );
    println!(
        "emotion: {}\n  {}",
        emotion_label(&suggestion.target_emotion_text),
        suggestion.target_emotion_text
    );
    println!(
        "suggestion (cites {:?}):\n  {}",
        suggestion.cited_memory_ids, suggestion.suggestion_text
    );
    println!("flow: {}", study.flow_state(&user)?);

    study.record_likeliness(&user, suggestion.id, 4, now)?;
    study.acknowledge_suggestion(&user, suggestion.memory_id, now)?;
    let status = study.flow_status(&user)?;
    println!(
        "flow: {} (imagination opens {})",
        status.state,
        status.imagination_open_at.unwrap()
    );

    now += Duration::seconds(45);
    study.submit_imagination(
        &user,
        suggestion.memory_id,
        "I picture us on the jetty again next week with a flask of tea, laughing about dad's maps.",
        now,
    )?;
    println!("flow: {}", study.flow_state(&user)?);
    study.record_affect(&user, AffectPhase::Post, 4, 1, now)?;
    println!("flow: {}", study.flow_state(&user)?);
    Ok(())
}

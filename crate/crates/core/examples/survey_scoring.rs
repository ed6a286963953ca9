//! Instrument scoring, survey windows, compliance and reminders.
//!
//!     cargo run --example survey_scoring

use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};
use reverie::ids::UserId;
use reverie::store::{Store, StoreKey};
use reverie::study::{
    phq8_severity, score_phq8, score_sbi, AffectPhase, Battery, Condition, MemoryOutbox, StudyConfig, StudyEngine, Wave,
};

const TEXT: &str = "My brother called out of the blue and we ended up talking for two hours about the \
    football season, his new puppy and the holiday cottage we rented with our parents. I made soup while we \
    talked and it was the nicest evening I have had in weeks, just easy and warm.";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for items in [[0; 8], [1, 1, 0, 2, 1, 0, 1, 0], [3; 8]] {
        let total = score_phq8(&items)?;
        println!("PHQ-8 {items:?} -> {total} ({:?})", phq8_severity(total));
    }
    println!("PHQ-8 with 7 items: {}", score_phq8(&[1; 7]).unwrap_err());

    let store = Arc::new(Store::in_memory(&StoreKey::from_passphrase("surveys")));
    let study = StudyEngine::new(store, StudyConfig::default());
    let sbi = &study.instruments().sbi;
    let answers: Vec<i64> = (0..sbi.items.len() as i64).map(|i| 1 + i % 7).collect();
    println!(
        "SBI mean (reverse-keyed items flipped): {:.3}",
        score_sbi(sbi, &answers)?
    );

    let user = UserId::from("eve");
    let t0 = Utc.with_ymd_and_hms(2024, 5, 6, 9, 0, 0).unwrap();
    let other = UserId::from("fay");
    study.enroll_as(&user, Condition::Control, t0)?;
    study.enroll_as(&other, Condition::Experimental, t0)?;
    study.record_phq8(&user, &[1, 0, 1, 1, 0, 0, 1, 0], Wave::PreStudy, t0)?;

    let outbox = MemoryOutbox::default();
    for day in [0, 1, 2, 3, 9, 10, 11, 12, 13] {
        let t = t0 + Duration::days(day) + Duration::hours(8);
        study.emit_due_reminders(t - Duration::hours(1), &outbox)?;
        study.record_affect(&user, AffectPhase::Pre, 3, 2, t)?;
        study.create_daily_memory(&user, TEXT, t)?;
        study.record_affect(&user, AffectPhase::Post, 4, 2, t + Duration::minutes(5))?;
    }
    let end = t0 + Duration::days(14);
    println!("\ncompliance {:.3} after 9 of 14 days", study.compliance(&user, end)?);
    for r in outbox.sent.lock().unwrap().iter() {
        println!(
            "reminder to {} at {} after {} inactive days",
            r.user_id, r.emitted_at, r.inactive_days
        );
    }

    println!(
        "\npost wave at study end: {}",
        study.record_phq8(&user, &[0; 8], Wave::PostStudy, end).unwrap_err()
    );
    let open = end + Duration::hours(24);
    study.record_phq8(&user, &[0; 8], Wave::PostStudy, open)?;
    let scores: BTreeMap<String, i64> = study
        .instruments()
        .imaginations
        .item_ids()
        .into_iter()
        .map(|id| (id, 6))
        .collect();
    study.record_perceptions(&other, Battery::Imaginations, &scores, open)?;
    println!(
        "control arm perceptions: {}",
        study
            .record_perceptions(&user, Battery::Imaginations, &scores, open)
            .unwrap_err()
    );
    println!("post wave and imagination perceptions recorded at {open}");
    Ok(())
}

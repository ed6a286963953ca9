//! The encrypted append-only event log: write, reopen, replay, snapshot,
//! and tamper detection.
//!
//!     cargo run --example event_log

use chrono::{Duration, TimeZone, Utc};
use reverie::ids::UserId;
use reverie::store::{replay, MemoryKind, Store, StoreKey};
use reverie::study::{AffectPhase, Condition, StudyConfig, StudyEngine};
use std::sync::Arc;

const TEXT: &str = "Spent the morning at the flea market with my neighbour hunting for old postcards. \
    We found a stack from a seaside town in the sixties and made up stories about who wrote them, then \
    had hot chocolate at the stall by the fountain before the rain came in.";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("events.log");
    let key = StoreKey::from_passphrase("correct horse battery staple");
    let t0 = Utc.with_ymd_and_hms(2024, 2, 12, 10, 0, 0).unwrap();
    let user = UserId::from("dee");

    {
        let study = StudyEngine::new(Arc::new(Store::open(&path, &key)?), StudyConfig::default());
        study.enroll_as(&user, Condition::Control, t0)?;
        study.record_affect(&user, AffectPhase::Pre, 4, 2, t0)?;
        study.create_daily_memory(&user, TEXT, t0 + Duration::minutes(3))?;
    }

    let bytes = std::fs::read(&path)?;
    println!(
        "{} bytes, {} lines",
        bytes.len(),
        bytes.split(|b| *b == b'\n').filter(|l| !l.is_empty()).count()
    );
    println!(
        "plaintext visible: {}",
        String::from_utf8_lossy(&bytes).contains("postcards")
    );
    println!(
        "first line: {}...",
        String::from_utf8_lossy(&bytes[..72.min(bytes.len())])
    );

    let store = Store::open(&path, &key)?;
    let state = store.state();
    let m = state
        .user_memories(&user)
        .find(|m| m.kind == MemoryKind::Daily)
        .unwrap();
    println!(
        "\nreopened: seq {}, memory {} = {:?}...",
        state.last_seq,
        m.id,
        &m.text[..40]
    );
    assert_eq!(replay(&bytes, &key)?, state);

    let snap = dir.path().join("state.snapshot");
    store.write_snapshot(&snap)?;
    let fast = Store::open_with_snapshot(&path, &snap, &key)?;
    println!("snapshot reopen equal: {}", fast.state() == state);

    let mut tampered = bytes.clone();
    tampered[40] ^= 0x01;
    println!("\nflipped one byte: {}", replay(&tampered, &key).unwrap_err());
    println!(
        "wrong key:        {}",
        replay(&bytes, &StoreKey::from_passphrase("nope")).unwrap_err()
    );
    Ok(())
}

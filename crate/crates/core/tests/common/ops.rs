//! Random operation sequences against a store, for replay checks.

use chrono::{DateTime, Duration, Utc};
use rand::Rng;
use reverie::ids::{MemoryId, UserId};
use reverie::store::{replay, Store, StoreKey};
use reverie::study::{AffectPhase, Condition, StudyConfig, StudyEngine, Wave};
use std::sync::Arc;

use super::{t0, MEMORY};

#[derive(Debug, Clone)]
pub enum Op {
    Enroll(usize, bool),
    Affect(usize, bool, i64, i64),
    Daily(usize, bool),
    Seed(usize, u8),
    Title(u64, String),
    Embed(u64, u64, usize),
    Imagine(usize, u64),
    Phq8(usize, Vec<i64>),
    Advance(i64),
}

pub fn random_op(rng: &mut impl Rng) -> Op {
    let user = rng.gen_range(0..3);
    match rng.gen_range(0..10) {
        0 => Op::Enroll(user, rng.gen()),
        1 | 2 => Op::Affect(user, rng.gen(), rng.gen_range(0..7), rng.gen_range(0..7)),
        3 | 4 => Op::Daily(user, rng.gen_bool(0.8)),
        5 => Op::Seed(user, rng.gen_range(0..7)),
        6 => Op::Title(
            rng.gen_range(0..12),
            ["Quiet river walk", "x", "", "a b c d e"][rng.gen_range(0..4)].into(),
        ),
        7 => Op::Embed(rng.gen_range(0..12), rng.gen(), if rng.gen_bool(0.9) { 8 } else { 5 }),
        8 => Op::Imagine(user, rng.gen_range(0..12)),
        _ => {
            if rng.gen_bool(0.5) {
                Op::Phq8(user, (0..rng.gen_range(7..10)).map(|_| rng.gen_range(-1..5)).collect())
            } else {
                Op::Advance(rng.gen_range(1..40))
            }
        }
    }
}

fn unit_vector(seed: u64, dim: usize) -> Vec<f64> {
    let mut x = seed | 1;
    let v: Vec<f64> = (0..dim)
        .map(|_| {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x % 2000) as f64 / 1000.0 - 1.0 + 1e-3
        })
        .collect();
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / n).collect()
}

/// Applies `ops` (errors are expected and ignored) and checks after every op
/// that rejected operations left the log untouched. Returns the store.
pub fn apply(store: Arc<Store>, ops: &[Op]) -> Result<Arc<Store>, String> {
    let study = StudyEngine::new(store.clone(), StudyConfig::default());
    let users = ["u0", "u1", "u2"].map(UserId::from);
    let mut now: DateTime<Utc> = t0();
    for op in ops {
        let before = store.log_bytes().map_err(|e| e.to_string())?;
        let ok = match op {
            Op::Enroll(u, e) => {
                let c = if *e {
                    Condition::Experimental
                } else {
                    Condition::Control
                };
                study.enroll_as(&users[*u], c, now).is_ok()
            }
            Op::Affect(u, pre, p, n) => {
                let phase = if *pre { AffectPhase::Pre } else { AffectPhase::Post };
                study.record_affect(&users[*u], phase, *p, *n, now).is_ok()
            }
            Op::Daily(u, long) => {
                let text = if *long { MEMORY } else { "too short" };
                study.create_daily_memory(&users[*u], text, now).is_ok()
            }
            Op::Seed(u, q) => study.create_seed(&users[*u], *q, MEMORY, now).is_ok(),
            Op::Title(m, t) => store.attach_title(MemoryId(*m), t, now).is_ok(),
            Op::Embed(m, seed, dim) => store
                .attach_embedding(MemoryId(*m), unit_vector(*seed, *dim), now)
                .is_ok(),
            Op::Imagine(u, m) => store
                .link_imagination(&users[*u], MemoryId(*m), "I imagine it.", now)
                .is_ok(),
            Op::Phq8(u, items) => study.record_phq8(&users[*u], items, Wave::PreStudy, now).is_ok(),
            Op::Advance(h) => {
                now += Duration::hours(*h);
                true
            }
        };
        let after = store.log_bytes().map_err(|e| e.to_string())?;
        if !ok && before != after {
            return Err(format!("rejected {op:?} changed the log"));
        }
    }
    Ok(store)
}

pub fn key() -> StoreKey {
    StoreKey::from_bytes([3; 32])
}

/// Replaying the log reproduces the live state exactly.
pub fn replay_matches(ops: &[Op]) -> Result<(), String> {
    let store = apply(Arc::new(Store::in_memory(&key())), ops)?;
    let log = store.log_bytes().map_err(|e| e.to_string())?;
    let rebuilt = replay(&log, &key()).map_err(|e| e.to_string())?;
    if rebuilt != store.state() {
        return Err("replayed state differs".into());
    }
    Ok(())
}

/// Every single-byte corruption of a sample log line is detected.
pub fn corruption_detected(log: &[u8]) -> Result<usize, String> {
    let mut checked = 0;
    let text = std::str::from_utf8(log).map_err(|e| e.to_string())?;
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() < 2 {
        return Err("log too short".into());
    }
    // Flip a byte at every position of one line.
    let first_len = lines[0].len();
    for i in 0..first_len {
        let mut bad = log.to_vec();
        bad[i] = if bad[i] == b'A' { b'B' } else { b'A' };
        if bad[i] == log[i] {
            continue;
        }
        if replay(&bad, &key()).is_ok() {
            return Err(format!("flip at byte {i} went unnoticed"));
        }
        checked += 1;
    }
    // Dropped and reordered lines break the sequence.
    let dropped = lines[1..].join("\n") + "\n";
    if replay(dropped.as_bytes(), &key()).is_ok() {
        return Err("dropped first line went unnoticed".into());
    }
    let mut swapped = lines.clone();
    swapped.swap(0, 1);
    if replay((swapped.join("\n") + "\n").as_bytes(), &key()).is_ok() {
        return Err("swapped lines went unnoticed".into());
    }
    // Truncated tail.
    if replay(&log[..log.len() - 5], &key()).is_ok() {
        return Err("truncated tail went unnoticed".into());
    }
    if replay(log, &StoreKey::from_bytes([4; 32])).is_ok() {
        return Err("wrong key went unnoticed".into());
    }
    Ok(checked + 4)
}

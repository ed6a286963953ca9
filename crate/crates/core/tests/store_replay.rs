mod common;

use std::sync::Arc;

use common::ops::{apply, corruption_detected, key, random_op, replay_matches, Op};
use proptest::prelude::*;
use rand::SeedableRng;
use reverie::store::{replay, Store, StoreError};

fn ops_strategy() -> impl Strategy<Value = Vec<Op>> {
    (any::<u64>(), 1usize..40).prop_map(|(seed, n)| {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        // Enroll everyone early so most sequences do real work.
        let mut ops = vec![Op::Enroll(0, true), Op::Enroll(1, false)];
        ops.extend((0..n).map(|_| random_op(&mut rng)));
        ops
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn replay_reconstructs_state(ops in ops_strategy()) {
        prop_assert_eq!(replay_matches(&ops), Ok(()));
    }
}

#[test]
fn reopening_a_file_log_restores_state() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.log");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut ops = vec![Op::Enroll(0, true), Op::Enroll(1, false)];
    ops.extend((0..200).map(|_| random_op(&mut rng)));

    let store = apply(Arc::new(Store::open(&path, &key()).unwrap()), &ops).unwrap();
    let live = store.state();
    assert!(live.last_seq > 20);
    drop(store);
    let reopened = Store::open(&path, &key()).unwrap();
    assert_eq!(reopened.state(), live);

    let snap = dir.path().join("state.snap");
    reopened.write_snapshot(&snap).unwrap();
    let more = apply(Arc::new(reopened), &[Op::Advance(1), Op::Affect(0, true, 3, 3)]).unwrap();
    let live = more.state();
    drop(more);
    let from_snapshot = Store::open_with_snapshot(&path, &snap, &key()).unwrap();
    assert_eq!(from_snapshot.state(), live);
}

#[test]
fn corrupted_logs_are_detected() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let mut ops = vec![Op::Enroll(0, true), Op::Enroll(1, false)];
    ops.extend((0..60).map(|_| random_op(&mut rng)));
    let store = apply(Arc::new(Store::in_memory(&key())), &ops).unwrap();
    let log = store.log_bytes().unwrap();
    let checked = corruption_detected(&log).unwrap();
    assert!(checked > 50);
    assert!(matches!(
        replay(b"garbage\n", &key()),
        Err(StoreError::CorruptLog { line: 1, .. })
    ));
}

#[test]
fn memory_text_is_not_in_the_log() {
    let ops = [Op::Enroll(0, true), Op::Affect(0, true, 3, 3), Op::Daily(0, true)];
    let store = apply(Arc::new(Store::in_memory(&key())), &ops).unwrap();
    let log = String::from_utf8(store.log_bytes().unwrap()).unwrap();
    assert_eq!(store.read(|s| s.memories.len()), 1);
    assert!(!log.contains("chestnuts"));
    assert!(!log.contains("u0"));
}

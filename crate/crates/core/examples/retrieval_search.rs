//! Exact top-k retrieval over a participant's embedded memories.
//!
//! Mock embeddings are hashes, so neighbours are arbitrary but stable;
//! point REVERIE_LLM_* at a real provider for meaningful ranks.
//!
//!     cargo run --example retrieval_search -- "a walk by the water"

use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reverie::ids::UserId;
use reverie::journal::Journal;
use reverie::pipeline::{PipelineConfig, ValenceScreen};
use reverie::retrieval::{cosine_similarity, top_k_similar, DEFAULT_TOP_K};
use reverie::simulation::{mock_gateway, synthetic_memory};
use reverie::store::{Store, StoreKey};
use reverie::study::{Condition, StudyConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let query = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "a walk by the water with family".into());
    let journal = Journal::new(
        Arc::new(Store::in_memory(&StoreKey::from_passphrase("retrieval"))),
        StudyConfig::default(),
        mock_gateway(),
        ValenceScreen::builtin(),
        PipelineConfig::default(),
    );
    let user = UserId::from("ben");
    let t0 = Utc.with_ymd_and_hms(2024, 1, 8, 9, 0, 0).unwrap();
    journal.study().enroll_as(&user, Condition::Control, t0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for q in 1..=5 {
        let text = synthetic_memory(&mut rng);
        journal
            .submit_seed(&user, q, &text, t0 + Duration::minutes(q.into()))?
            .map_err(|f| f.source)?;
    }

    let q = journal.gateway().embed(&query)?;
    let state = journal.store().state();
    println!("query: {query:?} ({} dims)\n", q.values().len());
    for hit in top_k_similar(&state, &user, q.values(), DEFAULT_TOP_K, &[])? {
        let m = &state.memories[&hit.memory_id];
        println!(
            "#{} {} score {:+.4}  {}",
            hit.rank,
            m.id,
            hit.score,
            m.title.as_deref().unwrap_or("")
        );
        let direct = cosine_similarity(q.values(), m.embedding.as_deref().unwrap())?;
        assert!((direct - hit.score).abs() < 1e-12);
    }
    Ok(())
}

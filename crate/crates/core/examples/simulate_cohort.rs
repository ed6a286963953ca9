//! Runs a synthetic 8-participant, 14-day study on the mock provider and
//! prints per-arm counts, affect deltas and compliance.
//!
//!     cargo run --example simulate_cohort -- [seed]

use reverie::analysis::{affect_delta_table, affect_pairs, AFFECT_COLUMNS};
use reverie::simulation::{run_cohort, CohortConfig};
use reverie::store::MemoryKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(7);
    let config = CohortConfig {
        seed,
        ..CohortConfig::default()
    };
    let cohort = run_cohort(&config)?;
    let study = cohort.journal.study();
    let state = cohort.journal.store().state();

    println!("user  arm           dailies  suggestions  imaginations  compliance");
    for user in &cohort.users {
        let p = state.participant(user)?;
        let count = |k: MemoryKind| state.user_memories(user).filter(|m| m.kind == k).count();
        println!(
            "{:<5} {:<13} {:>7}  {:>11}  {:>12}  {:>10.3}",
            user.as_str(),
            p.condition.as_str(),
            count(MemoryKind::Daily),
            state.user_suggestions(user).count(),
            count(MemoryKind::Imagination),
            study.compliance(user, cohort.finished_at)?,
        );
    }

    println!("\n{}", AFFECT_COLUMNS.join(","));
    for row in affect_delta_table(&affect_pairs(&state))? {
        println!("{}", row.values().join(","));
    }

    println!("\nreminders sent: {}", cohort.reminders.sent.lock().unwrap().len());
    if let Some(s) = state.suggestions.values().next() {
        println!("\nfirst suggestion ({}):\n  {}", s.memory_id, s.suggestion_text);
    }
    println!("\nevents: {}", state.last_seq);
    Ok(())
}

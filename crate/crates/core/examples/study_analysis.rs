//! Analysis over a simulated cohort: affect deltas, perception statement
//! tests, a rank correlation, text lengths and lexicon counts.
//!
//!     cargo run --example study_analysis

use reverie::analysis::{
    affect_delta_table, affect_pairs, corpus, length_stats, lexicon_counts, perception_item_tests, spearman,
};
use reverie::lexicon::Lexicon;
use reverie::simulation::{run_cohort, CohortConfig};
use reverie::study::{Battery, InstrumentSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cohort = run_cohort(&CohortConfig {
        users: 12,
        ..CohortConfig::default()
    })?;
    let state = cohort.journal.store().state();

    for row in affect_delta_table(&affect_pairs(&state))? {
        println!(
            "{:<12} n={:<3} positive {:+.3} (sd {:.3})  negative {:+.3} (sd {:.3})",
            row.condition.as_str(),
            row.n,
            row.delta_positive_mean,
            row.delta_positive_sd,
            row.delta_negative_mean,
            row.delta_negative_sd
        );
    }

    let instruments = InstrumentSet::default();
    println!("\nimagination statements vs midpoint 4:");
    for t in perception_item_tests(&state, &instruments.imaginations, Battery::Imaginations, 4.0) {
        match t.result {
            Ok(r) => println!(
                "  {} mean {:.2} W={:<5} p={:.4} {:?}",
                t.item_id, t.mean, r.statistic, r.p_value, r.method
            ),
            Err(e) => println!("  {} {e}", t.item_id),
        }
    }

    // Likeliness-to-act against the word count of the suggestion it rated.
    let (likeliness, words): (Vec<f64>, Vec<f64>) = state
        .suggestions
        .values()
        .filter_map(|s| {
            Some((
                f64::from(s.likeliness_to_act?),
                s.suggestion_text.split_whitespace().count() as f64,
            ))
        })
        .unzip();
    let rho = spearman(&likeliness, &words)?;
    println!(
        "\nlikeliness vs length: rho {:+.3}, p {:.3}, n {}",
        rho.statistic, rho.p_value, rho.n
    );

    println!();
    for s in length_stats(&state) {
        println!(
            "{:<11} n={:<4} words {:.1} (sd {:.1})",
            s.text_type.as_str(),
            s.n,
            s.mean_words,
            s.sd_words
        );
    }

    let lexicon = Lexicon::builtin();
    let (pos, neg) = corpus(&state).iter().fold((0, 0), |(p, n), (id, _, text)| {
        let c = lexicon_counts(id, text, &lexicon);
        (p + c.positive_count, n + c.negative_count)
    });
    println!("\nlexicon over all texts: {pos} positive, {neg} negative terms");
    Ok(())
}

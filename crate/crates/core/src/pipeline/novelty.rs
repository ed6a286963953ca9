//! Repeat detection between a candidate suggestion and earlier ones.
//!
//! Texts are compared as sets of word trigrams (markup removed, lowercased,
//! punctuation treated as a separator). A text with fewer than three words
//! contributes its whole word sequence as a single shingle.

use std::collections::HashSet;

use crate::text::{lexical_tokens, strip_markup};

/// Candidates at or above this similarity to any earlier suggestion are repeats.
pub const NOVELTY_THRESHOLD: f64 = 0.5;

pub fn trigrams(text: &str) -> HashSet<Vec<String>> {
    let tokens = lexical_tokens(&strip_markup(text));
    if tokens.is_empty() {
        return HashSet::new();
    }
    if tokens.len() < 3 {
        return HashSet::from([tokens]);
    }
    tokens.windows(3).map(<[String]>::to_vec).collect()
}

/// Jaccard index; two empty sets are identical (1.0).
pub fn jaccard(a: &HashSet<Vec<String>>, b: &HashSet<Vec<String>>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

pub fn max_similarity<S: AsRef<str>>(candidate: &str, past: &[S]) -> f64 {
    let cand = trigrams(candidate);
    past.iter()
        .map(|p| jaccard(&cand, &trigrams(p.as_ref())))
        .fold(0.0, f64::max)
}

/// True when the candidate is not a repeat of any earlier suggestion.
pub fn check_novelty<S: AsRef<str>>(candidate: &str, past: &[S]) -> bool {
    max_similarity(candidate, past) < NOVELTY_THRESHOLD
}

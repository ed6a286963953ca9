//! Maps quoted spans in a suggestion back to the memories they came from.

use std::sync::OnceLock;

use regex::Regex;

use crate::ids::MemoryId;
use crate::text::{collapse_whitespace, strip_markup};

#[derive(Debug, Clone, PartialEq)]
pub struct Citation {
    pub span: String,
    pub memory_id: MemoryId,
}

fn quote_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#""([^"]+)"|\u{201c}([^\u{201d}]+)\u{201d}"#).unwrap())
}

/// Text inside straight or typographic double quotes, in order of appearance.
pub fn quoted_spans(text: &str) -> Vec<String> {
    quote_re()
        .captures_iter(text)
        .filter_map(|c| c.get(1).or_else(|| c.get(2)))
        .map(|m| m.as_str().to_string())
        .collect()
}

/// Lowercase, markup-free, single-spaced, with typographic apostrophes folded
/// and surrounding punctuation (including ellipses) removed.
pub fn normalize_span(text: &str) -> String {
    let folded = strip_markup(text).replace(['\u{2019}', '\u{2018}'], "'").to_lowercase();
    collapse_whitespace(&folded)
        .trim_matches(|c: char| c.is_whitespace() || (c.is_ascii_punctuation() && c != '\'') || c == '\u{2026}')
        .to_string()
}

/// Matches each quoted span against the retrieved memories (in rank order);
/// spans found in no memory produce no citation.
pub fn extract_citations(text: &str, retrieved: &[(MemoryId, &str)]) -> Vec<Citation> {
    let haystacks: Vec<(MemoryId, String)> = retrieved.iter().map(|(id, t)| (*id, normalize_span(t))).collect();
    quoted_spans(text)
        .into_iter()
        .filter_map(|span| {
            let needle = normalize_span(&span);
            if needle.is_empty() {
                return None;
            }
            haystacks
                .iter()
                .find(|(_, hay)| hay.contains(&needle))
                .map(|(id, _)| Citation { span, memory_id: *id })
        })
        .collect()
}

/// Distinct cited memory ids in first-citation order.
pub fn cited_ids(citations: &[Citation]) -> Vec<MemoryId> {
    let mut ids = Vec::new();
    for c in citations {
        if !ids.contains(&c.memory_id) {
            ids.push(c.memory_id);
        }
    }
    ids
}

#[cfg(test)]
mod tests {
    use super::*;

    const M1: &str = "We hiked up to the old lighthouse and\nwatched the fog roll in over the bay.";
    const M2: &str = "Grandma taught me to fold dumplings the way her mother did.";

    #[test]
    fn spans_match_modulo_whitespace_and_case() {
        let s = "Try it — remember \u{201c}Watched the fog roll in…\u{201d} and \"fold dumplings\"?";
        let cites = extract_citations(s, &[(MemoryId(1), M1), (MemoryId(2), M2)]);
        assert_eq!(cites.len(), 2);
        assert_eq!(cites[0].memory_id, MemoryId(1));
        assert_eq!(cites[1].memory_id, MemoryId(2));
    }

    #[test]
    fn unmatched_quotes_are_ignored() {
        let s = "Go \"somewhere entirely new\" this week.";
        assert!(extract_citations(s, &[(MemoryId(1), M1)]).is_empty());
    }

    #[test]
    fn ids_deduplicated() {
        let s = "\"old lighthouse\" and \"the bay\"";
        let cites = extract_citations(s, &[(MemoryId(1), M1)]);
        assert_eq!(cited_ids(&cites), [MemoryId(1)]);
    }
}

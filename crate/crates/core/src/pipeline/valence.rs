//! Lexicon-based screen applied to every generated emotion target and suggestion.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::lexicon::{Blocklist, Lexicon, LexiconError, NEGATIVE, POSITIVE};

/// Negative-word count at which output is regenerated.
pub const DEFAULT_NEGATIVE_THRESHOLD: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Regenerate,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValenceReport {
    pub positive_count: usize,
    pub negative_count: usize,
    pub blocked_terms: Vec<String>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone)]
pub struct ValenceScreen {
    lexicon: Arc<Lexicon>,
    blocklist: Arc<Blocklist>,
    negative_threshold: usize,
}

impl ValenceScreen {
    pub fn new(lexicon: Arc<Lexicon>, blocklist: Arc<Blocklist>, negative_threshold: usize) -> Self {
        Self {
            lexicon,
            blocklist,
            negative_threshold,
        }
    }

    pub fn builtin() -> Self {
        Self::new(
            Arc::new(Lexicon::builtin()),
            Arc::new(Blocklist::builtin()),
            DEFAULT_NEGATIVE_THRESHOLD,
        )
    }

    pub fn load(lexicon: impl AsRef<Path>, blocklist: impl AsRef<Path>) -> Result<Self, LexiconError> {
        Ok(Self::new(
            Arc::new(Lexicon::load(lexicon)?),
            Arc::new(Blocklist::load(blocklist)?),
            DEFAULT_NEGATIVE_THRESHOLD,
        ))
    }

    pub fn lexicon(&self) -> &Arc<Lexicon> {
        &self.lexicon
    }

    pub fn screen(&self, text: &str) -> ValenceReport {
        let (_, counts) = self.lexicon.count(text);
        let positive_count = counts.get(POSITIVE).copied().unwrap_or(0);
        let negative_count = counts.get(NEGATIVE).copied().unwrap_or(0);
        let blocked_terms = self.blocklist.find(text);
        let verdict = if !blocked_terms.is_empty() {
            Verdict::Reject
        } else if negative_count >= self.negative_threshold {
            Verdict::Regenerate
        } else {
            Verdict::Pass
        };
        ValenceReport {
            positive_count,
            negative_count,
            blocked_terms,
            verdict,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mini() -> ValenceScreen {
        let lex = Lexicon::from_entries([
            ("celebrate", POSITIVE),
            ("joyful", POSITIVE),
            ("gathering", POSITIVE),
            ("calm", POSITIVE),
            ("grateful", POSITIVE),
            ("sad", NEGATIVE),
            ("lonely", NEGATIVE),
            ("angry", NEGATIVE),
            ("afraid", NEGATIVE),
            ("miserable", NEGATIVE),
        ]);
        ValenceScreen::new(Arc::new(lex), Arc::new(Blocklist::from_terms(["self-harm"])), 2)
    }

    #[test]
    fn positive_text_passes() {
        let r = mini().screen("celebrate a joyful gathering");
        assert!(r.positive_count >= 2);
        assert_eq!(r.negative_count, 0);
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn blocked_term_rejects_even_when_positive() {
        let r = mini().screen("a calm, joyful note on self-harm");
        assert_eq!(r.blocked_terms, ["self-harm"]);
        assert_eq!(r.verdict, Verdict::Reject);
    }

    #[test]
    fn negative_heavy_regenerates() {
        assert_eq!(mini().screen("sad and lonely").verdict, Verdict::Regenerate);
        assert_eq!(mini().screen("a little sad").verdict, Verdict::Pass);
    }

    #[test]
    fn empty_text_passes() {
        let r = mini().screen("");
        assert_eq!((r.positive_count, r.negative_count, r.verdict), (0, 0, Verdict::Pass));
    }
}

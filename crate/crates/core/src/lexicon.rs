//! Word-category lexicons and term blocklists.
//!
//! Lexicon files hold one `word<TAB>category` entry per line; a trailing `*`
//! makes the entry a prefix match (`happi*` matches "happiness"). Blocklist
//! files hold one term per line; multi-word terms match consecutive tokens.
//! Blank lines and lines starting with `#` are ignored in both.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use thiserror::Error;

use crate::text::lexical_tokens;

pub const POSITIVE: &str = "positive";
pub const NEGATIVE: &str = "negative";

const BUILTIN_LEXICON: &str = include_str!("../data/emotion_lexicon.tsv");
const BUILTIN_BLOCKLIST: &str = include_str!("../data/blocklist.txt");

#[derive(Debug, Error, PartialEq)]
pub enum LexiconError {
    #[error("lexicon file {0} not found")]
    LexiconMissing(String),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("reading {path}: {reason}")]
    Io { path: String, reason: String },
}

fn read_file(path: &Path) -> Result<String, LexiconError> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => LexiconError::LexiconMissing(path.display().to_string()),
        _ => LexiconError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        },
    })
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    exact: HashMap<String, BTreeSet<String>>,
    prefixes: Vec<(String, String)>,
    categories: BTreeSet<String>,
}

impl Lexicon {
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::default();
        for (line, raw) in content_lines(text) {
            let (word, category) = raw.split_once('\t').ok_or_else(|| LexiconError::Malformed {
                line,
                reason: "expected word<TAB>category".into(),
            })?;
            let word = word.trim().to_lowercase();
            let category = category.trim().to_lowercase();
            if word.is_empty() || category.is_empty() {
                return Err(LexiconError::Malformed {
                    line,
                    reason: "empty word or category".into(),
                });
            }
            lex.insert(&word, &category);
        }
        lex.prefixes.sort();
        lex.prefixes.dedup();
        Ok(lex)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        Self::parse(&read_file(path.as_ref())?)
    }

    /// The small open emotion lexicon shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_LEXICON).expect("builtin lexicon is well-formed")
    }

    pub fn from_entries<'a>(entries: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut lex = Lexicon::default();
        for (w, c) in entries {
            lex.insert(&w.to_lowercase(), &c.to_lowercase());
        }
        lex.prefixes.sort();
        lex.prefixes.dedup();
        lex
    }

    fn insert(&mut self, word: &str, category: &str) {
        self.categories.insert(category.to_string());
        match word.strip_suffix('*') {
            Some(prefix) => self.prefixes.push((prefix.to_string(), category.to_string())),
            None => {
                self.exact
                    .entry(word.to_string())
                    .or_default()
                    .insert(category.to_string());
            }
        }
    }

    pub fn categories(&self) -> &BTreeSet<String> {
        &self.categories
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    /// Categories a lowercase token belongs to; each category at most once.
    pub fn categories_of(&self, token: &str) -> BTreeSet<&str> {
        let mut out: BTreeSet<&str> = self
            .exact
            .get(token)
            .map(|c| c.iter().map(String::as_str).collect())
            .unwrap_or_default();
        for (prefix, cat) in &self.prefixes {
            if token.starts_with(prefix.as_str()) {
                out.insert(cat);
            }
        }
        out
    }

    /// Token count and per-category match counts for `text`.
    pub fn count(&self, text: &str) -> (usize, BTreeMap<String, usize>) {
        let tokens = lexical_tokens(text);
        let mut counts: BTreeMap<String, usize> = self.categories.iter().map(|c| (c.clone(), 0)).collect();
        for t in &tokens {
            for c in self.categories_of(t) {
                *counts.get_mut(c).expect("category registered") += 1;
            }
        }
        (tokens.len(), counts)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Blocklist {
    terms: Vec<(String, Vec<String>)>,
}

impl Blocklist {
    pub fn parse(text: &str) -> Self {
        let terms = content_lines(text)
            .map(|(_, l)| l.trim())
            .filter_map(|term| {
                let tokens = lexical_tokens(term);
                (!tokens.is_empty()).then(|| (term.to_lowercase(), tokens))
            })
            .collect();
        Self { terms }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        Ok(Self::parse(&read_file(path.as_ref())?))
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN_BLOCKLIST)
    }

    pub fn from_terms<'a>(terms: impl IntoIterator<Item = &'a str>) -> Self {
        Self::parse(&terms.into_iter().collect::<Vec<_>>().join("\n"))
    }

    /// Blocked terms occurring in `text`, in blocklist order.
    pub fn find(&self, text: &str) -> Vec<String> {
        let tokens = lexical_tokens(text);
        self.terms
            .iter()
            .filter(|(_, needle)| tokens.windows(needle.len()).any(|w| w == needle.as_slice()))
            .map(|(term, _)| term.clone())
            .collect()
    }
}

//! Text helpers shared by the store, the suggestion chain and the analysis code.
//!
//! Word counts follow one rule everywhere: remove `<b>`/`</b>` markup, then
//! split on whitespace. A hyphenated token is a single word.

const BOLD_OPEN: &str = "<b>";
const BOLD_CLOSE: &str = "</b>";

/// Removes bold markup, leaving the enclosed text in place.
pub fn strip_markup(text: &str) -> String {
    text.replace(BOLD_OPEN, "").replace(BOLD_CLOSE, "")
}

/// Number of words after markup removal.
pub fn word_count(text: &str) -> usize {
    strip_markup(text).split_whitespace().count()
}

/// Number of Unicode scalar values. This is the unit of the minimum-length rule.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Collapses every whitespace run (including newlines) to a single space and trims.
pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn ends_sentence(token: &str) -> bool {
    let bare = strip_markup(token);
    let bare = bare.trim_end_matches(['"', '\'', '\u{201d}', '\u{2019}', ')']);
    bare.ends_with(['.', '!', '?'])
}

/// Limits `text` to `limit` words (markup excluded from the count).
///
/// Over-length text is cut at the last sentence end that fits; when no sentence
/// end fits, the first `limit` words are kept. An unclosed `<b>` left by the cut
/// is closed. Text already within the limit is returned unchanged.
pub fn truncate_words(text: &str, limit: usize) -> String {
    if word_count(text) <= limit {
        return text.to_string();
    }
    // Tokens that are pure markup ("<b>") carry no word.
    let mut kept: Vec<&str> = Vec::new();
    let mut words = 0;
    let mut last_sentence_end = None;
    for token in text.split_whitespace() {
        let is_word = !strip_markup(token).is_empty();
        if is_word {
            if words == limit {
                break;
            }
            words += 1;
        }
        kept.push(token);
        if is_word && ends_sentence(token) {
            last_sentence_end = Some(kept.len());
        }
    }
    if let Some(end) = last_sentence_end {
        kept.truncate(end);
    }
    let mut out = kept.join(" ");
    let opens = out.matches(BOLD_OPEN).count();
    let closes = out.matches(BOLD_CLOSE).count();
    for _ in closes..opens {
        out.push_str(BOLD_CLOSE);
    }
    out
}

/// Lowercased alphanumeric runs; every other character is a separator.
pub fn lexical_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

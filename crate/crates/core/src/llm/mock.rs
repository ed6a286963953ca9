//! Deterministic offline provider.
//!
//! Every output is a pure function of the request (or input text) and the
//! mock's key, hashed with SHA-256, so fixtures are byte-stable across runs
//! and platforms. Output formats follow what the prompts ask for: three-word
//! titles, an emotion named and motivated in under 40 words, and a short
//! suggestion that quotes one of the supplied memories.

use std::time::Duration;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::template::{CURRENT_DATETIME, EMOTION, MEMORIES, NEW_MEMORY};
use super::{is_supported_audio, CompletionRequest, LlmProvider, ProviderError, TemplateName};

pub const MOCK_EMBEDDING_DIM: usize = 64;

pub const MOCK_TRANSCRIPT: &str = "This is a mock transcript of the recorded memory. \
I spent the afternoon at the park with my sister, we sat by the pond, listened to the ducks \
and shared a warm pot of tea while the sun slowly went down behind the trees.";

const STOPWORDS: &[&str] = &[
    "a", "about", "after", "again", "all", "also", "am", "an", "and", "any", "are", "around", "as", "at", "back", "be",
    "because", "been", "before", "being", "but", "by", "came", "can", "could", "day", "did", "do", "down", "during",
    "each", "even", "felt", "for", "from", "got", "had", "has", "have", "he", "her", "here", "him", "his", "how", "i",
    "if", "in", "into", "is", "it", "its", "just", "last", "like", "made", "me", "more", "most", "my", "myself", "not",
    "of", "off", "on", "once", "one", "only", "or", "other", "our", "out", "over", "really", "she", "so", "some",
    "still", "than", "that", "the", "their", "them", "then", "there", "these", "they", "this", "those", "through",
    "time", "to", "today", "too", "up", "us", "very", "was", "we", "went", "were", "what", "when", "where", "which",
    "while", "who", "with", "would", "you", "your",
];

const EMOTIONS: &[&str] = &[
    "Gratitude",
    "Joy",
    "Serenity",
    "Contentment",
    "Awe",
    "Pride",
    "Hope",
    "Amusement",
    "Inspiration",
    "Love",
    "Curiosity",
    "Excitement",
    "Calm",
    "Connection",
    "Wonder",
];

const REASONS: &[&str] = &[
    "noticing the good parts of this day can deepen that feeling and help you carry a steady warmth into tomorrow.",
    "letting this moment linger invites more of that feeling and reminds you how much small experiences can matter.",
    "savoring what went well today can strengthen that feeling and make it easier to find again next week.",
    "giving yourself time to enjoy this can grow that feeling and bring a lighter, brighter outlook to your days.",
];

const ACTIVITIES: &[&str] = &[
    "cook a new recipe with a friend",
    "take a slow walk through a nearby park",
    "write a short thank-you note to someone close",
    "plan a picnic at a favourite spot",
    "call a family member you have not spoken to lately",
    "visit a local museum or gallery",
    "watch the sunrise with a warm drink",
    "try a beginner class in something new",
    "organise a game night with friends",
    "bake something to share with neighbours",
    "explore a street you have never walked down",
    "create a small photo album of recent moments",
    "spend an hour reading outdoors",
    "volunteer for a few hours at a community event",
    "plant herbs on a windowsill",
    "listen to a favourite album from start to finish",
    "take a day trip to a nearby town",
    "host a small dinner for close friends",
    "sketch a scene from your neighbourhood",
    "go stargazing on a clear evening",
    "join a local walking or running group",
    "learn a song on an instrument",
    "share a meal at a new restaurant",
    "write down three highlights of your week",
    "visit a farmers market in the morning",
    "go for a swim at a nearby pool",
    "bring coffee to a colleague",
    "dance to music in your kitchen",
    "make a playlist of songs that lift you",
    "spend an afternoon at a botanical garden",
    "ride a bike along a scenic path",
    "send a postcard to an old friend",
    "try a short guided breathing session outdoors",
    "revisit a place from your childhood",
    "cook a dish from a family tradition",
    "attend a live music performance",
    "take photos of small everyday beauty",
    "arrange fresh flowers for your home",
    "do a puzzle with someone you love",
    "start a small journal of kind moments",
];

/// Words the mock avoids quoting, so quotations stay on positive moments.
const AVOID_IN_QUOTES: &[&str] = &[
    "sad",
    "angry",
    "afraid",
    "anxious",
    "lonely",
    "hurt",
    "cried",
    "crying",
    "stress",
    "stressed",
    "tired",
    "worried",
    "fear",
    "pain",
    "sick",
    "lost",
    "bad",
    "awful",
    "terrible",
    "hate",
    "upset",
    "difficult",
    "hard",
    "struggle",
    "struggled",
    "died",
    "death",
    "funeral",
];

const QUOTE_WORDS: usize = 6;

#[derive(Debug, Clone)]
pub struct MockProvider {
    key: [u8; 32],
}

impl Default for MockProvider {
    fn default() -> Self {
        Self::with_key("reverie-mock")
    }
}

fn digest(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().into()
}

fn pick(hash: &[u8; 32], offset: usize, len: usize) -> usize {
    let mut b = [0u8; 8];
    b.copy_from_slice(&hash[offset..offset + 8]);
    (u64::from_le_bytes(b) % len as u64) as usize
}

fn capitalize(word: &str) -> String {
    let mut c = word.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn bare(word: &str) -> String {
    word.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase()
}

struct QuotedMemory<'a> {
    date: &'a str,
    text: &'a str,
}

/// Parses the `- <date>: <text>` lines of the related-memories binding.
fn parse_memories(block: &str) -> Vec<QuotedMemory<'_>> {
    block
        .lines()
        .filter_map(|l| l.strip_prefix("- "))
        .filter_map(|l| l.split_once(": "))
        .map(|(date, text)| QuotedMemory { date, text })
        .collect()
}

fn quote_window(text: &str, hash: &[u8; 32]) -> Option<String> {
    let words: Vec<&str> = text.split_whitespace().collect();
    if words.len() < QUOTE_WORDS {
        return None;
    }
    let windows = words.len() - QUOTE_WORDS + 1;
    let start = pick(hash, 16, windows);
    (0..windows)
        .map(|i| (start + i) % windows)
        .map(|s| &words[s..s + QUOTE_WORDS])
        .find(|w| {
            w.iter()
                .all(|t| !t.contains(['"', '\u{201c}', '\u{201d}']) && !AVOID_IN_QUOTES.contains(&bare(t).as_str()))
        })
        .map(|w| {
            w.join(" ")
                .trim_end_matches(|c: char| c.is_ascii_punctuation())
                .to_string()
        })
}

impl MockProvider {
    pub fn with_key(key: &str) -> Self {
        Self {
            key: Sha256::digest(key.as_bytes()).into(),
        }
    }

    pub fn title(&self, entry: &str) -> String {
        let mut counts: Vec<(String, usize, usize)> = Vec::new();
        for (pos, w) in entry.split_whitespace().map(bare).enumerate() {
            if w.len() < 3 || STOPWORDS.contains(&w.as_str()) || w.chars().any(|c| c.is_numeric()) {
                continue;
            }
            match counts.iter_mut().find(|(word, _, _)| *word == w) {
                Some(entry) => entry.1 += 1,
                None => counts.push((w, 1, pos)),
            }
        }
        counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        let mut words: Vec<String> = counts.into_iter().take(3).map(|(w, _, _)| capitalize(&w)).collect();
        for pad in ["Quiet", "Day", "Notes"] {
            if words.len() == 3 {
                break;
            }
            words.push(pad.to_string());
        }
        words.join(" ")
    }

    pub fn emotion(&self, entry: &str, seed: u64) -> String {
        let h = digest(&[&self.key, b"emotion", entry.as_bytes(), &seed.to_le_bytes()]);
        let emotion = EMOTIONS[pick(&h, 0, EMOTIONS.len())];
        let reason = REASONS[pick(&h, 8, REASONS.len())];
        format!("{emotion}: {reason}")
    }

    pub fn suggestion(&self, request: &CompletionRequest) -> String {
        let entry = request.binding(NEW_MEMORY).unwrap_or_default();
        let emotion = request.binding(EMOTION).unwrap_or("happy");
        let today = request.binding(CURRENT_DATETIME).unwrap_or_default();
        let memories = parse_memories(request.binding(MEMORIES).unwrap_or_default());
        let h = digest(&[
            &self.key,
            b"suggestion",
            entry.as_bytes(),
            emotion.as_bytes(),
            today.as_bytes(),
            &request.seed.to_le_bytes(),
        ]);
        let avoid: Vec<String> = request.avoid.iter().map(|a| a.to_lowercase()).collect();
        let start = pick(&h, 0, ACTIVITIES.len());
        let activity = (0..ACTIVITIES.len())
            .map(|i| ACTIVITIES[(start + i) % ACTIVITIES.len()])
            .find(|a| !avoid.iter().any(|past| past.contains(a)))
            .unwrap_or(ACTIVITIES[start]);
        let quoted = memories
            .iter()
            .find_map(|m| quote_window(m.text, &h).map(|q| (q, m.date)));
        match quoted {
            None => format!(
                "<b>{}</b> this week. It will help you feel more {emotion}.",
                capitalize(activity)
            ),
            Some((quote, date)) => match pick(&h, 8, 3) {
                0 => format!(
                    "<b>{}</b> this week, echoing the moment you wrote \"{quote}\" on {date}. It will help you feel more {emotion}.",
                    capitalize(activity)
                ),
                1 => format!(
                    "Try to <b>{activity}</b> soon. Remember \"{quote}\" from {date}? Doing this will help you feel more {emotion}."
                ),
                _ => format!(
                    "Set aside an evening to <b>{activity}</b>, just as you once described \"{quote}\" ({date}). It will help you feel more {emotion}."
                ),
            },
        }
    }

    pub fn embedding(&self, text: &str) -> Vec<f64> {
        let mut rng = ChaCha8Rng::from_seed(digest(&[&self.key, b"embed", text.as_bytes()]));
        (0..MOCK_EMBEDDING_DIM)
            .map(|_| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0)
            .collect()
    }
}

impl LlmProvider for MockProvider {
    fn complete(&self, request: &CompletionRequest, _: Duration) -> Result<String, ProviderError> {
        Ok(match request.template {
            TemplateName::Title => self.title(request.user_input.as_deref().unwrap_or_default()),
            TemplateName::Emotion => self.emotion(request.binding(NEW_MEMORY).unwrap_or_default(), request.seed),
            TemplateName::Suggestion => self.suggestion(request),
        })
    }

    fn embed(&self, text: &str, _: Duration) -> Result<Vec<f64>, ProviderError> {
        Ok(self.embedding(text))
    }

    fn transcribe(&self, audio: &[u8], media_type: &str, _: Duration) -> Result<String, ProviderError> {
        if audio.is_empty() || !is_supported_audio(media_type) {
            return Err(ProviderError::UnsupportedMedia(media_type.to_string()));
        }
        Ok(MOCK_TRANSCRIPT.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::word_count;

    const BEACH: &str = "This morning I walked along the beach near our cottage with my brother. \
        The sand was cold, gulls circled above the pier and we found a smooth green stone \
        that we decided to keep on the kitchen windowsill as a reminder of the beach.";

    #[test]
    fn title_is_three_words_and_stable() {
        let m = MockProvider::default();
        let t = m.title(BEACH);
        assert_eq!(t.split_whitespace().count(), 3);
        assert_eq!(t, m.title(BEACH));
        assert!(t.starts_with("Beach"));
        assert_eq!(m.title("ok"), "Quiet Day Notes");
    }

    #[test]
    fn emotion_within_limit() {
        let m = MockProvider::default();
        for seed in 0..20 {
            let e = m.emotion(BEACH, seed);
            assert!(word_count(&e) <= 40, "{e}");
            assert!(e.contains(':'));
        }
    }

    #[test]
    fn suggestion_quotes_supplied_memory() {
        let m = MockProvider::default();
        let req = CompletionRequest::new(TemplateName::Suggestion)
            .bind(
                MEMORIES,
                format!("\n- 3rd Mar: {}", crate::text::collapse_whitespace(BEACH)),
            )
            .bind(NEW_MEMORY, "today")
            .bind(CURRENT_DATETIME, "9th Mar")
            .bind(EMOTION, "joy");
        let s = m.suggestion(&req);
        assert!(word_count(&s) <= 60);
        let quote = s.split('"').nth(1).unwrap();
        assert!(crate::text::collapse_whitespace(BEACH).contains(quote), "{quote}");
        assert_eq!(s, m.suggestion(&req));
    }

    #[test]
    fn suggestion_skips_avoided_activities() {
        let m = MockProvider::default();
        let mut req = CompletionRequest::new(TemplateName::Suggestion)
            .bind(MEMORIES, "None")
            .bind(NEW_MEMORY, "today")
            .bind(CURRENT_DATETIME, "9th Mar")
            .bind(EMOTION, "joy");
        let first = m.suggestion(&req);
        req.avoid.push(first.clone());
        assert_ne!(m.suggestion(&req), first);
    }

    #[test]
    fn embedding_is_exact_text_hash() {
        let m = MockProvider::default();
        let a = m.embedding("hello");
        assert_eq!(a.len(), MOCK_EMBEDDING_DIM);
        assert_eq!(a, m.embedding("hello"));
        assert_ne!(a, m.embedding("hello "));
    }
}

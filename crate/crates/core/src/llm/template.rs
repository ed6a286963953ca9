//! The three prompt templates and their rendering.
//!
//! Template bodies are kept byte-for-byte; placeholders use the spelling
//! `{new memory}`, `{memories}`, `{emotion}` and `{current datetime}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::LlmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateName {
    Title,
    Emotion,
    Suggestion,
}

pub const NEW_MEMORY: &str = "new memory";
pub const MEMORIES: &str = "memories";
pub const EMOTION: &str = "emotion";
pub const CURRENT_DATETIME: &str = "current datetime";

pub const TITLE_PROMPT: &str = "You are a title generator for journal entries. Create a 3 word title that accurately captures the entry and would be unique. Don't use quotes.";

pub const EMOTION_PROMPT: &str = "You are a helpful assistant that helps me feel a positive emotion based on an experience of mine today.
Today's Experience: {new memory}
Given today's experience above, what is one suggestion for a positive emotion that could be elicited or increased in intensity?
Give only the emotion, describe it and why it would be good for me. Be creative.
Suggestion (less than 40 words):";

pub const SUGGESTION_PROMPT: &str = "You are a helpful assistant that helps me reflect on my memories to influence my future experience more positively.
Related Past Memories: {memories}
Today's Experience: {new memory}
Today's date: {current datetime}
What is a easy and doable action related to today's experience that will definitely make me feel more {emotion}?
Imagine the action while integrating this with elements of the past related memories.
Be creative, concise and personal. End with how it will help feel {emotion}. Back up the answers with references to memories if needed, by citing and quoting them.
Dates should of the format of 23rd Nov.
Give only the suggestion. You can make important parts bold text using <b>bold</b>.
Suggestion (less than 60 words):";

/// Header of the extra message listing earlier suggestions to avoid.
pub const AVOID_HEADER: &str = "These suggestions were already given to me before. Do not suggest any of them again:";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: TemplateName,
    pub body: &'static str,
    pub placeholders: &'static [&'static str],
}

impl PromptTemplate {
    pub fn get(name: TemplateName) -> Self {
        match name {
            TemplateName::Title => Self {
                name,
                body: TITLE_PROMPT,
                placeholders: &[],
            },
            TemplateName::Emotion => Self {
                name,
                body: EMOTION_PROMPT,
                placeholders: &[NEW_MEMORY],
            },
            TemplateName::Suggestion => Self {
                name,
                body: SUGGESTION_PROMPT,
                placeholders: &[MEMORIES, NEW_MEMORY, CURRENT_DATETIME, EMOTION],
            },
        }
    }

    /// Single-pass substitution: text inside bound values is never re-expanded.
    pub fn render(&self, bindings: &BTreeMap<String, String>) -> Result<String, LlmError> {
        for p in self.placeholders {
            if !bindings.contains_key(*p) {
                return Err(LlmError::UnboundPlaceholder(p.to_string()));
            }
        }
        let mut out = String::with_capacity(self.body.len() + 256);
        let mut rest = self.body;
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let after = &rest[open + 1..];
            match after.find('}').map(|close| (&after[..close], close)) {
                Some((name, close)) if self.placeholders.contains(&name) => {
                    out.push_str(&bindings[name]);
                    rest = &after[close + 1..];
                }
                _ => {
                    out.push('{');
                    rest = after;
                }
            }
        }
        out.push_str(rest);
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatRole {
    System,
    User,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: ChatRole,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub template: TemplateName,
    pub bindings: BTreeMap<String, String>,
    /// Text sent after the title instruction (the journal entry).
    pub user_input: Option<String>,
    /// Earlier suggestions the model must not repeat.
    pub avoid: Vec<String>,
    pub max_tokens: u32,
    pub temperature: f64,
    /// Varies between regeneration attempts.
    pub seed: u64,
}

pub const DEFAULT_TEMPERATURE: f64 = 0.7;

impl CompletionRequest {
    pub fn new(template: TemplateName) -> Self {
        let max_tokens = match template {
            TemplateName::Title => 16,
            TemplateName::Emotion => 120,
            TemplateName::Suggestion => 200,
        };
        Self {
            template,
            bindings: BTreeMap::new(),
            user_input: None,
            avoid: Vec::new(),
            max_tokens,
            temperature: DEFAULT_TEMPERATURE,
            seed: 0,
        }
    }

    pub fn title(memory_text: &str) -> Self {
        let mut r = Self::new(TemplateName::Title);
        r.user_input = Some(memory_text.to_string());
        r
    }

    pub fn bind(mut self, name: &str, value: impl Into<String>) -> Self {
        self.bindings.insert(name.to_string(), value.into());
        self
    }

    pub fn binding(&self, name: &str) -> Option<&str> {
        self.bindings.get(name).map(String::as_str)
    }

    /// Chat messages as sent to a provider.
    pub fn messages(&self) -> Result<Vec<ChatMessage>, LlmError> {
        let template = PromptTemplate::get(self.template);
        let body = template.render(&self.bindings)?;
        let mut messages = Vec::new();
        match self.template {
            TemplateName::Title => {
                let input = self
                    .user_input
                    .clone()
                    .ok_or_else(|| LlmError::UnboundPlaceholder("user_input".into()))?;
                messages.push(ChatMessage {
                    role: ChatRole::System,
                    content: body,
                });
                messages.push(ChatMessage {
                    role: ChatRole::User,
                    content: input,
                });
            }
            TemplateName::Emotion | TemplateName::Suggestion => {
                if !self.avoid.is_empty() {
                    let mut list = String::from(AVOID_HEADER);
                    for (i, s) in self.avoid.iter().enumerate() {
                        list.push_str(&format!("\n{}. {}", i + 1, s));
                    }
                    messages.push(ChatMessage {
                        role: ChatRole::System,
                        content: list,
                    });
                }
                messages.push(ChatMessage {
                    role: ChatRole::User,
                    content: body,
                });
            }
        }
        Ok(messages)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emotion_prompt_renders_exactly() {
        let req = CompletionRequest::new(TemplateName::Emotion).bind(NEW_MEMORY, "We went camping.");
        let msgs = req.messages().unwrap();
        assert_eq!(msgs.len(), 1);
        assert_eq!(
            msgs[0].content,
            "You are a helpful assistant that helps me feel a positive emotion based on an experience of mine today.\n\
             Today's Experience: We went camping.\n\
             Given today's experience above, what is one suggestion for a positive emotion that could be elicited or increased in intensity?\n\
             Give only the emotion, describe it and why it would be good for me. Be creative.\n\
             Suggestion (less than 40 words):"
        );
    }

    #[test]
    fn suggestion_prompt_substitutes_every_placeholder() {
        let req = CompletionRequest::new(TemplateName::Suggestion)
            .bind(MEMORIES, "\n- 1st Mar: a picnic")
            .bind(NEW_MEMORY, "today I baked bread")
            .bind(CURRENT_DATETIME, "23rd Nov")
            .bind(EMOTION, "gratitude");
        let text = &req.messages().unwrap()[0].content;
        assert!(text.contains("Related Past Memories: \n- 1st Mar: a picnic\nToday's Experience: today I baked bread\nToday's date: 23rd Nov\n"));
        assert!(text.contains("make me feel more gratitude?\n"));
        assert!(text.contains("End with how it will help feel gratitude. Back up"));
        assert!(text.contains("using <b>bold</b>.\nSuggestion (less than 60 words):"));
        assert!(!text.contains("{"));
    }

    #[test]
    fn values_are_not_reexpanded() {
        let req = CompletionRequest::new(TemplateName::Emotion).bind(NEW_MEMORY, "{emotion} {x");
        assert!(req.messages().unwrap()[0]
            .content
            .contains("Today's Experience: {emotion} {x\n"));
    }

    #[test]
    fn missing_binding_is_an_error() {
        let req = CompletionRequest::new(TemplateName::Suggestion).bind(NEW_MEMORY, "x");
        assert!(matches!(req.messages(), Err(LlmError::UnboundPlaceholder(p)) if p == "memories"));
    }

    #[test]
    fn title_is_system_then_entry() {
        let msgs = CompletionRequest::title("entry").messages().unwrap();
        assert_eq!(msgs[0].content, TITLE_PROMPT);
        assert_eq!(msgs[1].content, "entry");
    }

    #[test]
    fn avoid_list_precedes_prompt() {
        let mut req = CompletionRequest::new(TemplateName::Emotion).bind(NEW_MEMORY, "x");
        req.avoid = vec!["walk".into(), "swim".into()];
        let msgs = req.messages().unwrap();
        assert_eq!(msgs[0].role, ChatRole::System);
        assert!(msgs[0].content.ends_with("\n1. walk\n2. swim"));
        assert_eq!(msgs[1].role, ChatRole::User);
    }
}

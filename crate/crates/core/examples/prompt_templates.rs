//! The three prompts as sent to a provider for one memory.
//!
//!     cargo run --example prompt_templates

use reverie::llm::template::{CURRENT_DATETIME, EMOTION, MEMORIES, NEW_MEMORY};
use reverie::llm::{CompletionRequest, TemplateName};

const ENTRY: &str = "Took my niece to the aquarium and she named every jellyfish after a cartoon character.";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let requests = [
        CompletionRequest::title(ENTRY),
        CompletionRequest::new(TemplateName::Emotion).bind(NEW_MEMORY, ENTRY),
        CompletionRequest::new(TemplateName::Suggestion)
            .bind(NEW_MEMORY, ENTRY)
            .bind(MEMORIES, "1. (12th Mar) We fed the ducks at the pond behind school.")
            .bind(EMOTION, "Wonder")
            .bind(CURRENT_DATETIME, "23rd Nov"),
    ];
    for mut r in requests {
        if r.template == TemplateName::Suggestion {
            r.avoid
                .push("Visit the pond again and bring bread for the ducks.".into());
        }
        println!(
            "=== {:?} (max_tokens {}, temperature {})",
            r.template, r.max_tokens, r.temperature
        );
        for m in r.messages()? {
            println!("[{:?}]\n{}\n", m.role, m.content);
        }
    }
    Ok(())
}

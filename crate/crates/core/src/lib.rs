pub mod analysis;
pub mod api;
pub mod clock;
pub mod ids;
pub mod journal;
pub mod lexicon;
pub mod llm;
pub mod pipeline;
pub mod retrieval;
pub mod simulation;
pub mod store;
pub mod study;
pub mod text;

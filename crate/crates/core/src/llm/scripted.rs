//! Fault-injection provider: queued outputs per template, falling back to
//! another provider once a queue is empty.

use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use super::{CompletionRequest, LlmProvider, ProviderError, TemplateName};

pub struct ScriptedProvider {
    fallback: Arc<dyn LlmProvider>,
    queues: Mutex<HashMap<TemplateName, VecDeque<Result<String, ProviderError>>>>,
    embed_failures: AtomicUsize,
    seen: Mutex<Vec<CompletionRequest>>,
}

impl ScriptedProvider {
    pub fn new(fallback: Arc<dyn LlmProvider>) -> Self {
        Self {
            fallback,
            queues: Mutex::new(HashMap::new()),
            embed_failures: AtomicUsize::new(0),
            seen: Mutex::new(Vec::new()),
        }
    }

    pub fn push(&self, template: TemplateName, output: Result<String, ProviderError>) {
        self.queues
            .lock()
            .unwrap()
            .entry(template)
            .or_default()
            .push_back(output);
    }

    /// Queues the same output `times` times.
    pub fn repeat(&self, template: TemplateName, output: &str, times: usize) {
        for _ in 0..times {
            self.push(template, Ok(output.to_string()));
        }
    }

    /// The next `n` embedding calls fail transiently.
    pub fn fail_embeddings(&self, n: usize) {
        self.embed_failures.store(n, Ordering::SeqCst);
    }

    pub fn completion_calls(&self) -> usize {
        self.seen.lock().unwrap().len()
    }

    pub fn requests(&self) -> Vec<CompletionRequest> {
        self.seen.lock().unwrap().clone()
    }

    pub fn requests_for(&self, template: TemplateName) -> Vec<CompletionRequest> {
        self.requests().into_iter().filter(|r| r.template == template).collect()
    }
}

impl LlmProvider for ScriptedProvider {
    fn complete(&self, request: &CompletionRequest, budget: Duration) -> Result<String, ProviderError> {
        self.seen.lock().unwrap().push(request.clone());
        let queued = self
            .queues
            .lock()
            .unwrap()
            .get_mut(&request.template)
            .and_then(VecDeque::pop_front);
        match queued {
            Some(out) => out,
            None => self.fallback.complete(request, budget),
        }
    }

    fn embed(&self, text: &str, budget: Duration) -> Result<Vec<f64>, ProviderError> {
        let failed = self
            .embed_failures
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
            .is_ok();
        if failed {
            return Err(ProviderError::Transient("injected embedding failure".into()));
        }
        self.fallback.embed(text, budget)
    }

    fn transcribe(&self, audio: &[u8], media_type: &str, budget: Duration) -> Result<String, ProviderError> {
        self.fallback.transcribe(audio, media_type, budget)
    }
}

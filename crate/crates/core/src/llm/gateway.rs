use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use super::{is_supported_audio, CompletionRequest, EmbeddingVector, LlmError, LlmProvider, ProviderError};

#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    /// Retries after the first call.
    pub max_retries: u32,
    /// Wait before the first retry; doubled for each further retry.
    pub initial_backoff: Duration,
    /// Overall budget for one gateway call, retries included.
    pub deadline: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            initial_backoff: Duration::from_secs(1),
            deadline: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    /// No waiting between attempts; for tests and simulations.
    pub fn immediate() -> Self {
        Self {
            initial_backoff: Duration::ZERO,
            ..Self::default()
        }
    }

    pub fn backoff(&self, retry: u32) -> Duration {
        self.initial_backoff * 2u32.saturating_pow(retry)
    }
}

/// Counting semaphore bounding concurrent provider calls.
struct InFlight {
    used: Mutex<usize>,
    freed: Condvar,
    cap: usize,
}

struct Permit<'a>(&'a InFlight);

impl InFlight {
    fn acquire(&self) -> Permit<'_> {
        let mut used = self.used.lock().expect("in-flight lock poisoned");
        while *used >= self.cap {
            used = self.freed.wait(used).expect("in-flight lock poisoned");
        }
        *used += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.used.lock().expect("in-flight lock poisoned") -= 1;
        self.0.freed.notify_one();
    }
}

pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

/// Retrying, rate-capped front for an [`LlmProvider`].
pub struct Gateway {
    provider: Arc<dyn LlmProvider>,
    policy: RetryPolicy,
    in_flight: InFlight,
}

enum Failure {
    Timeout,
    Refusal,
}

impl Gateway {
    pub fn new(provider: Arc<dyn LlmProvider>, policy: RetryPolicy, max_in_flight: usize) -> Self {
        Self {
            provider,
            policy,
            in_flight: InFlight {
                used: Mutex::new(0),
                freed: Condvar::new(),
                cap: max_in_flight.max(1),
            },
        }
    }

    pub fn policy(&self) -> &RetryPolicy {
        &self.policy
    }

    pub fn max_in_flight(&self) -> usize {
        self.in_flight.cap
    }

    fn with_retries<T>(
        &self,
        mut call: impl FnMut(Duration) -> Result<T, ProviderError>,
        usable: impl Fn(&T) -> bool,
    ) -> Result<T, LlmError> {
        let started = Instant::now();
        let mut last = Failure::Timeout;
        for attempt in 0..=self.policy.max_retries {
            if attempt > 0 {
                let wait = self.policy.backoff(attempt - 1);
                let left = self.policy.deadline.saturating_sub(started.elapsed());
                if wait >= left {
                    break;
                }
                std::thread::sleep(wait);
            }
            let budget = self.policy.deadline.saturating_sub(started.elapsed());
            if budget.is_zero() {
                break;
            }
            let result = {
                let _permit = self.in_flight.acquire();
                call(budget)
            };
            match result {
                Ok(value) if usable(&value) => return Ok(value),
                Ok(_) | Err(ProviderError::Refused(_)) => last = Failure::Refusal,
                Err(ProviderError::Transient(e)) => {
                    log::warn!("transient provider failure (attempt {}): {e}", attempt + 1);
                    last = Failure::Timeout;
                }
                Err(ProviderError::Timeout) => last = Failure::Timeout,
                Err(ProviderError::UnsupportedMedia(m)) => return Err(LlmError::UnsupportedMedia(m)),
                Err(ProviderError::Fatal(e)) => return Err(LlmError::Provider(e)),
            }
        }
        Err(match last {
            Failure::Timeout => LlmError::ProviderTimeout,
            Failure::Refusal => LlmError::ProviderRefusal,
        })
    }

    /// Non-empty completion text, trimmed.
    pub fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        request.messages()?;
        self.with_retries(
            |budget| self.provider.complete(request, budget),
            |text| !text.trim().is_empty(),
        )
        .map(|t| t.trim().to_string())
    }

    /// Unit-norm embedding of `text`.
    pub fn embed(&self, text: &str) -> Result<EmbeddingVector, LlmError> {
        if text.trim().is_empty() {
            return Err(LlmError::EmptyInput);
        }
        let raw = self.with_retries(|budget| self.provider.embed(text, budget), |v| !v.is_empty())?;
        EmbeddingVector::raw(raw).normalize()
    }

    pub fn transcribe(&self, audio: &[u8], media_type: &str) -> Result<String, LlmError> {
        if audio.is_empty() || !is_supported_audio(media_type) {
            return Err(LlmError::UnsupportedMedia(media_type.to_string()));
        }
        self.with_retries(
            |budget| self.provider.transcribe(audio, media_type, budget),
            |t| !t.trim().is_empty(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{MockProvider, ScriptedProvider, TemplateName};
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn scripted() -> Arc<ScriptedProvider> {
        Arc::new(ScriptedProvider::new(Arc::new(MockProvider::default())))
    }

    #[test]
    fn retries_transient_then_succeeds() {
        let p = scripted();
        p.push(TemplateName::Title, Err(ProviderError::Transient("503".into())));
        p.push(TemplateName::Title, Err(ProviderError::Timeout));
        p.push(TemplateName::Title, Ok("Harbour Dusk Walk".into()));
        let g = Gateway::new(p.clone(), RetryPolicy::immediate(), 4);
        assert_eq!(g.complete(&CompletionRequest::title("x")).unwrap(), "Harbour Dusk Walk");
        assert_eq!(p.completion_calls(), 3);
    }

    #[test]
    fn exhausted_retries_surface_timeout() {
        let p = scripted();
        for _ in 0..4 {
            p.push(TemplateName::Title, Err(ProviderError::Transient("down".into())));
        }
        let g = Gateway::new(p.clone(), RetryPolicy::immediate(), 4);
        assert_eq!(
            g.complete(&CompletionRequest::title("x")),
            Err(LlmError::ProviderTimeout)
        );
        assert_eq!(p.completion_calls(), 4);
    }

    #[test]
    fn empty_outputs_surface_refusal() {
        let p = scripted();
        for _ in 0..4 {
            p.push(TemplateName::Title, Ok("   ".into()));
        }
        let g = Gateway::new(p, RetryPolicy::immediate(), 4);
        assert_eq!(
            g.complete(&CompletionRequest::title("x")),
            Err(LlmError::ProviderRefusal)
        );
    }

    #[test]
    fn fatal_errors_are_not_retried() {
        let p = scripted();
        p.push(TemplateName::Title, Err(ProviderError::Fatal("401".into())));
        let g = Gateway::new(p.clone(), RetryPolicy::immediate(), 4);
        assert!(matches!(
            g.complete(&CompletionRequest::title("x")),
            Err(LlmError::Provider(_))
        ));
        assert_eq!(p.completion_calls(), 1);
    }

    #[test]
    fn backoff_doubles() {
        let p = RetryPolicy::default();
        assert_eq!((0..3).map(|r| p.backoff(r).as_secs()).collect::<Vec<_>>(), [1, 2, 4]);
    }

    #[test]
    fn deadline_stops_retrying() {
        let p = scripted();
        for _ in 0..4 {
            p.push(TemplateName::Title, Err(ProviderError::Transient("x".into())));
        }
        let policy = RetryPolicy {
            max_retries: 3,
            initial_backoff: Duration::from_millis(200),
            deadline: Duration::from_millis(300),
        };
        let g = Gateway::new(p.clone(), policy, 1);
        let t = Instant::now();
        assert_eq!(
            g.complete(&CompletionRequest::title("x")),
            Err(LlmError::ProviderTimeout)
        );
        assert!(t.elapsed() < Duration::from_millis(300));
        assert_eq!(p.completion_calls(), 2);
    }

    struct Slow {
        current: AtomicUsize,
        peak: AtomicUsize,
    }

    impl LlmProvider for Slow {
        fn complete(&self, _: &CompletionRequest, _: Duration) -> Result<String, ProviderError> {
            let now = self.current.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(now, Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(20));
            self.current.fetch_sub(1, Ordering::SeqCst);
            Ok("a b c".into())
        }
        fn embed(&self, _: &str, _: Duration) -> Result<Vec<f64>, ProviderError> {
            unimplemented!()
        }
        fn transcribe(&self, _: &[u8], _: &str, _: Duration) -> Result<String, ProviderError> {
            unimplemented!()
        }
    }

    #[test]
    fn in_flight_cap_is_respected() {
        let slow = Arc::new(Slow {
            current: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        });
        let g = Arc::new(Gateway::new(slow.clone(), RetryPolicy::immediate(), 2));
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let g = g.clone();
                std::thread::spawn(move || g.complete(&CompletionRequest::title("x")).unwrap())
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert!(slow.peak.load(Ordering::SeqCst) <= 2);
    }

    #[test]
    fn transcription_rejects_empty_payload() {
        let g = Gateway::new(Arc::new(MockProvider::default()), RetryPolicy::immediate(), 4);
        assert!(matches!(
            g.transcribe(b"", "audio/webm"),
            Err(LlmError::UnsupportedMedia(_))
        ));
        assert!(matches!(
            g.transcribe(b"abc", "image/png"),
            Err(LlmError::UnsupportedMedia(_))
        ));
        assert!(!g.transcribe(b"abc", "audio/webm").unwrap().is_empty());
    }
}

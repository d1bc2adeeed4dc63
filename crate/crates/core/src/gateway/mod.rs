//! Clients for the external model services: completion, sentence similarity,
//! NLI, and extractive QA (plus question generation and QA-to-declarative
//! conversion used by fact generation).
//!
//! Two implementations sit behind [`ModelGateway`]:
//!
//! - [`HttpGateway`] speaks the JSON-over-HTTP wire protocol
//!   (`POST /v1/complete`, `/v1/similarity`, `/v1/nli`, `/v1/answer`,
//!   `/v1/qgen`, `/v1/qa2d`).
//! - [`MockGateway`] answers from a canned fixture table and falls back to
//!   lexical scoring, so it never touches the network.
//!
//! Every score handed back to callers lies in `[0, 1]`. A backend that
//! returns anything else is a [`Error::Backend`], never silently clamped.

mod http;
pub mod lexical;
mod mock;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use http::{HttpGateway, HttpTransport};
pub use mock::{MockGateway, MockTable};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub n: usize,
    pub temperature: f64,
    pub max_tokens: usize,
}

impl CompletionRequest {
    pub const DEFAULT_MAX_TOKENS: usize = 256;

    pub fn new(prompt: impl Into<String>, n: usize, temperature: f64, max_tokens: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid_config("completion request needs n >= 1"));
        }
        if max_tokens == 0 {
            return Err(Error::invalid_config("completion request needs max_tokens >= 1"));
        }
        if !(temperature.is_finite() && temperature >= 0.0) {
            return Err(Error::invalid_config(format!("invalid temperature {temperature}")));
        }
        Ok(CompletionRequest {
            prompt: prompt.into(),
            n,
            temperature,
            max_tokens,
        })
    }

    pub fn greedy(prompt: impl Into<String>) -> Self {
        CompletionRequest {
            prompt: prompt.into(),
            n: 1,
            temperature: 0.0,
            max_tokens: Self::DEFAULT_MAX_TOKENS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NliScore {
    pub entailment: f64,
    pub contradiction: f64,
    pub neutral: f64,
}

impl NliScore {
    pub fn new(entailment: f64, contradiction: f64, neutral: f64) -> Result<Self> {
        Ok(NliScore {
            entailment: check_unit(entailment, "entailment")?,
            contradiction: check_unit(contradiction, "contradiction")?,
            neutral: check_unit(neutral, "neutral")?,
        })
    }

    pub fn zero() -> Self {
        NliScore::default()
    }
}

/// Reject non-finite or out-of-range scores coming back from a backend.
pub(crate) fn check_unit(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() && (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::backend(format!("{what} score {v} outside [0, 1]")))
    }
}

/// Uniform access to the model services.
///
/// Batch methods are the primitive; the single-item helpers wrap a batch of
/// one. Implementations must be safe to call from several threads.
pub trait ModelGateway: Send + Sync {
    /// Exactly `req.n` completion texts.
    fn complete(&self, req: &CompletionRequest) -> Result<Vec<String>>;

    fn similarity_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<f64>>;

    /// `(premise, hypothesis)` pairs. An empty premise scores all zeros.
    fn nli_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<NliScore>>;

    /// `(question, context)` items. An empty answer means the backend abstained.
    fn answer_batch(&self, items: &[(&str, &str)]) -> Result<Vec<String>>;

    /// A question about `fact` whose answer is the span `answer`; empty when
    /// no question could be produced.
    fn generate_question(&self, fact: &str, answer: &str) -> Result<String>;

    /// Rewrite a question/answer pair as a declarative sentence.
    fn qa_to_declarative(&self, question: &str, answer: &str) -> Result<String>;

    fn similarity(&self, a: &str, b: &str) -> Result<f64> {
        single(self.similarity_batch(&[(a, b)])?)
    }

    fn nli(&self, premise: &str, hypothesis: &str) -> Result<NliScore> {
        single(self.nli_batch(&[(premise, hypothesis)])?)
    }

    fn answer(&self, question: &str, context: &str) -> Result<String> {
        single(self.answer_batch(&[(question, context)])?)
    }
}

fn single<T>(mut v: Vec<T>) -> Result<T> {
    if v.len() != 1 {
        return Err(Error::backend(format!("expected 1 result, got {}", v.len())));
    }
    Ok(v.pop().expect("length checked"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub endpoint: String,
    pub timeout_ms: u64,
    pub retries: u32,
    pub mock_mode: bool,
    pub mock_table: Option<PathBuf>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            endpoint: "http://127.0.0.1:8080".into(),
            timeout_ms: 60_000,
            retries: 3,
            mock_mode: false,
            mock_table: None,
        }
    }
}

impl BackendConfig {
    pub fn mock(table: impl Into<PathBuf>) -> Self {
        BackendConfig {
            mock_mode: true,
            mock_table: Some(table.into()),
            ..Default::default()
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mock_mode {
            if self.mock_table.is_none() {
                return Err(Error::invalid_config("mock_mode requires mock_table"));
            }
        } else {
            reqwest::Url::parse(&self.endpoint)
                .map_err(|e| Error::invalid_config(format!("endpoint `{}`: {e}", self.endpoint)))?;
        }
        if self.timeout_ms == 0 {
            return Err(Error::invalid_config("timeout_ms must be positive"));
        }
        Ok(())
    }

    /// Build the configured gateway. Mock mode never constructs an HTTP client.
    pub fn connect(&self) -> Result<Arc<dyn ModelGateway>> {
        self.validate()?;
        if self.mock_mode {
            let path = self.mock_table.as_ref().expect("validated");
            Ok(Arc::new(MockGateway::from_file(path)?))
        } else {
            Ok(Arc::new(HttpGateway::new(self)?))
        }
    }
}

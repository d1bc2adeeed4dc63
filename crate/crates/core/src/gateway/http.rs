use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;
use std::time::Duration;

use log::{debug, warn};
use reqwest::blocking::Client;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{check_unit, BackendConfig, CompletionRequest, ModelGateway, NliScore};
use crate::error::{Error, Result};

const REQUEST_ID_HEADER: &str = "x-request-id";

/// JSON-over-HTTP POST with retries on transport failures.
///
/// Non-2xx responses are backend errors and are not retried.
#[derive(Debug)]
pub struct HttpTransport {
    client: Client,
    base: reqwest::Url,
    retries: u32,
    next_id: AtomicU64,
}

impl HttpTransport {
    pub fn new(cfg: &BackendConfig) -> Result<Self> {
        let base = reqwest::Url::parse(&cfg.endpoint)
            .map_err(|e| Error::invalid_config(format!("endpoint `{}`: {e}", cfg.endpoint)))?;
        let client = Client::builder()
            .timeout(cfg.timeout())
            .build()
            .map_err(|e| Error::Transport(e.to_string()))?;
        Ok(HttpTransport {
            client,
            base,
            retries: cfg.retries,
            next_id: AtomicU64::new(0),
        })
    }

    pub fn post<Req: Serialize, Resp: DeserializeOwned>(&self, path: &str, body: &Req) -> Result<Resp> {
        let url = self
            .base
            .join(path)
            .map_err(|e| Error::invalid_config(format!("bad path {path}: {e}")))?;
        let request_id = format!("rr-{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let mut attempt = 0;
        loop {
            let sent = self
                .client
                .post(url.clone())
                .header(REQUEST_ID_HEADER, &request_id)
                .json(body)
                .send();
            match sent {
                Ok(resp) => return Self::decode(resp, &request_id, path),
                Err(e) if attempt < self.retries => {
                    attempt += 1;
                    warn!(
                        "{path} [{request_id}] transport error, retry {attempt}/{}: {e}",
                        self.retries
                    );
                    thread::sleep(Duration::from_millis(25 << attempt.min(6)));
                }
                Err(e) => {
                    return Err(Error::Transport(format!(
                        "{path} failed after {} attempt(s): {e}",
                        attempt + 1
                    )))
                }
            }
        }
    }

    fn decode<Resp: DeserializeOwned>(resp: reqwest::blocking::Response, request_id: &str, path: &str) -> Result<Resp> {
        let status = resp.status();
        if let Some(echo) = resp.headers().get(REQUEST_ID_HEADER) {
            if echo.as_bytes() != request_id.as_bytes() {
                return Err(Error::backend(format!(
                    "{path}: response correlation id {:?} does not match {request_id}",
                    echo
                )));
            }
        }
        let body = resp.text().map_err(|e| Error::Transport(e.to_string()))?;
        if !status.is_success() {
            let snippet: String = body.chars().take(200).collect();
            return Err(Error::backend(format!("{path}: HTTP {status}: {snippet}")));
        }
        debug!("{path} [{request_id}] ok");
        serde_json::from_str(&body).map_err(|e| Error::backend(format!("{path}: malformed response: {e}")))
    }
}

#[derive(Serialize)]
struct PairsBody<'a, T> {
    pairs: &'a [T],
}

#[derive(Serialize)]
struct SimilarityPair<'a> {
    a: &'a str,
    b: &'a str,
}

#[derive(Serialize)]
struct NliPair<'a> {
    premise: &'a str,
    hypothesis: &'a str,
}

#[derive(Serialize)]
struct QaItem<'a> {
    question: &'a str,
    context: &'a str,
}

#[derive(Serialize)]
struct ItemsBody<'a> {
    items: &'a [QaItem<'a>],
}

#[derive(Deserialize)]
struct Completions {
    completions: Vec<String>,
}

#[derive(Deserialize)]
struct Scores<T> {
    scores: Vec<T>,
}

#[derive(Deserialize)]
struct Answers {
    answers: Vec<String>,
}

#[derive(Deserialize)]
struct WireNli {
    entailment: f64,
    contradiction: f64,
    neutral: f64,
}

/// Gateway that talks to a model server over HTTP.
#[derive(Debug)]
pub struct HttpGateway {
    transport: HttpTransport,
}

fn expect_len<T>(v: Vec<T>, n: usize, what: &str) -> Result<Vec<T>> {
    if v.len() != n {
        return Err(Error::backend(format!("{what}: expected {n} results, got {}", v.len())));
    }
    Ok(v)
}

impl HttpGateway {
    pub fn new(cfg: &BackendConfig) -> Result<Self> {
        Ok(HttpGateway {
            transport: HttpTransport::new(cfg)?,
        })
    }

    pub fn transport(&self) -> &HttpTransport {
        &self.transport
    }

    fn qa_items(&self, path: &str, items: &[(&str, &str)]) -> Result<Vec<String>> {
        if items.is_empty() {
            return Ok(Vec::new());
        }
        let wire: Vec<QaItem> = items
            .iter()
            .map(|(question, context)| QaItem { question, context })
            .collect();
        let resp: Answers = self.transport.post(path, &ItemsBody { items: &wire })?;
        expect_len(resp.answers, items.len(), path)
    }
}

impl ModelGateway for HttpGateway {
    fn complete(&self, req: &CompletionRequest) -> Result<Vec<String>> {
        let resp: Completions = self.transport.post("/v1/complete", req)?;
        expect_len(resp.completions, req.n, "/v1/complete")
    }

    fn similarity_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<f64>> {
        if pairs.is_empty() {
            return Ok(Vec::new());
        }
        let wire: Vec<SimilarityPair> = pairs.iter().map(|(a, b)| SimilarityPair { a, b }).collect();
        let resp: Scores<f64> = self.transport.post("/v1/similarity", &PairsBody { pairs: &wire })?;
        expect_len(resp.scores, pairs.len(), "/v1/similarity")?
            .into_iter()
            .map(|s| check_unit(s, "similarity"))
            .collect()
    }

    fn nli_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<NliScore>> {
        let live: Vec<usize> = (0..pairs.len()).filter(|&i| !pairs[i].0.trim().is_empty()).collect();
        let mut out = vec![NliScore::zero(); pairs.len()];
        if live.is_empty() {
            return Ok(out);
        }
        let wire: Vec<NliPair> = live
            .iter()
            .map(|&i| NliPair {
                premise: pairs[i].0,
                hypothesis: pairs[i].1,
            })
            .collect();
        let resp: Scores<WireNli> = self.transport.post("/v1/nli", &PairsBody { pairs: &wire })?;
        for (&i, s) in live.iter().zip(expect_len(resp.scores, live.len(), "/v1/nli")?) {
            out[i] = NliScore::new(s.entailment, s.contradiction, s.neutral)?;
        }
        Ok(out)
    }

    fn answer_batch(&self, items: &[(&str, &str)]) -> Result<Vec<String>> {
        self.qa_items("/v1/answer", items)
    }

    fn generate_question(&self, fact: &str, answer: &str) -> Result<String> {
        let req = CompletionRequest::greedy(format!("answer: {answer} context: {fact}"));
        let resp: Completions = self.transport.post("/v1/qgen", &req)?;
        Ok(expect_len(resp.completions, 1, "/v1/qgen")?.remove(0))
    }

    fn qa_to_declarative(&self, question: &str, answer: &str) -> Result<String> {
        Ok(self.qa_items("/v1/qa2d", &[(question, answer)])?.remove(0))
    }
}

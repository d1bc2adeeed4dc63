use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_unit, lexical, CompletionRequest, ModelGateway, NliScore};
use crate::error::{Error, Result};
use crate::text::normalize_answer;

/// Canned responses for the mock backend, loaded from a JSON fixture.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockTable {
    #[serde(default)]
    pub completions: Vec<CannedCompletion>,
    #[serde(default)]
    pub similarity: Vec<CannedSimilarity>,
    #[serde(default)]
    pub nli: Vec<CannedNli>,
    #[serde(default)]
    pub answers: Vec<CannedAnswer>,
    #[serde(default)]
    pub questions: Vec<CannedQuestion>,
    #[serde(default)]
    pub declaratives: Vec<CannedDeclarative>,
}

/// Completions for any prompt containing `match`. When several entries
/// match, the one whose text occurs furthest into the prompt wins, so
/// exemplar questions in a few-shot prompt never shadow the real query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CannedCompletion {
    #[serde(rename = "match")]
    pub pattern: String,
    /// Returned at temperature 0; defaults to the first sample.
    #[serde(default)]
    pub greedy: Option<String>,
    /// Returned cyclically when sampling.
    #[serde(default)]
    pub samples: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CannedSimilarity {
    pub a: String,
    pub b: String,
    pub score: f64,
}

/// Overrides lexical NLI for a hypothesis when the premise contains
/// `premise`. A listed pair without explicit scores is a contradiction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CannedNli {
    pub premise: String,
    pub hypothesis: String,
    #[serde(default)]
    pub entailment: Option<f64>,
    #[serde(default)]
    pub contradiction: Option<f64>,
    #[serde(default)]
    pub neutral: Option<f64>,
}

/// `context: None` matches any non-empty context, `Some("")` matches only
/// the question-only call, and any other string must occur in the context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CannedAnswer {
    pub question: String,
    #[serde(default)]
    pub context: Option<String>,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CannedQuestion {
    pub fact: String,
    pub answer: String,
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CannedDeclarative {
    pub question: String,
    pub answer: String,
    pub declarative: String,
}

/// Deterministic offline backend. Read-only after construction.
#[derive(Debug, Clone, Default)]
pub struct MockGateway {
    table: MockTable,
}

fn same(a: &str, b: &str) -> bool {
    normalize_answer(a) == normalize_answer(b)
}

fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl MockGateway {
    pub fn new(table: MockTable) -> Result<Self> {
        for s in &table.similarity {
            check_unit(s.score, "canned similarity")?;
        }
        for n in &table.nli {
            for v in [n.entailment, n.contradiction, n.neutral].into_iter().flatten() {
                check_unit(v, "canned nli")?;
            }
        }
        Ok(MockGateway { table })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let table: MockTable = serde_json::from_str(&raw).map_err(|e| Error::Format {
            locator: format!("{}:{}", path.display(), e.line()),
            message: e.to_string(),
        })?;
        Self::new(table)
    }

    pub fn table(&self) -> &MockTable {
        &self.table
    }

    fn lookup_completion(&self, prompt: &str) -> Option<&CannedCompletion> {
        self.table
            .completions
            .iter()
            .filter_map(|c| {
                prompt
                    .rfind(&c.pattern)
                    .map(|pos| (pos + c.pattern.len(), c.pattern.len(), c))
            })
            .max_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)))
            .map(|(_, _, c)| c)
    }

    fn score_nli(&self, premise: &str, hypothesis: &str) -> Result<NliScore> {
        if premise.trim().is_empty() {
            return Ok(NliScore::zero());
        }
        let squashed = squash(premise);
        let canned = self
            .table
            .nli
            .iter()
            .find(|n| squashed.contains(&squash(&n.premise)) && same(&n.hypothesis, hypothesis));
        let lexical = lexical::entailment(premise, hypothesis);
        let (entailment, contradiction) = match canned {
            Some(n) => (n.entailment.unwrap_or(lexical), n.contradiction.unwrap_or(1.0)),
            None => (lexical, 0.0),
        };
        let neutral = canned
            .and_then(|n| n.neutral)
            .unwrap_or_else(|| (1.0 - entailment.max(contradiction)).max(0.0));
        NliScore::new(entailment, contradiction, neutral)
    }

    fn lookup_answer(&self, question: &str, context: &str) -> String {
        let squashed = squash(context);
        self.table
            .answers
            .iter()
            .find(|a| {
                same(&a.question, question)
                    && match a.context.as_deref() {
                        None => !squashed.is_empty(),
                        Some("") => squashed.is_empty(),
                        Some(c) => squashed.contains(&squash(c)),
                    }
            })
            .map(|a| a.answer.clone())
            .unwrap_or_default()
    }
}

impl ModelGateway for MockGateway {
    fn complete(&self, req: &CompletionRequest) -> Result<Vec<String>> {
        let canned = self
            .lookup_completion(&req.prompt)
            .ok_or_else(|| Error::backend("mock: no canned completion matches the prompt"))?;
        if req.temperature == 0.0 {
            let greedy = canned
                .greedy
                .as_ref()
                .or_else(|| canned.samples.first())
                .ok_or_else(|| Error::backend(format!("mock: entry `{}` has no completions", canned.pattern)))?;
            return Ok(vec![greedy.clone(); req.n]);
        }
        if canned.samples.is_empty() {
            return Err(Error::backend(format!(
                "mock: entry `{}` has no samples",
                canned.pattern
            )));
        }
        Ok((0..req.n)
            .map(|i| canned.samples[i % canned.samples.len()].clone())
            .collect())
    }

    fn similarity_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<f64>> {
        Ok(pairs
            .iter()
            .map(|(a, b)| {
                self.table
                    .similarity
                    .iter()
                    .find(|s| {
                        (s.a.trim() == a.trim() && s.b.trim() == b.trim())
                            || (s.a.trim() == b.trim() && s.b.trim() == a.trim())
                    })
                    .map(|s| s.score)
                    .unwrap_or_else(|| lexical::cosine(a, b))
            })
            .collect())
    }

    fn nli_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<NliScore>> {
        pairs.iter().map(|(p, h)| self.score_nli(p, h)).collect()
    }

    fn answer_batch(&self, items: &[(&str, &str)]) -> Result<Vec<String>> {
        Ok(items.iter().map(|(q, c)| self.lookup_answer(q, c)).collect())
    }

    fn generate_question(&self, fact: &str, answer: &str) -> Result<String> {
        Ok(self
            .table
            .questions
            .iter()
            .find(|q| same(&q.fact, fact) && same(&q.answer, answer))
            .map(|q| q.question.clone())
            .unwrap_or_default())
    }

    fn qa_to_declarative(&self, question: &str, answer: &str) -> Result<String> {
        Ok(self
            .table
            .declaratives
            .iter()
            .find(|d| same(&d.question, question) && same(&d.answer, answer))
            .map(|d| d.declarative.clone())
            .unwrap_or_default())
    }
}

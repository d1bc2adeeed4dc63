//! End-to-end answering of one example under a chosen method.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::Example;
use crate::faithfulness::score_path;
use crate::gateway::{CompletionRequest, ModelGateway};
use crate::inference::{self, fact_generation, fact_selection, final_inference, FinalBackend, GenerationInput};
use crate::model::{
    Fact, FactSet, FaithfulnessConfig, KnowledgeSnippet, Origin, Prediction, Query, ReasoningPath, ScoredPath,
    Sentence, SentenceEvidence, Verdict, VerdictMode,
};
use crate::paths::{is_chaining_sentence, make_reasoning_path, parse_direct_answer, sample_paths, SplitterConfig};
use crate::prompts::{PromptFixture, PromptStyle};
use crate::retrieval::{retrieve_for_path, select_premise, ExampleContext, KnowledgeBase, RetrievalConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ZeroShot,
    FewShot,
    /// Greedy chain-of-thought.
    Cot,
    SelfConsistency,
    /// Faithfulness-weighted vote over retrieved evidence.
    Rr,
    BestPath,
    VariantI,
    VariantII,
    /// Final inference with no supporting facts.
    EmptyFacts,
    /// Final inference over the dataset's gold facts.
    GoldFacts,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::ZeroShot,
        Method::FewShot,
        Method::Cot,
        Method::SelfConsistency,
        Method::Rr,
        Method::BestPath,
        Method::VariantI,
        Method::VariantII,
        Method::EmptyFacts,
        Method::GoldFacts,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::ZeroShot => "zero-shot",
            Method::FewShot => "few-shot",
            Method::Cot => "cot",
            Method::SelfConsistency => "self-consistency",
            Method::Rr => "rr",
            Method::BestPath => "best-path",
            Method::VariantI => "variant-i",
            Method::VariantII => "variant-ii",
            Method::EmptyFacts => "empty-facts",
            Method::GoldFacts => "gold-facts",
        }
    }

    /// Methods that take a single greedy completion.
    pub fn is_greedy(self) -> bool {
        matches!(self, Method::ZeroShot | Method::FewShot | Method::Cot)
    }

    /// Methods that sample several paths.
    pub fn samples(self) -> bool {
        matches!(
            self,
            Method::SelfConsistency | Method::Rr | Method::BestPath | Method::VariantI | Method::VariantII
        )
    }

    pub fn uses_retrieval(self) -> bool {
        matches!(
            self,
            Method::Rr | Method::BestPath | Method::VariantI | Method::VariantII
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        let m = match key.as_str() {
            "zero-shot" | "zeroshot" => Method::ZeroShot,
            "few-shot" | "fewshot" | "standard" => Method::FewShot,
            "cot" | "chain-of-thought" => Method::Cot,
            "self-consistency" | "sc" => Method::SelfConsistency,
            "rr" | "rethinking-with-retrieval" | "vote" => Method::Rr,
            "best-path" | "basic" => Method::BestPath,
            "variant-i" | "variant-1" | "fact-selection" => Method::VariantI,
            "variant-ii" | "variant-2" | "fact-generation" => Method::VariantII,
            "empty-facts" => Method::EmptyFacts,
            "gold-facts" => Method::GoldFacts,
            _ => {
                let names: Vec<_> = Method::ALL.iter().map(|m| m.as_str()).collect();
                return Err(Error::invalid_config(format!(
                    "unknown mode `{s}` (expected one of {}, or query-based-retrieval)",
                    names.join(", ")
                )));
            }
        };
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinalBackendKind {
    #[default]
    Qa,
    Completion,
}

impl FromStr for FinalBackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "qa" => Ok(FinalBackendKind::Qa),
            "completion" | "cot" => Ok(FinalBackendKind::Completion),
            other => Err(Error::invalid_config(format!(
                "unknown final backend `{other}` (expected qa or completion)"
            ))),
        }
    }
}

/// Fully resolved settings for answering examples.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub method: Method,
    pub n: usize,
    pub temperature: f64,
    pub max_tokens: usize,
    pub faithfulness: FaithfulnessConfig,
    pub retrieval: RetrievalConfig,
    pub splitter: SplitterConfig,
    /// Give "Thus, ..." sentences no evidence instead of scoring them.
    pub skip_chaining_sentences: bool,
    pub cluster_threshold: f64,
    pub final_backend: FinalBackendKind,
}

pub struct Pipeline<'a> {
    pub gateway: &'a dyn ModelGateway,
    pub knowledge: &'a KnowledgeBase,
    pub config: &'a PipelineConfig,
}

fn direct_verdict(path: ReasoningPath) -> Verdict {
    let mut candidate_scores = BTreeMap::new();
    if path.prediction.is_parsed() {
        candidate_scores.insert(path.prediction.normalized.clone(), 1.0);
    }
    Verdict {
        prediction: path.prediction.clone(),
        candidate_scores,
        per_path: vec![ScoredPath::bare(path, 1.0)],
        mode: VerdictMode::Direct,
        selected_path: Some(0),
        facts: None,
    }
}

impl Pipeline<'_> {
    fn fixture(&self, query: &Query, style: PromptStyle) -> &'static PromptFixture {
        PromptFixture::get(query.task, style)
    }

    fn greedy_completion(&self, query: &Query, style: PromptStyle) -> Result<String> {
        let prompt = self.fixture(query, style).render(query)?;
        let req = CompletionRequest::new(prompt, 1, 0.0, self.config.max_tokens)?;
        self.gateway
            .complete(&req)?
            .into_iter()
            .next()
            .ok_or_else(|| Error::backend("completion backend returned nothing"))
    }

    fn context<'e>(&self, example: &'e Example, resolved: &'e [String]) -> ExampleContext<'e> {
        ExampleContext {
            table: example.table.as_ref(),
            gold_paragraphs: resolved,
        }
    }

    /// Gold paragraph ids resolved to text through the corpus.
    fn gold_texts(&self, example: &Example) -> Vec<String> {
        let ids = example.gold_paragraphs.as_deref().unwrap_or_default();
        match &self.knowledge.corpus {
            Some(idx) => ids
                .iter()
                .filter_map(|id| {
                    let found = idx.paragraph(id).map(|p| p.text.clone());
                    if found.is_none() {
                        warn!(
                            "example {}: gold paragraph `{id}` is not in the corpus",
                            example.query.id
                        );
                    }
                    found
                })
                .collect(),
            None => Vec::new(),
        }
    }

    /// Retrieve evidence for and score every path.
    pub fn score_paths(&self, example: &Example, paths: &[ReasoningPath]) -> Result<Vec<ScoredPath>> {
        let gold = self.gold_texts(example);
        let ctx = self.context(example, &gold);
        paths
            .iter()
            .map(|p| {
                let mut candidates = retrieve_for_path(p, &example.query, self.knowledge, ctx, &self.config.retrieval)?;
                if self.config.skip_chaining_sentences {
                    for (s, c) in p.explanation.iter().zip(candidates.iter_mut()) {
                        if is_chaining_sentence(&s.text) {
                            c.clear();
                        }
                    }
                }
                score_path(self.gateway, p, &candidates, &self.config.faithfulness)
            })
            .collect()
    }

    fn knowledge_for(&self, example: &Example, text: &str) -> Result<Vec<KnowledgeSnippet>> {
        let gold = self.gold_texts(example);
        let probe = ReasoningPath {
            raw: text.to_string(),
            explanation: vec![Sentence {
                text: text.to_string(),
                index: 0,
            }],
            prediction: Prediction::unparsed(),
            sample_index: 0,
        };
        let mut lists = retrieve_for_path(
            &probe,
            &example.query,
            self.knowledge,
            self.context(example, &gold),
            &self.config.retrieval,
        )?;
        Ok(lists.pop().unwrap_or_default())
    }

    fn generation_inputs(&self, example: &Example, facts: &FactSet) -> Result<Vec<GenerationInput>> {
        facts
            .facts
            .iter()
            .map(|fact| {
                let knowledge = self.knowledge_for(example, &fact.text)?;
                let evidence = match select_premise(self.gateway, &fact.text, &knowledge)? {
                    Some((premise, m)) => {
                        let nli = self.gateway.nli(&premise.text, &fact.text)?;
                        SentenceEvidence::new(0, Some(premise), m, nli.entailment, nli.contradiction)
                            .map_err(|e| Error::backend(e.to_string()))?
                    }
                    None => SentenceEvidence::empty(0),
                };
                Ok(GenerationInput {
                    fact: fact.clone(),
                    evidence,
                    knowledge,
                })
            })
            .collect()
    }

    fn final_backend(&self, example: &Example) -> FinalBackend {
        match self.config.final_backend {
            FinalBackendKind::Qa => FinalBackend::Qa,
            FinalBackendKind::Completion => FinalBackend::Completion {
                fixture: self.fixture(&example.query, PromptStyle::ChainOfThought),
                max_tokens: self.config.max_tokens,
            },
        }
    }

    fn sample(&self, query: &Query) -> Result<Vec<ReasoningPath>> {
        let fixture = self.fixture(query, PromptStyle::ChainOfThought);
        let c = self.config;
        sample_paths(
            self.gateway,
            query,
            fixture,
            c.n,
            c.temperature,
            c.max_tokens,
            &c.splitter,
        )
    }

    /// Answer one example.
    pub fn answer(&self, example: &Example) -> Result<Verdict> {
        let query = &example.query;
        let task = query.task;
        let cfg = self.config;
        match cfg.method {
            Method::ZeroShot | Method::FewShot => {
                let style = if cfg.method == Method::ZeroShot {
                    PromptStyle::ZeroShot
                } else {
                    PromptStyle::FewShot
                };
                let raw = self.greedy_completion(query, style)?;
                let path = ReasoningPath {
                    prediction: parse_direct_answer(&raw, task),
                    raw,
                    explanation: Vec::new(),
                    sample_index: 0,
                };
                Ok(direct_verdict(path))
            }
            Method::Cot => {
                let raw = self.greedy_completion(query, PromptStyle::ChainOfThought)?;
                Ok(direct_verdict(make_reasoning_path(&raw, task, 0, &cfg.splitter)))
            }
            Method::SelfConsistency => inference::self_consistency(&self.sample(query)?),
            Method::Rr => inference::vote(&self.score_paths(example, &self.sample(query)?)?),
            Method::BestPath => inference::best_path(&self.score_paths(example, &self.sample(query)?)?),
            Method::VariantI | Method::VariantII => {
                let scored = self.score_paths(example, &self.sample(query)?)?;
                let mut facts = fact_selection(self.gateway, &scored, &cfg.faithfulness, cfg.cluster_threshold)?;
                let mode = if cfg.method == Method::VariantI {
                    VerdictMode::VariantI
                } else {
                    let inputs = self.generation_inputs(example, &facts)?;
                    facts = fact_generation(self.gateway, &inputs, &cfg.faithfulness)?;
                    VerdictMode::VariantII
                };
                let mut verdict = final_inference(self.gateway, query, &facts, self.final_backend(example), mode)?;
                verdict.per_path = scored;
                Ok(verdict)
            }
            Method::EmptyFacts | Method::GoldFacts => {
                let facts = if cfg.method == Method::GoldFacts {
                    let gold = example.gold_facts.as_ref().ok_or_else(|| Error::Format {
                        locator: query.id.clone(),
                        message: "gold-facts mode needs gold facts on every example".into(),
                    })?;
                    FactSet {
                        facts: gold
                            .iter()
                            .map(|t| Fact {
                                text: t.clone(),
                                faithfulness: 0.0,
                                origin: Origin::Original,
                            })
                            .collect(),
                    }
                } else {
                    FactSet::default()
                };
                final_inference(
                    self.gateway,
                    query,
                    &facts,
                    self.final_backend(example),
                    VerdictMode::Direct,
                )
            }
        }
    }
}

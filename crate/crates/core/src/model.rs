//! Domain types shared by every stage of the pipeline.
//!
//! Everything here is immutable once constructed; constructors enforce the
//! invariants so later stages can rely on them without re-checking.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Commonsense,
    Temporal,
    Tabular,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Commonsense => "commonsense",
            TaskKind::Temporal => "temporal",
            TaskKind::Tabular => "tabular",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "commonsense" | "strategyqa" => Ok(TaskKind::Commonsense),
            "temporal" | "tempquestions" => Ok(TaskKind::Temporal),
            "tabular" | "infotabs" => Ok(TaskKind::Tabular),
            other => Err(Error::invalid_config(format!("unknown task `{other}`"))),
        }
    }
}

/// A question posed to the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub text: String,
    pub task: TaskKind,
    /// Raw table or passage attached to the question (tabular premises).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
}

impl Query {
    pub fn new(id: impl Into<String>, text: impl Into<String>, task: TaskKind) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::invalid_config("query text is empty"));
        }
        Ok(Query {
            id: id.into(),
            text,
            task,
            context: None,
        })
    }

    pub fn with_context(mut self, context: impl Into<String>) -> Self {
        self.context = Some(context.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PredictionKind {
    YesNo,
    TrueFalse,
    FreeForm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    /// Answer span exactly as the model wrote it.
    pub surface: String,
    pub normalized: String,
    pub kind: PredictionKind,
    /// Set when no answer clause could be recovered from the completion.
    #[serde(default)]
    pub unparsed: bool,
}

impl Prediction {
    pub fn from_surface(surface: impl Into<String>, task: TaskKind) -> Self {
        let surface = surface.into();
        let (normalized, kind) = crate::paths::classify_prediction(&surface, task);
        Prediction {
            surface,
            normalized,
            kind,
            unparsed: false,
        }
    }

    pub fn unparsed() -> Self {
        Prediction {
            surface: String::new(),
            normalized: String::new(),
            kind: PredictionKind::FreeForm,
            unparsed: true,
        }
    }

    pub fn is_parsed(&self) -> bool {
        !self.unparsed
    }
}

/// One sampled completion, split into explanation sentences and a prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningPath {
    pub raw: String,
    pub explanation: Vec<Sentence>,
    pub prediction: Prediction,
    pub sample_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SnippetSource {
    Bm25Corpus,
    TemporalTriples,
    WordRelations,
    TableLinearization,
    GoldEvidence,
}

/// A piece of retrieved or templated evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeSnippet {
    pub text: String,
    pub source: SnippetSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl KnowledgeSnippet {
    /// Snippet from a source other than the BM25 corpus.
    pub fn new(text: impl Into<String>, source: SnippetSource) -> Result<Self> {
        if source == SnippetSource::Bm25Corpus {
            return Err(Error::invalid_config(
                "corpus snippets need a doc id; use KnowledgeSnippet::from_corpus",
            ));
        }
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::invalid_config("knowledge snippet text is empty"));
        }
        Ok(KnowledgeSnippet {
            text,
            source,
            doc_id: None,
            score: None,
        })
    }

    pub fn from_corpus(doc_id: impl Into<String>, text: impl Into<String>, score: f64) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::invalid_config("knowledge snippet text is empty"));
        }
        Ok(KnowledgeSnippet {
            text,
            source: SnippetSource::Bm25Corpus,
            doc_id: Some(doc_id.into()),
            score: Some(score),
        })
    }
}

/// Scores for one explanation sentence against its selected premise.
///
/// `premise == None` is the empty-evidence sentinel: nothing was retrieved
/// and all three scores are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceEvidence {
    pub sentence_index: usize,
    pub premise: Option<KnowledgeSnippet>,
    pub similarity: f64,
    pub entailment: f64,
    pub contradiction: f64,
}

impl SentenceEvidence {
    pub fn new(
        sentence_index: usize,
        premise: Option<KnowledgeSnippet>,
        similarity: f64,
        entailment: f64,
        contradiction: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("similarity", similarity),
            ("entailment", entailment),
            ("contradiction", contradiction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid_config(format!("{name} score {v} outside [0, 1]")));
            }
        }
        Ok(SentenceEvidence {
            sentence_index,
            premise,
            similarity,
            entailment,
            contradiction,
        })
    }

    pub fn empty(sentence_index: usize) -> Self {
        SentenceEvidence {
            sentence_index,
            premise: None,
            similarity: 0.0,
            entailment: 0.0,
            contradiction: 0.0,
        }
    }

    pub fn is_sentinel(&self) -> bool {
        self.premise.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FaithfulnessFn {
    /// Similarity when it clears `t_m`, otherwise entailment; minus contradiction.
    F1,
    /// Similarity plus entailment.
    F2,
    /// Gated entailment minus gated contradiction.
    F3,
}

impl FromStr for FaithfulnessFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f1" | "1" => Ok(FaithfulnessFn::F1),
            "f2" | "2" => Ok(FaithfulnessFn::F2),
            "f3" | "3" => Ok(FaithfulnessFn::F3),
            other => Err(Error::invalid_config(format!(
                "unknown faithfulness function `{other}` (expected f1, f2 or f3)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaithfulnessConfig {
    pub function: FaithfulnessFn,
    pub t_m: f64,
    pub t_e: f64,
    pub t_c: f64,
}

impl Default for FaithfulnessConfig {
    fn default() -> Self {
        FaithfulnessConfig {
            function: FaithfulnessFn::F1,
            t_m: 0.5,
            t_e: 0.6,
            t_c: 0.99,
        }
    }
}

impl FaithfulnessConfig {
    pub fn with_function(function: FaithfulnessFn) -> Self {
        FaithfulnessConfig {
            function,
            ..Default::default()
        }
    }

    /// F1 for commonsense and tabular, F2 for temporal, F3 over gold evidence.
    pub fn default_for(task: TaskKind, gold_evidence: bool) -> Self {
        let function = match (task, gold_evidence) {
            (_, true) => FaithfulnessFn::F3,
            (TaskKind::Temporal, false) => FaithfulnessFn::F2,
            _ => FaithfulnessFn::F1,
        };
        Self::with_function(function)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("t_m", self.t_m), ("t_e", self.t_e), ("t_c", self.t_c)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid_config(format!("threshold {name}={v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerdictMode {
    Vote,
    BestPath,
    SelfConsistency,
    VariantI,
    VariantII,
    /// Single greedy or standard-prompting completion taken as is.
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPath {
    pub path: ReasoningPath,
    pub faithfulness: f64,
    pub evidence: Vec<SentenceEvidence>,
}

impl ScoredPath {
    /// A path with a score but no recorded evidence.
    pub fn bare(path: ReasoningPath, faithfulness: f64) -> Self {
        ScoredPath {
            path,
            faithfulness,
            evidence: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    /// Taken unchanged from the top path.
    Original,
    /// Swapped in from another path on the same topic.
    Selected,
    /// Produced from retrieved knowledge.
    Generated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    pub text: String,
    pub faithfulness: f64,
    pub origin: Origin,
}

/// Supporting facts handed to the final inference step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FactSet {
    pub facts: Vec<Fact>,
}

impl FactSet {
    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.facts.iter().map(|f| f.text.as_str()).collect()
    }

    /// Facts joined into a single context passage.
    pub fn joined(&self) -> String {
        self.texts().join(" ")
    }
}

/// The selected answer plus everything needed to audit how it was chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub prediction: Prediction,
    /// Normalized prediction -> summed path score.
    pub candidate_scores: BTreeMap<String, f64>,
    pub per_path: Vec<ScoredPath>,
    pub mode: VerdictMode,
    /// Index into `per_path` of the path whose answer was taken, when one was.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_path: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facts: Option<FactSet>,
}

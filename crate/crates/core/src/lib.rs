//! Post-hoc verification of sampled chain-of-thought reasoning against
//! retrieved knowledge.
//!
//! The crate samples reasoning paths from a model gateway, retrieves
//! supporting snippets for each explanation sentence, scores how faithful
//! each path is to that evidence, and picks a final answer by
//! faithfulness-weighted voting or by one of the fact-based variants.

pub mod config;
pub mod error;
pub mod eval;
pub mod faithfulness;
pub mod gateway;
pub mod inference;
pub mod model;
pub mod paths;
pub mod pipeline;
pub mod prompts;
pub mod retrieval;
pub mod text;

pub use config::{Resolved, RunConfig};
pub use error::{Error, Result};
pub use eval::{Example, ExampleRecord, RunOptions, RunSummary};
pub use gateway::{BackendConfig, CompletionRequest, MockGateway, ModelGateway, NliScore};
pub use model::{
    Fact, FactSet, FaithfulnessConfig, FaithfulnessFn, KnowledgeSnippet, Origin, Prediction, PredictionKind, Query,
    ReasoningPath, ScoredPath, Sentence, SentenceEvidence, SnippetSource, TaskKind, Verdict, VerdictMode,
};
pub use pipeline::{FinalBackendKind, Method, Pipeline, PipelineConfig};

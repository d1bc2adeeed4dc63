//! Layered run configuration.
//!
//! Values come from built-in defaults, then a TOML file, then `RR_<SECTION>_<FIELD>`
//! environment variables. Command-line flags are applied last by the caller.
//! [`RunConfig::resolve`] turns the raw layers into a validated
//! [`PipelineConfig`].

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{load_infotabs, load_strategyqa, load_tempquestions, DevSplit, Example};
use crate::gateway::BackendConfig;
use crate::inference::DEFAULT_CLUSTER_THRESHOLD;
use crate::model::{FaithfulnessConfig, FaithfulnessFn, SnippetSource, TaskKind};
use crate::paths::SplitterConfig;
use crate::pipeline::{FinalBackendKind, Method, PipelineConfig};
use crate::retrieval::{
    parse_source, Analyzer, Bm25Index, Bm25Params, GazetteerLinker, Granularity, KnowledgeBase, RelationStore,
    RemoteLinker, RetrievalConfig, TemporalKnowledge, TripleStore,
};

/// Prefix of environment overrides.
pub const ENV_PREFIX: &str = "RR_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSection {
    /// Paths per question; defaults to 9 for commonsense and 10 otherwise.
    pub n: Option<usize>,
    pub temperature: f64,
    pub max_tokens: usize,
}

impl Default for SamplingSection {
    fn default() -> Self {
        SamplingSection {
            n: None,
            temperature: 0.7,
            max_tokens: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalSection {
    pub granularity: Granularity,
    /// Knowledge sources; defaults depend on the task.
    pub sources: Option<Vec<String>>,
    pub top_k: usize,
    pub k1: f64,
    pub b: f64,
    pub stem: bool,
}

impl Default for RetrievalSection {
    fn default() -> Self {
        let p = Bm25Params::default();
        RetrievalSection {
            granularity: Granularity::Decomposition,
            sources: None,
            top_k: 10,
            k1: p.k1,
            b: p.b,
            stem: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaithfulnessSection {
    /// `f1`, `f2` or `f3`; defaults depend on the task and sources.
    pub function: Option<String>,
    pub t_m: f64,
    pub t_e: f64,
    pub t_c: f64,
    pub skip_chaining_sentences: bool,
}

impl Default for FaithfulnessSection {
    fn default() -> Self {
        let d = FaithfulnessConfig::default();
        FaithfulnessSection {
            function: None,
            t_m: d.t_m,
            t_e: d.t_e,
            t_c: d.t_c,
            skip_chaining_sentences: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceSection {
    pub method: String,
    pub cluster_threshold: f64,
    pub final_backend: FinalBackendKind,
}

impl Default for InferenceSection {
    fn default() -> Self {
        InferenceSection {
            method: "rr".into(),
            cluster_threshold: DEFAULT_CLUSTER_THRESHOLD,
            final_backend: FinalBackendKind::Qa,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkerKind {
    /// Match subject names and aliases from the triple store.
    #[default]
    Gazetteer,
    /// Ask the backend's linking endpoint.
    Remote,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    /// NDJSON paragraphs, indexed on load when no snapshot is given.
    pub corpus: Option<PathBuf>,
    /// Prebuilt index snapshot; preferred over `corpus`.
    pub index: Option<PathBuf>,
    pub temporal_triples: Option<PathBuf>,
    pub word_relations: Option<PathBuf>,
    pub linker: LinkerKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub task: String,
    /// Dataset file, or directory for tabular data.
    pub path: Option<PathBuf>,
    pub split_seed: u64,
    /// Share of a commonsense file used as the dev set; 1.0 keeps everything.
    pub dev_fraction: f64,
    /// Leading temporal items reserved as prompt exemplars.
    pub skip_prompt_examples: usize,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            task: "commonsense".into(),
            path: None,
            split_seed: 0,
            dev_fraction: 0.1,
            skip_prompt_examples: crate::eval::TEMPQUESTIONS_PROMPT_EXAMPLES,
        }
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(8)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub out_dir: PathBuf,
    pub workers: usize,
    pub resume: bool,
    pub limit: Option<usize>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            out_dir: PathBuf::from("runs/latest"),
            workers: default_workers(),
            resume: false,
            limit: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub gateway: BackendConfig,
    pub sampling: SamplingSection,
    pub retrieval: RetrievalSection,
    pub faithfulness: FaithfulnessSection,
    pub inference: InferenceSection,
    pub paths: PathsSection,
    pub dataset: DatasetSection,
    pub run: RunSection,
}

/// Output of [`RunConfig::resolve`].
#[derive(Debug, Clone)]
pub struct Resolved {
    pub task: TaskKind,
    /// Name the mode was requested under, for reports.
    pub mode: String,
    pub pipeline: PipelineConfig,
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::invalid_config(e.to_string())
}

/// Parse an environment value as a TOML literal of the kind already held
/// in that slot. Unset slots take whatever literal parses, else a string.
fn env_value(raw: &str, current: Option<&toml::Value>) -> Result<toml::Value> {
    use toml::Value;
    let literal = || -> Option<Value> {
        let t: toml::Table = toml::from_str(&format!("v = {raw}")).ok()?;
        t.get("v").cloned()
    };
    let bad = |kind: &str| config_err(format!("`{raw}` is not a valid {kind}"));
    Ok(match current {
        Some(Value::String(_)) => Value::String(raw.to_string()),
        Some(Value::Boolean(_)) => Value::Boolean(match raw.trim().to_ascii_lowercase().as_str() {
            "1" | "true" | "yes" | "on" => true,
            "0" | "false" | "no" | "off" => false,
            _ => return Err(bad("boolean")),
        }),
        Some(Value::Integer(_)) => Value::Integer(raw.trim().parse().map_err(|_| bad("integer"))?),
        Some(Value::Float(_)) => Value::Float(raw.trim().parse().map_err(|_| bad("number"))?),
        Some(Value::Array(_)) => match literal() {
            Some(v @ Value::Array(_)) => v,
            _ => Value::Array(
                raw.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| Value::String(s.to_string()))
                    .collect(),
            ),
        },
        _ => literal().unwrap_or_else(|| Value::String(raw.to_string())),
    })
}

/// Path-valued keys, rebased onto the config file's directory when relative.
const PATH_KEYS: [(&str, &str); 7] = [
    ("gateway", "mock_table"),
    ("paths", "corpus"),
    ("paths", "index"),
    ("paths", "temporal_triples"),
    ("paths", "word_relations"),
    ("dataset", "path"),
    ("run", "out_dir"),
];

fn rebase(table: &mut toml::Table, dir: &Path) {
    for (section, key) in PATH_KEYS {
        if let Some(toml::Value::String(s)) = table.get_mut(section).and_then(|v| v.get_mut(key)) {
            if Path::new(s.as_str()).is_relative() {
                *s = dir.join(s.as_str()).to_string_lossy().into_owned();
            }
        }
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

impl RunConfig {
    /// Defaults overlaid with an optional TOML file and `RR_*` variables
    /// from `env`. Relative paths in the file are taken relative to it.
    pub fn load<I>(file: Option<&Path>, env: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut table = toml::Table::try_from(RunConfig::default()).map_err(config_err)?;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let mut over: toml::Table =
                toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            rebase(&mut over, path.parent().unwrap_or(Path::new("")));
            merge(&mut table, over);
        }
        Self::apply_env(&mut table, env)?;
        table
            .try_into()
            .map_err(|e: toml::de::Error| config_err(format!("configuration: {}", e.message())))
    }

    /// Defaults, file and the process environment.
    pub fn from_process_env(file: Option<&Path>) -> Result<Self> {
        Self::load(file, std::env::vars())
    }

    fn apply_env<I>(table: &mut toml::Table, env: I) -> Result<()>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        for (key, raw) in env {
            let Some(rest) = key.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let rest = rest.to_ascii_lowercase();
            let Some((section, field)) = rest.split_once('_') else {
                continue;
            };
            let Some(toml::Value::Table(sec)) = table.get_mut(section) else {
                warn!("ignoring {key}: no configuration section `{section}`");
                continue;
            };
            let value = env_value(&raw, sec.get(field)).map_err(|e| config_err(format!("{key}: {e}")))?;
            sec.insert(field.to_string(), value);
        }
        Ok(())
    }

    pub fn task(&self) -> Result<TaskKind> {
        self.dataset.task.parse()
    }

    /// Validate and combine the sections into pipeline settings.
    pub fn resolve(&self) -> Result<Resolved> {
        let task = self.task()?;
        let mode = self.inference.method.trim().to_ascii_lowercase();
        let (method, mut granularity) = match mode.as_str() {
            "query-based-retrieval" | "query-based" => (Method::Rr, Granularity::QueryBased),
            _ => (mode.parse::<Method>()?, self.retrieval.granularity),
        };
        if !method.uses_retrieval() {
            granularity = Granularity::Decomposition;
        }

        let s = &self.sampling;
        if !s.temperature.is_finite() || s.temperature < 0.0 {
            return Err(config_err(format!(
                "temperature {} must be non-negative",
                s.temperature
            )));
        }
        if s.max_tokens == 0 {
            return Err(config_err("max_tokens must be positive"));
        }
        let (n, temperature) = if method.samples() {
            let n = s.n.unwrap_or(if task == TaskKind::Commonsense { 9 } else { 10 });
            if n == 0 {
                return Err(config_err("sampling.n must be at least 1"));
            }
            (n, s.temperature)
        } else {
            if let Some(k) = s.n.filter(|&k| k != 1) {
                return Err(config_err(format!(
                    "mode {method} takes a single greedy completion; n={k} is not allowed"
                )));
            }
            (1, 0.0)
        };

        let r = &self.retrieval;
        if r.top_k == 0 {
            return Err(config_err("retrieval.top_k must be at least 1"));
        }
        if !(r.k1 >= 0.0 && (0.0..=1.0).contains(&r.b)) {
            return Err(config_err(format!(
                "bm25 parameters k1={} b={} out of range",
                r.k1, r.b
            )));
        }
        let sources: BTreeSet<SnippetSource> = match &r.sources {
            Some(names) if !names.is_empty() => names.iter().map(|n| parse_source(n)).collect::<Result<_>>()?,
            Some(_) => return Err(config_err("retrieval.sources is empty")),
            None => RetrievalConfig::for_task(task).sources,
        };

        let f = &self.faithfulness;
        let gold_only = sources.len() == 1 && sources.contains(&SnippetSource::GoldEvidence);
        let mut faithfulness = FaithfulnessConfig::default_for(task, gold_only);
        if let Some(name) = &f.function {
            faithfulness.function = name.parse::<FaithfulnessFn>()?;
        }
        faithfulness.t_m = f.t_m;
        faithfulness.t_e = f.t_e;
        faithfulness.t_c = f.t_c;
        faithfulness.validate()?;

        let c = self.inference.cluster_threshold;
        if !(c > 0.0 && c <= 1.0) {
            return Err(config_err(format!("cluster_threshold {c} outside (0, 1]")));
        }
        if self.run.workers == 0 {
            return Err(config_err("run.workers must be at least 1"));
        }
        self.gateway.validate()?;

        Ok(Resolved {
            task,
            mode,
            pipeline: PipelineConfig {
                method,
                n,
                temperature,
                max_tokens: s.max_tokens,
                faithfulness,
                retrieval: RetrievalConfig {
                    granularity,
                    sources,
                    top_k: r.top_k,
                },
                splitter: SplitterConfig::default(),
                skip_chaining_sentences: f.skip_chaining_sentences,
                cluster_threshold: c,
                final_backend: self.inference.final_backend,
            },
        })
    }

    pub fn bm25_params(&self) -> Bm25Params {
        Bm25Params {
            k1: self.retrieval.k1,
            b: self.retrieval.b,
        }
    }

    pub fn analyzer(&self) -> Analyzer {
        Analyzer {
            stem: self.retrieval.stem,
        }
    }

    /// Load the stores the selected sources need.
    pub fn load_knowledge(&self, sources: &BTreeSet<SnippetSource>) -> Result<KnowledgeBase> {
        let p = &self.paths;
        let mut kb = KnowledgeBase::default();
        if sources.contains(&SnippetSource::Bm25Corpus) || sources.contains(&SnippetSource::GoldEvidence) {
            kb.corpus = match (&p.index, &p.corpus) {
                (Some(index), _) => Some(Bm25Index::load(index)?),
                (None, Some(corpus)) => Some(Bm25Index::from_corpus_file(
                    corpus,
                    self.bm25_params(),
                    self.analyzer(),
                )?),
                (None, None) if sources.contains(&SnippetSource::Bm25Corpus) => {
                    return Err(config_err("bm25 retrieval needs paths.index or paths.corpus"))
                }
                (None, None) => None,
            };
        }
        if sources.contains(&SnippetSource::TemporalTriples) {
            let path = p
                .temporal_triples
                .as_ref()
                .ok_or_else(|| config_err("temporal retrieval needs paths.temporal_triples"))?;
            let store = TripleStore::from_file(path)?;
            let linker: Box<dyn crate::retrieval::EntityLinker> = match p.linker {
                LinkerKind::Gazetteer => Box::new(GazetteerLinker::from_store(&store)),
                LinkerKind::Remote => Box::new(RemoteLinker::new(&self.gateway)?),
            };
            kb.temporal = Some(TemporalKnowledge { store, linker });
        }
        if sources.contains(&SnippetSource::WordRelations) {
            let path = p
                .word_relations
                .as_ref()
                .ok_or_else(|| config_err("word-relation retrieval needs paths.word_relations"))?;
            kb.word_relations = Some(RelationStore::from_file(path)?);
        }
        kb.check_sources(sources)?;
        Ok(kb)
    }

    /// Load the configured dataset.
    pub fn load_examples(&self) -> Result<Vec<Example>> {
        let d = &self.dataset;
        let path = d.path.as_ref().ok_or_else(|| config_err("dataset.path is not set"))?;
        match self.task()? {
            TaskKind::Commonsense => {
                let split = (d.dev_fraction < 1.0).then_some(DevSplit {
                    seed: d.split_seed,
                    fraction: d.dev_fraction,
                });
                load_strategyqa(path, split)
            }
            TaskKind::Temporal => load_tempquestions(path, d.skip_prompt_examples),
            TaskKind::Tabular => load_infotabs(path),
        }
    }

    /// Seed recorded in reports when a seeded split was used.
    pub fn split_seed(&self) -> Option<u64> {
        (self.task().ok() == Some(TaskKind::Commonsense) && self.dataset.dev_fraction < 1.0)
            .then_some(self.dataset.split_seed)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

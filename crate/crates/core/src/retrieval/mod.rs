//! Knowledge retrieval for explanation sentences.
//!
//! Four sources feed candidate snippets: a BM25 paragraph index, a temporal
//! triple store (behind an entity linker), a word-relation store, and the
//! query's own table. Gold evidence paragraphs can be attached directly.

mod bm25;
mod snapshot;
mod table;
mod temporal;
mod words;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bm25::{read_corpus, Analyzer, Bm25Index, Bm25Params, Paragraph};
pub use snapshot::FORMAT_VERSION as SNAPSHOT_VERSION;
pub use table::{linearize_table, Table};
pub use temporal::{
    render_span, render_subject, render_triple, temporal_sentences, EntityLinker, Era, GazetteerLinker, RemoteLinker,
    TemporalRelation, TemporalTriple, TemporalValue, TripleStore,
};
pub use words::{word_relation_sentences, RelationStore, WordRelation, WordRelationTriple};

use crate::error::{Error, Result};
use crate::gateway::ModelGateway;
use crate::model::{KnowledgeSnippet, Query, ReasoningPath, SnippetSource, TaskKind};

/// Whether retrieval runs once per explanation sentence or once per query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Granularity {
    #[default]
    Decomposition,
    QueryBased,
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "decomposition" | "decomposition-based" | "sentence" => Ok(Granularity::Decomposition),
            "query" | "query-based" => Ok(Granularity::QueryBased),
            other => Err(Error::invalid_config(format!(
                "unknown retrieval granularity `{other}` (expected decomposition or query)"
            ))),
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Decomposition => "decomposition",
            Granularity::QueryBased => "query",
        })
    }
}

/// Short names used in configs and on the command line.
pub fn parse_source(name: &str) -> Result<SnippetSource> {
    match name.trim().to_ascii_lowercase().replace('_', "-").as_str() {
        "bm25" | "corpus" | "wikipedia" => Ok(SnippetSource::Bm25Corpus),
        "temporal" | "triples" | "wikidata" => Ok(SnippetSource::TemporalTriples),
        "words" | "word-relations" | "wordnet" | "conceptnet" => Ok(SnippetSource::WordRelations),
        "table" | "tables" => Ok(SnippetSource::TableLinearization),
        "gold" | "gold-evidence" => Ok(SnippetSource::GoldEvidence),
        other => Err(Error::invalid_config(format!(
            "unknown knowledge source `{other}` (expected bm25, temporal, words, table or gold)"
        ))),
    }
}

pub fn source_name(source: SnippetSource) -> &'static str {
    match source {
        SnippetSource::Bm25Corpus => "bm25",
        SnippetSource::TemporalTriples => "temporal",
        SnippetSource::WordRelations => "words",
        SnippetSource::TableLinearization => "table",
        SnippetSource::GoldEvidence => "gold",
    }
}

/// Default knowledge sources per task.
pub fn default_sources(task: TaskKind) -> BTreeSet<SnippetSource> {
    match task {
        TaskKind::Commonsense => [SnippetSource::Bm25Corpus].into(),
        TaskKind::Temporal => [SnippetSource::TemporalTriples].into(),
        TaskKind::Tabular => [SnippetSource::TableLinearization, SnippetSource::WordRelations].into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalConfig {
    pub granularity: Granularity,
    pub sources: BTreeSet<SnippetSource>,
    pub top_k: usize,
}

impl RetrievalConfig {
    pub fn for_task(task: TaskKind) -> Self {
        RetrievalConfig {
            granularity: Granularity::Decomposition,
            sources: default_sources(task),
            top_k: 10,
        }
    }
}

pub struct TemporalKnowledge {
    pub store: TripleStore,
    pub linker: Box<dyn EntityLinker>,
}

impl fmt::Debug for TemporalKnowledge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TemporalKnowledge")
            .field("triples", &self.store.triples().len())
            .finish_non_exhaustive()
    }
}

/// Loaded knowledge stores. Missing stores contribute no candidates.
#[derive(Debug, Default)]
pub struct KnowledgeBase {
    pub corpus: Option<Bm25Index>,
    pub temporal: Option<TemporalKnowledge>,
    pub word_relations: Option<RelationStore>,
}

impl KnowledgeBase {
    /// Fail early if a selected source needs a store that was not loaded.
    pub fn check_sources(&self, sources: &BTreeSet<SnippetSource>) -> Result<()> {
        let missing = |what: &str| {
            Err(Error::invalid_config(format!(
                "source `{what}` selected but no {what} store loaded"
            )))
        };
        for s in sources {
            match s {
                SnippetSource::Bm25Corpus if self.corpus.is_none() => return missing("bm25"),
                SnippetSource::TemporalTriples if self.temporal.is_none() => return missing("temporal"),
                SnippetSource::WordRelations if self.word_relations.is_none() => return missing("words"),
                _ => {}
            }
        }
        Ok(())
    }
}

/// Per-example material that is not part of the query text.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExampleContext<'a> {
    pub table: Option<&'a Table>,
    pub gold_paragraphs: &'a [String],
}

fn push_unique(out: &mut Vec<KnowledgeSnippet>, seen: &mut HashSet<String>, items: Vec<KnowledgeSnippet>) {
    for s in items {
        if seen.insert(s.text.clone()) {
            out.push(s);
        }
    }
}

fn candidates_for(
    text: &str,
    query: &Query,
    kb: &KnowledgeBase,
    ctx: ExampleContext<'_>,
    cfg: &RetrievalConfig,
) -> Result<Vec<KnowledgeSnippet>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for source in &cfg.sources {
        let items = match source {
            SnippetSource::Bm25Corpus => kb
                .corpus
                .as_ref()
                .map(|idx| idx.search(text, cfg.top_k))
                .unwrap_or_default(),
            SnippetSource::TemporalTriples => match &kb.temporal {
                Some(t) => temporal_sentences(text, t.linker.as_ref(), &t.store)?,
                None => Vec::new(),
            },
            SnippetSource::WordRelations => match (&kb.word_relations, ctx.table) {
                (Some(store), Some(table)) => word_relation_sentences(&table.premise_text(), &query.text, store),
                (Some(store), None) => query
                    .context
                    .as_deref()
                    .map(|premise| word_relation_sentences(premise, &query.text, store))
                    .unwrap_or_default(),
                (None, _) => Vec::new(),
            },
            SnippetSource::TableLinearization => ctx.table.map(linearize_table).unwrap_or_default(),
            SnippetSource::GoldEvidence => ctx
                .gold_paragraphs
                .iter()
                .filter_map(|p| KnowledgeSnippet::new(p.clone(), SnippetSource::GoldEvidence).ok())
                .collect(),
        };
        push_unique(&mut out, &mut seen, items);
    }
    Ok(out)
}

/// Candidate snippets for every explanation sentence of `path`.
///
/// Decomposition retrieves with each sentence's text; query-based retrieves
/// once with the query text and gives every sentence the same list.
pub fn retrieve_for_path(
    path: &ReasoningPath,
    query: &Query,
    kb: &KnowledgeBase,
    ctx: ExampleContext<'_>,
    cfg: &RetrievalConfig,
) -> Result<Vec<Vec<KnowledgeSnippet>>> {
    match cfg.granularity {
        Granularity::Decomposition => path
            .explanation
            .iter()
            .map(|s| candidates_for(&s.text, query, kb, ctx, cfg))
            .collect(),
        Granularity::QueryBased => {
            let shared = candidates_for(&query.text, query, kb, ctx, cfg)?;
            Ok(vec![shared; path.explanation.len()])
        }
    }
}

/// The candidate most similar to `sentence`, or `None` when there are none.
///
/// Equal similarities go to the lowest doc id, then to the earlier candidate.
pub fn select_premise(
    gateway: &dyn ModelGateway,
    sentence: &str,
    candidates: &[KnowledgeSnippet],
) -> Result<Option<(KnowledgeSnippet, f64)>> {
    if candidates.is_empty() {
        return Ok(None);
    }
    let pairs: Vec<(&str, &str)> = candidates.iter().map(|c| (sentence, c.text.as_str())).collect();
    let sims = gateway.similarity_batch(&pairs)?;
    if sims.len() != candidates.len() {
        return Err(Error::backend(format!(
            "similarity: expected {} scores, got {}",
            candidates.len(),
            sims.len()
        )));
    }
    let mut best = 0;
    for i in 1..candidates.len() {
        let better = match sims[i].total_cmp(&sims[best]) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => match (&candidates[i].doc_id, &candidates[best].doc_id) {
                (Some(a), Some(b)) => a < b,
                _ => false,
            },
        };
        if better {
            best = i;
        }
    }
    Ok(Some((candidates[best].clone(), sims[best])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{MockGateway, MockTable};
    use crate::paths::{make_reasoning_path, SplitterConfig};

    fn kb() -> KnowledgeBase {
        let paras = vec![
            Paragraph {
                id: "K1".into(),
                title: "Aristotle".into(),
                text: "Aristotle (384–322 BC) was a Greek philosopher and polymath during the Classical period in Ancient Greece.".into(),
            },
            Paragraph {
                id: "K2".into(),
                title: "Laptop".into(),
                text: "The Epson HX-20, the first laptop computer, was invented in 1980.".into(),
            },
        ];
        KnowledgeBase {
            corpus: Some(Bm25Index::build(paras, Bm25Params::default(), Analyzer::default()).unwrap()),
            ..Default::default()
        }
    }

    fn r3() -> (ReasoningPath, Query) {
        let raw = "Aristotle died in 322BC. The first laptop was invented in 1980. Thus, Aristotle did not use a laptop. So the answer is no.";
        let q = Query::new("q", "Did Aristotle use a laptop?", TaskKind::Commonsense).unwrap();
        (
            make_reasoning_path(raw, TaskKind::Commonsense, 2, &SplitterConfig::default()),
            q,
        )
    }

    #[test]
    fn decomposition_retrieves_per_sentence() {
        let (path, q) = r3();
        let cfg = RetrievalConfig::for_task(TaskKind::Commonsense);
        let c = retrieve_for_path(&path, &q, &kb(), ExampleContext::default(), &cfg).unwrap();
        assert_eq!(c.len(), path.explanation.len());
        assert_eq!(c[0][0].doc_id.as_deref(), Some("K1"));
        assert_eq!(c[1][0].doc_id.as_deref(), Some("K2"));
    }

    #[test]
    fn query_based_shares_candidates() {
        let (path, q) = r3();
        let mut cfg = RetrievalConfig::for_task(TaskKind::Commonsense);
        cfg.granularity = Granularity::QueryBased;
        let c = retrieve_for_path(&path, &q, &kb(), ExampleContext::default(), &cfg).unwrap();
        assert!(c.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn premise_selection() {
        let gw = MockGateway::new(MockTable::default()).unwrap();
        let hits = kb().corpus.unwrap().search("Aristotle laptop", 10);
        let (best, _) = select_premise(&gw, "The first laptop was invented in 1980.", &hits)
            .unwrap()
            .unwrap();
        assert_eq!(best.doc_id.as_deref(), Some("K2"));
        assert!(select_premise(&gw, "x", &[]).unwrap().is_none());
        let (only, _) = select_premise(&gw, "zzz", &hits[..1]).unwrap().unwrap();
        assert_eq!(only, hits[0]);
    }

    #[test]
    fn premise_ties_go_to_lowest_doc_id() {
        let gw = MockGateway::new(MockTable::default()).unwrap();
        let c = vec![
            KnowledgeSnippet::from_corpus("d2", "same text", 1.0).unwrap(),
            KnowledgeSnippet::from_corpus("d1", "same text", 0.5).unwrap(),
        ];
        let (best, _) = select_premise(&gw, "same text", &c).unwrap().unwrap();
        assert_eq!(best.doc_id.as_deref(), Some("d1"));
    }

    #[test]
    fn table_sources() {
        let q = Query::new("t", "Curitiba is above sea level.", TaskKind::Tabular).unwrap();
        let table = Table::new("Curitiba", vec![("Elevation".into(), "934.6 m".into())]).unwrap();
        let kb = KnowledgeBase {
            word_relations: Some(RelationStore::new(vec![WordRelationTriple::new(
                "elevation",
                WordRelation::Hypernym,
                "level",
            )
            .unwrap()])),
            ..Default::default()
        };
        let path = make_reasoning_path(
            "Curitiba is high. So the answer is true.",
            TaskKind::Tabular,
            0,
            &SplitterConfig::default(),
        );
        let ctx = ExampleContext {
            table: Some(&table),
            gold_paragraphs: &[],
        };
        let c = retrieve_for_path(&path, &q, &kb, ctx, &RetrievalConfig::for_task(TaskKind::Tabular)).unwrap();
        let texts: Vec<_> = c[0].iter().map(|s| s.text.as_str()).collect();
        assert_eq!(
            texts,
            vec![
                "Elevation is a hypernym of level.",
                "The Elevation of Curitiba are 934.6 m."
            ]
        );
    }

    #[test]
    fn missing_store_is_reported() {
        let kb = KnowledgeBase::default();
        assert!(kb.check_sources(&default_sources(TaskKind::Commonsense)).is_err());
        assert!(kb.check_sources(&[SnippetSource::TableLinearization].into()).is_ok());
        assert_eq!(parse_source("words").unwrap(), SnippetSource::WordRelations);
        assert!(parse_source("dpr").is_err());
    }
}

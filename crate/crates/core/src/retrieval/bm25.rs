//! BM25 paragraph index.
//!
//! Scoring follows the Okapi formula with the non-negative idf used by
//! Lucene-family toolkits:
//!
//! ```text
//! idf(t)      = ln(1 + (N - df + 0.5) / (df + 0.5))
//! score(q, d) = Σ_{t ∈ distinct(q)} idf(t) · tf·(k1 + 1) / (tf + k1·(1 - b + b·|d|/avgdl))
//! ```
//!
//! Paragraphs are indexed as `title + " " + text`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, BufReader};
use std::path::Path;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::KnowledgeSnippet;
use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 0.9, b: 0.4 }
    }
}

/// Lowercase, punctuation-stripped tokens, optionally stemmed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Analyzer {
    pub stem: bool,
}

impl Analyzer {
    pub fn analyze(&self, text: &str) -> Vec<String> {
        let tokens = tokenize(text);
        if !self.stem {
            return tokens;
        }
        let stemmer = Stemmer::create(Algorithm::English);
        tokens.iter().map(|t| stemmer.stem(t).into_owned()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub id: String,
    #[serde(default)]
    pub title: String,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bm25Index {
    pub(crate) params: Bm25Params,
    pub(crate) analyzer: Analyzer,
    pub(crate) paragraphs: Vec<Paragraph>,
    pub(crate) doc_lengths: Vec<u32>,
    pub(crate) postings: BTreeMap<String, Vec<Posting>>,
    pub(crate) avg_len: f64,
}

/// Parse a newline-delimited JSON corpus, one `{"id","title","text"}` per line.
pub fn read_corpus(path: &Path) -> Result<Vec<Paragraph>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let ingest = |message: String| Error::Ingest {
            path: path.display().to_string(),
            line: i + 1,
            message,
        };
        if line.trim().is_empty() {
            continue;
        }
        let p: Paragraph = serde_json::from_str(&line).map_err(|e| ingest(e.to_string()))?;
        if p.id.trim().is_empty() {
            return Err(ingest("empty paragraph id".into()));
        }
        if p.text.trim().is_empty() {
            return Err(ingest(format!("paragraph `{}` has empty text", p.id)));
        }
        if !seen.insert(p.id.clone()) {
            return Err(ingest(format!("duplicate paragraph id `{}`", p.id)));
        }
        out.push(p);
    }
    Ok(out)
}

impl Bm25Index {
    pub fn build(paragraphs: Vec<Paragraph>, params: Bm25Params, analyzer: Analyzer) -> Result<Self> {
        let mut seen = HashSet::new();
        for p in &paragraphs {
            if !seen.insert(p.id.as_str()) {
                return Err(Error::invalid_config(format!("duplicate paragraph id `{}`", p.id)));
            }
        }
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_lengths = Vec::with_capacity(paragraphs.len());
        for (doc, p) in paragraphs.iter().enumerate() {
            let tokens = analyzer.analyze(&format!("{} {}", p.title, p.text));
            doc_lengths.push(tokens.len() as u32);
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in tokens {
                *tf.entry(t).or_default() += 1;
            }
            for (term, tf) in tf {
                postings.entry(term).or_default().push(Posting { doc: doc as u32, tf });
            }
        }
        Ok(Self::assemble(params, analyzer, paragraphs, doc_lengths, postings))
    }

    pub(crate) fn assemble(
        params: Bm25Params,
        analyzer: Analyzer,
        paragraphs: Vec<Paragraph>,
        doc_lengths: Vec<u32>,
        postings: BTreeMap<String, Vec<Posting>>,
    ) -> Self {
        let total: u64 = doc_lengths.iter().map(|&l| l as u64).sum();
        let avg_len = if doc_lengths.is_empty() {
            0.0
        } else {
            total as f64 / doc_lengths.len() as f64
        };
        Bm25Index {
            params,
            analyzer,
            paragraphs,
            doc_lengths,
            postings,
            avg_len,
        }
    }

    /// Read and index a corpus file.
    pub fn from_corpus_file(path: &Path, params: Bm25Params, analyzer: Analyzer) -> Result<Self> {
        Self::build(read_corpus(path)?, params, analyzer)
    }

    pub fn len(&self) -> usize {
        self.paragraphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paragraphs.is_empty()
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn analyzer(&self) -> Analyzer {
        self.analyzer
    }

    pub fn paragraphs(&self) -> &[Paragraph] {
        &self.paragraphs
    }

    pub fn paragraph(&self, id: &str) -> Option<&Paragraph> {
        self.paragraphs.iter().find(|p| p.id == id)
    }

    pub fn average_length(&self) -> f64 {
        self.avg_len
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    /// Top `k` paragraphs containing at least one query term, by descending
    /// score; equal scores are ordered by doc id.
    pub fn top_k(&self, query: &str, k: usize) -> Vec<(String, f64)> {
        self.ranked(query, k)
            .into_iter()
            .map(|(doc, s)| (self.paragraphs[doc].id.clone(), s))
            .collect()
    }

    /// [`Self::top_k`] as knowledge snippets carrying the paragraph text.
    pub fn search(&self, query: &str, k: usize) -> Vec<KnowledgeSnippet> {
        self.ranked(query, k)
            .into_iter()
            .filter_map(|(doc, score)| {
                let p = &self.paragraphs[doc];
                KnowledgeSnippet::from_corpus(p.id.clone(), p.text.clone(), score).ok()
            })
            .collect()
    }

    fn ranked(&self, query: &str, k: usize) -> Vec<(usize, f64)> {
        if k == 0 || self.is_empty() {
            return Vec::new();
        }
        let n = self.paragraphs.len() as f64;
        let Bm25Params { k1, b } = self.params;
        let mut terms = self.analyzer.analyze(query);
        let mut seen = HashSet::new();
        terms.retain(|t| seen.insert(t.clone()));

        let mut scores: HashMap<usize, f64> = HashMap::new();
        for term in &terms {
            let Some(list) = self.postings.get(term) else { continue };
            let df = list.len() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            for p in list {
                let tf = p.tf as f64;
                let dl = self.doc_lengths[p.doc as usize] as f64;
                let norm = k1 * (1.0 - b + b * dl / self.avg_len);
                *scores.entry(p.doc as usize).or_default() += idf * tf * (k1 + 1.0) / (tf + norm);
            }
        }
        let mut ranked: Vec<(usize, f64)> = scores.into_iter().collect();
        ranked.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| self.paragraphs[a.0].id.cmp(&self.paragraphs[b.0].id))
        });
        ranked.truncate(k);
        ranked
    }
}

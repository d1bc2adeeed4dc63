//! Lexical relation triples linking premise words to hypothesis words.

use std::collections::HashSet;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{KnowledgeSnippet, SnippetSource};
use crate::text::{capitalize, tokenize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WordRelation {
    RelatedTo,
    Hypernym,
    Hyponym,
    DistinctFrom,
    Synonym,
    Antonym,
    IsA,
}

impl FromStr for WordRelation {
    type Err = Error;

    /// Accepts plain names and ConceptNet-style `/r/RelatedTo` labels.
    fn from_str(s: &str) -> Result<Self> {
        let key = s
            .trim()
            .trim_start_matches("/r/")
            .replace(['_', ' ', '-'], "")
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "relatedto" => WordRelation::RelatedTo,
            "hypernym" => WordRelation::Hypernym,
            "hyponym" => WordRelation::Hyponym,
            "distinctfrom" => WordRelation::DistinctFrom,
            "synonym" => WordRelation::Synonym,
            "antonym" => WordRelation::Antonym,
            "isa" => WordRelation::IsA,
            _ => return Err(Error::invalid_config(format!("unknown word relation `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WordRelationTriple {
    pub left: String,
    pub relation: WordRelation,
    pub right: String,
}

impl WordRelationTriple {
    pub fn new(left: &str, relation: WordRelation, right: &str) -> Result<Self> {
        let (left, right) = (left.trim().to_lowercase(), right.trim().to_lowercase());
        if left.is_empty() || right.is_empty() {
            return Err(Error::invalid_config("word relation with an empty word"));
        }
        Ok(WordRelationTriple { left, relation, right })
    }

    pub fn render(&self) -> String {
        let l = capitalize(&self.left);
        let r = &self.right;
        match self.relation {
            WordRelation::RelatedTo => format!("{l} is related to {r}."),
            WordRelation::Hypernym => format!("{l} is a hypernym of {r}."),
            WordRelation::Hyponym => format!("{l} is a hyponym of {r}."),
            WordRelation::DistinctFrom => format!("{l} is distinct from {r}."),
            WordRelation::Synonym => format!("{l} is a synonym of {r}."),
            WordRelation::Antonym => format!("{l} is an antonym of {r}."),
            WordRelation::IsA => {
                let article = if r.starts_with(['a', 'e', 'i', 'o', 'u']) {
                    "an"
                } else {
                    "a"
                };
                format!("{l} is {article} {r}.")
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    left: String,
    relation: String,
    right: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RelationStore {
    triples: Vec<WordRelationTriple>,
}

impl RelationStore {
    pub fn new(triples: Vec<WordRelationTriple>) -> Self {
        RelationStore { triples }
    }

    /// Newline-delimited JSON `{"left", "relation", "right"}`.
    pub fn from_file(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut triples = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let ingest = |message: String| Error::Ingest {
                path: path.display().to_string(),
                line: i + 1,
                message,
            };
            let rec: Record = serde_json::from_str(&line).map_err(|e| ingest(e.to_string()))?;
            let rel = rec.relation.parse().map_err(|e: Error| ingest(e.to_string()))?;
            triples.push(WordRelationTriple::new(&rec.left, rel, &rec.right).map_err(|e| ingest(e.to_string()))?);
        }
        Ok(RelationStore { triples })
    }

    pub fn triples(&self) -> &[WordRelationTriple] {
        &self.triples
    }
}

fn contains_phrase(tokens: &[String], phrase: &str) -> bool {
    let p = tokenize(phrase);
    !p.is_empty() && tokens.windows(p.len()).any(|w| w == p.as_slice())
}

/// Sentences for every triple with one word in the premise and the other in
/// the hypothesis (either direction), in store order, deduplicated.
pub fn word_relation_sentences(premise: &str, hypothesis: &str, store: &RelationStore) -> Vec<KnowledgeSnippet> {
    let (p, h) = (tokenize(premise), tokenize(hypothesis));
    let mut seen = HashSet::new();
    store
        .triples
        .iter()
        .filter(|t| {
            (contains_phrase(&p, &t.left) && contains_phrase(&h, &t.right))
                || (contains_phrase(&h, &t.left) && contains_phrase(&p, &t.right))
        })
        .map(WordRelationTriple::render)
        .filter(|s| seen.insert(s.clone()))
        .filter_map(|s| KnowledgeSnippet::new(s, SnippetSource::WordRelations).ok())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(l: &str, r: WordRelation, rr: &str) -> WordRelationTriple {
        WordRelationTriple::new(l, r, rr).unwrap()
    }

    #[test]
    fn templates() {
        assert_eq!(
            t("married", WordRelation::RelatedTo, "spouse").render(),
            "Married is related to spouse."
        );
        assert_eq!(
            t("collie", WordRelation::Hyponym, "dog").render(),
            "Collie is a hyponym of dog."
        );
        assert_eq!(
            t("rap", WordRelation::DistinctFrom, "rock").render(),
            "Rap is distinct from rock."
        );
        assert_eq!(
            t("elevation", WordRelation::Hypernym, "level").render(),
            "Elevation is a hypernym of level."
        );
        assert_eq!(
            t("dj", WordRelation::IsA, "entertainer").render(),
            "Dj is an entertainer."
        );
        assert_eq!(
            t("big", WordRelation::Antonym, "small").render(),
            "Big is an antonym of small."
        );
    }

    #[test]
    fn words_are_lowercased_and_nonempty() {
        assert_eq!(t("Married", WordRelation::RelatedTo, "Spouse").left, "married");
        assert!(WordRelationTriple::new(" ", WordRelation::IsA, "x").is_err());
        assert_eq!("/r/RelatedTo".parse::<WordRelation>().unwrap(), WordRelation::RelatedTo);
        assert!("Causes".parse::<WordRelation>().is_err());
    }

    #[test]
    fn triples_must_bridge_premise_and_hypothesis() {
        let store = RelationStore::new(vec![
            t("married", WordRelation::RelatedTo, "spouse"),
            t("married", WordRelation::RelatedTo, "spouse"),
            t("spouse", WordRelation::Synonym, "partner"),
            t("collie", WordRelation::Hyponym, "dog"),
        ]);
        let got = word_relation_sentences(
            "The Spouse of Charles are Lady Diana Spencer.",
            "Charles has been married twice.",
            &store,
        );
        let texts: Vec<_> = got.iter().map(|s| s.text.as_str()).collect();
        assert_eq!(texts, vec!["Married is related to spouse."]);
        assert!(got.iter().all(|s| s.source == SnippetSource::WordRelations));
        assert!(word_relation_sentences("", "", &store).is_empty());
    }
}

//! Fact selection (swap each top-path fact for the most faithful fact on the
//! same topic) and fact generation (rewrite unsupported facts from evidence).

use std::collections::HashSet;

use rayon::prelude::*;

use super::best_path_index;
use super::cluster::cluster_sentences;
use crate::error::{Error, Result};
use crate::faithfulness::fact_faithfulness;
use crate::gateway::ModelGateway;
use crate::model::{Fact, FactSet, FaithfulnessConfig, KnowledgeSnippet, Origin, ScoredPath, SentenceEvidence};
use crate::paths::is_chaining_sentence;
use crate::retrieval::select_premise;
use crate::text::{is_stopword, normalize_answer};

fn evidence_of(sp: &ScoredPath, sentence: usize) -> SentenceEvidence {
    sp.evidence
        .iter()
        .find(|e| e.sentence_index == sentence)
        .cloned()
        .unwrap_or_else(|| SentenceEvidence::empty(sentence))
}

/// Replace each fact of the best path with the most faithful member of its
/// topic cluster. Chaining sentences ("Thus, ...") are not facts.
///
/// A fact keeps its place when it already ties for the cluster maximum;
/// otherwise the earliest maximal member wins. Repeated texts are dropped.
pub fn fact_selection(
    gateway: &dyn ModelGateway,
    paths: &[ScoredPath],
    cfg: &FaithfulnessConfig,
    cluster_threshold: f64,
) -> Result<FactSet> {
    let top = best_path_index(paths).ok_or(Error::NoPaths)?;
    let mut ids = Vec::new();
    let mut texts = Vec::new();
    for (pi, sp) in paths.iter().enumerate() {
        for s in &sp.path.explanation {
            if !is_chaining_sentence(&s.text) {
                ids.push((pi, s.index));
                texts.push(((pi, s.index), s.text.as_str()));
            }
        }
    }
    let clusters = cluster_sentences(gateway, &texts, cluster_threshold)?;
    let score = |(pi, si): (usize, usize)| fact_faithfulness(&evidence_of(&paths[pi], si), cfg);
    let text_of = |(pi, si): (usize, usize)| -> &str {
        paths[pi]
            .path
            .explanation
            .iter()
            .find(|s| s.index == si)
            .map_or("", |s| s.text.as_str())
    };

    let mut seen = HashSet::new();
    let mut facts = Vec::new();
    for &id in ids.iter().filter(|(pi, _)| *pi == top) {
        let cluster = clusters
            .iter()
            .find(|c| c.members.contains(&id))
            .expect("every fact is clustered");
        let own = score(id)?;
        let mut best = (id, own);
        for &m in &cluster.members {
            let s = score(m)?;
            if s > best.1 {
                best = (m, s);
            }
        }
        let text = text_of(best.0).to_string();
        let origin = if best.0 == id || text == text_of(id) {
            Origin::Original
        } else {
            Origin::Selected
        };
        if seen.insert(text.clone()) {
            facts.push(Fact {
                text,
                faithfulness: best.1,
                origin,
            });
        }
    }
    Ok(FactSet { facts })
}

/// Named-entity-like spans: runs of capitalized words and numeric tokens.
pub fn extract_entities(sentence: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut run: Vec<&str> = Vec::new();
    let flush = |run: &mut Vec<&str>, out: &mut Vec<String>| {
        if !run.is_empty() {
            out.push(run.join(" "));
            run.clear();
        }
    };
    for (i, raw) in sentence.split_whitespace().enumerate() {
        let word = raw.trim_matches(|c: char| !c.is_alphanumeric());
        if word.is_empty() {
            flush(&mut run, &mut out);
            continue;
        }
        if word.chars().any(|c| c.is_ascii_digit()) {
            flush(&mut run, &mut out);
            out.push(word.to_string());
            continue;
        }
        let lower = word.to_lowercase();
        let capitalized = word.chars().next().is_some_and(char::is_uppercase);
        let function_word = is_stopword(&lower) || (i == 0 && is_chaining_sentence(word));
        if capitalized && !function_word {
            run.push(word);
        } else {
            flush(&mut run, &mut out);
        }
        // Punctuation after a word ends the run ("Paris, France").
        if raw.ends_with([',', ';', ':', '.', '?', '!']) {
            flush(&mut run, &mut out);
        }
    }
    flush(&mut run, &mut out);
    let mut seen = HashSet::new();
    out.retain(|e| seen.insert(e.clone()));
    out
}

/// A fact to repair, with its current evidence and the knowledge to draw on.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationInput {
    pub fact: Fact,
    pub evidence: SentenceEvidence,
    pub knowledge: Vec<KnowledgeSnippet>,
}

fn score_text(gateway: &dyn ModelGateway, text: &str, knowledge: &[KnowledgeSnippet]) -> Result<SentenceEvidence> {
    let Some((premise, m)) = select_premise(gateway, text, knowledge)? else {
        return Ok(SentenceEvidence::empty(0));
    };
    let nli = gateway.nli(&premise.text, text)?;
    SentenceEvidence::new(0, Some(premise), m, nli.entailment, nli.contradiction)
        .map_err(|e| Error::backend(e.to_string()))
}

fn repair(gateway: &dyn ModelGateway, input: &GenerationInput, cfg: &FaithfulnessConfig) -> Result<Fact> {
    let original = input.fact.clone();
    if input.evidence.entailment >= cfg.t_e {
        return Ok(original);
    }
    let own = fact_faithfulness(&input.evidence, cfg)?;
    let context = input
        .knowledge
        .iter()
        .map(|k| k.text.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    let mut best: Option<Fact> = None;
    for entity in extract_entities(&original.text) {
        let question = gateway.generate_question(&original.text, &entity)?;
        if question.trim().is_empty() {
            continue;
        }
        // Keep only questions whose answer, read off the fact itself, is the entity.
        let check = gateway.answer(&question, &original.text)?;
        if normalize_answer(&check) != normalize_answer(&entity) {
            continue;
        }
        let answer = gateway.answer(&question, &context)?;
        if answer.trim().is_empty() {
            continue;
        }
        let declarative = gateway.qa_to_declarative(&question, &answer)?;
        if declarative.trim().is_empty() {
            continue;
        }
        let ev = score_text(gateway, &declarative, &input.knowledge)?;
        let f = fact_faithfulness(&ev, cfg)?;
        if f > own && ev.contradiction < cfg.t_c && best.as_ref().is_none_or(|b| f > b.faithfulness) {
            best = Some(Fact {
                text: declarative,
                faithfulness: f,
                origin: Origin::Generated,
            });
        }
    }
    Ok(best.unwrap_or(original))
}

/// Rewrite facts whose entailment falls below `t_e` from retrieved knowledge.
///
/// For every entity in such a fact a question is generated, kept only if
/// answering it over the fact returns the entity, answered over the
/// knowledge, and turned back into a sentence. The best generated sentence
/// replaces the fact when it is more faithful and not contradicted.
pub fn fact_generation(
    gateway: &dyn ModelGateway,
    inputs: &[GenerationInput],
    cfg: &FaithfulnessConfig,
) -> Result<FactSet> {
    cfg.validate()?;
    let facts = inputs
        .par_iter()
        .map(|input| repair(gateway, input, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(FactSet { facts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entities() {
        assert_eq!(extract_entities("Aristotle died in 2000."), vec!["Aristotle", "2000"]);
        assert_eq!(extract_entities("The first laptop was invented in 1980."), vec!["1980"]);
        assert_eq!(
            extract_entities("Tim Pawlenty served as governor of Minnesota from 2003 to 2011."),
            vec!["Tim Pawlenty", "Minnesota", "2003", "2011"]
        );
        assert_eq!(
            extract_entities("Thus, Aristotle did not use a laptop."),
            vec!["Aristotle"]
        );
        assert_eq!(
            extract_entities("He lived in Paris, France."),
            vec!["He", "Paris", "France"]
        );
        assert!(extract_entities("").is_empty());
    }
}

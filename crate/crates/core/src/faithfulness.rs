//! Per-sentence evidence scores and path-level faithfulness.

use crate::error::{Error, Result};
use crate::gateway::ModelGateway;
use crate::model::{FaithfulnessConfig, FaithfulnessFn, KnowledgeSnippet, ReasoningPath, ScoredPath, SentenceEvidence};
use crate::retrieval::select_premise;

/// Similarity and NLI scores of `sentence` against `premise`.
pub fn score_sentence(
    gateway: &dyn ModelGateway,
    sentence_index: usize,
    sentence: &str,
    premise: Option<&KnowledgeSnippet>,
) -> Result<SentenceEvidence> {
    let Some(premise) = premise else {
        return Ok(SentenceEvidence::empty(sentence_index));
    };
    let m = gateway.similarity(sentence, &premise.text)?;
    let nli = gateway.nli(&premise.text, sentence)?;
    SentenceEvidence::new(
        sentence_index,
        Some(premise.clone()),
        m,
        nli.entailment,
        nli.contradiction,
    )
    .map_err(|e| Error::backend(e.to_string()))
}

fn term(e: &SentenceEvidence, cfg: &FaithfulnessConfig) -> f64 {
    let (m, en, c) = (e.similarity, e.entailment, e.contradiction);
    match cfg.function {
        FaithfulnessFn::F1 => {
            let support = if m >= cfg.t_m { m } else { en };
            support - c
        }
        FaithfulnessFn::F2 => m + en,
        FaithfulnessFn::F3 => {
            let gain = if en >= cfg.t_e { en } else { 0.0 };
            let loss = if c >= cfg.t_c { c } else { 0.0 };
            gain - loss
        }
    }
}

/// Sum of the configured function over the evidence list; 0 when empty.
pub fn path_faithfulness(evidence: &[SentenceEvidence], cfg: &FaithfulnessConfig) -> Result<f64> {
    cfg.validate()?;
    Ok(evidence.iter().map(|e| term(e, cfg)).sum())
}

/// Faithfulness of a single fact.
pub fn fact_faithfulness(evidence: &SentenceEvidence, cfg: &FaithfulnessConfig) -> Result<f64> {
    path_faithfulness(std::slice::from_ref(evidence), cfg)
}

/// Select a premise for every explanation sentence and score the path.
///
/// `candidates[i]` are the retrieved snippets for sentence `i`.
pub fn score_path(
    gateway: &dyn ModelGateway,
    path: &ReasoningPath,
    candidates: &[Vec<KnowledgeSnippet>],
    cfg: &FaithfulnessConfig,
) -> Result<ScoredPath> {
    if candidates.len() != path.explanation.len() {
        return Err(Error::invalid_config(format!(
            "{} candidate lists for {} sentences",
            candidates.len(),
            path.explanation.len()
        )));
    }
    let mut selected = Vec::with_capacity(candidates.len());
    for (sentence, cands) in path.explanation.iter().zip(candidates) {
        selected.push(select_premise(gateway, &sentence.text, cands)?);
    }
    let live: Vec<usize> = (0..selected.len()).filter(|&i| selected[i].is_some()).collect();
    let pairs: Vec<(&str, &str)> = live
        .iter()
        .map(|&i| {
            let (premise, _) = selected[i].as_ref().expect("live");
            (premise.text.as_str(), path.explanation[i].text.as_str())
        })
        .collect();
    let nli = gateway.nli_batch(&pairs)?;
    if nli.len() != pairs.len() {
        return Err(Error::backend(format!(
            "nli: expected {} scores, got {}",
            pairs.len(),
            nli.len()
        )));
    }
    let mut evidence: Vec<SentenceEvidence> = (0..selected.len()).map(SentenceEvidence::empty).collect();
    for (&i, score) in live.iter().zip(nli) {
        let (premise, m) = selected[i].take().expect("live");
        evidence[i] = SentenceEvidence::new(i, Some(premise), m, score.entailment, score.contradiction)
            .map_err(|e| Error::backend(e.to_string()))?;
    }
    let faithfulness = path_faithfulness(&evidence, cfg)?;
    Ok(ScoredPath {
        path: path.clone(),
        faithfulness,
        evidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SnippetSource;

    fn ev(m: f64, e: f64, c: f64) -> SentenceEvidence {
        let k = KnowledgeSnippet::new("k", SnippetSource::GoldEvidence).unwrap();
        SentenceEvidence::new(0, Some(k), m, e, c).unwrap()
    }

    fn cfg(f: FaithfulnessFn) -> FaithfulnessConfig {
        FaithfulnessConfig::with_function(f)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn f1_branches() {
        assert!(close(
            path_faithfulness(&[ev(0.7, 0.9, 0.1)], &cfg(FaithfulnessFn::F1)).unwrap(),
            0.6
        ));
        assert!(close(
            path_faithfulness(&[ev(0.3, 0.9, 0.1)], &cfg(FaithfulnessFn::F1)).unwrap(),
            0.8
        ));
        // M exactly at the threshold takes the similarity branch.
        assert!(close(
            path_faithfulness(&[ev(0.5, 0.9, 0.0)], &cfg(FaithfulnessFn::F1)).unwrap(),
            0.5
        ));
    }

    #[test]
    fn f2_sums() {
        assert!(close(
            fact_faithfulness(&ev(0.7, 0.9, 0.4), &cfg(FaithfulnessFn::F2)).unwrap(),
            1.6
        ));
    }

    #[test]
    fn f3_gates() {
        let got = path_faithfulness(&[ev(0.0, 0.7, 0.5), ev(0.0, 0.5, 0.995)], &cfg(FaithfulnessFn::F3)).unwrap();
        assert!(close(got, -0.295));
        let at = path_faithfulness(&[ev(0.0, 0.6, 0.99)], &cfg(FaithfulnessFn::F3)).unwrap();
        assert!(close(at, 0.6 - 0.99));
    }

    #[test]
    fn empty_and_sentinel() {
        for f in [FaithfulnessFn::F1, FaithfulnessFn::F2, FaithfulnessFn::F3] {
            assert_eq!(path_faithfulness(&[], &cfg(f)).unwrap(), 0.0);
            assert_eq!(fact_faithfulness(&SentenceEvidence::empty(0), &cfg(f)).unwrap(), 0.0);
        }
    }

    #[test]
    fn bad_thresholds_rejected() {
        let mut c = cfg(FaithfulnessFn::F1);
        c.t_m = -0.1;
        assert!(path_faithfulness(&[], &c).is_err());
    }
}

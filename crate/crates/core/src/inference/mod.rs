//! Answer selection: faithfulness-weighted voting, the self-consistency
//! baseline, best-path selection, and the fact-repair variants.

mod cluster;
mod facts;
mod final_step;

use std::collections::BTreeMap;

pub use cluster::{cluster_sentences, TopicCluster, DEFAULT_CLUSTER_THRESHOLD};
pub use facts::{extract_entities, fact_generation, fact_selection, GenerationInput};
pub use final_step::{final_inference, FinalBackend};

use crate::error::{Error, Result};
use crate::model::{Prediction, ReasoningPath, ScoredPath, Verdict, VerdictMode};

struct Tally {
    score: f64,
    count: usize,
    first_sample: usize,
    first_pos: usize,
}

/// Pick the prediction with the largest summed score.
///
/// Ties go to the prediction backed by more paths, then to the one that
/// first appears at the lowest sample index. Paths without a parsed
/// prediction do not vote; when no path has one the verdict is unparsed.
fn tally(paths: &[ScoredPath], mode: VerdictMode) -> Result<Verdict> {
    if paths.is_empty() {
        return Err(Error::NoPaths);
    }
    let mut tallies: BTreeMap<&str, Tally> = BTreeMap::new();
    for (pos, sp) in paths.iter().enumerate() {
        let p = &sp.path.prediction;
        if !p.is_parsed() {
            continue;
        }
        let t = tallies.entry(p.normalized.as_str()).or_insert(Tally {
            score: 0.0,
            count: 0,
            first_sample: sp.path.sample_index,
            first_pos: pos,
        });
        t.score += sp.faithfulness;
        t.count += 1;
        if sp.path.sample_index < t.first_sample {
            t.first_sample = sp.path.sample_index;
            t.first_pos = pos;
        }
    }
    let winner = tallies.values().max_by(|a, b| {
        a.score
            .total_cmp(&b.score)
            .then(a.count.cmp(&b.count))
            .then(b.first_sample.cmp(&a.first_sample))
    });
    let (prediction, selected_path) = match winner {
        Some(t) => (paths[t.first_pos].path.prediction.clone(), Some(t.first_pos)),
        None => (Prediction::unparsed(), None),
    };
    Ok(Verdict {
        prediction,
        candidate_scores: tallies.iter().map(|(k, t)| (k.to_string(), t.score)).collect(),
        per_path: paths.to_vec(),
        mode,
        selected_path,
        facts: None,
    })
}

/// Faithfulness-weighted vote over scored paths.
pub fn vote(paths: &[ScoredPath]) -> Result<Verdict> {
    tally(paths, VerdictMode::Vote)
}

/// Majority vote: every path counts 1.
pub fn self_consistency(paths: &[ReasoningPath]) -> Result<Verdict> {
    let unit: Vec<ScoredPath> = paths.iter().map(|p| ScoredPath::bare(p.clone(), 1.0)).collect();
    tally(&unit, VerdictMode::SelfConsistency)
}

/// Position of the most faithful path, preferring paths with a parsed
/// prediction; ties go to the lowest sample index.
pub fn best_path_index(paths: &[ScoredPath]) -> Option<usize> {
    (0..paths.len()).max_by(|&a, &b| {
        let (pa, pb) = (&paths[a], &paths[b]);
        pa.path
            .prediction
            .is_parsed()
            .cmp(&pb.path.prediction.is_parsed())
            .then(pa.faithfulness.total_cmp(&pb.faithfulness))
            .then(pb.path.sample_index.cmp(&pa.path.sample_index))
    })
}

/// The single best-supported path, taken as is without voting.
pub fn best_path(paths: &[ScoredPath]) -> Result<Verdict> {
    let i = best_path_index(paths).ok_or(Error::NoPaths)?;
    let chosen = &paths[i];
    let mut candidate_scores = BTreeMap::new();
    if chosen.path.prediction.is_parsed() {
        candidate_scores.insert(chosen.path.prediction.normalized.clone(), chosen.faithfulness);
    }
    Ok(Verdict {
        prediction: chosen.path.prediction.clone(),
        candidate_scores,
        per_path: paths.to_vec(),
        mode: VerdictMode::BestPath,
        selected_path: Some(i),
        facts: None,
    })
}

//! Deterministic synthetic inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rr_core::retrieval::Paragraph;
use rr_core::{Prediction, ReasoningPath, ScoredPath, SentenceEvidence, TaskKind};

const WORDS: [&str; 16] = [
    "river",
    "castle",
    "engine",
    "laptop",
    "philosopher",
    "planet",
    "garden",
    "violin",
    "harbor",
    "empire",
    "comet",
    "glacier",
    "senate",
    "temple",
    "desert",
    "library",
];

/// `n` paragraphs of 20 to 80 words drawn from a small vocabulary.
pub fn corpus(n: usize, seed: u64) -> Vec<Paragraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let len = rng.random_range(20..80);
            let text: Vec<&str> = (0..len).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
            Paragraph {
                id: format!("doc-{i}"),
                title: String::new(),
                text: text.join(" "),
            }
        })
        .collect()
}

/// A query of `len` vocabulary words.
pub fn query(len: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| WORDS[rng.random_range(0..WORDS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

/// Evidence rows with uniform scores.
pub fn evidence(n: usize, seed: u64) -> Vec<SentenceEvidence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| SentenceEvidence::new(i, None, rng.random(), rng.random(), rng.random()).expect("scores in range"))
        .collect()
}

/// Scored paths over `labels` distinct answers.
pub fn scored_paths(n: usize, labels: usize, seed: u64) -> Vec<ScoredPath> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let path = ReasoningPath {
                raw: String::new(),
                explanation: Vec::new(),
                prediction: Prediction::from_surface(
                    format!("answer {}", rng.random_range(0..labels)),
                    TaskKind::Temporal,
                ),
                sample_index: i,
            };
            ScoredPath::bare(path, rng.random_range(-3.0..3.0))
        })
        .collect()
}

//! Hand-checkable lexical stand-ins for embedding similarity and NLI.

use std::collections::{HashMap, HashSet};

use crate::text::{content_tokens, tokenize};

/// Cosine similarity of content-word count vectors.
pub fn cosine(a: &str, b: &str) -> f64 {
    let count = |s: &str| {
        let mut m: HashMap<String, f64> = HashMap::new();
        for t in content_tokens(s) {
            *m.entry(t).or_default() += 1.0;
        }
        m
    };
    let (ca, cb) = (count(a), count(b));
    if ca.is_empty() || cb.is_empty() {
        return 0.0;
    }
    let dot: f64 = ca.iter().filter_map(|(t, x)| cb.get(t).map(|y| x * y)).sum();
    let norm = |m: &HashMap<String, f64>| m.values().map(|v| v * v).sum::<f64>().sqrt();
    (dot / (norm(&ca) * norm(&cb))).clamp(0.0, 1.0)
}

/// Fraction of the hypothesis' distinct content words that occur in the premise.
pub fn containment(premise: &str, hypothesis: &str) -> f64 {
    let hyp: HashSet<String> = content_tokens(hypothesis).into_iter().collect();
    if hyp.is_empty() {
        return 0.0;
    }
    let prem: HashSet<String> = tokenize(premise).into_iter().collect();
    hyp.iter().filter(|t| prem.contains(*t)).count() as f64 / hyp.len() as f64
}

/// Entailment under the lexical mock: containment, promoted to 1.0 at 90%.
pub fn entailment(premise: &str, hypothesis: &str) -> f64 {
    let c = containment(premise, hypothesis);
    if c >= 0.9 {
        1.0
    } else {
        c
    }
}

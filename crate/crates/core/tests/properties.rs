//! Property suites checked against independently written reference code.

use std::collections::HashMap;

use proptest::prelude::*;
use rr_core::faithfulness::path_faithfulness;
use rr_core::inference::{self_consistency, vote};
use rr_core::paths::{split_sentences, SplitterConfig};
use rr_core::retrieval::{Analyzer, Bm25Index, Bm25Params, Paragraph};
use rr_core::text::normalize_answer;
use rr_core::{FaithfulnessConfig, FaithfulnessFn, Prediction, ReasoningPath, ScoredPath, SentenceEvidence, TaskKind};

const VOCAB: [&str; 8] = ["apple", "banana", "cherry", "date", "elder", "fig", "grape", "honey"];

fn textbook_bm25(docs: &[Vec<&str>], query: &[&str], k1: f64, b: f64) -> Vec<f64> {
    let n = docs.len() as f64;
    let avg = docs.iter().map(|d| d.len()).sum::<usize>() as f64 / n;
    let mut q: Vec<&str> = Vec::new();
    for t in query {
        if !q.contains(t) {
            q.push(t);
        }
    }
    docs.iter()
        .map(|d| {
            let mut s = 0.0;
            for t in &q {
                let df = docs.iter().filter(|x| x.contains(t)).count() as f64;
                let tf = d.iter().filter(|w| *w == t).count() as f64;
                if tf == 0.0 {
                    continue;
                }
                let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                s += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * d.len() as f64 / avg));
            }
            s
        })
        .collect()
}

fn corpus_strategy() -> impl Strategy<Value = (Vec<Vec<usize>>, Vec<usize>)> {
    (
        prop::collection::vec(prop::collection::vec(0..VOCAB.len(), 1..12), 1..=20),
        prop::collection::vec(0..VOCAB.len(), 1..5),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn bm25_matches_textbook((docs, query) in corpus_strategy()) {
        let words: Vec<Vec<&str>> = docs.iter().map(|d| d.iter().map(|&i| VOCAB[i]).collect()).collect();
        let paragraphs: Vec<Paragraph> = words
            .iter()
            .enumerate()
            .map(|(i, w)| Paragraph { id: format!("d{i:02}"), title: String::new(), text: w.join(" ") })
            .collect();
        let idx = Bm25Index::build(paragraphs, Bm25Params { k1: 0.9, b: 0.4 }, Analyzer::default()).unwrap();
        let q: Vec<&str> = query.iter().map(|&i| VOCAB[i]).collect();
        let expected = textbook_bm25(&words, &q, 0.9, 0.4);
        let got = idx.top_k(&q.join(" "), words.len());
        let got_map: HashMap<&str, f64> = got.iter().map(|(id, s)| (id.as_str(), *s)).collect();
        for (i, e) in expected.iter().enumerate() {
            let id = format!("d{i:02}");
            match got_map.get(id.as_str()) {
                Some(s) => prop_assert!((s - e).abs() <= 1e-9, "{id}: {s} vs {e}"),
                None => prop_assert_eq!(*e, 0.0),
            }
        }
        for w in got.windows(2) {
            prop_assert!(w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0));
        }
    }
}

fn reference_term(m: f64, e: f64, c: f64, f: FaithfulnessFn, cfg: &FaithfulnessConfig) -> f64 {
    match f {
        FaithfulnessFn::F1 => {
            if m >= cfg.t_m {
                m - c
            } else {
                e - c
            }
        }
        FaithfulnessFn::F2 => m + e,
        FaithfulnessFn::F3 => {
            let mut s = 0.0;
            if e >= cfg.t_e {
                s += e;
            }
            if c >= cfg.t_c {
                s -= c;
            }
            s
        }
    }
}

fn unit_or_boundary() -> impl Strategy<Value = f64> {
    prop_oneof![
        3 => 0.0..=1.0f64,
        1 => prop::sample::select(vec![0.0, 0.5, 0.6, 0.99, 1.0]),
    ]
}

fn evidence_list() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((unit_or_boundary(), unit_or_boundary(), unit_or_boundary()), 0..8)
}

fn build(list: &[(f64, f64, f64)]) -> Vec<SentenceEvidence> {
    list.iter()
        .enumerate()
        .map(|(i, &(m, e, c))| SentenceEvidence::new(i, None, m, e, c).unwrap())
        .collect()
}

const FNS: [FaithfulnessFn; 3] = [FaithfulnessFn::F1, FaithfulnessFn::F2, FaithfulnessFn::F3];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn faithfulness_matches_reference(list in evidence_list()) {
        let ev = build(&list);
        for f in FNS {
            let cfg = FaithfulnessConfig::with_function(f);
            let expected: f64 = list.iter().map(|&(m, e, c)| reference_term(m, e, c, f, &cfg)).sum();
            let got = path_faithfulness(&ev, &cfg).unwrap();
            prop_assert!((got - expected).abs() <= 1e-12, "{f:?}: {got} vs {expected}");
        }
    }

    #[test]
    fn faithfulness_is_additive(a in evidence_list(), b in evidence_list()) {
        for f in FNS {
            let cfg = FaithfulnessConfig::with_function(f);
            let joined: Vec<_> = a.iter().chain(b.iter()).copied().collect();
            let whole = path_faithfulness(&build(&joined), &cfg).unwrap();
            let parts = path_faithfulness(&build(&a), &cfg).unwrap() + path_faithfulness(&build(&b), &cfg).unwrap();
            prop_assert!((whole - parts).abs() <= 1e-12);
        }
    }

    #[test]
    fn faithfulness_is_monotone(list in evidence_list(), i in 0usize..8, de in 0.0..=1.0f64, dc in 0.0..=1.0f64) {
        prop_assume!(!list.is_empty());
        let i = i % list.len();
        for f in FNS {
            let cfg = FaithfulnessConfig::with_function(f);
            let base = path_faithfulness(&build(&list), &cfg).unwrap();
            let mut more_e = list.clone();
            more_e[i].1 = (more_e[i].1 + de).min(1.0);
            prop_assert!(path_faithfulness(&build(&more_e), &cfg).unwrap() >= base - 1e-12);
            let mut more_c = list.clone();
            more_c[i].2 = (more_c[i].2 + dc).min(1.0);
            prop_assert!(path_faithfulness(&build(&more_c), &cfg).unwrap() <= base + 1e-12);
        }
    }
}

fn path(label: &str, i: usize) -> ReasoningPath {
    ReasoningPath {
        raw: String::new(),
        explanation: Vec::new(),
        prediction: Prediction::from_surface(label, TaskKind::Temporal),
        sample_index: i,
    }
}

/// Enumerate every candidate and keep the best by (sum, count, first index).
fn brute_force(items: &[(usize, f64)]) -> (String, HashMap<String, f64>) {
    let mut sums: HashMap<String, f64> = HashMap::new();
    let mut best: Option<(f64, usize, std::cmp::Reverse<usize>, String)> = None;
    for cand in 0..4 {
        let label = format!("p{cand}");
        let members: Vec<usize> = (0..items.len()).filter(|&i| items[i].0 == cand).collect();
        if members.is_empty() {
            continue;
        }
        let mut s = 0.0;
        for &i in &members {
            s += items[i].1;
        }
        sums.insert(label.clone(), s);
        let key = (s, members.len(), std::cmp::Reverse(members[0]), label);
        let better = match &best {
            None => true,
            Some(b) => (key.0, key.1, key.2) > (b.0, b.1, b.2),
        };
        if better {
            best = Some(key);
        }
    }
    let b = best.unwrap();
    (b.3, sums)
}

fn vote_instance() -> impl Strategy<Value = Vec<(usize, f64)>> {
    prop::collection::vec(
        (
            0usize..4,
            prop_oneof![3 => -3.0..=3.0f64, 1 => prop::sample::select(vec![-1.0, 0.0, 0.5, 1.0])],
        ),
        1..=10,
    )
}

fn scored(items: &[(usize, f64)]) -> Vec<ScoredPath> {
    items
        .iter()
        .enumerate()
        .map(|(i, &(c, s))| ScoredPath::bare(path(&format!("p{c}"), i), s))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn vote_matches_enumeration(items in vote_instance()) {
        let v = vote(&scored(&items)).unwrap();
        let (label, sums) = brute_force(&items);
        prop_assert_eq!(&v.prediction.normalized, &label);
        prop_assert_eq!(v.candidate_scores.len(), sums.len());
        for (k, s) in &sums {
            prop_assert_eq!(v.candidate_scores[k].to_bits(), s.to_bits());
        }
    }

    #[test]
    fn unit_vote_is_majority(labels in prop::collection::vec(0usize..4, 1..=10)) {
        let paths: Vec<ReasoningPath> = labels.iter().enumerate().map(|(i, &c)| path(&format!("p{c}"), i)).collect();
        let unit: Vec<ScoredPath> = paths.iter().cloned().map(|p| ScoredPath::bare(p, 1.0)).collect();
        prop_assert_eq!(vote(&unit).unwrap().prediction, self_consistency(&paths).unwrap().prediction);
    }

    /// Scores are multiples of 1/4 and scalings are integer times a power of
    /// two, so every scaled sum is exact and ties survive scaling.
    #[test]
    fn vote_is_scale_invariant(
        items in prop::collection::vec((0usize..4, -12i32..=12), 1..=10),
        scales in prop::collection::vec((1u32..1000, -10i32..=10), 10),
    ) {
        let base: Vec<(usize, f64)> = items.iter().map(|&(c, q)| (c, q as f64 / 4.0)).collect();
        let expected = vote(&scored(&base)).unwrap().prediction;
        for (m, e) in scales {
            let k = m as f64 * 2f64.powi(e);
            let scaled: Vec<(usize, f64)> = base.iter().map(|&(c, s)| (c, s * k)).collect();
            prop_assert_eq!(&vote(&scored(&scaled)).unwrap().prediction, &expected);
        }
    }

    #[test]
    fn normalization_is_idempotent(s in "[ -~]{0,40}") {
        let once = normalize_answer(&s);
        prop_assert_eq!(normalize_answer(&once), once);
    }

    /// Words have at least three letters so none collides with an abbreviation.
    #[test]
    fn splitter_round_trips(sentences in prop::collection::vec(("[A-Z][a-z]{2,8}", prop::collection::vec("[a-z]{3,8}|[0-9]{1,4}", 0..6), prop::sample::select(vec![".", "?", "!"])), 1..6)) {
        let parts: Vec<String> = sentences
            .iter()
            .map(|(head, rest, end)| {
                let mut words = vec![head.clone()];
                words.extend(rest.iter().cloned());
                format!("{}{end}", words.join(" "))
            })
            .collect();
        let text = parts.join(" ");
        let got: Vec<String> = split_sentences(&text, &SplitterConfig::default()).into_iter().map(|s| s.text).collect();
        prop_assert_eq!(got, parts);
    }
}

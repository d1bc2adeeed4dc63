use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rr_bench::{corpus, evidence, query, scored_paths};
use rr_core::faithfulness::path_faithfulness;
use rr_core::inference::vote;
use rr_core::retrieval::{Analyzer, Bm25Index, Bm25Params};
use rr_core::{FaithfulnessConfig, FaithfulnessFn};

fn bm25(c: &mut Criterion) {
    let mut group = c.benchmark_group("bm25");
    for n in [1_000, 10_000] {
        let docs = corpus(n, 1);
        group.bench_with_input(BenchmarkId::new("build", n), &docs, |b, docs| {
            b.iter(|| Bm25Index::build(docs.clone(), Bm25Params::default(), Analyzer::default()).unwrap())
        });
        let idx = Bm25Index::build(docs, Bm25Params::default(), Analyzer::default()).unwrap();
        let q = query(8, 2);
        group.bench_with_input(BenchmarkId::new("top10", n), &q, |b, q| {
            b.iter(|| idx.top_k(black_box(q), 10))
        });
    }
    group.finish();
}

fn faithfulness(c: &mut Criterion) {
    let ev = evidence(8, 3);
    let mut group = c.benchmark_group("faithfulness");
    for f in [FaithfulnessFn::F1, FaithfulnessFn::F2, FaithfulnessFn::F3] {
        let cfg = FaithfulnessConfig::with_function(f);
        group.bench_function(format!("{f:?}"), |b| {
            b.iter(|| path_faithfulness(black_box(&ev), &cfg).unwrap())
        });
    }
    group.finish();
}

fn voting(c: &mut Criterion) {
    let mut group = c.benchmark_group("vote");
    for n in [10, 40] {
        let paths = scored_paths(n, 4, 4);
        group.bench_with_input(BenchmarkId::from_parameter(n), &paths, |b, p| {
            b.iter(|| vote(black_box(p)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bm25, faithfulness, voting);
criterion_main!(benches);

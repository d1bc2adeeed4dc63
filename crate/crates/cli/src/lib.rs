//! Command implementations behind the `rr` binary.

mod explain;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rr_core::config::RunConfig;
use rr_core::eval::{read_records, run_experiment, RunOptions, RECORDS_FILE};
use rr_core::retrieval::{read_corpus, Analyzer, Bm25Index, Bm25Params, KnowledgeBase};
use rr_core::{Error, Pipeline, Result};

pub use explain::render_trace;

/// Exit status of a finished run that stopped before every example was recorded.
pub const EXIT_PARTIAL: u8 = 2;
/// Exit status for configuration, input and I/O errors.
pub const EXIT_ERROR: u8 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "rr",
    version,
    about = "Verify sampled reasoning paths against retrieved knowledge"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a BM25 snapshot from an NDJSON corpus.
    Index(IndexArgs),
    /// Evaluate a dataset and write records.jsonl and summary.json.
    Run(Box<RunArgs>),
    /// Print the per-path evidence trace for one recorded example.
    Explain(ExplainArgs),
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// NDJSON file with `id`, `text` and optional `title` per line.
    pub corpus: PathBuf,
    /// Snapshot file to write.
    pub out: PathBuf,
    #[arg(long)]
    pub stem: bool,
    #[arg(long, default_value_t = Bm25Params::default().k1)]
    pub k1: f64,
    #[arg(long, default_value_t = Bm25Params::default().b)]
    pub b: f64,
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// Dataset file (directory for tabular data); overrides `dataset.path`.
    pub dataset: Option<PathBuf>,
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// commonsense, temporal or tabular.
    #[arg(long)]
    pub task: Option<String>,
    /// zero-shot, few-shot, cot, self-consistency, rr, best-path, variant-i,
    /// variant-ii, query-based-retrieval, empty-facts or gold-facts.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_tokens: Option<usize>,
    /// f1, f2 or f3.
    #[arg(long)]
    pub faithfulness: Option<String>,
    /// Retrieval granularity: decomposition or query-based.
    #[arg(long)]
    pub retrieval: Option<String>,
    /// Comma-separated knowledge sources: bm25, temporal, words, table, gold.
    #[arg(long, value_delimiter = ',')]
    pub sources: Option<Vec<String>>,
    #[arg(long)]
    pub top_k: Option<usize>,
    /// qa or completion.
    #[arg(long)]
    pub final_backend: Option<String>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub split_seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Stop after this many new examples.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Keep records already in the output directory.
    #[arg(long)]
    pub resume: bool,
    /// Serve every model call from this mock table; no network is used.
    #[arg(long)]
    pub mock: Option<PathBuf>,
    #[arg(long)]
    pub endpoint: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    /// Run directory or records.jsonl file.
    pub report: PathBuf,
    pub example_id: String,
}

fn index(args: &IndexArgs) -> Result<u8> {
    let paragraphs = read_corpus(&args.corpus)?;
    if paragraphs.is_empty() {
        warn!("{} holds no paragraphs; writing an empty index", args.corpus.display());
    }
    let params = Bm25Params { k1: args.k1, b: args.b };
    let idx = Bm25Index::build(paragraphs, params, Analyzer { stem: args.stem })?;
    idx.save(&args.out)?;
    println!("indexed {} paragraphs -> {}", idx.len(), args.out.display());
    Ok(0)
}

/// Overlay command-line flags on a loaded configuration.
pub fn apply_flags(cfg: &mut RunConfig, a: &RunArgs) -> Result<()> {
    if let Some(p) = &a.dataset {
        cfg.dataset.path = Some(p.clone());
    }
    if let Some(t) = &a.task {
        cfg.dataset.task = t.clone();
    }
    if let Some(m) = &a.mode {
        cfg.inference.method = m.clone();
    }
    if a.n.is_some() {
        cfg.sampling.n = a.n;
    }
    if let Some(t) = a.temperature {
        cfg.sampling.temperature = t;
    }
    if let Some(t) = a.max_tokens {
        cfg.sampling.max_tokens = t;
    }
    if let Some(f) = &a.faithfulness {
        cfg.faithfulness.function = Some(f.clone());
    }
    if let Some(g) = &a.retrieval {
        cfg.retrieval.granularity = g.parse()?;
    }
    if let Some(s) = &a.sources {
        cfg.retrieval.sources = Some(s.clone());
    }
    if let Some(k) = a.top_k {
        cfg.retrieval.top_k = k;
    }
    if let Some(b) = &a.final_backend {
        cfg.inference.final_backend = b.parse()?;
    }
    if let Some(p) = &a.corpus {
        cfg.paths.corpus = Some(p.clone());
    }
    if let Some(p) = &a.index {
        cfg.paths.index = Some(p.clone());
    }
    if let Some(s) = a.split_seed {
        cfg.dataset.split_seed = s;
    }
    if let Some(p) = &a.out_dir {
        cfg.run.out_dir = p.clone();
    }
    if let Some(w) = a.workers {
        cfg.run.workers = w;
    }
    if a.limit.is_some() {
        cfg.run.limit = a.limit;
    }
    if a.resume {
        cfg.run.resume = true;
    }
    if let Some(t) = &a.mock {
        cfg.gateway.mock_mode = true;
        cfg.gateway.mock_table = Some(t.clone());
    }
    if let Some(e) = &a.endpoint {
        cfg.gateway.endpoint = e.clone();
        cfg.gateway.mock_mode = false;
    }
    Ok(())
}

fn run(args: &RunArgs) -> Result<u8> {
    let started = Instant::now();
    let mut cfg = RunConfig::from_process_env(args.config.as_deref())?;
    apply_flags(&mut cfg, args)?;
    let resolved = cfg.resolve()?;
    let p = &resolved.pipeline;
    let examples = cfg.load_examples()?;
    let knowledge = if p.method.uses_retrieval() {
        cfg.load_knowledge(&p.retrieval.sources)?
    } else {
        KnowledgeBase::default()
    };
    let gateway = cfg.gateway.connect()?;
    info!(
        "{} examples, mode {} (n={}, temperature={}), {} workers",
        examples.len(),
        resolved.mode,
        p.n,
        p.temperature,
        cfg.run.workers
    );

    let mut config = cfg.to_json();
    config["resolved"] = serde_json::json!({
        "method": p.method.as_str(),
        "n": p.n,
        "temperature": p.temperature,
        "max_tokens": p.max_tokens,
        "faithfulness": p.faithfulness,
        "granularity": p.retrieval.granularity,
        "sources": p.retrieval.sources.iter().map(|s| rr_core::retrieval::source_name(*s)).collect::<Vec<_>>(),
        "top_k": p.retrieval.top_k,
    });
    let opts = RunOptions {
        out_dir: cfg.run.out_dir.clone(),
        workers: cfg.run.workers,
        resume: cfg.run.resume,
        limit: cfg.run.limit,
        mode: resolved.mode.clone(),
        task: resolved.task,
        split_seed: cfg.split_seed(),
        config,
    };
    let pipeline = Pipeline {
        gateway: gateway.as_ref(),
        knowledge: &knowledge,
        config: p,
    };
    let outcome = run_experiment(&examples, |e| pipeline.answer(e), &opts)?;
    let s = &outcome.summary;
    match s.score {
        Some(score) => println!("{} {score:.3} ({}/{})", s.metric, s.correct, s.total),
        None => println!("{} n/a (0/0)", s.metric),
    }
    info!("finished in {:.2}s", started.elapsed().as_secs_f64());
    if s.complete {
        Ok(0)
    } else {
        match &s.error {
            Some(e) => eprintln!("partial run: {e}"),
            None => eprintln!("partial run: {} of {} examples recorded", s.total, s.expected),
        }
        eprintln!("rerun with --resume to continue in {}", opts.out_dir.display());
        Ok(EXIT_PARTIAL)
    }
}

fn records_path(report: &Path) -> PathBuf {
    if report.is_dir() {
        report.join(RECORDS_FILE)
    } else {
        report.to_path_buf()
    }
}

fn explain(args: &ExplainArgs) -> Result<u8> {
    let records = read_records(&records_path(&args.report))?;
    let Some(record) = records.iter().find(|r| r.id == args.example_id) else {
        let ids: Vec<&str> = records.iter().map(|r| r.id.as_str()).collect();
        return Err(Error::invalid_config(format!(
            "no example `{}` in the report; available ids: {}",
            args.example_id,
            ids.join(", ")
        )));
    };
    print!("{}", render_trace(record));
    Ok(0)
}

/// Execute a parsed command and return its exit status.
pub fn execute(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Index(a) => index(a),
        Command::Run(a) => run(a),
        Command::Explain(a) => explain(a),
    }
}

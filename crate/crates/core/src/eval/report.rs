//! Run reports: `records.jsonl` (one line per example, deterministic) and
//! `summary.json` (aggregate metric, resolved config, timing).

use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{is_correct, Example};
use crate::error::{Error, Result};
use crate::model::{TaskKind, Verdict};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub id: String,
    pub question: String,
    pub gold: Vec<String>,
    /// Normalized prediction; empty when unparsed.
    pub prediction: String,
    pub correct: bool,
    pub verdict: Verdict,
}

impl ExampleRecord {
    pub fn new(example: &Example, verdict: Verdict) -> Self {
        ExampleRecord {
            id: example.query.id.clone(),
            question: example.query.text.clone(),
            gold: example.gold.clone(),
            prediction: verdict.prediction.normalized.clone(),
            correct: is_correct(&verdict.prediction, &example.gold),
            verdict,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: String,
    pub task: TaskKind,
    pub metric: String,
    pub total: usize,
    pub correct: usize,
    /// `correct / total`; absent for an empty run.
    pub score: Option<f64>,
    pub complete: bool,
    pub expected: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub split_seed: Option<u64>,
    pub wall_clock_secs: f64,
    pub config: serde_json::Value,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub workers: usize,
    /// Keep records already on disk and skip their examples.
    pub resume: bool,
    /// Stop after this many new examples (the run is then partial).
    pub limit: Option<usize>,
    pub mode: String,
    pub task: TaskKind,
    pub split_seed: Option<u64>,
    pub config: serde_json::Value,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub records: Vec<ExampleRecord>,
}

/// Strictly parse a records file.
pub fn read_records(path: &Path) -> Result<Vec<ExampleRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Format {
                locator: format!("{}:{}", path.display(), i + 1),
                message: e.to_string(),
            })
        })
        .collect()
}

/// Records from an interrupted run. A torn final line is cut off the file;
/// corruption anywhere else is an error.
fn recover_records(path: &Path) -> Result<Vec<ExampleRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    let mut good_len = 0usize;
    let mut offset = 0usize;
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    for (i, line) in lines.iter().enumerate() {
        offset += line.len();
        if line.trim().is_empty() {
            good_len = offset;
            continue;
        }
        // Only the final line can lack its newline; such a line is torn.
        match serde_json::from_str::<ExampleRecord>(line.trim_end()) {
            Ok(r) if line.ends_with('\n') => {
                records.push(r);
                good_len = offset;
            }
            _ if i + 1 == lines.len() => warn!("dropping torn final record at {}:{}", path.display(), i + 1),
            Ok(_) | Err(_) => {
                return Err(Error::Format {
                    locator: format!("{}:{}", path.display(), i + 1),
                    message: "corrupt record".into(),
                })
            }
        }
    }
    if good_len < text.len() {
        let f = OpenOptions::new()
            .write(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        f.set_len(good_len as u64).map_err(|e| Error::io(path, e))?;
    }
    Ok(records)
}

pub fn summarize(
    records: &[ExampleRecord],
    opts: &RunOptions,
    expected: usize,
    wall_clock_secs: f64,
    error: Option<String>,
) -> RunSummary {
    let correct = records.iter().filter(|r| r.correct).count();
    let metric = match opts.task {
        TaskKind::Temporal => "exact_match",
        _ => "accuracy",
    };
    RunSummary {
        mode: opts.mode.clone(),
        task: opts.task,
        metric: metric.into(),
        total: records.len(),
        correct,
        score: super::accuracy(records).ok(),
        complete: error.is_none() && records.len() == expected,
        expected,
        error,
        split_seed: opts.split_seed,
        wall_clock_secs,
        config: opts.config.clone(),
    }
}

/// Evaluate every example and persist the report.
///
/// Examples run on a pool of `workers` threads; records are appended in
/// dataset order. The first failing example stops the run: records before
/// it are kept, nothing is written for it or anything after, and the
/// summary is marked incomplete so a later `resume` can finish the job.
pub fn run_experiment<F>(examples: &[Example], evaluate: F, opts: &RunOptions) -> Result<RunOutcome>
where
    F: Fn(&Example) -> Result<Verdict> + Sync,
{
    let started = Instant::now();
    fs::create_dir_all(&opts.out_dir).map_err(|e| Error::io(&opts.out_dir, e))?;
    let records_path = opts.out_dir.join(RECORDS_FILE);
    let mut records = if opts.resume && records_path.exists() {
        recover_records(&records_path)?
    } else {
        File::create(&records_path).map_err(|e| Error::io(&records_path, e))?;
        Vec::new()
    };
    let wanted: HashSet<&str> = examples.iter().map(|e| e.query.id.as_str()).collect();
    records.retain(|r| wanted.contains(r.id.as_str()));
    let done: HashSet<String> = records.iter().map(|r| r.id.clone()).collect();
    let mut todo: Vec<&Example> = examples.iter().filter(|e| !done.contains(&e.query.id)).collect();
    if !done.is_empty() {
        info!(
            "resuming: {} of {} examples already recorded",
            done.len(),
            examples.len()
        );
    }
    if let Some(limit) = opts.limit {
        todo.truncate(limit);
    }

    let file = OpenOptions::new()
        .append(true)
        .open(&records_path)
        .map_err(|e| Error::io(&records_path, e))?;
    let mut out = BufWriter::new(file);
    let workers = opts.workers.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid_config(format!("worker pool: {e}")))?;

    let mut failure = None;
    'chunks: for chunk in todo.chunks(workers * 4) {
        let results: Vec<Result<Verdict>> = pool.install(|| chunk.par_iter().map(|e| evaluate(e)).collect());
        for (example, result) in chunk.iter().zip(results) {
            match result {
                Ok(verdict) => {
                    let record = ExampleRecord::new(example, verdict);
                    let line = serde_json::to_string(&record).expect("records serialize");
                    writeln!(out, "{line}")
                        .and_then(|_| out.flush())
                        .map_err(|e| Error::io(&records_path, e))?;
                    records.push(record);
                }
                Err(e) => {
                    warn!("example {} failed: {e}", example.query.id);
                    failure = Some(format!("example {}: {e}", example.query.id));
                    break 'chunks;
                }
            }
        }
    }
    drop(out);

    let summary = summarize(&records, opts, examples.len(), started.elapsed().as_secs_f64(), failure);
    let summary_path = opts.out_dir.join(SUMMARY_FILE);
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&summary_path, json + "\n").map_err(|e| Error::io(&summary_path, e))?;
    Ok(RunOutcome { summary, records })
}

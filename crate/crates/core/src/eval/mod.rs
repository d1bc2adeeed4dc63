//! Evaluation: examples, metrics, dataset loaders and experiment runs.

mod loaders;
mod report;

use serde::{Deserialize, Serialize};

pub use loaders::{load_infotabs, load_strategyqa, load_tempquestions, DevSplit, TEMPQUESTIONS_PROMPT_EXAMPLES};
pub use report::{
    read_records, run_experiment, summarize, ExampleRecord, RunOptions, RunOutcome, RunSummary, RECORDS_FILE,
    SUMMARY_FILE,
};

use crate::error::{Error, Result};
use crate::model::{Prediction, Query};
use crate::retrieval::Table;
use crate::text::normalize_answer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub query: Query,
    /// Acceptable answers.
    pub gold: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_facts: Option<Vec<String>>,
    /// Evidence paragraph ids, resolved against the corpus when used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_paragraphs: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
}

impl Example {
    pub fn new(query: Query, gold: Vec<String>) -> Result<Self> {
        if gold.iter().all(|g| g.trim().is_empty()) {
            return Err(Error::Format {
                locator: query.id.clone(),
                message: "example has no gold answer".into(),
            });
        }
        Ok(Example {
            query,
            gold,
            gold_facts: None,
            gold_paragraphs: None,
            table: None,
        })
    }
}

/// True when the normalized prediction equals any normalized gold answer.
pub fn exact_match(prediction: &str, golds: &[String]) -> bool {
    let p = normalize_answer(prediction);
    golds.iter().any(|g| normalize_answer(g) == p)
}

/// Correctness of a prediction; unparsed predictions are always wrong.
pub fn is_correct(prediction: &Prediction, golds: &[String]) -> bool {
    prediction.is_parsed() && exact_match(&prediction.normalized, golds)
}

/// Fraction of correct records.
pub fn accuracy(records: &[ExampleRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyRun);
    }
    let correct = records.iter().filter(|r| r.correct).count();
    Ok(correct as f64 / records.len() as f64)
}

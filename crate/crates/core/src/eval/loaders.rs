use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::Example;
use crate::error::{Error, Result};
use crate::model::{Query, TaskKind};
use crate::retrieval::Table;

/// TempQuestions items reserved as prompt exemplars.
pub const TEMPQUESTIONS_PROMPT_EXAMPLES: usize = 6;

/// Seeded random subset of a training file used as the dev set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DevSplit {
    pub seed: u64,
    pub fraction: f64,
}

impl DevSplit {
    /// Indices kept, in file order: `round(n * fraction)` of them (at least
    /// one for a non-empty file), chosen by a seeded shuffle.
    pub fn select(&self, n: usize) -> Result<Vec<usize>> {
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(Error::invalid_config(format!(
                "dev fraction {} outside (0, 1]",
                self.fraction
            )));
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        let count = ((n as f64 * self.fraction).round() as usize).clamp(1, n);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(self.seed));
        idx.truncate(count);
        idx.sort_unstable();
        Ok(idx)
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        locator: format!("{}:{}:{}", path.display(), e.line(), e.column()),
        message: e.to_string(),
    })
}

fn format_err(locator: String, message: impl Into<String>) -> Error {
    Error::Format {
        locator,
        message: message.into(),
    }
}

fn check_unique(examples: &[Example], path: &Path) -> Result<()> {
    let mut seen = HashSet::new();
    for e in examples {
        if !seen.insert(e.query.id.as_str()) {
            return Err(format_err(
                path.display().to_string(),
                format!("duplicate id `{}`", e.query.id),
            ));
        }
    }
    Ok(())
}

fn collect_evidence(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::String(s) if s != "operation" && s != "no_evidence" => {
            if !out.contains(s) {
                out.push(s.clone());
            }
        }
        Value::Array(items) => items.iter().for_each(|i| collect_evidence(i, out)),
        _ => {}
    }
}

/// StrategyQA JSON: a list of `{qid, question, answer: bool, facts, evidence}`.
pub fn load_strategyqa(path: &Path, split: Option<DevSplit>) -> Result<Vec<Example>> {
    let root = read_json(path)?;
    let items = root
        .as_array()
        .ok_or_else(|| format_err(path.display().to_string(), "expected a JSON list"))?;
    let keep = match split {
        Some(s) => s.select(items.len())?,
        None => (0..items.len()).collect(),
    };
    let mut out = Vec::with_capacity(keep.len());
    for i in keep {
        let item = &items[i];
        let loc = format!("{}[{i}]", path.display());
        let qid = item
            .get("qid")
            .and_then(Value::as_str)
            .ok_or_else(|| format_err(loc.clone(), "missing string field `qid`"))?;
        let question = item
            .get("question")
            .and_then(Value::as_str)
            .ok_or_else(|| format_err(loc.clone(), "missing string field `question`"))?;
        let answer = item
            .get("answer")
            .and_then(Value::as_bool)
            .ok_or_else(|| format_err(loc.clone(), "missing boolean field `answer`"))?;
        let query =
            Query::new(qid, question, TaskKind::Commonsense).map_err(|e| format_err(loc.clone(), e.to_string()))?;
        let mut ex = Example::new(query, vec![if answer { "yes" } else { "no" }.to_string()])?;
        if let Some(facts) = item.get("facts").and_then(Value::as_array) {
            ex.gold_facts = Some(facts.iter().filter_map(Value::as_str).map(str::to_string).collect());
        }
        if let Some(ev) = item.get("evidence") {
            let mut ids = Vec::new();
            collect_evidence(ev, &mut ids);
            ex.gold_paragraphs = Some(ids);
        }
        out.push(ex);
    }
    check_unique(&out, path)?;
    Ok(out)
}

fn field<'a>(item: &'a Value, names: &[&str]) -> Option<&'a Value> {
    let obj = item.as_object()?;
    names
        .iter()
        .find_map(|n| obj.iter().find(|(k, _)| k.eq_ignore_ascii_case(n)).map(|(_, v)| v))
}

fn strings(v: &Value) -> Vec<String> {
    match v {
        Value::String(s) => vec![s.clone()],
        Value::Array(a) => a
            .iter()
            .filter_map(|x| match x {
                Value::String(s) => Some(s.clone()),
                Value::Object(_) => {
                    field(x, &["AnswerArgument", "Answer", "Label"]).and_then(|y| y.as_str().map(str::to_string))
                }
                _ => None,
            })
            .collect(),
        _ => Vec::new(),
    }
}

/// TempQuestions JSON list with `Id`, `Question`, `Answer` and `Type`
/// fields. Keeps implicit questions with exactly one answer and drops the
/// first `skip` of those, which serve as prompt exemplars.
pub fn load_tempquestions(path: &Path, skip: usize) -> Result<Vec<Example>> {
    let root = read_json(path)?;
    let items = root
        .as_array()
        .ok_or_else(|| format_err(path.display().to_string(), "expected a JSON list"))?;
    let mut kept = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let loc = format!("{}[{i}]", path.display());
        let id = match field(item, &["id"]) {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => return Err(format_err(loc, "missing field `Id`")),
        };
        let question = field(item, &["question"])
            .and_then(Value::as_str)
            .ok_or_else(|| format_err(loc.clone(), "missing string field `Question`"))?;
        let answers =
            strings(field(item, &["answer"]).ok_or_else(|| format_err(loc.clone(), "missing field `Answer`"))?);
        let implicit = field(item, &["type"])
            .map(strings)
            .unwrap_or_default()
            .iter()
            .any(|t| t.to_ascii_lowercase().contains("implicit"));
        if !implicit || answers.len() != 1 {
            continue;
        }
        let query = Query::new(id, question, TaskKind::Temporal).map_err(|e| format_err(loc.clone(), e.to_string()))?;
        kept.push(Example::new(query, answers)?);
    }
    let out: Vec<Example> = kept.into_iter().skip(skip).collect();
    check_unique(&out, path)?;
    Ok(out)
}

fn label(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "e" | "entailment" | "entail" => Some(true),
        "c" | "contradiction" | "contradict" => Some(false),
        _ => None,
    }
}

/// INFOTABS directory: `hypotheses.tsv` (table id, hypothesis, label, and an
/// optional index column) plus `tables/<id>.tsv` key/value tables.
///
/// Neutral hypotheses are dropped, and entailed and contradicted ones are
/// balanced by keeping the first `min(#E, #C)` of each.
pub fn load_infotabs(dir: &Path) -> Result<Vec<Example>> {
    let hyp_path = dir.join("hypotheses.tsv");
    let text = std::fs::read_to_string(&hyp_path).map_err(|e| Error::io(&hyp_path, e))?;
    let mut candidates: Vec<(bool, Example)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let loc = format!("{}:{}", hyp_path.display(), i + 1);
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if i == 0 && cols[0].trim().eq_ignore_ascii_case("table_id") {
            continue;
        }
        if cols.len() < 3 {
            return Err(format_err(loc, "expected table_id, hypothesis and label columns"));
        }
        let (table_id, hypothesis, raw_label) = (cols[0].trim(), cols[1].trim(), cols[2].trim());
        let entailed = match raw_label.to_ascii_lowercase().as_str() {
            "n" | "neutral" => continue,
            _ => label(raw_label).ok_or_else(|| format_err(loc.clone(), format!("unknown label `{raw_label}`")))?,
        };
        let table_path = dir.join("tables").join(format!("{table_id}.tsv"));
        let table_text = std::fs::read_to_string(&table_path).map_err(|e| Error::io(&table_path, e))?;
        let table = Table::from_tsv(&table_text, table_id)
            .map_err(|e| format_err(table_path.display().to_string(), e.to_string()))?;
        let id = match cols.get(3).map(|s| s.trim()).filter(|s| !s.is_empty()) {
            Some(idx) => format!("{table_id}-{idx}"),
            None => format!("{table_id}-{}", i + 1),
        };
        let query = Query::new(id, hypothesis, TaskKind::Tabular)
            .map_err(|e| format_err(loc.clone(), e.to_string()))?
            .with_context(table.premise_text());
        let mut ex = Example::new(query, vec![entailed.to_string()])?;
        ex.table = Some(table);
        candidates.push((entailed, ex));
    }
    let pos = candidates.iter().filter(|(e, _)| *e).count();
    let m = pos.min(candidates.len() - pos);
    let (mut seen_e, mut seen_c) = (0, 0);
    let out: Vec<Example> = candidates
        .into_iter()
        .filter(|(e, _)| {
            let seen = if *e { &mut seen_e } else { &mut seen_c };
            *seen += 1;
            *seen <= m
        })
        .map(|(_, ex)| ex)
        .collect();
    check_unique(&out, &hyp_path)?;
    Ok(out)
}

//! Frozen few-shot prompt fixtures and prompt assembly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Query, TaskKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptStyle {
    ZeroShot,
    FewShot,
    ChainOfThought,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptFixture {
    pub task: TaskKind,
    pub style: PromptStyle,
    exemplars: &'static str,
}

const FIXTURES: &[PromptFixture] = &[
    PromptFixture {
        task: TaskKind::Commonsense,
        style: PromptStyle::ChainOfThought,
        exemplars: include_str!("../prompts/commonsense_cot.txt"),
    },
    PromptFixture {
        task: TaskKind::Commonsense,
        style: PromptStyle::FewShot,
        exemplars: include_str!("../prompts/commonsense_standard.txt"),
    },
    PromptFixture {
        task: TaskKind::Temporal,
        style: PromptStyle::ChainOfThought,
        exemplars: include_str!("../prompts/temporal_cot.txt"),
    },
    PromptFixture {
        task: TaskKind::Temporal,
        style: PromptStyle::FewShot,
        exemplars: include_str!("../prompts/temporal_standard.txt"),
    },
    PromptFixture {
        task: TaskKind::Tabular,
        style: PromptStyle::ChainOfThought,
        exemplars: include_str!("../prompts/tabular_cot.txt"),
    },
    PromptFixture {
        task: TaskKind::Tabular,
        style: PromptStyle::FewShot,
        exemplars: include_str!("../prompts/tabular_standard.txt"),
    },
    PromptFixture {
        task: TaskKind::Commonsense,
        style: PromptStyle::ZeroShot,
        exemplars: "",
    },
    PromptFixture {
        task: TaskKind::Temporal,
        style: PromptStyle::ZeroShot,
        exemplars: "",
    },
    PromptFixture {
        task: TaskKind::Tabular,
        style: PromptStyle::ZeroShot,
        exemplars: "",
    },
];

impl PromptFixture {
    pub fn all() -> &'static [PromptFixture] {
        FIXTURES
    }

    pub fn get(task: TaskKind, style: PromptStyle) -> &'static PromptFixture {
        FIXTURES
            .iter()
            .find(|f| f.task == task && f.style == style)
            .expect("every task/style pair has a fixture")
    }

    /// Look up by id, e.g. `temporal-cot` or `tabular-few-shot`.
    pub fn by_id(id: &str) -> Result<&'static PromptFixture> {
        FIXTURES
            .iter()
            .find(|f| f.id() == id)
            .ok_or_else(|| Error::invalid_config(format!("no prompt fixture `{id}`")))
    }

    pub fn id(&self) -> String {
        let style = match self.style {
            PromptStyle::ZeroShot => "zero-shot",
            PromptStyle::FewShot => "few-shot",
            PromptStyle::ChainOfThought => "cot",
        };
        format!("{}-{}", self.task, style)
    }

    pub fn exemplars(&self) -> &'static str {
        self.exemplars.trim_end()
    }

    /// Exemplar (question, answer) pairs, with the answer text verbatim.
    pub fn exemplar_answers(&self) -> Vec<(String, String)> {
        let prefix_q = if self.task == TaskKind::Tabular {
            "Question: "
        } else {
            "Q: "
        };
        let prefix_a = if self.task == TaskKind::Tabular {
            "Answer: "
        } else {
            "A: "
        };
        self.exemplars()
            .split("\n\n")
            .filter(|b| !b.trim().is_empty())
            .filter_map(|block| {
                let q = block.lines().find_map(|l| l.strip_prefix(prefix_q))?;
                let a = block.lines().find_map(|l| l.strip_prefix(prefix_a))?;
                Some((q.to_string(), a.to_string()))
            })
            .collect()
    }

    /// Assemble the full prompt for `query`.
    pub fn render(&self, query: &Query) -> Result<String> {
        if query.task != self.task {
            return Err(Error::invalid_config(format!(
                "prompt fixture {} used for a {} query",
                self.id(),
                query.task
            )));
        }
        let tail = match self.task {
            TaskKind::Tabular => {
                let table = query.context.as_deref().unwrap_or("").trim();
                format!("{table}\nQuestion: {} True or False?\nAnswer:", query.text.trim())
            }
            _ => format!("Q: {}\nA:", query.text.trim()),
        };
        let exemplars = self.exemplars();
        if exemplars.is_empty() {
            Ok(tail)
        } else {
            Ok(format!("{exemplars}\n\n{tail}"))
        }
    }
}

impl fmt::Display for PromptStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptStyle::ZeroShot => "zero-shot",
            PromptStyle::FewShot => "few-shot",
            PromptStyle::ChainOfThought => "cot",
        })
    }
}

impl FromStr for PromptStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero-shot" => Ok(PromptStyle::ZeroShot),
            "few-shot" => Ok(PromptStyle::FewShot),
            "cot" => Ok(PromptStyle::ChainOfThought),
            other => Err(Error::invalid_config(format!("unknown prompt style `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_exemplars_per_few_shot_fixture() {
        for f in PromptFixture::all() {
            let n = f.exemplar_answers().len();
            match f.style {
                PromptStyle::ZeroShot => assert_eq!(n, 0, "{}", f.id()),
                _ => assert_eq!(n, 6, "{}", f.id()),
            }
        }
    }

    #[test]
    fn render_appends_query() {
        let q = Query::new("1", "Did Aristotle use a laptop?", TaskKind::Commonsense).unwrap();
        let p = PromptFixture::get(TaskKind::Commonsense, PromptStyle::ChainOfThought)
            .render(&q)
            .unwrap();
        assert!(p.starts_with("Q: Do hamsters provide food for any animals?"));
        assert!(p.ends_with("\n\nQ: Did Aristotle use a laptop?\nA:"));

        let zero = PromptFixture::get(TaskKind::Commonsense, PromptStyle::ZeroShot)
            .render(&q)
            .unwrap();
        assert_eq!(zero, "Q: Did Aristotle use a laptop?\nA:");
    }

    #[test]
    fn tabular_prompt_carries_table() {
        let q = Query::new("t", "Curitiba is above sea level.", TaskKind::Tabular)
            .unwrap()
            .with_context("The Region of Curitiba are South.");
        let p = PromptFixture::get(TaskKind::Tabular, PromptStyle::ZeroShot)
            .render(&q)
            .unwrap();
        assert_eq!(
            p,
            "The Region of Curitiba are South.\nQuestion: Curitiba is above sea level. True or False?\nAnswer:"
        );
    }

    #[test]
    fn fixture_ids_round_trip() {
        for f in PromptFixture::all() {
            assert_eq!(PromptFixture::by_id(&f.id()).unwrap(), f);
        }
        assert!(PromptFixture::by_id("nope").is_err());
    }

    #[test]
    fn mismatched_task_is_rejected() {
        let q = Query::new("1", "x?", TaskKind::Temporal).unwrap();
        assert!(PromptFixture::get(TaskKind::Tabular, PromptStyle::ChainOfThought)
            .render(&q)
            .is_err());
    }
}

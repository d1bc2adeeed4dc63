//! Info-box tables and their sentence linearization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{KnowledgeSnippet, SnippetSource};

const MONTHS: [&str; 12] = [
    "january",
    "february",
    "march",
    "april",
    "may",
    "june",
    "july",
    "august",
    "september",
    "october",
    "november",
    "december",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub subject: String,
    pub rows: Vec<(String, String)>,
}

impl Table {
    pub fn new(subject: impl Into<String>, rows: Vec<(String, String)>) -> Result<Self> {
        let subject = subject.into();
        if subject.trim().is_empty() {
            return Err(Error::invalid_config("table subject is empty"));
        }
        if rows.iter().any(|(k, _)| k.trim().is_empty()) {
            return Err(Error::invalid_config(format!(
                "table `{subject}` has a row with an empty key"
            )));
        }
        Ok(Table { subject, rows })
    }

    /// Parse `key<TAB>value` lines. A `title` row names the subject and is
    /// not itself a row; otherwise `fallback_subject` is used.
    pub fn from_tsv(text: &str, fallback_subject: &str) -> Result<Self> {
        let mut subject = None;
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('\t')
                .ok_or_else(|| Error::invalid_config(format!("table row {} has no tab separator", i + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if key.eq_ignore_ascii_case("title") && subject.is_none() {
                subject = Some(value.to_string());
            } else {
                rows.push((key.to_string(), value.to_string()));
            }
        }
        Table::new(subject.unwrap_or_else(|| fallback_subject.to_string()), rows)
    }

    /// Linearized rows joined into one premise paragraph.
    pub fn premise_text(&self) -> String {
        linearize_table(self)
            .into_iter()
            .map(|s| s.text)
            .collect::<Vec<_>>()
            .join("  ")
    }
}

/// "April 25, 1854 ..." or "6 September 1972 ...".
fn starts_with_date(value: &str) -> bool {
    let words: Vec<String> = value
        .split_whitespace()
        .take(2)
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .collect();
    let is_month = |w: &str| MONTHS.contains(&w);
    match words.as_slice() {
        [a, ..] if is_month(a) => true,
        [a, b] => a.chars().all(|c| c.is_ascii_digit()) && is_month(b),
        _ => false,
    }
}

fn row_sentence(subject: &str, key: &str, value: &str) -> String {
    let is_life_event = key.eq_ignore_ascii_case("born") || key.eq_ignore_ascii_case("died");
    let body = if is_life_event && starts_with_date(value) {
        format!("{subject} was {key} on {value}")
    } else {
        format!("The {key} of {subject} are {value}")
    };
    format!("{body}.")
}

/// One sentence per row, in row order.
pub fn linearize_table(table: &Table) -> Vec<KnowledgeSnippet> {
    table
        .rows
        .iter()
        .filter(|(_, v)| !v.trim().is_empty())
        .filter_map(|(k, v)| {
            KnowledgeSnippet::new(row_sentence(&table.subject, k, v), SnippetSource::TableLinearization).ok()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn generic_rows() {
        let t = Table::new(
            "Curitiba",
            rows(&[("Region", "South"), ("Elevation", "934.6 m (3,066.3 ft)")]),
        )
        .unwrap();
        let s: Vec<_> = linearize_table(&t).into_iter().map(|s| s.text).collect();
        assert_eq!(
            s,
            vec![
                "The Region of Curitiba are South.",
                "The Elevation of Curitiba are 934.6 m (3,066.3 ft)."
            ]
        );
    }

    #[test]
    fn born_and_died_with_dates() {
        let t = Table::new(
            "Charles Sumner Tainter",
            rows(&[
                (
                    "Born",
                    "April 25, 1854   ( 1854-04-25 )   Watertown, Massachusetts, U.S.",
                ),
                ("Born", "1902 Eastport, Maine"),
            ]),
        )
        .unwrap();
        let s: Vec<_> = linearize_table(&t).into_iter().map(|s| s.text).collect();
        assert_eq!(
            s[0],
            "Charles Sumner Tainter was Born on April 25, 1854   ( 1854-04-25 )   Watertown, Massachusetts, U.S.."
        );
        assert_eq!(s[1], "The Born of Charles Sumner Tainter are 1902 Eastport, Maine.");
        assert!(starts_with_date("14 November 1948 ( 1948-11-14 )"));
    }

    #[test]
    fn empty_and_invalid_tables() {
        assert!(linearize_table(&Table::new("X", Vec::new()).unwrap()).is_empty());
        assert!(Table::new("X", rows(&[(" ", "v")])).is_err());
        assert!(Table::new("", Vec::new()).is_err());
    }

    #[test]
    fn tsv_parsing() {
        let t = Table::from_tsv("title\tCuritiba\nRegion\tSouth\n\nDensity\t4,062/km 2\n", "fallback").unwrap();
        assert_eq!(t.subject, "Curitiba");
        assert_eq!(t.rows.len(), 2);
        assert_eq!(
            t.premise_text(),
            "The Region of Curitiba are South.  The Density of Curitiba are 4,062/km 2."
        );
        assert_eq!(
            Table::from_tsv("Region\tSouth", "Fallback").unwrap().subject,
            "Fallback"
        );
        assert!(Table::from_tsv("no tab here", "x").is_err());
    }
}

//! Turning raw completions into reasoning paths: sentence splitting, answer
//! clause extraction, prediction normalization, and sampling.

use crate::error::{Error, Result};
use crate::gateway::{CompletionRequest, ModelGateway};
use crate::model::{Prediction, PredictionKind, Query, ReasoningPath, Sentence, TaskKind};
use crate::prompts::PromptFixture;
use crate::text;

const ANSWER_CLAUSE: &str = "so the answer is";

/// Abbreviations that end in a period but never end a sentence.
pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "U.S.", "U.K.", "St.", "Dr.", "Mr.", "Mrs.", "Ms.", "Jr.", "Sr.", "Prof.", "Mt.", "vs.", "e.g.", "i.e.", "m.",
    "div.", "c.", "ca.", "No.",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitterConfig {
    pub abbreviations: Vec<String>,
}

impl Default for SplitterConfig {
    fn default() -> Self {
        SplitterConfig {
            abbreviations: DEFAULT_ABBREVIATIONS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl SplitterConfig {
    fn is_abbreviation(&self, word: &str) -> bool {
        self.abbreviations.iter().any(|a| a == word)
    }
}

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

/// Split text into sentences on `.`, `?` and `!` followed by whitespace.
///
/// No split happens when the next word starts lowercase or with a digit, when
/// the word ending at the period is a known abbreviation, or when it is a
/// single capital initial ("Harry S. Truman").
pub fn split_sentences(text: &str, cfg: &SplitterConfig) -> Vec<Sentence> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut pieces = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if matches!(c, '.' | '?' | '!') {
            let mut j = i + 1;
            while j < chars.len() && (matches!(chars[j].1, '.' | '?' | '!') || is_closing(chars[j].1)) {
                j += 1;
            }
            let at_boundary = j < chars.len() && chars[j].1.is_whitespace();
            let doubled = chars[i..j].iter().filter(|(_, t)| matches!(t, '.' | '?' | '!')).count() > 1;
            if at_boundary && should_split(text, start, pos, &chars[j..], c, doubled, cfg) {
                let end = chars[j].0;
                pieces.push(&text[start..end]);
                start = end;
            }
            i = j;
            continue;
        }
        i += 1;
    }
    pieces.push(&text[start..]);
    pieces
        .into_iter()
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .enumerate()
        .map(|(index, p)| Sentence {
            text: p.to_string(),
            index,
        })
        .collect()
}

fn should_split(
    text: &str,
    start: usize,
    term_pos: usize,
    rest: &[(usize, char)],
    term: char,
    doubled: bool,
    cfg: &SplitterConfig,
) -> bool {
    match rest.iter().find(|(_, c)| !c.is_whitespace()) {
        Some((_, next)) if next.is_lowercase() || next.is_ascii_digit() => return false,
        None => return false,
        _ => {}
    }
    // "U.S.." is an abbreviation followed by a real full stop.
    if term != '.' || doubled {
        return true;
    }
    let segment = &text[start..term_pos + 1];
    let word = segment
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or("")
        .trim_start_matches(['(', '"', '\'', '[']);
    if cfg.is_abbreviation(word) {
        return false;
    }
    let mut wc = word.chars();
    let initial = matches!((wc.next(), wc.next(), wc.next()), (Some(a), Some('.'), None) if a.is_uppercase());
    !initial
}

/// Position of the last "So the answer is" clause, at a word boundary.
fn find_answer_clause(raw: &str) -> Option<usize> {
    let lowered = raw.to_ascii_lowercase();
    let mut search_end = lowered.len();
    while let Some(pos) = lowered[..search_end].rfind(ANSWER_CLAUSE) {
        let boundary = lowered[..pos].chars().next_back().is_none_or(|c| !c.is_alphanumeric());
        if boundary {
            return Some(pos);
        }
        search_end = pos;
    }
    None
}

/// Split a completion into explanation sentences and the final prediction.
///
/// The prediction is whatever follows the last "So the answer is" clause up
/// to the end of that line, minus one trailing period. When the clause is
/// missing the whole text is explanation and the prediction is unparsed.
pub fn parse_completion(raw: &str, task: TaskKind, cfg: &SplitterConfig) -> (Vec<Sentence>, Prediction) {
    let Some(pos) = find_answer_clause(raw) else {
        return (split_sentences(raw, cfg), Prediction::unparsed());
    };
    let explanation = split_sentences(&raw[..pos], cfg);
    let after = &raw[pos + ANSWER_CLAUSE.len()..];
    let line = after.lines().next().unwrap_or("").trim();
    let surface = line.strip_suffix('.').unwrap_or(line).trim();
    if surface.is_empty() {
        return (explanation, Prediction::unparsed());
    }
    (explanation, Prediction::from_surface(surface, task))
}

/// Pull the answer clause out of already-split sentences.
pub fn extract_prediction(sentences: &[Sentence], task: TaskKind) -> (Vec<Sentence>, Prediction) {
    let joined = sentences.iter().map(|s| s.text.as_str()).collect::<Vec<_>>().join(" ");
    parse_completion(&joined, task, &SplitterConfig::default())
}

/// Standard (non-CoT) prompting answers directly: the first line is the answer.
pub fn parse_direct_answer(raw: &str, task: TaskKind) -> Prediction {
    if find_answer_clause(raw).is_some() {
        return parse_completion(raw, task, &SplitterConfig::default()).1;
    }
    let line = raw.trim().lines().next().unwrap_or("").trim();
    let surface = line.strip_suffix('.').unwrap_or(line).trim();
    if surface.is_empty() {
        Prediction::unparsed()
    } else {
        Prediction::from_surface(surface, task)
    }
}

pub fn make_reasoning_path(raw: &str, task: TaskKind, sample_index: usize, cfg: &SplitterConfig) -> ReasoningPath {
    let (explanation, prediction) = parse_completion(raw, task, cfg);
    ReasoningPath {
        raw: raw.to_string(),
        explanation,
        prediction,
        sample_index,
    }
}

fn strip_terminal(s: &str) -> &str {
    s.trim_end_matches(|c: char| c.is_whitespace() || matches!(c, '.' | ',' | ';' | ':' | '!' | '?' | '"' | '\''))
        .trim_start()
}

fn free_form(surface: &str) -> String {
    let mut current = surface.to_lowercase();
    loop {
        let next = strip_terminal(&text::strip_articles(strip_terminal(&current))).to_string();
        if next == current {
            return next;
        }
        current = next;
    }
}

/// Canonical form of a prediction, with its kind.
///
/// Free-form answers are lowercased, stripped of trailing punctuation and
/// articles, and whitespace-collapsed. For yes/no and true/false tasks the
/// leading word is mapped onto the task's two labels when it is a synonym.
pub fn classify_prediction(surface: &str, task: TaskKind) -> (String, PredictionKind) {
    let normalized = free_form(surface);
    let first = normalized.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("");
    match task {
        TaskKind::Commonsense => match first {
            "yes" | "true" => ("yes".into(), PredictionKind::YesNo),
            "no" | "false" => ("no".into(), PredictionKind::YesNo),
            _ => (normalized, PredictionKind::FreeForm),
        },
        TaskKind::Tabular => match first {
            "true" | "yes" | "correct" => ("true".into(), PredictionKind::TrueFalse),
            "false" | "no" | "incorrect" => ("false".into(), PredictionKind::TrueFalse),
            _ => (normalized, PredictionKind::FreeForm),
        },
        TaskKind::Temporal => (normalized, PredictionKind::FreeForm),
    }
}

pub fn normalize_prediction(surface: &str, task: TaskKind) -> String {
    classify_prediction(surface, task).0
}

/// Sentences that chain earlier facts together rather than state a fact.
pub fn is_chaining_sentence(sentence: &str) -> bool {
    let first = sentence
        .trim_start()
        .split(|c: char| !c.is_alphanumeric())
        .next()
        .unwrap_or("")
        .to_ascii_lowercase();
    matches!(first.as_str(), "thus" | "therefore" | "hence" | "so" | "consequently")
}

/// Sample `n` completions for `query` and parse each into a reasoning path.
pub fn sample_paths(
    gateway: &dyn ModelGateway,
    query: &Query,
    fixture: &PromptFixture,
    n: usize,
    temperature: f64,
    max_tokens: usize,
    cfg: &SplitterConfig,
) -> Result<Vec<ReasoningPath>> {
    if n == 0 {
        return Err(Error::invalid_config("number of sampled paths must be at least 1"));
    }
    let request = CompletionRequest::new(fixture.render(query)?, n, temperature, max_tokens)?;
    let texts = gateway.complete(&request)?;
    if texts.len() != n {
        return Err(Error::backend(format!(
            "asked for {n} completions, backend returned {}",
            texts.len()
        )));
    }
    Ok(texts
        .iter()
        .enumerate()
        .map(|(i, raw)| make_reasoning_path(raw, query.task, i, cfg))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompts::PromptStyle;

    fn split(text: &str) -> Vec<String> {
        split_sentences(text, &SplitterConfig::default())
            .into_iter()
            .map(|s| s.text)
            .collect()
    }

    const R3: &str = "Aristotle died in 322BC. The first laptop was invented in 1980. Thus, Aristotle did not use a laptop. So the answer is no.";

    #[test]
    fn splits_running_example() {
        assert_eq!(
            split("Aristotle died in 322BC. The first laptop was invented in 1980."),
            vec!["Aristotle died in 322BC.", "The first laptop was invented in 1980."]
        );
        assert!(split("").is_empty());
        assert!(split("   \n ").is_empty());
    }

    #[test]
    fn abbreviations_do_not_split() {
        assert_eq!(split("Born 1902 Eastport, Maine."), vec!["Born 1902 Eastport, Maine."]);
        assert_eq!(
            split("Harry S. Truman was the 33rd president. He served from 1945."),
            vec!["Harry S. Truman was the 33rd president.", "He served from 1945."]
        );
        assert_eq!(
            split("He moved to the U.S. Later he left."),
            vec!["He moved to the U.S. Later he left."]
        );
        assert_eq!(
            split("Lady Diana Spencer ( m.   1981 ;  div.   1996 ). Married is related to spouse."),
            vec![
                "Lady Diana Spencer ( m.   1981 ;  div.   1996 ).",
                "Married is related to spouse."
            ]
        );
        assert_eq!(
            split("Charles Sumner Tainter was died in San Diego, California, U.S.. California is a state."),
            vec![
                "Charles Sumner Tainter was died in San Diego, California, U.S..",
                "California is a state."
            ]
        );
        assert_eq!(
            split("Aristotle died in 322 BC. The first laptop was invented in 1980."),
            vec!["Aristotle died in 322 BC.", "The first laptop was invented in 1980."]
        );
    }

    #[test]
    fn question_and_exclamation_marks() {
        assert_eq!(split("Is it? Yes! Done."), vec!["Is it?", "Yes!", "Done."]);
    }

    #[test]
    fn extracts_running_example_prediction() {
        let path = make_reasoning_path(R3, TaskKind::Commonsense, 2, &SplitterConfig::default());
        assert_eq!(path.explanation.len(), 3);
        assert_eq!(path.explanation[2].text, "Thus, Aristotle did not use a laptop.");
        assert_eq!(path.prediction.normalized, "no");
        assert_eq!(path.prediction.kind, PredictionKind::YesNo);
        assert_eq!(path.sample_index, 2);
        assert!(path.explanation.iter().enumerate().all(|(i, s)| s.index == i));
    }

    #[test]
    fn empty_and_prediction_only_completions() {
        let empty = make_reasoning_path("", TaskKind::Commonsense, 0, &SplitterConfig::default());
        assert!(empty.explanation.is_empty());
        assert!(empty.prediction.unparsed);
        assert_eq!(empty.prediction.normalized, "");

        let only = make_reasoning_path(
            "So the answer is yes.",
            TaskKind::Commonsense,
            0,
            &SplitterConfig::default(),
        );
        assert!(only.explanation.is_empty());
        assert_eq!(only.prediction.normalized, "yes");
    }

    #[test]
    fn free_form_answers() {
        let (_, p) = parse_completion(
            "So the answer is Tim Pawlenty.",
            TaskKind::Temporal,
            &SplitterConfig::default(),
        );
        assert_eq!(p.surface, "Tim Pawlenty");
        assert_eq!(p.normalized, "tim pawlenty");

        let (_, p) = parse_completion("The answer might be 7", TaskKind::Temporal, &SplitterConfig::default());
        assert!(p.unparsed);
    }

    #[test]
    fn last_clause_wins_and_case_is_ignored() {
        let raw = "So the answer is yes. Wait. so THE answer IS no";
        let (expl, p) = parse_completion(raw, TaskKind::Commonsense, &SplitterConfig::default());
        assert_eq!(p.normalized, "no");
        assert_eq!(expl.len(), 2);
    }

    #[test]
    fn clause_needs_word_boundary() {
        let (_, p) = parse_completion(
            "It is also the answer is",
            TaskKind::Commonsense,
            &SplitterConfig::default(),
        );
        assert!(p.unparsed);
    }

    #[test]
    fn trailing_generation_is_cut_at_newline() {
        let raw = "Fact. So the answer is no.\n\nQ: another question?";
        let (_, p) = parse_completion(raw, TaskKind::Commonsense, &SplitterConfig::default());
        assert_eq!(p.surface, "no");
    }

    #[test]
    fn extract_from_sentences() {
        let sentences = split_sentences(R3, &SplitterConfig::default());
        assert_eq!(sentences.len(), 4);
        let (expl, p) = extract_prediction(&sentences, TaskKind::Commonsense);
        assert_eq!(expl.len(), 3);
        assert_eq!(p.normalized, "no");
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(
            normalize_prediction("Tim Pawlenty.", TaskKind::Temporal),
            "tim pawlenty"
        );
        assert_eq!(normalize_prediction("No", TaskKind::Commonsense), "no");
        assert_eq!(
            normalize_prediction("The Harry S. Truman", TaskKind::Temporal),
            "harry s. truman"
        );
        assert_eq!(normalize_prediction("  False. ", TaskKind::Tabular), "false");
        assert_eq!(normalize_prediction("Yes", TaskKind::Tabular), "true");
        assert_eq!(normalize_prediction("maybe", TaskKind::Commonsense), "maybe");
        assert_eq!(normalize_prediction("harry. the", TaskKind::Temporal), "harry");
    }

    #[test]
    fn every_fixture_answer_clause_is_recovered() {
        for fixture in PromptFixture::all() {
            for (_, answer) in fixture.exemplar_answers() {
                let task = fixture.task;
                match fixture.style {
                    PromptStyle::ChainOfThought => {
                        let (expl, p) = parse_completion(&answer, task, &SplitterConfig::default());
                        assert!(p.is_parsed(), "{answer}");
                        assert!(!expl.is_empty());
                        let clause_start = answer.to_ascii_lowercase().rfind(ANSWER_CLAUSE).unwrap();
                        let expected = answer[clause_start + ANSWER_CLAUSE.len()..]
                            .trim()
                            .trim_end_matches('.');
                        assert_eq!(p.surface, expected);
                    }
                    _ => assert!(parse_direct_answer(&answer, task).is_parsed()),
                }
            }
        }
    }

    #[test]
    fn chaining_sentences() {
        assert!(is_chaining_sentence("Thus, Aristotle did not use a laptop."));
        assert!(is_chaining_sentence("therefore it is"));
        assert!(!is_chaining_sentence("Thusly is not a word."));
        assert!(!is_chaining_sentence("Aristotle died in 322BC."));
    }

    #[test]
    fn direct_answers() {
        assert_eq!(
            parse_direct_answer(" No.\nQ: next", TaskKind::Commonsense).normalized,
            "no"
        );
        assert!(parse_direct_answer("  ", TaskKind::Commonsense).unparsed);
    }
}

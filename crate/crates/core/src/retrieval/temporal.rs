//! Temporal knowledge: triple store, entity linking, and sentence templates.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::{BackendConfig, HttpTransport};
use crate::model::{KnowledgeSnippet, SnippetSource};
use crate::text::tokenize;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TemporalRelation {
    BirthDate,
    DeathDate,
    StartYear,
    EndYear,
    ReleaseDate,
    TermStart,
    TermEnd,
    Custom(String),
}

impl TemporalRelation {
    /// Known labels map to their variant; anything else becomes `Custom`.
    pub fn parse(label: &str) -> Self {
        let key: String = label
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "birthdate" | "dateofbirth" | "born" => TemporalRelation::BirthDate,
            "deathdate" | "dateofdeath" | "died" => TemporalRelation::DeathDate,
            "startyear" | "starttime" | "start" => TemporalRelation::StartYear,
            "endyear" | "endtime" | "end" => TemporalRelation::EndYear,
            "releasedate" | "publicationdate" | "released" => TemporalRelation::ReleaseDate,
            "termstart" | "tookoffice" => TemporalRelation::TermStart,
            "termend" | "leftoffice" => TemporalRelation::TermEnd,
            _ => TemporalRelation::Custom(label.trim().to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Era {
    BC,
    AD,
}

/// A year, optionally with month and day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TemporalValue {
    pub year: u32,
    pub month: Option<u32>,
    pub day: Option<u32>,
    pub era: Era,
}

const MONTHS: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

impl TemporalValue {
    pub fn year(year: u32) -> Self {
        TemporalValue {
            year,
            month: None,
            day: None,
            era: Era::AD,
        }
    }

    /// Whether the value names a specific day or month (rendered with "on").
    pub fn is_precise(&self) -> bool {
        self.month.is_some()
    }

    fn validate(self, raw: &str) -> Result<Self> {
        let bad = |why: &str| Error::invalid_config(format!("temporal value `{raw}`: {why}"));
        if self.year == 0 {
            return Err(bad("year 0 does not exist"));
        }
        if let Some(m) = self.month {
            if !(1..=12).contains(&m) {
                return Err(bad("month out of range"));
            }
        }
        if let (Some(m), Some(d)) = (self.month, self.day) {
            // BC dates are checked against the proleptic calendar of the same year number.
            if NaiveDate::from_ymd_opt(self.year as i32, m, d).is_none() {
                return Err(bad("no such day"));
            }
        }
        if self.day.is_some() && self.month.is_none() {
            return Err(bad("day without month"));
        }
        Ok(self)
    }
}

impl FromStr for TemporalValue {
    type Err = Error;

    /// Accepts `YYYY`, `YYYY-MM`, `YYYY-MM-DD`, an optional leading `-` for
    /// BC, and an optional trailing era (`BC`, `BCE`, `AD`, `CE`).
    fn from_str(raw: &str) -> Result<Self> {
        let bad = || Error::invalid_config(format!("unparseable temporal value `{raw}`"));
        let mut s = raw.trim();
        let mut era = Era::AD;
        for (suffix, e) in [("BCE", Era::BC), ("BC", Era::BC), ("AD", Era::AD), ("CE", Era::AD)] {
            if let Some(rest) = s.strip_suffix(suffix) {
                s = rest.trim_end();
                era = e;
                break;
            }
        }
        if let Some(rest) = s.strip_prefix('-') {
            s = rest;
            era = Era::BC;
        } else if let Some(rest) = s.strip_prefix('+') {
            s = rest;
        }
        let parts: Vec<&str> = s.split('-').collect();
        if parts.is_empty()
            || parts.len() > 3
            || parts
                .iter()
                .any(|p| p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()))
        {
            return Err(bad());
        }
        let num = |p: &str| p.parse::<u32>().map_err(|_| bad());
        TemporalValue {
            year: num(parts[0])?,
            month: parts.get(1).map(|p| num(p)).transpose()?,
            day: parts.get(2).map(|p| num(p)).transpose()?,
            era,
        }
        .validate(raw)
    }
}

impl fmt::Display for TemporalValue {
    /// "May 26, 2000", "May 2000", "2000", "322 BC".
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.month, self.day) {
            (Some(m), Some(d)) => write!(f, "{} {d}, {}", MONTHS[m as usize - 1], self.year)?,
            (Some(m), None) => write!(f, "{} {}", MONTHS[m as usize - 1], self.year)?,
            _ => write!(f, "{}", self.year)?,
        }
        if self.era == Era::BC {
            f.write_str(" BC")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalTriple {
    pub subject: String,
    pub relation: TemporalRelation,
    pub value: TemporalValue,
    /// Office held, for term relations ("governor of Minnesota").
    pub office: Option<String>,
    pub ordinal: Option<u32>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TripleRecord {
    subject: String,
    relation: String,
    value: String,
    #[serde(default)]
    office: Option<String>,
    #[serde(default)]
    ordinal: Option<u32>,
    #[serde(default)]
    aliases: Vec<String>,
}

/// Triples plus the entity names (and aliases) they are keyed on.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TripleStore {
    triples: Vec<TemporalTriple>,
    /// (surface name, canonical subject)
    names: Vec<(String, String)>,
}

impl TripleStore {
    pub fn new(triples: Vec<TemporalTriple>) -> Self {
        let mut store = TripleStore::default();
        for t in triples {
            store.add_name(&t.subject.clone(), &t.subject);
            store.triples.push(t);
        }
        store
    }

    fn add_name(&mut self, name: &str, subject: &str) {
        let name = name.trim();
        if name.is_empty() || self.names.iter().any(|(n, s)| n == name && s == subject) {
            return;
        }
        self.names.push((name.to_string(), subject.to_string()));
    }

    pub fn add_alias(&mut self, alias: &str, subject: &str) {
        self.add_name(alias, subject);
    }

    /// Newline-delimited JSON `{"subject", "relation", "value"}` with optional
    /// `office`, `ordinal` and `aliases`.
    pub fn from_file(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut store = TripleStore::default();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let ingest = |message: String| Error::Ingest {
                path: path.display().to_string(),
                line: i + 1,
                message,
            };
            let rec: TripleRecord = serde_json::from_str(&line).map_err(|e| ingest(e.to_string()))?;
            if rec.subject.trim().is_empty() {
                return Err(ingest("empty subject".into()));
            }
            let value: TemporalValue = rec.value.parse().map_err(|e: Error| ingest(e.to_string()))?;
            store.add_name(&rec.subject.clone(), &rec.subject);
            for alias in &rec.aliases {
                store.add_name(alias, &rec.subject);
            }
            store.triples.push(TemporalTriple {
                subject: rec.subject,
                relation: TemporalRelation::parse(&rec.relation),
                value,
                office: rec.office,
                ordinal: rec.ordinal,
            });
        }
        Ok(store)
    }

    pub fn triples(&self) -> &[TemporalTriple] {
        &self.triples
    }

    pub fn names(&self) -> impl Iterator<Item = (&str, &str)> {
        self.names.iter().map(|(n, s)| (n.as_str(), s.as_str()))
    }

    pub fn about<'a>(&'a self, subject: &'a str) -> impl Iterator<Item = &'a TemporalTriple> + 'a {
        self.triples.iter().filter(move |t| t.subject == subject)
    }
}

/// Maps a sentence to the canonical entity labels it mentions.
pub trait EntityLinker: Send + Sync {
    fn link(&self, sentence: &str) -> Result<Vec<String>>;
}

/// Case-insensitive, whole-word match of entity names and aliases.
#[derive(Debug, Clone)]
pub struct GazetteerLinker {
    /// (name tokens, canonical subject)
    entries: Vec<(Vec<String>, String)>,
}

impl GazetteerLinker {
    pub fn new<'a>(names: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let entries = names
            .into_iter()
            .map(|(n, s)| (tokenize(n), s.to_string()))
            .filter(|(toks, _)| !toks.is_empty())
            .collect();
        GazetteerLinker { entries }
    }

    pub fn from_store(store: &TripleStore) -> Self {
        Self::new(store.names())
    }
}

impl EntityLinker for GazetteerLinker {
    fn link(&self, sentence: &str) -> Result<Vec<String>> {
        let toks = tokenize(sentence);
        let mut hits: Vec<(usize, usize, &str)> = Vec::new();
        for (name, subject) in &self.entries {
            if let Some(pos) = toks.windows(name.len()).position(|w| w == name.as_slice()) {
                hits.push((pos, name.len(), subject));
            }
        }
        // Earliest mention first; longer names first at the same position.
        hits.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        let mut seen = HashSet::new();
        Ok(hits
            .into_iter()
            .filter(|(_, _, s)| seen.insert(*s))
            .map(|(_, _, s)| s.to_string())
            .collect())
    }
}

/// Entity linking through `POST /v1/link {"sentences": [..]}` returning
/// `{"entities": [[..]]}`.
#[derive(Debug)]
pub struct RemoteLinker {
    transport: HttpTransport,
}

#[derive(Serialize)]
struct LinkRequest<'a> {
    sentences: [&'a str; 1],
}

#[derive(Deserialize)]
struct LinkResponse {
    entities: Vec<Vec<String>>,
}

impl RemoteLinker {
    pub fn new(cfg: &BackendConfig) -> Result<Self> {
        Ok(RemoteLinker {
            transport: HttpTransport::new(cfg)?,
        })
    }
}

impl EntityLinker for RemoteLinker {
    fn link(&self, sentence: &str) -> Result<Vec<String>> {
        let resp: LinkResponse = self
            .transport
            .post("/v1/link", &LinkRequest { sentences: [sentence] })
            .map_err(|e| Error::Linker(e.to_string()))?;
        let mut it = resp.entities.into_iter();
        match (it.next(), it.next()) {
            (Some(list), None) => Ok(list),
            _ => Err(Error::Linker("expected one entity list per sentence".into())),
        }
    }
}

fn ordinal(n: u32) -> String {
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

fn on_in(v: &TemporalValue) -> &'static str {
    if v.is_precise() {
        "on"
    } else {
        "in"
    }
}

fn office_phrase(t: &TemporalTriple) -> Option<String> {
    let office = t.office.as_deref()?.trim();
    Some(match t.ordinal {
        Some(n) => format!("the {} {office}", ordinal(n)),
        None => office.to_string(),
    })
}

/// Template for a single triple.
pub fn render_triple(t: &TemporalTriple) -> String {
    let s = &t.subject;
    let v = &t.value;
    let p = on_in(v);
    match &t.relation {
        TemporalRelation::BirthDate => format!("{s} was born {p} {v}."),
        TemporalRelation::DeathDate => format!("{s} died {p} {v}."),
        TemporalRelation::ReleaseDate => format!("{s} was released {p} {v}."),
        TemporalRelation::StartYear => format!("{s} started {p} {v}."),
        TemporalRelation::EndYear => format!("{s} ended {p} {v}."),
        TemporalRelation::TermStart => match office_phrase(t) {
            Some(o) => format!("{s} became {o} {p} {v}."),
            None => format!("{s} took office {p} {v}."),
        },
        TemporalRelation::TermEnd => match office_phrase(t) {
            Some(o) => format!("{s} left office as {o} {p} {v}."),
            None => format!("{s} left office {p} {v}."),
        },
        TemporalRelation::Custom(label) => format!("The {label} of {s} is {v}."),
    }
}

/// Template for a start/end pair on the same subject and office.
pub fn render_span(start: &TemporalTriple, end: &TemporalTriple) -> String {
    let s = &start.subject;
    let (a, b) = (&start.value, &end.value);
    match (&start.relation, office_phrase(start)) {
        (TemporalRelation::TermStart, Some(o)) => format!("{s} served as {o} from {a} to {b}."),
        (TemporalRelation::TermStart, None) => format!("{s} held office from {a} to {b}."),
        _ => format!("{s} was from {a} to {b}."),
    }
}

fn pair_of(r: &TemporalRelation) -> Option<TemporalRelation> {
    match r {
        TemporalRelation::TermStart => Some(TemporalRelation::TermEnd),
        TemporalRelation::StartYear => Some(TemporalRelation::EndYear),
        _ => None,
    }
}

/// Rendered sentences for one subject, in store order, with start/end pairs merged.
pub fn render_subject(store: &TripleStore, subject: &str) -> Vec<String> {
    let triples: Vec<&TemporalTriple> = store.about(subject).collect();
    let mut used = vec![false; triples.len()];
    let mut out = Vec::new();
    for i in 0..triples.len() {
        if used[i] {
            continue;
        }
        let t = triples[i];
        let partner = pair_of(&t.relation).and_then(|want| {
            (0..triples.len()).find(|&j| {
                !used[j]
                    && j != i
                    && triples[j].relation == want
                    && triples[j].office == t.office
                    && triples[j].ordinal == t.ordinal
            })
        });
        used[i] = true;
        match partner {
            Some(j) => {
                used[j] = true;
                out.push(render_span(t, triples[j]));
            }
            None => out.push(render_triple(t)),
        }
    }
    out
}

/// One snippet per (linked entity, temporal relation) for `sentence`.
pub fn temporal_sentences(
    sentence: &str,
    linker: &dyn EntityLinker,
    store: &TripleStore,
) -> Result<Vec<KnowledgeSnippet>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for entity in linker.link(sentence)? {
        for text in render_subject(store, &entity) {
            if seen.insert(text.clone()) {
                out.push(KnowledgeSnippet::new(text, SnippetSource::TemporalTriples)?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triple(subject: &str, relation: TemporalRelation, value: &str) -> TemporalTriple {
        TemporalTriple {
            subject: subject.into(),
            relation,
            value: value.parse().unwrap(),
            office: None,
            ordinal: None,
        }
    }

    #[test]
    fn value_parsing_and_display() {
        assert_eq!(
            "2000-05-26".parse::<TemporalValue>().unwrap().to_string(),
            "May 26, 2000"
        );
        assert_eq!("2000-05".parse::<TemporalValue>().unwrap().to_string(), "May 2000");
        assert_eq!("1980".parse::<TemporalValue>().unwrap().to_string(), "1980");
        assert_eq!("322 BC".parse::<TemporalValue>().unwrap().to_string(), "322 BC");
        assert_eq!("-322".parse::<TemporalValue>().unwrap().to_string(), "322 BC");
        assert_eq!(
            "-0044-03-15".parse::<TemporalValue>().unwrap().to_string(),
            "March 15, 44 BC"
        );
        for bad in ["", "May 2000", "2000-13", "2000-02-30", "0", "20x0"] {
            assert!(bad.parse::<TemporalValue>().is_err(), "{bad}");
        }
    }

    #[test]
    fn release_date_template() {
        let store = TripleStore::new(vec![triple(
            "Shanghai Noon",
            TemporalRelation::ReleaseDate,
            "2000-05-26",
        )]);
        assert_eq!(
            render_subject(&store, "Shanghai Noon"),
            vec!["Shanghai Noon was released on May 26, 2000."]
        );
    }

    #[test]
    fn term_span_with_office() {
        let mut start = triple("Tim Pawlenty", TemporalRelation::TermStart, "2003");
        start.office = Some("governor of Minnesota".into());
        start.ordinal = Some(39);
        let mut end = start.clone();
        end.relation = TemporalRelation::TermEnd;
        end.value = "2011".parse().unwrap();
        let store = TripleStore::new(vec![start, end]);
        assert_eq!(
            render_subject(&store, "Tim Pawlenty"),
            vec!["Tim Pawlenty served as the 39th governor of Minnesota from 2003 to 2011."]
        );
    }

    #[test]
    fn single_relations() {
        let cases = [
            (
                TemporalRelation::BirthDate,
                "1775-07-19",
                "X was born on July 19, 1775.",
            ),
            (TemporalRelation::DeathDate, "322 BC", "X died in 322 BC."),
            (TemporalRelation::StartYear, "1948", "X started in 1948."),
            (
                TemporalRelation::Custom("inception".into()),
                "1990",
                "The inception of X is 1990.",
            ),
        ];
        for (rel, v, want) in cases {
            assert_eq!(render_triple(&triple("X", rel, v)), want);
        }
        let store = TripleStore::new(vec![
            triple("War", TemporalRelation::StartYear, "1815-03-20"),
            triple("War", TemporalRelation::EndYear, "1815-07-08"),
        ]);
        assert_eq!(
            render_subject(&store, "War"),
            vec!["War was from March 20, 1815 to July 8, 1815."]
        );
    }

    #[test]
    fn ordinals() {
        assert_eq!(
            [1, 2, 3, 4, 11, 12, 13, 21, 22, 39, 111].map(ordinal),
            ["1st", "2nd", "3rd", "4th", "11th", "12th", "13th", "21st", "22nd", "39th", "111th"]
        );
    }

    #[test]
    fn unknown_relation_falls_back_to_custom() {
        assert_eq!(TemporalRelation::parse("date of birth"), TemporalRelation::BirthDate);
        assert_eq!(
            TemporalRelation::parse("inception"),
            TemporalRelation::Custom("inception".into())
        );
    }

    #[test]
    fn gazetteer_links_whole_words() {
        let mut store = TripleStore::new(vec![
            triple("Shanghai Noon", TemporalRelation::ReleaseDate, "2000-05-26"),
            triple("Noon", TemporalRelation::ReleaseDate, "1999"),
        ]);
        store.add_alias("the noon film", "Noon");
        let linker = GazetteerLinker::from_store(&store);
        assert_eq!(
            linker.link("When was shanghai noon released?").unwrap(),
            vec!["Shanghai Noon", "Noon"]
        );
        assert!(linker.link("At noontime").unwrap().is_empty());
        assert_eq!(linker.link("I saw The Noon Film").unwrap(), vec!["Noon"]);
        let snippets = temporal_sentences("Shanghai Noon was a film.", &linker, &store).unwrap();
        assert_eq!(snippets[0].text, "Shanghai Noon was released on May 26, 2000.");
        assert!(temporal_sentences("Nothing here.", &linker, &store).unwrap().is_empty());
    }
}

//! Protocol corpora: ingestion, slicing into steps and domain mapping.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::tagger::split_sentences;

pub const MAX_STEP_TOKENS: usize = 300;

const DOMAIN_TABLE: &str = include_str!("../data/domain_mapping.txt");

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate protocol id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("empty corpus")]
    Empty,
    #[error("domain table line {line}: {message}")]
    DomainTable { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Domain {
    Genetics,
    Medical,
    Ecology,
    BioEng,
    InfoBio,
    Other(String),
}

impl Domain {
    pub fn name(&self) -> &str {
        match self {
            Domain::Genetics => "Genetics",
            Domain::Medical => "Medical",
            Domain::Ecology => "Ecology",
            Domain::BioEng => "BioEng",
            Domain::InfoBio => "InfoBio",
            Domain::Other(name) => name,
        }
    }

    /// Parses a domain name case-insensitively; anything else is `Other`.
    pub fn parse(s: &str) -> Domain {
        match s.trim().to_lowercase().as_str() {
            "genetics" => Domain::Genetics,
            "medical" => Domain::Medical,
            "ecology" => Domain::Ecology,
            "bioeng" => Domain::BioEng,
            "infobio" => Domain::InfoBio,
            _ => Domain::Other(s.trim().to_string()),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Domain {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Domain {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(Domain::parse(&s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub index: usize,
    pub text: String,
    pub token_count: usize,
    /// Set when the step is a single sentence longer than the cap.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub oversized: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Protocol {
    pub id: String,
    pub domain: Domain,
    pub topic: String,
    pub source: String,
    pub raw_text: String,
    pub steps: Vec<Step>,
}

impl Protocol {
    pub fn new(id: &str, topic: &str, source: &str, raw_text: &str, table: &DomainMappingTable) -> Self {
        Protocol {
            id: id.to_string(),
            domain: map_domain(topic, table),
            topic: topic.to_string(),
            source: source.to_string(),
            raw_text: raw_text.to_string(),
            steps: slice_protocol(raw_text, MAX_STEP_TOKENS),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainMappingTable {
    topic_to_domain: BTreeMap<String, Domain>,
}

impl Default for DomainMappingTable {
    fn default() -> Self {
        Self::parse(DOMAIN_TABLE).expect("bundled domain table")
    }
}

impl DomainMappingTable {
    /// Parses `[Domain]` headers followed by one topic per line. Lines of
    /// dashes separate sections and are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut topic_to_domain = BTreeMap::new();
        let mut current: Option<Domain> = None;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.chars().all(|c| c == '-') {
                continue;
            }
            if let Some(h) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                current = Some(Domain::parse(h));
                continue;
            }
            let domain = current.clone().ok_or(CorpusError::DomainTable {
                line: n + 1,
                message: "topic before any [Domain] header".into(),
            })?;
            topic_to_domain.insert(line.to_lowercase(), domain);
        }
        Ok(DomainMappingTable { topic_to_domain })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.topic_to_domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topic_to_domain.is_empty()
    }

    pub fn topics(&self) -> impl Iterator<Item = (&str, &Domain)> {
        self.topic_to_domain.iter().map(|(k, v)| (k.as_str(), v))
    }
}

pub fn map_domain(topic: &str, table: &DomainMappingTable) -> Domain {
    table
        .topic_to_domain
        .get(&topic.trim().to_lowercase())
        .cloned()
        .unwrap_or_else(|| Domain::Other(topic.trim().to_string()))
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn token_count(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Splits raw protocol text into steps of at most `max_tokens` words.
///
/// Paragraphs (runs of line breaks) are merged greedily in order. A paragraph
/// longer than the cap is split into sentences which are merged the same
/// way; a single sentence longer than the cap becomes an oversized step.
pub fn slice_protocol(raw_text: &str, max_tokens: usize) -> Vec<Step> {
    let max_tokens = max_tokens.max(1);
    let text: String = raw_text.nfc().collect();
    let mut pieces: Vec<(String, bool)> = Vec::new();
    let mut pending: Vec<String> = Vec::new();

    let flush = |pending: &mut Vec<String>, pieces: &mut Vec<(String, bool)>| {
        pieces.extend(merge(std::mem::take(pending), max_tokens));
    };

    for para in text.split(['\n', '\r']) {
        let para = normalize_ws(para);
        if para.is_empty() {
            continue;
        }
        if token_count(&para) <= max_tokens {
            pending.push(para);
            continue;
        }
        flush(&mut pending, &mut pieces);
        let sentences: Vec<String> = split_sentences(&para)
            .into_iter()
            .map(|(a, b)| para[a..b].to_string())
            .collect();
        pieces.extend(merge(sentences, max_tokens));
    }
    flush(&mut pending, &mut pieces);

    pieces
        .into_iter()
        .enumerate()
        .map(|(index, (text, oversized))| Step {
            index,
            token_count: token_count(&text),
            text,
            oversized,
        })
        .collect()
}

fn merge(units: Vec<String>, max_tokens: usize) -> Vec<(String, bool)> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut cur_tokens = 0;
    for unit in units {
        let n = token_count(&unit);
        if cur_tokens > 0 && cur_tokens + n <= max_tokens {
            cur.push(' ');
            cur.push_str(&unit);
            cur_tokens += n;
            continue;
        }
        if cur_tokens > 0 {
            out.push((std::mem::take(&mut cur), false));
        }
        cur = unit;
        cur_tokens = n;
        if cur_tokens > max_tokens {
            out.push((std::mem::take(&mut cur), true));
            cur_tokens = 0;
        }
    }
    if cur_tokens > 0 {
        out.push((cur, false));
    }
    out
}

#[derive(Debug, Deserialize, Serialize)]
struct Record {
    id: String,
    topic: String,
    text: String,
    #[serde(default)]
    source: String,
}

/// Reads a line-delimited corpus file.
pub fn load_corpus(path: &Path) -> Result<Vec<Protocol>> {
    load_corpus_with(path, &DomainMappingTable::default())
}

pub fn load_corpus_with(path: &Path, table: &DomainMappingTable) -> Result<Vec<Protocol>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(std::io::BufReader::new(file), table).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_corpus(reader: impl BufRead, table: &DomainMappingTable) -> Result<Vec<Protocol>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<corpus>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: n + 1,
            message: e.to_string(),
        })?;
        if !seen.insert(rec.id.clone()) {
            return Err(CorpusError::DuplicateId { line: n + 1, id: rec.id }.into());
        }
        out.push(Protocol::new(&rec.id, &rec.topic, &rec.source, &rec.text, table));
    }
    Ok(out)
}

/// Writes protocols back in the line-delimited input format.
pub fn write_corpus(protocols: &[Protocol], mut w: impl Write) -> std::io::Result<()> {
    for p in protocols {
        let rec = Record {
            id: p.id.clone(),
            topic: p.topic.clone(),
            text: p.raw_text.clone(),
            source: p.source.clone(),
        };
        let line = serde_json::to_string(&rec).map_err(std::io::Error::other)?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainStats {
    pub domain: Domain,
    pub protocols: usize,
    pub steps: usize,
    pub tokens: usize,
    pub mean_steps: f64,
}

pub fn domain_stats(protocols: &[Protocol]) -> Vec<DomainStats> {
    let mut by: BTreeMap<Domain, (usize, usize, usize)> = BTreeMap::new();
    for p in protocols {
        let e = by.entry(p.domain.clone()).or_default();
        e.0 += 1;
        e.1 += p.steps.len();
        e.2 += p.steps.iter().map(|s| s.token_count).sum::<usize>();
    }
    by.into_iter()
        .map(|(domain, (protocols, steps, tokens))| DomainStats {
            domain,
            protocols,
            steps,
            tokens,
            mean_steps: steps as f64 / protocols as f64,
        })
        .collect()
}

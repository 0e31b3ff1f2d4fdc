//! Language-model access with record/replay fixtures.
//!
//! Every request is a prompt template plus its fills, a model name and a
//! temperature. Its SHA-256 over canonical JSON names the fixture file that
//! stores the exchange. Replay mode only reads fixtures and never touches
//! the network; a missing fixture is an error.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{LazyLock, Mutex};
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::artifact::{canonical, DslArtifact};
use crate::features::Entity;
use crate::lexicon::Lexicons;
use crate::semantic::{canonical_category, render_annotated, QUANTITATIVE_CATEGORIES};

pub const URL_VAR: &str = "PROTODSL_LLM_URL";
pub const KEY_VAR: &str = "PROTODSL_LLM_KEY";
pub const DEFAULT_MODEL: &str = "gpt-4";

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("no recorded exchange {hash} for {template} request (replay mode)")]
    CacheMiss { hash: String, template: TemplateId },
    #[error("template {template} takes {expected} fills, got {got}")]
    Arity {
        template: TemplateId,
        expected: usize,
        got: usize,
    },
    #[error("environment variable {0} is not set")]
    MissingCredentials(&'static str),
    #[error("request failed (retriable): {0}")]
    Network(String),
    #[error("unexpected response body: {0}")]
    BadResponse(String),
    #[error("fixture {}: {message}", path.display())]
    Fixture { path: PathBuf, message: String },
    #[error("no rating line in response: {raw:?}")]
    Rating { raw: String },
    #[error("rating [[{opinion}, {confidence}]] outside 1..5")]
    RatingRange { opinion: u32, confidence: u32 },
    #[error("unknown gateway mode `{0}`")]
    Mode(String),
    #[error("unknown prompt template `{0}`")]
    Template(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemplateId {
    QuantityExtraction,
    EntityAnnotation,
    OntologyIe,
    ProgramTranslation,
    JudgeEvaluation,
}

impl TemplateId {
    pub const ALL: [TemplateId; 5] = [
        TemplateId::QuantityExtraction,
        TemplateId::EntityAnnotation,
        TemplateId::OntologyIe,
        TemplateId::ProgramTranslation,
        TemplateId::JudgeEvaluation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TemplateId::QuantityExtraction => "quantity-extraction",
            TemplateId::EntityAnnotation => "entity-annotation",
            TemplateId::OntologyIe => "ontology-ie",
            TemplateId::ProgramTranslation => "program-translation",
            TemplateId::JudgeEvaluation => "judge-evaluation",
        }
    }

    pub fn template(self) -> &'static str {
        match self {
            TemplateId::QuantityExtraction => include_str!("../data/prompts/quantity_extraction.txt"),
            TemplateId::EntityAnnotation => include_str!("../data/prompts/entity_annotation.txt"),
            TemplateId::OntologyIe => include_str!("../data/prompts/ontology_ie.txt"),
            TemplateId::ProgramTranslation => include_str!("../data/prompts/program_translation.txt"),
            TemplateId::JudgeEvaluation => include_str!("../data/prompts/judge_evaluation.txt"),
        }
    }

    /// Number of `{}` placeholders.
    pub fn arity(self) -> usize {
        self.template().matches("{}").count()
    }

    /// Fills placeholders in order.
    pub fn render(self, fills: &[String]) -> Result<String, GatewayError> {
        let parts: Vec<&str> = self.template().split("{}").collect();
        if fills.len() != parts.len() - 1 {
            return Err(GatewayError::Arity {
                template: self,
                expected: parts.len() - 1,
                got: fills.len(),
            });
        }
        let mut out = String::from(parts[0]);
        for (fill, part) in fills.iter().zip(&parts[1..]) {
            out.push_str(fill);
            out.push_str(part);
        }
        Ok(out)
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TemplateId {
    type Err = GatewayError;

    fn from_str(s: &str) -> Result<Self, GatewayError> {
        TemplateId::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| GatewayError::Template(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub template: TemplateId,
    pub fills: Vec<String>,
    pub model: String,
    pub temperature: f64,
}

impl Request {
    pub fn new(template: TemplateId, fills: Vec<String>, model: &str) -> Self {
        Request {
            template,
            fills,
            model: model.to_string(),
            temperature: 0.0,
        }
    }

    pub fn hash(&self) -> String {
        let v = serde_json::to_value(self).expect("request serializes");
        hex::encode(Sha256::digest(canonical(&v).as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub hash: String,
    pub request: Request,
    pub response: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Live,
    Record,
    Replay,
}

impl FromStr for Mode {
    type Err = GatewayError;

    fn from_str(s: &str) -> Result<Self, GatewayError> {
        match s {
            "live" => Ok(Mode::Live),
            "record" => Ok(Mode::Record),
            "replay" => Ok(Mode::Replay),
            other => Err(GatewayError::Mode(other.to_string())),
        }
    }
}

/// One JSON file per exchange, named by request hash.
#[derive(Debug, Clone)]
pub struct FixtureStore {
    dir: PathBuf,
}

impl FixtureStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, hash: &str) -> PathBuf {
        self.dir.join(format!("{hash}.json"))
    }

    pub fn get(&self, hash: &str) -> Result<Option<Exchange>, GatewayError> {
        let path = self.path_for(hash);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(fixture_err(&path, e)),
        };
        let ex: Exchange = serde_json::from_str(&text).map_err(|e| fixture_err(&path, e))?;
        if ex.request.hash() != hash || ex.hash != hash {
            return Err(fixture_err(&path, "stored request does not hash to the file name"));
        }
        Ok(Some(ex))
    }

    /// Write-then-rename so concurrent readers never see partial files.
    pub fn put(&self, ex: &Exchange) -> Result<(), GatewayError> {
        std::fs::create_dir_all(&self.dir).map_err(|e| fixture_err(&self.dir, e))?;
        let path = self.path_for(&ex.hash);
        let tmp = self.dir.join(format!(".{}.{}.tmp", ex.hash, std::process::id()));
        let mut text = serde_json::to_string_pretty(ex).expect("exchange serializes");
        text.push('\n');
        std::fs::write(&tmp, text).map_err(|e| fixture_err(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| fixture_err(&path, e))
    }
}

fn fixture_err(path: &Path, e: impl fmt::Display) -> GatewayError {
    GatewayError::Fixture {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub trait Transport: Send + Sync {
    fn send(&self, prompt: &str, model: &str, temperature: f64) -> Result<String, GatewayError>;
}

/// Chat-completion endpoint over HTTP.
pub struct HttpTransport {
    url: String,
    key: String,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(url: &str, key: &str) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        HttpTransport {
            url: url.to_string(),
            key: key.to_string(),
            agent,
        }
    }

    pub fn from_env() -> Result<Self, GatewayError> {
        let url = std::env::var(URL_VAR).map_err(|_| GatewayError::MissingCredentials(URL_VAR))?;
        let key = std::env::var(KEY_VAR).map_err(|_| GatewayError::MissingCredentials(KEY_VAR))?;
        Ok(HttpTransport::new(&url, &key))
    }
}

impl Transport for HttpTransport {
    fn send(&self, prompt: &str, model: &str, temperature: f64) -> Result<String, GatewayError> {
        let body = json!({
            "model": model,
            "temperature": temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut resp = self
            .agent
            .post(&self.url)
            .header("Authorization", &format!("Bearer {}", self.key))
            .send_json(&body)
            .map_err(|e| GatewayError::Network(e.to_string()))?;
        let v: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| GatewayError::BadResponse(e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| GatewayError::BadResponse(v.to_string()))
    }
}

pub struct Gateway {
    mode: Mode,
    store: FixtureStore,
    model: String,
    transport: Mutex<Option<Box<dyn Transport>>>,
}

impl Gateway {
    pub fn new(mode: Mode, fixtures: impl Into<PathBuf>, model: &str) -> Self {
        Gateway {
            mode,
            store: FixtureStore::new(fixtures),
            model: model.to_string(),
            transport: Mutex::new(None),
        }
    }

    pub fn replay(fixtures: impl Into<PathBuf>) -> Self {
        Gateway::new(Mode::Replay, fixtures, DEFAULT_MODEL)
    }

    pub fn with_transport(self, t: Box<dyn Transport>) -> Self {
        *self.transport.lock().expect("transport lock") = Some(t);
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn store(&self) -> &FixtureStore {
        &self.store
    }

    pub fn complete(&self, template: TemplateId, fills: Vec<String>) -> Result<String, GatewayError> {
        let request = Request::new(template, fills, &self.model);
        let prompt = template.render(&request.fills)?;
        let hash = request.hash();
        if self.mode == Mode::Replay {
            return self
                .store
                .get(&hash)?
                .map(|ex| ex.response)
                .ok_or(GatewayError::CacheMiss { hash, template });
        }
        let response = self.send(&prompt, &request)?;
        if self.mode == Mode::Record {
            self.store.put(&Exchange {
                hash,
                request,
                response: response.clone(),
            })?;
        }
        Ok(response)
    }

    fn send(&self, prompt: &str, request: &Request) -> Result<String, GatewayError> {
        let mut guard = self.transport.lock().expect("transport lock");
        if guard.is_none() {
            *guard = Some(Box::new(HttpTransport::from_env()?));
        }
        let t = guard.as_ref().expect("transport set");
        t.send(prompt, &request.model, request.temperature)
    }

    /// Runs requests on up to `jobs` threads; results keep input order.
    pub fn complete_many(
        &self,
        requests: &[(TemplateId, Vec<String>)],
        jobs: usize,
    ) -> Vec<Result<String, GatewayError>> {
        let next = AtomicUsize::new(0);
        let results: Vec<Mutex<Option<Result<String, GatewayError>>>> =
            requests.iter().map(|_| Mutex::new(None)).collect();
        std::thread::scope(|s| {
            for _ in 0..jobs.clamp(1, requests.len().max(1)) {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some((t, fills)) = requests.get(i) else { break };
                    let r = self.complete(*t, fills.clone());
                    *results[i].lock().expect("result lock") = Some(r);
                });
            }
        });
        results
            .into_iter()
            .map(|m| m.into_inner().expect("result lock").expect("every request ran"))
            .collect()
    }
}

static SPAN_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[([^\[\]]+)\]\{([^{}]+)\}").expect("span regex"));

const ANNOTATION_CATEGORIES: &[&str] = &["REG", "COND", "Device", "Container", "String", "OpCode"];

/// (span, category) pairs from `[span]{Category}` markup anywhere in the
/// response. Unknown categories are kept and logged.
pub fn parse_annotation(response: &str) -> Vec<(String, String)> {
    let out: Vec<(String, String)> = SPAN_RE
        .captures_iter(response)
        .map(|c| {
            let cat = canonical_category(&c[2]);
            if !ANNOTATION_CATEGORIES.contains(&cat.as_str()) && !QUANTITATIVE_CATEGORIES.contains(&cat.as_str()) {
                log::warn!("unknown annotation category `{cat}`");
            }
            (c[1].to_string(), cat)
        })
        .collect();
    if out.is_empty() && !response.trim().is_empty() {
        log::warn!("no annotated spans in non-empty response");
    }
    out
}

/// Writes spans back into `text`, first occurrence left to right.
pub fn render_annotation(text: &str, spans: &[(String, String)]) -> String {
    let mut entities = Vec::new();
    let mut from = 0;
    for (span, cat) in spans {
        if let Some(i) = text[from..].find(span.as_str()) {
            let start = from + i;
            entities.push(Entity {
                text: span.clone(),
                category: cat.clone(),
                start,
                end: start + span.len(),
            });
            from = start + span.len();
        }
    }
    render_annotated(text, &entities)
}

/// `Original Text: Scientific Quantity` lines, keeping only quantities in
/// the lexicon's word list (canonicalized).
pub fn parse_quantities(response: &str, lex: &Lexicons) -> Vec<(String, String)> {
    response
        .lines()
        .filter_map(|l| {
            let (span, cat) = l.rsplit_once(':')?;
            let span = span.trim();
            let cat = lex.canonical_quantity(cat.trim())?;
            (!span.is_empty()).then(|| (span.to_string(), cat.to_string()))
        })
        .collect()
}

static RATING_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"Rating:\s*\[\[(\d+),\s*(\d+)\]\]").expect("rating regex"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub question: String,
    pub opinion: u32,
    pub confidence: u32,
    pub rationale: String,
}

/// The last `Rating: [[o, c]]` in the response; text before it is the
/// rationale.
pub fn parse_rating(response: &str) -> Result<(u32, u32, String), GatewayError> {
    let caps = RATING_RE.captures_iter(response).last().ok_or_else(|| GatewayError::Rating {
        raw: response.to_string(),
    })?;
    let num = |i: usize| {
        caps[i].parse::<u32>().map_err(|_| GatewayError::Rating {
            raw: response.to_string(),
        })
    };
    let (opinion, confidence) = (num(1)?, num(2)?);
    if !(1..=5).contains(&opinion) || !(1..=5).contains(&confidence) {
        return Err(GatewayError::RatingRange { opinion, confidence });
    }
    let start = caps.get(0).expect("whole match").start();
    Ok((opinion, confidence, response[..start].trim().to_string()))
}

pub fn judge_questions() -> Vec<String> {
    include_str!("../data/judge_questions.txt")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

/// The DSL as shown to the judge: grammar then registry. Provenance is left
/// out so the request hash depends only on the designed language.
pub fn dsl_description(artifact: &DslArtifact) -> String {
    format!(
        "Domain: {}\n\nSyntax (BNF):\n{}\nSemantic registry:\n{}",
        artifact.domain.name(),
        artifact.grammar.to_bnf(),
        artifact.registry.to_json()
    )
}

pub fn judge(artifact: &DslArtifact, question: &str, knowledge: &str, gw: &Gateway) -> Result<Verdict, GatewayError> {
    let fills = vec![question.to_string(), dsl_description(artifact), knowledge.to_string()];
    let response = gw.complete(TemplateId::JudgeEvaluation, fills)?;
    let (opinion, confidence, rationale) = parse_rating(&response)?;
    Ok(Verdict {
        question: question.to_string(),
        opinion,
        confidence,
        rationale,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeSummary {
    pub verdicts: Vec<Verdict>,
    pub mean_opinion: f64,
    pub mean_confidence: f64,
}

/// Judges every question; the first failure aborts.
pub fn judge_all(
    artifact: &DslArtifact,
    questions: &[String],
    gw: &Gateway,
    jobs: usize,
) -> Result<JudgeSummary, GatewayError> {
    let desc = dsl_description(artifact);
    let requests: Vec<_> = questions
        .iter()
        .map(|q| (TemplateId::JudgeEvaluation, vec![q.clone(), desc.clone(), String::new()]))
        .collect();
    let mut verdicts = Vec::with_capacity(questions.len());
    for (q, r) in questions.iter().zip(gw.complete_many(&requests, jobs)) {
        let (opinion, confidence, rationale) = parse_rating(&r?)?;
        verdicts.push(Verdict {
            question: q.clone(),
            opinion,
            confidence,
            rationale,
        });
    }
    let n = verdicts.len().max(1) as f64;
    Ok(JudgeSummary {
        mean_opinion: verdicts.iter().map(|v| v.opinion as f64).sum::<f64>() / n,
        mean_confidence: verdicts.iter().map(|v| v.confidence as f64).sum::<f64>() / n,
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Echo;

    impl Transport for Echo {
        fn send(&self, prompt: &str, _: &str, _: f64) -> Result<String, GatewayError> {
            Ok(format!("{} chars. Rating: [[4, 4]]", prompt.len()))
        }
    }

    #[test]
    fn template_arity() {
        let arity: Vec<_> = TemplateId::ALL.iter().map(|t| t.arity()).collect();
        assert_eq!(arity, [2, 3, 2, 1, 3]);
        assert!(matches!(
            TemplateId::OntologyIe.render(&["x".into()]),
            Err(GatewayError::Arity { expected: 2, got: 1, .. })
        ));
        let s = TemplateId::ProgramTranslation.render(&["Mix.".into()]).unwrap();
        assert!(s.contains("Mix.") && !s.contains("{}"));
    }

    #[test]
    fn hash_is_stable() {
        let r = Request::new(TemplateId::JudgeEvaluation, vec!["q".into(), "d".into(), String::new()], "m");
        assert_eq!(r.hash(), r.clone().hash());
        let mut other = r.clone();
        other.fills[0] = "q2".into();
        assert_ne!(r.hash(), other.hash());
        assert_eq!(r.hash().len(), 64);
    }

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let rec = Gateway::new(Mode::Record, dir.path(), "m").with_transport(Box::new(Echo));
        let fills = vec!["a".to_string(), "b".to_string()];
        let live = rec.complete(TemplateId::OntologyIe, fills.clone()).unwrap();
        let rep = Gateway::new(Mode::Replay, dir.path(), "m");
        assert_eq!(rep.complete(TemplateId::OntologyIe, fills).unwrap(), live);
        let miss = rep.complete(TemplateId::OntologyIe, vec!["a".into(), "c".into()]);
        assert!(matches!(miss, Err(GatewayError::CacheMiss { .. })));
    }

    #[test]
    fn ratings() {
        assert_eq!(parse_rating("Fine.\nRating: [[4, 4]]").unwrap(), (4, 4, "Fine.".into()));
        assert!(matches!(parse_rating("Rating: [[6, 2]]"), Err(GatewayError::RatingRange { .. })));
        assert!(matches!(parse_rating("Rating: 4/5"), Err(GatewayError::Rating { .. })));
    }

    #[test]
    fn annotations() {
        let spans = parse_annotation("Transect the [bile duct]{REG} close to the [pancreas]{REG}.");
        assert_eq!(spans, [("bile duct".into(), "REG".into()), ("pancreas".into(), "REG".into())]);
        assert!(parse_annotation("").is_empty());
        let text = "Spin the tube at 3000g.";
        let spans = vec![("tube".to_string(), "Container".to_string()), ("3000g".to_string(), "Force".to_string())];
        assert_eq!(parse_annotation(&render_annotation(text, &spans)), spans);
    }

    #[test]
    fn quantity_lines_are_filtered() {
        let q = parse_quantities("50mL: Volume\n37C: Temperature\nspeedily: Adverb\n", &Lexicons::bundled());
        assert_eq!(q, [("50mL".into(), "Volume".into()), ("37C".into(), "Temperature".into())]);
    }

    #[test]
    fn judge_question_list() {
        assert_eq!(judge_questions().len(), 50);
    }
}

//! Rule-based per-sentence annotation.
//!
//! [`annotate`] turns a step into [`StepFeatures`]: tag spans, noun lemmas,
//! lexicon memberships, the leading-verb opcode and enumerated-number runs.
//! The same pass also records typed argument spans ([`Entity`]) used to build
//! operation patterns.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{Protocol, Step};
use crate::lexicon::Lexicons;
use crate::tagger::{is_function_word, is_pronoun, split_sentences, tokenize, Lemmatizer, Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Tag {
    Int,
    Float,
    True,
    False,
    String,
    Time,
    Chem,
    Container,
    If,
    Else,
    When,
    Num,
    Pron,
    Noun,
    Persons,
    Add,
    Minus,
    Multiply,
    Devide,
    And,
    Or,
    Not,
    Equal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagSpan {
    pub tag: Tag,
    /// Byte offsets into [`Sentence::text`].
    pub start: usize,
    pub end: usize,
}

/// A typed argument span, in the `[text]{Category}` sense.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub text: String,
    pub category: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub opcode: Option<String>,
    pub tags: Vec<TagSpan>,
    pub nouns: Vec<String>,
    /// Lemmas of nouns that are in the chem lexicon.
    pub chem: Vec<String>,
    pub num_run_lengths: Vec<usize>,
    pub entities: Vec<Entity>,
}

impl Sentence {
    pub fn has(&self, tag: Tag) -> bool {
        self.tags.iter().any(|t| t.tag == tag)
    }

    pub fn count(&self, tag: Tag) -> usize {
        self.tags.iter().filter(|t| t.tag == tag).count()
    }

    pub fn span(&self, t: &TagSpan) -> &str {
        &self.text[t.start..t.end]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepFeatures {
    pub sentences: Vec<Sentence>,
}

/// One-shot annotation of a step. Prefer an [`Annotator`] when annotating
/// many steps with the same lexicons.
pub fn annotate(step: &Step, lexicons: &Lexicons) -> StepFeatures {
    Annotator::new(lexicons.clone()).annotate_step(step)
}

/// Tagger state built once from a lexicon set.
#[derive(Debug, Clone)]
pub struct Annotator {
    lex: Lexicons,
    lem: Lemmatizer,
}

impl Annotator {
    pub fn new(lex: Lexicons) -> Self {
        let lem = Lemmatizer::new(&lex);
        Annotator { lex, lem }
    }

    pub fn lexicons(&self) -> &Lexicons {
        &self.lex
    }

    pub fn lemmatizer(&self) -> &Lemmatizer {
        &self.lem
    }

    pub fn annotate_step(&self, step: &Step) -> StepFeatures {
        self.annotate_text(&step.text)
    }

    pub fn annotate_protocol(&self, protocol: &Protocol) -> StepFeatures {
        StepFeatures {
            sentences: protocol
                .steps
                .iter()
                .flat_map(|s| self.annotate_step(s).sentences)
                .collect(),
        }
    }

    pub fn annotate_text(&self, text: &str) -> StepFeatures {
        StepFeatures {
            sentences: split_sentences(text)
                .into_iter()
                .map(|(a, b)| self.annotate_sentence(&text[a..b]))
                .collect(),
        }
    }

    pub fn annotate_sentence(&self, raw: &str) -> Sentence {
        let (text, bracketed) = strip_brackets(raw);
        let tokens = tokenize(&text);
        let mut tags = Vec::new();
        let mut nouns = Vec::new();
        let mut chem = Vec::new();
        let mut entities = Vec::new();

        let opcode_idx = tokens.iter().position(|t| t.kind != TokenKind::Punct);
        let opcode = opcode_idx.and_then(|i| {
            let t = &tokens[i];
            if t.kind != TokenKind::Word {
                return None;
            }
            let lemma = self.lem.lemma(&t.text);
            self.lex.verbs.contains(&lemma).then_some(lemma)
        });
        let skip_first = opcode.is_some();

        self.tag_keywords(&text, &tokens, &mut tags);
        tag_strings(&text, &mut tags);
        tag_times(&text, &mut tags);

        let mut i = 0;
        while i < tokens.len() {
            let t = &tokens[i];
            if skip_first && Some(i) == opcode_idx {
                i += 1;
                continue;
            }
            if t.kind != TokenKind::Word {
                i += 1;
                continue;
            }
            if let Some((len, lemma)) = self.match_phrase(&tokens, i) {
                let start = t.start;
                let end = tokens[i + len - 1].end;
                let kinds = self.lex.kinds(&lemma);
                tags.push(TagSpan { tag: Tag::Noun, start, end });
                if kinds.chem {
                    tags.push(TagSpan { tag: Tag::Chem, start, end });
                    chem.push(lemma.clone());
                }
                if kinds.container {
                    tags.push(TagSpan { tag: Tag::Container, start, end });
                }
                if self.lex.persons.contains(&lemma) {
                    tags.push(TagSpan { tag: Tag::Persons, start, end });
                }
                let category = if kinds.chem || kinds.reg {
                    Some("REG")
                } else if kinds.device {
                    Some("Device")
                } else if kinds.container {
                    Some("Container")
                } else {
                    None
                };
                if let Some(category) = category {
                    entities.push(Entity {
                        text: text[start..end].to_string(),
                        category: category.to_string(),
                        start,
                        end,
                    });
                }
                nouns.push(lemma);
                i += len;
                continue;
            }
            let lower = t.lower();
            if is_pronoun(&lower) {
                tags.push(TagSpan { tag: Tag::Pron, start: t.start, end: t.end });
            } else if !is_function_word(&lower) && !lower.ends_with("ly") && !is_unit_word(&lower) {
                let lemma = self.lem.lemma(&lower);
                tags.push(TagSpan { tag: Tag::Noun, start: t.start, end: t.end });
                nouns.push(lemma);
            }
            i += 1;
        }

        for t in &tokens {
            if t.kind == TokenKind::Number {
                let tag = if t.text.contains('.') || t.text.contains('/') {
                    Tag::Float
                } else {
                    Tag::Int
                };
                tags.push(TagSpan { tag, start: t.start, end: t.end });
            }
        }

        let num_run_lengths = num_runs(&tokens);
        tag_num_runs(&tokens, &mut tags);

        entities.extend(quantity_entities(&text));
        entities.sort_by_key(|e| (e.start, e.end));
        dedup_overlapping(&mut entities);
        if let Some(b) = bracketed {
            entities = b;
        }

        tags.sort_by_key(|t| (t.start, t.end, t.tag));
        tags.dedup();
        Sentence {
            text,
            opcode,
            tags,
            nouns,
            chem,
            num_run_lengths,
            entities,
        }
    }

    /// Longest lexicon phrase starting at token `i`; returns (token count, lemma).
    fn match_phrase(&self, tokens: &[Token], i: usize) -> Option<(usize, String)> {
        let max = self.lex.max_phrase_words().min(tokens.len() - i);
        for len in (1..=max).rev() {
            let window = &tokens[i..i + len];
            if window.iter().any(|t| t.kind != TokenKind::Word) {
                continue;
            }
            let words: Vec<String> = window.iter().map(Token::lower).collect();
            let raw = words.join(" ");
            if self.lex.kinds(&raw).any() || (len == 1 && self.lex.persons.contains(&raw)) {
                return Some((len, raw));
            }
            let mut singular = words.clone();
            let last = singular.len() - 1;
            singular[last] = self.lem.lemma(&words[last]);
            let lemma = singular.join(" ");
            if self.lex.kinds(&lemma).any() || (len == 1 && self.lex.persons.contains(&lemma)) {
                return Some((len, lemma));
            }
        }
        None
    }

    fn tag_keywords(&self, text: &str, tokens: &[Token], tags: &mut Vec<TagSpan>) {
        for (idx, t) in tokens.iter().enumerate() {
            let lower = t.lower();
            let tag = match lower.as_str() {
                "if" => Some(Tag::If),
                "else" | "otherwise" => Some(Tag::Else),
                "when" | "whenever" => Some(Tag::When),
                "true" => Some(Tag::True),
                "false" => Some(Tag::False),
                "+" | "plus" | "sum" => Some(Tag::Add),
                "minus" | "subtract" => Some(Tag::Minus),
                "-" | "−" => {
                    let before = text[..t.start].chars().next_back();
                    let after = text[t.end..].chars().next();
                    let spaced = before.is_some_and(char::is_whitespace)
                        && after.is_some_and(char::is_whitespace);
                    spaced.then_some(Tag::Minus)
                }
                "×" | "*" | "multiply" => Some(Tag::Multiply),
                "÷" | "divide" => Some(Tag::Devide),
                "and" | "&&" => Some(Tag::And),
                "or" | "||" => Some(Tag::Or),
                "not" | "!" => {
                    if lower == "!" && idx + 1 == tokens.len() {
                        None
                    } else {
                        Some(Tag::Not)
                    }
                }
                "=" | "equal" | "equals" => Some(Tag::Equal),
                _ => None,
            };
            if let Some(tag) = tag {
                tags.push(TagSpan { tag, start: t.start, end: t.end });
            }
        }
    }
}

const UNIT_WORDS: &[&str] = &[
    "s", "sec", "secs", "second", "seconds", "min", "mins", "minute", "minutes", "h", "hr", "hrs",
    "hour", "hours", "day", "days", "week", "weeks", "ml", "µl", "μl", "ul", "nl", "l", "mm", "cm",
    "nm", "µm", "μm", "um", "m", "km", "in", "µg", "μg", "ug", "mg", "g", "kg", "ng", "mm", "µm",
    "um", "nm", "pm", "rpm", "hz", "khz", "mhz", "v", "mv", "kv", "pa", "kpa", "psi", "bar", "atm",
    "j", "kj", "cal", "kcal", "kb", "bp", "x", "times", "ph", "mmol", "µmol", "nmol", "mol",
];

fn is_unit_word(lower: &str) -> bool {
    UNIT_WORDS.contains(&lower)
}

static BRACKET_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\[([^\[\]]+)\]\{([^{}]+)\}").expect("bracket regex"));

/// Removes `[span]{Category}` markup, returning the plain sentence and the
/// spans when any markup was present.
pub fn strip_brackets(raw: &str) -> (String, Option<Vec<Entity>>) {
    if !BRACKET_RE.is_match(raw) {
        return (raw.to_string(), None);
    }
    let mut plain = String::with_capacity(raw.len());
    let mut spans = Vec::new();
    let mut last = 0;
    for cap in BRACKET_RE.captures_iter(raw) {
        let m = cap.get(0).expect("match");
        plain.push_str(&raw[last..m.start()]);
        let start = plain.len();
        plain.push_str(&cap[1]);
        spans.push(Entity {
            text: cap[1].to_string(),
            category: crate::semantic::canonical_category(&cap[2]),
            start,
            end: plain.len(),
        });
        last = m.end();
    }
    plain.push_str(&raw[last..]);
    (plain, Some(spans))
}

static STRING_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#""[^"]*"|“[^”]*”|https?://[^\s"'”)]+|www\.[^\s"'”)]+"#).expect("string regex")
});

fn tag_strings(text: &str, tags: &mut Vec<TagSpan>) {
    let mut covered: Vec<(usize, usize)> = Vec::new();
    for m in STRING_RE.find_iter(text) {
        if covered.iter().any(|&(a, b)| m.start() >= a && m.end() <= b) {
            continue;
        }
        covered.push((m.start(), m.end()));
        tags.push(TagSpan { tag: Tag::String, start: m.start(), end: m.end() });
    }
}

static TIME_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)(\d+(?:\.\d+)?(?:\s*(?:-|–|to)\s*\d+(?:\.\d+)?)?)\s*(seconds|second|secs|sec|s|minutes|minute|mins|min|hours|hour|hrs|hr|h|days|day|weeks|week)\b",
    )
    .expect("time regex")
});

fn preceded_by_letter(text: &str, idx: usize) -> bool {
    text[..idx]
        .chars()
        .next_back()
        .is_some_and(|c| c.is_alphanumeric() || c == '.')
}

fn tag_times(text: &str, tags: &mut Vec<TagSpan>) {
    for m in TIME_RE.find_iter(text) {
        if preceded_by_letter(text, m.start()) {
            continue;
        }
        tags.push(TagSpan { tag: Tag::Time, start: m.start(), end: m.end() });
    }
}

/// Lengths (≥ 2) of enumerations like `1.5mM, 2.0mM, 2.5mM, and 3.0mM`.
pub fn num_runs(tokens: &[Token]) -> Vec<usize> {
    runs(tokens).into_iter().map(|(_, _, n)| n).collect()
}

fn tag_num_runs(tokens: &[Token], tags: &mut Vec<TagSpan>) {
    for (a, b, _) in runs(tokens) {
        tags.push(TagSpan { tag: Tag::Num, start: tokens[a].start, end: tokens[b].end });
    }
}

/// (first token, last token, item count) for each run.
fn runs(tokens: &[Token]) -> Vec<(usize, usize, usize)> {
    let is_sep = |t: &Token| {
        matches!(t.text.as_str(), "," | ";") || matches!(t.lower().as_str(), "and" | "or")
    };
    let is_unit = |t: &Token| t.kind == TokenKind::Word && t.text.chars().count() <= 4 || matches!(t.text.as_str(), "%" | "°C");
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i].kind != TokenKind::Number {
            i += 1;
            continue;
        }
        let start = i;
        let mut count = 1;
        let mut last = i;
        let mut j = i + 1;
        loop {
            if j < tokens.len() && is_unit(&tokens[j]) && !is_sep(&tokens[j]) {
                last = j;
                j += 1;
            }
            let mut k = j;
            let mut saw_sep = false;
            while k < tokens.len() && is_sep(&tokens[k]) {
                saw_sep = true;
                k += 1;
            }
            if saw_sep && k < tokens.len() && tokens[k].kind == TokenKind::Number {
                count += 1;
                last = k;
                j = k + 1;
            } else {
                break;
            }
        }
        if count >= 2 {
            out.push((start, last, count));
        }
        i = last.max(i) + 1;
    }
    out
}

struct UnitClass {
    category: &'static str,
    units: &'static [&'static str],
}

const UNIT_CLASSES: &[UnitClass] = &[
    UnitClass { category: "Flow Rate", units: &["ml/min", "µl/min", "μl/min", "ul/min", "l/min", "ml/h"] },
    UnitClass { category: "Density", units: &["g/ml", "g/cm3", "g/cm³", "kg/m3", "kg/m³"] },
    UnitClass { category: "Concentration", units: &["mg/ml", "µg/ml", "μg/ml", "ug/ml", "ng/ml", "g/l", "mg/l", "mmol/l", "mol/l", "%", "x"] },
    UnitClass { category: "Volume", units: &["ml", "µl", "μl", "ul", "nl", "l", "cc"] },
    UnitClass { category: "Temperature", units: &["°c", "ºc", "°f", "degrees", "degree"] },
    UnitClass { category: "Time", units: &["seconds", "second", "secs", "sec", "s", "minutes", "minute", "mins", "min", "hours", "hour", "hrs", "hr", "h", "days", "day", "weeks", "week"] },
    UnitClass { category: "Length", units: &["kb", "bp", "cm", "mm", "µm", "μm", "um", "nm", "m", "in", "inch", "inches", "km"] },
    UnitClass { category: "Mass", units: &["mg", "µg", "μg", "ug", "ng", "kg", "g"] },
    UnitClass { category: "Speed", units: &["rpm", "m/s", "mm/s", "cm/s"] },
    UnitClass { category: "Acceleration", units: &["m/s2", "m/s²"] },
    UnitClass { category: "Frequency", units: &["hz", "khz", "mhz"] },
    UnitClass { category: "Voltage", units: &["v", "mv", "kv"] },
    UnitClass { category: "Pressure", units: &["pa", "kpa", "mpa", "psi", "bar", "atm", "mmhg"] },
    UnitClass { category: "Energy", units: &["j", "kj", "cal", "kcal", "ev"] },
];

static QUANTITY_RE: LazyLock<Regex> = LazyLock::new(|| {
    let mut units: Vec<&str> = UNIT_CLASSES.iter().flat_map(|c| c.units.iter().copied()).collect();
    units.sort_by_key(|u| std::cmp::Reverse(u.len()));
    units.dedup();
    let alt = units.iter().map(|u| regex::escape(u)).collect::<Vec<_>>().join("|");
    Regex::new(&format!(
        r"(?i)(\d+(?:[.,]\d+)?|\.\d+)(?:\s*(?:-|–|to)\s*(?:\d+(?:\.\d+)?))?\s*(×\s*g|x\s*g\b|{alt})(?:\b|$|[^\p{{L}}])"
    ))
    .expect("quantity regex")
});

static PH_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\bpH\s*(?:of\s*|to\s*|=\s*)?\d+(?:\.\d+)?").expect("ph regex"));

/// Quantity spans found by unit patterns, classified into categories.
pub fn quantity_entities(text: &str) -> Vec<Entity> {
    let mut out = Vec::new();
    for cap in QUANTITY_RE.captures_iter(text) {
        let whole = cap.get(0).expect("match");
        if preceded_by_letter(text, whole.start()) {
            continue;
        }
        let unit_m = cap.get(2).expect("unit");
        let category = classify_unit(unit_m.as_str(), &cap[1]);
        let end = unit_m.end();
        out.push(Entity {
            text: text[whole.start()..end].to_string(),
            category: category.to_string(),
            start: whole.start(),
            end,
        });
    }
    for m in PH_RE.find_iter(text) {
        out.push(Entity {
            text: m.as_str().to_string(),
            category: "Acidity".to_string(),
            start: m.start(),
            end: m.end(),
        });
    }
    out
}

fn classify_unit(unit: &str, number: &str) -> &'static str {
    let original: String = unit.chars().filter(|c| !c.is_whitespace()).collect();
    if matches!(original.as_str(), "M" | "mM" | "µM" | "μM" | "uM" | "nM" | "pM") {
        return "Concentration";
    }
    let compact = original.to_lowercase();
    if compact == "×g" || compact == "xg" {
        return "Force";
    }
    if compact == "g" {
        let n: f64 = number.replace(',', "").parse().unwrap_or(0.0);
        if n >= 100.0 && !number.contains('.') {
            return "Force";
        }
        return "Mass";
    }
    for class in UNIT_CLASSES {
        if class.units.contains(&compact.as_str()) {
            return class.category;
        }
    }
    "Quantity"
}

fn dedup_overlapping(entities: &mut Vec<Entity>) {
    let mut kept: Vec<Entity> = Vec::with_capacity(entities.len());
    for e in entities.drain(..) {
        if let Some(prev) = kept.last_mut() {
            if e.start < prev.end {
                if e.end - e.start > prev.end - prev.start {
                    *prev = e;
                }
                continue;
            }
        }
        kept.push(e);
    }
    *entities = kept;
}

/// Distinct chem lemmas in a sentence.
pub fn chem_set(s: &Sentence) -> BTreeSet<&str> {
    s.chem.iter().map(String::as_str).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ann() -> Annotator {
        Annotator::new(Lexicons::bundled())
    }

    fn tag_texts(s: &Sentence, tag: Tag) -> Vec<&str> {
        s.tags.iter().filter(|t| t.tag == tag).map(|t| s.span(t)).collect()
    }

    #[test]
    fn incubate_sentence() {
        let s = ann().annotate_sentence("Incubate at 37°C for 30 min.");
        assert_eq!(s.opcode.as_deref(), Some("incubate"));
        assert_eq!(tag_texts(&s, Tag::Time), vec!["30 min"]);
        assert_eq!(tag_texts(&s, Tag::Int), vec!["37", "30"]);
        assert!(!s.has(Tag::Float));
        let cats: Vec<_> = s.entities.iter().map(|e| (e.text.as_str(), e.category.as_str())).collect();
        assert_eq!(cats, vec![("37°C", "Temperature"), ("30 min", "Time")]);
    }

    #[test]
    fn if_without_else() {
        let s = ann().annotate_sentence("If cells are confluent, split them.");
        assert!(s.has(Tag::If));
        assert!(!s.has(Tag::Else));
        assert!(s.has(Tag::Pron));
        assert_eq!(s.opcode, None);
    }

    #[test]
    fn enumerated_concentrations() {
        let s = ann().annotate_sentence(
            "Iterate different MgCl2 concentrations (1.5mM, 2.0mM, 2.5mM, and 3.0mM) in the PCR reaction.",
        );
        assert_eq!(s.opcode.as_deref(), Some("iterate"));
        assert_eq!(s.num_run_lengths, vec![4]);
        assert!(s.chem.contains(&"mgcl2".to_string()));
        assert_eq!(s.count(Tag::Float), 4);
    }

    #[test]
    fn strings_and_urls() {
        let s = ann().annotate_sentence("See 'https://example.org' for details.");
        assert_eq!(tag_texts(&s, Tag::String), vec!["https://example.org"]);
        let s = ann().annotate_sentence("Close the soundproof chamber as instruction manual (see \"https://---\").");
        assert_eq!(tag_texts(&s, Tag::String), vec!["\"https://---\""]);
        assert!(s.has(Tag::Container));
    }

    #[test]
    fn multiword_lexicon_phrases() {
        let s = ann().annotate_sentence("Transect the cranial nerves with the scissors.");
        assert_eq!(s.opcode.as_deref(), Some("transect"));
        let cats: Vec<_> = s.entities.iter().map(|e| e.category.as_str()).collect();
        assert_eq!(cats, vec!["REG", "Device"]);
        assert!(s.nouns.contains(&"cranial nerve".to_string()));
        assert!(!s.has(Tag::Chem));
    }

    #[test]
    fn brackets_override_rules() {
        let s = ann().annotate_sentence("Transect the [aorta]{REG} with [fine sharp scissors]{Device}.");
        assert_eq!(s.text, "Transect the aorta with fine sharp scissors.");
        let cats: Vec<_> = s.entities.iter().map(|e| (e.text.as_str(), e.category.as_str())).collect();
        assert_eq!(cats, vec![("aorta", "REG"), ("fine sharp scissors", "Device")]);
    }

    #[test]
    fn force_and_mass() {
        let q = quantity_entities("Spin at 3000g for 10 min, then weigh 2.5 g and 10 x g.");
        let cats: Vec<_> = q.iter().map(|e| (e.text.as_str(), e.category.as_str())).collect();
        assert_eq!(
            cats,
            vec![("3000g", "Force"), ("10 min", "Time"), ("2.5 g", "Mass"), ("10 x g", "Force")]
        );
    }

    #[test]
    fn operators() {
        let s = ann().annotate_sentence("Set x = a + b - c and not d or e.");
        for tag in [Tag::Equal, Tag::Add, Tag::Minus, Tag::And, Tag::Not, Tag::Or] {
            assert!(s.has(tag), "{tag:?}");
        }
        let s = ann().annotate_sentence("Use a GFP-fusion line.");
        assert!(!s.has(Tag::Minus));
    }

    #[test]
    fn persons_and_when() {
        let s = ann().annotate_sentence("When the timer rings, the assistant records the value.");
        assert!(s.has(Tag::When));
        assert!(s.has(Tag::Persons));
    }

    #[test]
    fn determinism() {
        let a = ann();
        let t = "Add 10 µl of PBS to the tube. Centrifuge at 3000g.";
        assert_eq!(a.annotate_text(t), a.annotate_text(t));
    }
}

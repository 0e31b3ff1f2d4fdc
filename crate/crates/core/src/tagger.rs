//! Sentence splitting, tokenization and lemmatization.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;

use crate::lexicon::Lexicons;

static TOKEN_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r#"(?x)
        https?://[^\s"'”)]+ | www\.[^\s"'”)]+
      | \d+(?:[.,/]\d+)* | \.\d+
      | [\p{L}][\p{L}\p{N}'’\-]*[\p{L}\p{N}]?
      | °[CF] | ºC
      | &&  | \|\|
      | [^\s\p{L}\p{N}]
    "#,
    )
    .expect("token regex")
});

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Word,
    Number,
    Url,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
    /// Byte offsets into the sentence.
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn lower(&self) -> String {
        self.text.to_lowercase()
    }
}

/// Byte ranges of sentences. A sentence ends at `.`, `?` or `!` followed by
/// whitespace or the end of the text; the terminator stays attached.
pub fn split_sentences(text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '?' | '!') {
            let next = chars.peek().map(|&(_, n)| n);
            if next.is_none_or(char::is_whitespace) {
                let end = i + c.len_utf8();
                push_trimmed(text, start, end, &mut out);
                start = end;
            }
        }
    }
    push_trimmed(text, start, text.len(), &mut out);
    out
}

fn push_trimmed(text: &str, start: usize, end: usize, out: &mut Vec<(usize, usize)>) {
    let s = &text[start..end];
    let lead = s.len() - s.trim_start().len();
    let trail = s.len() - s.trim_end().len();
    if lead + trail < s.len() {
        out.push((start + lead, end - trail));
    }
}

pub fn tokenize(sentence: &str) -> Vec<Token> {
    TOKEN_RE
        .find_iter(sentence)
        .map(|m| {
            let t = m.as_str();
            let first = t.chars().next().unwrap_or(' ');
            let kind = if t.starts_with("http") || t.starts_with("www.") {
                TokenKind::Url
            } else if first.is_ascii_digit() || (first == '.' && t.len() > 1) {
                TokenKind::Number
            } else if first.is_alphabetic() {
                TokenKind::Word
            } else {
                TokenKind::Punct
            };
            Token {
                text: t.to_string(),
                kind,
                start: m.start(),
                end: m.end(),
            }
        })
        .collect()
}

const DETERMINERS: &[&str] = &[
    "a", "an", "the", "each", "every", "all", "any", "some", "no", "both", "either", "neither",
    "another", "other", "such", "few", "several", "many", "much", "more", "most", "less",
];
const PREPOSITIONS: &[&str] = &[
    "at", "in", "on", "of", "for", "to", "from", "with", "without", "by", "into", "onto", "over",
    "under", "above", "below", "between", "through", "during", "after", "before", "until", "till",
    "per", "via", "about", "around", "along", "across", "against", "within", "upon", "up", "down",
    "out", "off", "near", "toward", "towards", "as", "than", "like",
];
const CONJUNCTIONS: &[&str] = &[
    "and", "or", "but", "nor", "so", "yet", "if", "else", "otherwise", "when", "whenever",
    "while", "then", "that", "which", "who", "whom", "whose", "where", "whether", "because",
    "since", "although", "unless", "once",
];
const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "am", "do", "does", "did", "has", "have",
    "had", "can", "could", "will", "would", "shall", "should", "may", "might", "must", "not",
];
pub const PRONOUNS: &[&str] = &[
    "it", "its", "itself", "they", "them", "their", "theirs", "themselves", "he", "him", "his",
    "she", "her", "hers", "we", "us", "our", "ours", "you", "your", "yours", "i", "me", "my",
    "this", "these", "those",
];

pub fn is_pronoun(lower: &str) -> bool {
    PRONOUNS.contains(&lower)
}

/// True for closed-class words that can never head a noun phrase.
pub fn is_function_word(lower: &str) -> bool {
    DETERMINERS.contains(&lower)
        || PREPOSITIONS.contains(&lower)
        || CONJUNCTIONS.contains(&lower)
        || AUXILIARIES.contains(&lower)
        || PRONOUNS.contains(&lower)
        || matches!(lower, "true" | "false" | "plus" | "minus" | "equal" | "equals" | "times")
}

/// Suffix-stripping lemmatizer guided by a set of known base forms.
#[derive(Debug, Clone)]
pub struct Lemmatizer {
    known: BTreeSet<String>,
    verbs: BTreeSet<String>,
}

impl Lemmatizer {
    pub fn new(lex: &Lexicons) -> Self {
        let mut known: BTreeSet<String> = lex.verbs.clone();
        for phrase in lex.chem.iter().chain(&lex.container).chain(&lex.device).chain(&lex.reg) {
            known.extend(phrase.split_whitespace().map(str::to_string));
        }
        known.extend(lex.persons.iter().cloned());
        Lemmatizer {
            known,
            verbs: lex.verbs.clone(),
        }
    }

    pub fn is_known(&self, lower: &str) -> bool {
        self.known.contains(lower)
    }

    pub fn lemma(&self, word: &str) -> String {
        let w = word.to_lowercase();
        if w.chars().count() <= 3 {
            return w;
        }
        let cands = candidates(&w);
        if let Some(verb) = cands.iter().find(|c| self.verbs.contains(*c)) {
            return verb.clone();
        }
        if self.known.contains(&w) {
            return w;
        }
        for cand in cands {
            if self.known.contains(&cand) {
                return cand;
            }
        }
        fallback(&w)
    }
}

fn candidates(w: &str) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(stem) = w.strip_suffix("ies") {
        out.push(format!("{stem}y"));
    }
    if let Some(stem) = w.strip_suffix("es") {
        out.push(stem.to_string());
    }
    if let Some(stem) = w.strip_suffix('s') {
        out.push(stem.to_string());
    }
    for suffix in ["ed", "ing"] {
        if let Some(stem) = w.strip_suffix(suffix) {
            out.push(stem.to_string());
            out.push(format!("{stem}e"));
            if let Some(undoubled) = undouble(stem) {
                out.push(undoubled);
            }
            if suffix == "ed" {
                if let Some(s) = stem.strip_suffix('i') {
                    out.push(format!("{s}y"));
                }
            }
        }
    }
    out
}

fn undouble(stem: &str) -> Option<String> {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 2 && b[n - 1] == b[n - 2] && !b"aeiou".contains(&b[n - 1]) {
        Some(stem[..n - 1].to_string())
    } else {
        None
    }
}

fn fallback(w: &str) -> String {
    if let Some(stem) = w.strip_suffix("ies") {
        return format!("{stem}y");
    }
    if w.ends_with("ss") || w.ends_with("us") || w.ends_with("is") {
        return w.to_string();
    }
    for suf in ["ches", "shes", "xes", "sses"] {
        if w.ends_with(suf) {
            return w[..w.len() - 2].to_string();
        }
    }
    match w.strip_suffix('s') {
        Some(stem) => stem.to_string(),
        None => w.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sents(text: &str) -> Vec<&str> {
        split_sentences(text).into_iter().map(|(a, b)| &text[a..b]).collect()
    }

    #[test]
    fn splits_on_terminators_followed_by_space() {
        assert_eq!(
            sents("Adjust the pH to 7.4. Mix well! Done?"),
            vec!["Adjust the pH to 7.4.", "Mix well!", "Done?"]
        );
        assert_eq!(sents("  no terminator "), vec!["no terminator"]);
        assert!(sents("   ").is_empty());
    }

    #[test]
    fn tokens_separate_numbers_and_units() {
        let toks = tokenize("Add 1.5mM MgCl2 at 37°C (see \"https://x.org\").");
        let texts: Vec<_> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(
            texts,
            vec!["Add", "1.5", "mM", "MgCl2", "at", "37", "°C", "(", "see", "\"", "https://x.org", "\"", ")", "."]
        );
        assert_eq!(toks[1].kind, TokenKind::Number);
        assert_eq!(toks[10].kind, TokenKind::Url);
    }

    #[test]
    fn lemmas() {
        let lem = Lemmatizer::new(&Lexicons::bundled());
        assert_eq!(lem.lemma("Incubate"), "incubate");
        assert_eq!(lem.lemma("Resolved"), "resolve");
        assert_eq!(lem.lemma("cells"), "cell");
        assert_eq!(lem.lemma("nerves"), "nerve");
        assert_eq!(lem.lemma("centrifuged"), "centrifuge");
        assert_eq!(lem.lemma("spinning"), "spin");
        assert_eq!(lem.lemma("errors"), "error");
        assert_eq!(lem.lemma("glass"), "glass");
        assert_eq!(lem.lemma("repeats"), "repeat");
    }
}

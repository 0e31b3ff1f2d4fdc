//! Word and sentence similarity.

use std::collections::BTreeSet;

use crate::lexicon::Lexicons;
use crate::tagger::{tokenize, Lemmatizer, TokenKind};

/// A similarity function over words, returning values in `[0, 1]`.
///
/// Implementations must be symmetric, return 1 on identical inputs and be
/// deterministic. They are shared read-only across worker threads.
pub trait SimilarityProvider: Send + Sync {
    fn name(&self) -> &str;

    fn sim(&self, a: &str, b: &str) -> f64;

    /// Mean of best-pairing word similarities, averaged over both directions.
    fn sentence_sim(&self, a: &str, b: &str) -> f64 {
        let wa = content_words(a);
        let wb = content_words(b);
        if wa.is_empty() && wb.is_empty() {
            return 1.0;
        }
        if wa.is_empty() || wb.is_empty() {
            return 0.0;
        }
        let directed = |xs: &[String], ys: &[String]| {
            xs.iter()
                .map(|x| ys.iter().map(|y| self.sim(x, y)).fold(0.0, f64::max))
                .sum::<f64>()
                / xs.len() as f64
        };
        0.5 * (directed(&wa, &wb) + directed(&wb, &wa))
    }
}

fn content_words(s: &str) -> Vec<String> {
    tokenize(s)
        .into_iter()
        .filter(|t| matches!(t.kind, TokenKind::Word | TokenKind::Number))
        .map(|t| t.lower())
        .collect()
}

/// Lemma equality, then the bundled synonym table, then character trigrams.
#[derive(Debug, Clone)]
pub struct LexicalSimilarity {
    lexicons: Lexicons,
    lemmatizer: Lemmatizer,
}

pub const SYNONYM_SCORE: f64 = 0.9;

impl LexicalSimilarity {
    pub fn new(lexicons: Lexicons) -> Self {
        let lemmatizer = Lemmatizer::new(&lexicons);
        LexicalSimilarity {
            lexicons,
            lemmatizer,
        }
    }
}

impl Default for LexicalSimilarity {
    fn default() -> Self {
        Self::new(Lexicons::bundled())
    }
}

impl SimilarityProvider for LexicalSimilarity {
    fn name(&self) -> &str {
        "lexical"
    }

    fn sim(&self, a: &str, b: &str) -> f64 {
        let la = normalize(a);
        let lb = normalize(b);
        if la == lb {
            return 1.0;
        }
        let ma = lemma_phrase(&self.lemmatizer, &la);
        let mb = lemma_phrase(&self.lemmatizer, &lb);
        if ma == mb {
            return 1.0;
        }
        if self.lexicons.are_synonyms(&ma, &mb) || self.lexicons.are_synonyms(&la, &lb) {
            return SYNONYM_SCORE;
        }
        trigram_jaccard(&ma, &mb)
    }
}

fn normalize(s: &str) -> String {
    s.trim().to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

fn lemma_phrase(lem: &Lemmatizer, s: &str) -> String {
    s.split(' ').map(|w| lem.lemma(w)).collect::<Vec<_>>().join(" ")
}

fn trigrams(s: &str) -> BTreeSet<[char; 3]> {
    let padded: Vec<char> = "  ".chars().chain(s.chars()).chain("  ".chars()).collect();
    padded.windows(3).map(|w| [w[0], w[1], w[2]]).collect()
}

/// Jaccard overlap of character trigrams, padded with two blanks per side.
pub fn trigram_jaccard(a: &str, b: &str) -> f64 {
    if a == b {
        return 1.0;
    }
    let ta = trigrams(a);
    let tb = trigrams(b);
    let inter = ta.intersection(&tb).count();
    let union = ta.union(&tb).count();
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

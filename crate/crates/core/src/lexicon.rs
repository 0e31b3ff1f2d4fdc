//! Word lists used by the tagger, the filter bank and the similarity provider.
//!
//! Every list ships in `data/lexicon/` and is compiled into the crate; a
//! directory with the same file names can replace the bundled set at runtime.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

const CHEM: &str = include_str!("../data/lexicon/chem.txt");
const CONTAINER: &str = include_str!("../data/lexicon/container.txt");
const DEVICE: &str = include_str!("../data/lexicon/device.txt");
const REG: &str = include_str!("../data/lexicon/reg.txt");
const PERSONS: &str = include_str!("../data/lexicon/persons.txt");
const VERBS: &str = include_str!("../data/lexicon/verbs.txt");
const QUANTITY_WORDS: &str = include_str!("../data/lexicon/quantity_words.txt");
const SYNONYMS: &str = include_str!("../data/lexicon/synonyms.tsv");

/// Entity kinds a lexicon phrase can belong to. A phrase may be in several.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EntityKinds {
    pub chem: bool,
    pub container: bool,
    pub device: bool,
    pub reg: bool,
}

impl EntityKinds {
    pub fn any(&self) -> bool {
        self.chem || self.container || self.device || self.reg
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicons {
    pub chem: BTreeSet<String>,
    pub container: BTreeSet<String>,
    pub device: BTreeSet<String>,
    /// Biological material that is an operand but not a chemical.
    pub reg: BTreeSet<String>,
    pub persons: BTreeSet<String>,
    pub verbs: BTreeSet<String>,
    /// Scientific quantity categories, in their canonical spelling.
    pub scientific_quantity_words: Vec<String>,
    synonyms: BTreeMap<String, BTreeSet<String>>,
    max_phrase_words: usize,
}

impl Default for Lexicons {
    fn default() -> Self {
        Self::bundled()
    }
}

impl Lexicons {
    pub fn bundled() -> Self {
        Self::from_sources(&Sources {
            chem: CHEM,
            container: CONTAINER,
            device: DEVICE,
            reg: REG,
            persons: PERSONS,
            verbs: VERBS,
            quantity_words: QUANTITY_WORDS,
            synonyms: SYNONYMS,
        })
    }

    /// Loads a lexicon directory laid out like `data/lexicon/`.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let read = |name: &str| -> Result<String> {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|e| Error::io(path, e))
        };
        let chem = read("chem.txt")?;
        let container = read("container.txt")?;
        let device = read("device.txt")?;
        let reg = read("reg.txt")?;
        let persons = read("persons.txt")?;
        let verbs = read("verbs.txt")?;
        let quantity_words = read("quantity_words.txt")?;
        let synonyms = read("synonyms.tsv")?;
        let lex = Self::from_sources(&Sources {
            chem: &chem,
            container: &container,
            device: &device,
            reg: &reg,
            persons: &persons,
            verbs: &verbs,
            quantity_words: &quantity_words,
            synonyms: &synonyms,
        });
        if lex.chem.is_empty() || lex.container.is_empty() || lex.scientific_quantity_words.is_empty()
        {
            return Err(Error::Config(format!(
                "lexicon directory {} has an empty required list",
                dir.display()
            )));
        }
        Ok(lex)
    }

    fn from_sources(src: &Sources<'_>) -> Self {
        let chem = parse_list(src.chem);
        let container = parse_list(src.container);
        let device = parse_list(src.device);
        let reg = parse_list(src.reg);
        let max_phrase_words = chem
            .iter()
            .chain(&container)
            .chain(&device)
            .chain(&reg)
            .map(|p| p.split_whitespace().count())
            .max()
            .unwrap_or(1);
        let scientific_quantity_words = src
            .quantity_words
            .lines()
            .map(strip_comment)
            .filter(|l| !l.is_empty())
            .map(|l| l.nfc().collect::<String>())
            .collect();
        let mut synonyms: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for line in src.synonyms.lines().map(strip_comment).filter(|l| !l.is_empty()) {
            let mut cols = line.split('\t').map(normalize_entry);
            if let (Some(a), Some(b)) = (cols.next(), cols.next()) {
                if a.is_empty() || b.is_empty() {
                    continue;
                }
                synonyms.entry(a.clone()).or_default().insert(b.clone());
                synonyms.entry(b).or_default().insert(a);
            }
        }
        Lexicons {
            chem,
            container,
            device,
            reg,
            persons: parse_list(src.persons),
            verbs: parse_list(src.verbs),
            scientific_quantity_words,
            synonyms,
            max_phrase_words,
        }
    }

    /// Longest phrase length (in words) over the entity lists.
    pub fn max_phrase_words(&self) -> usize {
        self.max_phrase_words
    }

    /// Looks up an already lower-cased, lemmatized phrase.
    pub fn kinds(&self, phrase: &str) -> EntityKinds {
        EntityKinds {
            chem: self.chem.contains(phrase),
            container: self.container.contains(phrase),
            device: self.device.contains(phrase),
            reg: self.reg.contains(phrase),
        }
    }

    pub fn are_synonyms(&self, a: &str, b: &str) -> bool {
        self.synonyms.get(a).is_some_and(|s| s.contains(b))
    }

    pub fn is_quantity_word(&self, word: &str) -> bool {
        self.canonical_quantity(word).is_some()
    }

    /// Case-insensitive match against the scientific quantity list.
    pub fn canonical_quantity(&self, word: &str) -> Option<&str> {
        let w = word.trim();
        self.scientific_quantity_words
            .iter()
            .find(|q| q.eq_ignore_ascii_case(w))
            .map(String::as_str)
    }
}

struct Sources<'a> {
    chem: &'a str,
    container: &'a str,
    device: &'a str,
    reg: &'a str,
    persons: &'a str,
    verbs: &'a str,
    quantity_words: &'a str,
    synonyms: &'a str,
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => line[..i].trim(),
        None => line.trim(),
    }
}

fn normalize_entry(s: &str) -> String {
    s.nfc()
        .collect::<String>()
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// One entry per line, `#` comments, lower-cased and whitespace-normalized.
pub fn parse_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(strip_comment)
        .filter(|l| !l.is_empty())
        .map(normalize_entry)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_lists_are_nonempty_and_lowercase() {
        let lex = Lexicons::bundled();
        for list in [&lex.chem, &lex.container, &lex.device, &lex.reg, &lex.verbs] {
            assert!(!list.is_empty());
            assert!(list.iter().all(|e| e == &e.to_lowercase()));
        }
        assert_eq!(lex.scientific_quantity_words.len(), 15);
    }

    #[test]
    fn bundled_seed_entries() {
        let lex = Lexicons::bundled();
        assert!(!lex.kinds("aorta").chem);
        assert!(lex.kinds("aorta").reg);
        assert!(lex.kinds("ammonium acetate buffer").chem);
        assert!(lex.kinds("rnaset2").chem);
        assert!(lex.kinds("centrifuge tube").container);
    }

    #[test]
    fn synonyms_are_symmetric() {
        let lex = Lexicons::bundled();
        assert!(lex.are_synonyms("repeat", "iterate"));
        assert!(lex.are_synonyms("iterate", "repeat"));
        assert!(!lex.are_synonyms("repeat", "centrifuge"));
    }

    #[test]
    fn comments_and_blank_lines_skipped() {
        let set = parse_list("# header\n\nFoo Bar  # trailing\n  baz\n");
        assert_eq!(set.into_iter().collect::<Vec<_>>(), vec!["baz", "foo bar"]);
    }

    #[test]
    fn quantity_lookup_is_case_insensitive() {
        let lex = Lexicons::bundled();
        assert_eq!(lex.canonical_quantity("flow rate"), Some("Flow Rate"));
        assert_eq!(lex.canonical_quantity("Adverb"), None);
    }
}

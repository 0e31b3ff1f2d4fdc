use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::records::OperationRecord;

/// Binary vector: one-hot opcode block followed by category slots.
pub type FeatureVector = Vec<f64>;

/// Slot layout for [`vectorize`].
///
/// Category `c` seen at most `m` times in one record gets `m` slots; slot `j`
/// is set when the record has more than `j` arguments of category `c`. This
/// keeps the encoding injective over (opcode, category multiset) pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub opcodes: Vec<String>,
    /// (category, slot count) in first-occurrence order.
    pub categories: Vec<(String, usize)>,
}

impl Vocabulary {
    pub fn build(records: &[OperationRecord]) -> Self {
        let mut vocab = Vocabulary::default();
        for r in records {
            if !vocab.opcodes.contains(&r.opcode) {
                vocab.opcodes.push(r.opcode.clone());
            }
            for (cat, n) in counts(&r.pattern) {
                match vocab.categories.iter_mut().find(|(c, _)| c == cat) {
                    Some((_, m)) => *m = (*m).max(n),
                    None => vocab.categories.push((cat.to_string(), n)),
                }
            }
        }
        // Categories are pushed in the order they are first met inside each
        // record's sorted count map; re-sort by first occurrence in patterns.
        let mut first: Vec<&str> = Vec::new();
        for r in records {
            for c in &r.pattern {
                if !first.contains(&c.as_str()) {
                    first.push(c);
                }
            }
        }
        vocab.categories.sort_by_key(|(c, _)| first.iter().position(|f| f == c));
        vocab
    }

    pub fn dim(&self) -> usize {
        self.opcodes.len() + self.categories.iter().map(|(_, m)| m).sum::<usize>()
    }

    /// Encodes a record; opcodes or categories outside the vocabulary are
    /// ignored.
    pub fn encode(&self, r: &OperationRecord) -> FeatureVector {
        let mut x = vec![0.0; self.dim()];
        if let Some(i) = self.opcodes.iter().position(|o| *o == r.opcode) {
            x[i] = 1.0;
        }
        let c = counts(&r.pattern);
        let mut offset = self.opcodes.len();
        for (cat, slots) in &self.categories {
            let n = c.get(cat.as_str()).copied().unwrap_or(0).min(*slots);
            for v in &mut x[offset..offset + n] {
                *v = 1.0;
            }
            offset += slots;
        }
        x
    }
}

fn counts(pattern: &[String]) -> BTreeMap<&str, usize> {
    let mut m = BTreeMap::new();
    for c in pattern {
        *m.entry(c.as_str()).or_insert(0) += 1;
    }
    m
}

pub fn vectorize(records: &[OperationRecord]) -> (Vec<FeatureVector>, Vocabulary) {
    let vocab = Vocabulary::build(records);
    (records.iter().map(|r| vocab.encode(r)).collect(), vocab)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(op: &str, pat: &[&str]) -> OperationRecord {
        OperationRecord {
            opcode: op.into(),
            pattern: pat.iter().map(|s| s.to_string()).collect(),
            sentence: String::new(),
        }
    }

    #[test]
    fn layout_and_injectivity() {
        let rs = vec![
            rec("TRANSECT", &["REG", "REG"]),
            rec("TRANSECT", &["REG", "Device"]),
            rec("TRANSECT", &["REG", "Device"]),
            rec("DRILL", &["Length", "Device"]),
        ];
        let (xs, vocab) = vectorize(&rs);
        assert_eq!(vocab.opcodes, vec!["TRANSECT", "DRILL"]);
        assert_eq!(
            vocab.categories,
            vec![("REG".to_string(), 2), ("Device".to_string(), 1), ("Length".to_string(), 1)]
        );
        assert_eq!(xs[0], vec![1.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        assert_eq!(xs[1], vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        assert_eq!(xs[1], xs[2]);
        assert_eq!(xs[3], vec![0.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
        for x in &xs {
            assert_eq!(x[..vocab.opcodes.len()].iter().sum::<f64>(), 1.0);
        }
    }
}

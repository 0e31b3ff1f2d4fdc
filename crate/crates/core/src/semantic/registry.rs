use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::records::OperationRecord;

pub const MAX_EXAMPLES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternEntry {
    pub pattern: Vec<String>,
    pub example: Vec<String>,
}

/// Opcode to parameter patterns, serialized as
/// `{"OPCODE": [{"pattern": [...], "example": [...]}]}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SemanticRegistry {
    pub entries: BTreeMap<String, Vec<PatternEntry>>,
}

impl SemanticRegistry {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn opcodes(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn contains_opcode(&self, opcode: &str) -> bool {
        self.entries.contains_key(&opcode.to_uppercase())
    }

    pub fn patterns(&self, opcode: &str) -> impl Iterator<Item = &[String]> {
        self.entries
            .get(&opcode.to_uppercase())
            .into_iter()
            .flatten()
            .map(|e| e.pattern.as_slice())
    }

    pub fn has_pattern(&self, opcode: &str, pattern: &[&str]) -> bool {
        self.patterns(opcode).any(|p| p.iter().map(String::as_str).eq(pattern.iter().copied()))
    }

    pub fn pattern_count(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    /// Every category name used in any pattern.
    pub fn categories(&self) -> std::collections::BTreeSet<&str> {
        self.entries
            .values()
            .flatten()
            .flat_map(|e| e.pattern.iter().map(String::as_str))
            .collect()
    }

    /// True when every opcode and pattern of `self` is also in `other`.
    pub fn is_subset_of(&self, other: &SemanticRegistry) -> bool {
        self.entries.iter().all(|(op, es)| {
            es.iter().all(|e| other.patterns(op).any(|p| p == e.pattern.as_slice()))
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("registry serializes")
    }
}

/// Groups records by (cluster, opcode). Each group contributes its modal
/// pattern, with up to [`MAX_EXAMPLES`] member sentences carrying exactly that
/// pattern. Groups yielding the same (opcode, pattern) are merged.
pub fn build_registry(records: &[OperationRecord], assignments: &[usize]) -> SemanticRegistry {
    assert_eq!(records.len(), assignments.len(), "one assignment per record");
    let mut groups: BTreeMap<(usize, &str), Vec<&OperationRecord>> = BTreeMap::new();
    for (r, &c) in records.iter().zip(assignments) {
        groups.entry((c, r.opcode.as_str())).or_default().push(r);
    }

    let mut merged: BTreeMap<(String, Vec<String>), (usize, Vec<String>)> = BTreeMap::new();
    for ((_, opcode), members) in groups {
        let mut tally: BTreeMap<&Vec<String>, usize> = BTreeMap::new();
        for m in &members {
            *tally.entry(&m.pattern).or_default() += 1;
        }
        // BTreeMap iterates in ascending pattern order, so the first maximum
        // wins ties.
        let (modal, _) = tally
            .iter()
            .fold((None, 0), |(best, n), (p, &c)| if c > n { (Some(*p), c) } else { (best, n) });
        let modal = modal.expect("group is non-empty").clone();
        let slot = merged.entry((opcode.to_string(), modal.clone())).or_default();
        slot.0 += members.len();
        for m in members.iter().filter(|m| m.pattern == modal) {
            if slot.1.len() < MAX_EXAMPLES && !slot.1.contains(&m.sentence) {
                slot.1.push(m.sentence.clone());
            }
        }
    }

    let mut by_op: BTreeMap<String, Vec<(usize, PatternEntry)>> = BTreeMap::new();
    for ((opcode, pattern), (size, example)) in merged {
        by_op.entry(opcode).or_default().push((size, PatternEntry { pattern, example }));
    }
    let entries = by_op
        .into_iter()
        .map(|(op, mut v)| {
            v.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.pattern.cmp(&b.1.pattern)));
            (op, v.into_iter().map(|(_, e)| e).collect())
        })
        .collect();
    SemanticRegistry { entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(op: &str, pat: &[&str], s: &str) -> OperationRecord {
        OperationRecord {
            opcode: op.into(),
            pattern: pat.iter().map(|p| p.to_string()).collect(),
            sentence: s.into(),
        }
    }

    #[test]
    fn modal_pattern_with_tie_break() {
        let records = vec![
            rec("ADD", &["REG", "REG"], "a"),
            rec("ADD", &["REG"], "b"),
            rec("ADD", &["REG"], "c"),
            rec("ADD", &["REG", "REG"], "d"),
            rec("SPIN", &["Force"], "e"),
        ];
        let reg = build_registry(&records, &[0, 0, 0, 0, 0]);
        assert_eq!(reg.entries["ADD"].len(), 1);
        assert_eq!(reg.entries["ADD"][0].pattern, vec!["REG"]);
        assert_eq!(reg.entries["ADD"][0].example, vec!["b", "c"]);
        assert!(reg.has_pattern("spin", &["Force"]));
    }

    #[test]
    fn serialized_shape() {
        let reg = build_registry(&[rec("MIX", &["REG"], "Mix the [buffer]{REG}.")], &[0]);
        let v: serde_json::Value = serde_json::from_str(&reg.to_json()).unwrap();
        assert_eq!(v["MIX"][0]["pattern"][0], "REG");
        assert_eq!(v["MIX"][0]["example"][0], "Mix the [buffer]{REG}.");
        let back: SemanticRegistry = serde_json::from_value(v).unwrap();
        assert_eq!(back, reg);
    }

    #[test]
    fn examples_capped_and_merged() {
        let records: Vec<_> = (0..8).map(|i| rec("WASH", &["REG"], &format!("s{i}"))).collect();
        let reg = build_registry(&records, &[0, 0, 0, 1, 1, 1, 2, 2]);
        assert_eq!(reg.entries["WASH"].len(), 1);
        assert_eq!(reg.entries["WASH"][0].example.len(), MAX_EXAMPLES);
    }
}

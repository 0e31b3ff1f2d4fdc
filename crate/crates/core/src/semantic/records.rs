use serde::{Deserialize, Serialize};

use crate::features::{Entity, Sentence, StepFeatures};

/// Categories whose values must carry a numeric magnitude.
pub const QUANTITATIVE_CATEGORIES: &[&str] = &[
    "Volume",
    "Temperature",
    "Length",
    "Energy",
    "Concentration",
    "Mass",
    "Speed",
    "Acceleration",
    "Density",
    "Frequency",
    "Force",
    "Acidity",
    "Flow Rate",
    "Pressure",
    "Voltage",
    "Time",
    "Quantity",
];

/// Canonical spelling of a parameter category (`reg` becomes `REG`,
/// `flow rate` becomes `Flow Rate`). Unknown categories are returned trimmed.
pub fn canonical_category(raw: &str) -> String {
    let t = raw.trim();
    let lower = t.to_lowercase();
    let fixed = match lower.as_str() {
        "reg" | "chem" | "reagent" => "REG",
        "cond" => "COND",
        "device" => "Device",
        "container" => "Container",
        "string" => "String",
        "time" => "Time",
        "quantity" => "Quantity",
        "output" => "output",
        "opcode" => "OpCode",
        _ => {
            return QUANTITATIVE_CATEGORIES
                .iter()
                .find(|q| q.to_lowercase() == lower)
                .map_or_else(|| t.to_string(), |q| q.to_string())
        }
    };
    fixed.to_string()
}

/// An operation: the leading verb and the categories of its arguments.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OperationRecord {
    pub opcode: String,
    pub pattern: Vec<String>,
    /// The source sentence with its argument spans marked up.
    pub sentence: String,
}

impl OperationRecord {
    pub fn from_sentence(s: &Sentence) -> Option<Self> {
        let opcode = s.opcode.as_ref()?.to_uppercase();
        Some(OperationRecord {
            opcode,
            pattern: s.entities.iter().map(|e| e.category.clone()).collect(),
            sentence: render_annotated(&s.text, &s.entities),
        })
    }
}

/// One record per verb-initial sentence, in input order.
pub fn extract_records<'a>(features: impl IntoIterator<Item = &'a StepFeatures>) -> Vec<OperationRecord> {
    features
        .into_iter()
        .flat_map(|f| f.sentences.iter())
        .filter_map(OperationRecord::from_sentence)
        .collect()
}

/// Writes `[span]{Category}` markup into `text`. Spans must not overlap.
pub fn render_annotated(text: &str, entities: &[Entity]) -> String {
    let mut out = String::with_capacity(text.len() + entities.len() * 8);
    let mut last = 0;
    for e in entities {
        if e.start < last || e.end > text.len() {
            continue;
        }
        out.push_str(&text[last..e.start]);
        out.push('[');
        out.push_str(&text[e.start..e.end]);
        out.push_str("]{");
        out.push_str(&e.category);
        out.push('}');
        last = e.end;
    }
    out.push_str(&text[last..]);
    out
}

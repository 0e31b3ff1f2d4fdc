//! The designed DSL as a single versioned, checksummed JSON document.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::corpus::{write_corpus, Domain, Protocol};
use crate::em::{DslSyntax, EmReport};
use crate::error::{Error, Result};
use crate::filters::ConstraintId;
use crate::grammar::{parse_bnf, Grammar, GrammarError};
use crate::semantic::{DpmmConfig, SemanticRegistry};

pub const ARTIFACT_VERSION: u64 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error("constraint `{0}` is active but the grammar does not accept it")]
    NotAccepted(ConstraintId),
    #[error("grammar is not well formed: {0}")]
    Grammar(#[from] GrammarError),
    #[error("semantic registry is empty")]
    EmptyRegistry,
    #[error("artifact version {found} is newer than supported version {supported}")]
    UnsupportedVersion { found: u64, supported: u64 },
    #[error("checksum mismatch: recorded {recorded}, computed {computed}")]
    Checksum { recorded: String, computed: String },
    #[error("malformed artifact: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub corpus_hash: String,
    pub protocols: usize,
    pub tool_version: String,
    /// Snapshot of the configuration that produced the artifact.
    pub config: Value,
    pub em: Option<EmReport>,
    pub dpmm: Option<DpmmConfig>,
    /// Excluded from the checksum.
    pub created_unix: Option<u64>,
}

impl Provenance {
    pub fn for_corpus(protocols: &[Protocol]) -> Self {
        Provenance {
            corpus_hash: corpus_hash(protocols),
            protocols: protocols.len(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            ..Provenance::default()
        }
    }
}

/// SHA-256 of the corpus in its line-delimited serialized form.
pub fn corpus_hash(protocols: &[Protocol]) -> String {
    let mut buf = Vec::new();
    write_corpus(protocols, &mut buf).expect("writing to memory");
    hex::encode(Sha256::digest(&buf))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DslArtifact {
    pub domain: Domain,
    pub grammar: Grammar,
    pub active_constraints: BTreeSet<ConstraintId>,
    pub registry: SemanticRegistry,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArtifactFile {
    version: u64,
    domain: Domain,
    grammar_bnf: String,
    active_constraints: BTreeSet<ConstraintId>,
    registry: SemanticRegistry,
    provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    checksum: Option<String>,
}

impl DslArtifact {
    /// Cross-checks syntax and registry and packages them.
    pub fn assemble(
        domain: Domain,
        syntax: DslSyntax,
        registry: SemanticRegistry,
        provenance: Provenance,
    ) -> Result<Self, ArtifactError> {
        let a = DslArtifact {
            domain,
            grammar: syntax.grammar,
            active_constraints: syntax.active,
            registry,
            provenance,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<(), ArtifactError> {
        self.grammar.check_well_formed()?;
        if let Some(&k) = self.active_constraints.iter().find(|&&k| !self.grammar.accepts_construct(k)) {
            return Err(ArtifactError::NotAccepted(k));
        }
        if self.registry.is_empty() {
            return Err(ArtifactError::EmptyRegistry);
        }
        Ok(())
    }

    pub fn is_active(&self, k: ConstraintId) -> bool {
        self.active_constraints.contains(&k)
    }

    fn file(&self) -> ArtifactFile {
        ArtifactFile {
            version: ARTIFACT_VERSION,
            domain: self.domain.clone(),
            grammar_bnf: self.grammar.to_bnf(),
            active_constraints: self.active_constraints.clone(),
            registry: self.registry.clone(),
            provenance: self.provenance.clone(),
            checksum: None,
        }
    }

    pub fn checksum(&self) -> String {
        checksum_of(&serde_json::to_value(self.file()).expect("artifact serializes"))
    }

    pub fn to_json_string(&self) -> String {
        let mut file = self.file();
        file.checksum = Some(self.checksum());
        let mut s = serde_json::to_string_pretty(&file).expect("artifact serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self, ArtifactError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ArtifactError::Format(e.to_string()))?;
        let version = value
            .get("version")
            .and_then(Value::as_u64)
            .ok_or_else(|| ArtifactError::Format("missing version".into()))?;
        if version > ARTIFACT_VERSION {
            return Err(ArtifactError::UnsupportedVersion {
                found: version,
                supported: ARTIFACT_VERSION,
            });
        }
        let recorded = value
            .get("checksum")
            .and_then(Value::as_str)
            .ok_or_else(|| ArtifactError::Format("missing checksum".into()))?
            .to_string();
        let computed = checksum_of(&value);
        if recorded != computed {
            return Err(ArtifactError::Checksum { recorded, computed });
        }
        let file: ArtifactFile = serde_json::from_value(value).map_err(|e| ArtifactError::Format(e.to_string()))?;
        let a = DslArtifact {
            domain: file.domain,
            grammar: parse_bnf(&file.grammar_bnf)?,
            active_constraints: file.active_constraints,
            registry: file.registry,
            provenance: file.provenance,
        };
        a.validate()?;
        Ok(a)
    }

    /// Writes through a temporary file in the same directory, then renames.
    pub fn save(&self, path: &Path) -> Result<()> {
        let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, self.to_json_string()).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_json_str(&text)?)
    }
}

/// Hash of the document with `checksum` and `provenance.created_unix` removed.
fn checksum_of(value: &Value) -> String {
    let mut v = value.clone();
    if let Some(obj) = v.as_object_mut() {
        obj.remove("checksum");
        if let Some(p) = obj.get_mut("provenance").and_then(Value::as_object_mut) {
            p.remove("created_unix");
        }
    }
    hex::encode(Sha256::digest(canonical(&v).as_bytes()))
}

/// Compact JSON with object keys sorted.
pub fn canonical(v: &Value) -> String {
    fn sort(v: &Value) -> Value {
        match v {
            Value::Object(m) => {
                let mut keys: Vec<_> = m.keys().collect();
                keys.sort();
                Value::Object(keys.into_iter().map(|k| (k.clone(), sort(&m[k]))).collect::<Map<_, _>>())
            }
            Value::Array(a) => Value::Array(a.iter().map(sort).collect()),
            other => other.clone(),
        }
    }
    serde_json::to_string(&sort(v)).expect("json serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantic::{build_registry, OperationRecord};

    fn artifact() -> DslArtifact {
        let wanted: BTreeSet<_> = [ConstraintId::WhileLoop, ConstraintId::IfBranch, ConstraintId::DeviceType].into();
        let syntax = DslSyntax::from_active(&Grammar::load_prior(), &wanted).unwrap();
        let rec = OperationRecord {
            opcode: "SPIN".into(),
            pattern: vec!["Force".into(), "Time".into()],
            sentence: "Spin at [3000g]{Force} for [10 min]{Time}.".into(),
        };
        let registry = build_registry(&[rec], &[0]);
        DslArtifact::assemble(Domain::Medical, syntax, registry, Provenance::default()).unwrap()
    }

    #[test]
    fn round_trip() {
        let a = artifact();
        let back = DslArtifact::from_json_str(&a.to_json_string()).unwrap();
        assert_eq!(back, a);
        assert!(back.is_active(ConstraintId::WhileLoop));
    }

    #[test]
    fn timestamp_outside_checksum() {
        let a = artifact();
        let mut b = a.clone();
        b.provenance.created_unix = Some(1_700_000_000);
        assert_eq!(a.checksum(), b.checksum());
        assert!(DslArtifact::from_json_str(&b.to_json_string()).is_ok());
    }

    #[test]
    fn tamper_and_version() {
        let text = artifact().to_json_string();
        let tampered = text.replacen("SPIN", "SPUN", 1);
        assert!(matches!(DslArtifact::from_json_str(&tampered), Err(ArtifactError::Checksum { .. })));
        let future = text.replacen("\"version\": 1", "\"version\": 9", 1);
        assert!(matches!(
            DslArtifact::from_json_str(&future),
            Err(ArtifactError::UnsupportedVersion { found: 9, .. })
        ));
    }

    #[test]
    fn inactive_constraint_rejected() {
        let mut a = artifact();
        a.active_constraints.insert(ConstraintId::ParallelMap);
        assert!(matches!(a.validate(), Err(ArtifactError::NotAccepted(ConstraintId::ParallelMap))));
    }
}

//! Checks protocol programs against a designed DSL.
//!
//! Syntax checks flag statements whose construct the DSL does not provide.
//! Semantic checks cover unknown opcodes, missing parameters and
//! quantitative parameters given without a magnitude and unit.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::artifact::DslArtifact;
use crate::features::quantity_entities;
use crate::filters::FilterConfig;
use crate::program::{Arg, Path, ProtocolProgram, Statement};
use crate::semantic::{canonical_category, QUANTITATIVE_CATEGORIES};
use crate::similarity::{LexicalSimilarity, SimilarityProvider};

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error("unknown diagnostic kind `{0}`")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DiagnosticKind {
    ActionUndefinition,
    ParameterOmission,
    ParameterUnderSpecification,
    ConstructNotInDsl,
    MalformedProgram,
}

impl DiagnosticKind {
    pub const ALL: [DiagnosticKind; 5] = [
        DiagnosticKind::ActionUndefinition,
        DiagnosticKind::ParameterOmission,
        DiagnosticKind::ParameterUnderSpecification,
        DiagnosticKind::ConstructNotInDsl,
        DiagnosticKind::MalformedProgram,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DiagnosticKind::ActionUndefinition => "ActionUndefinition",
            DiagnosticKind::ParameterOmission => "ParameterOmission",
            DiagnosticKind::ParameterUnderSpecification => "ParameterUnderSpecification",
            DiagnosticKind::ConstructNotInDsl => "ConstructNotInDsl",
            DiagnosticKind::MalformedProgram => "MalformedProgram",
        }
    }

    pub fn is_semantic(self) -> bool {
        matches!(
            self,
            DiagnosticKind::ActionUndefinition
                | DiagnosticKind::ParameterOmission
                | DiagnosticKind::ParameterUnderSpecification
        )
    }
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DiagnosticKind {
    type Err = CheckError;

    fn from_str(s: &str) -> Result<Self, CheckError> {
        DiagnosticKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| CheckError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    /// Statement path such as `1/body/0`; empty for the whole program.
    pub location: String,
    pub detail: String,
    pub suggestion: Option<String>,
}

impl Diagnostic {
    fn new(kind: DiagnosticKind, at: &Path, detail: impl Into<String>, suggestion: Option<String>) -> Self {
        Diagnostic {
            kind,
            location: at.to_string(),
            detail: detail.into(),
            suggestion,
        }
    }
}

/// Tab-separated: location, kind, detail, and the suggestion when present.
impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let loc = if self.location.is_empty() { "-" } else { &self.location };
        write!(f, "{loc}\t{}\t{}", self.kind, self.detail)?;
        if let Some(s) = &self.suggestion {
            write!(f, "\t{s}")?;
        }
        Ok(())
    }
}

pub struct Checker {
    sim: Box<dyn SimilarityProvider>,
    delta: f64,
}

impl Default for Checker {
    fn default() -> Self {
        Checker::new(Box::new(LexicalSimilarity::default()), FilterConfig::default().delta)
    }
}

impl Checker {
    pub fn new(sim: Box<dyn SimilarityProvider>, delta: f64) -> Self {
        Checker { sim, delta }
    }

    pub fn check(&self, program: &ProtocolProgram, artifact: &DslArtifact) -> Vec<Diagnostic> {
        let mut out = self.check_syntax(program, artifact);
        if out.iter().any(|d| d.kind == DiagnosticKind::MalformedProgram && d.location.is_empty()) {
            return out;
        }
        out.extend(self.check_semantics(program, artifact));
        sort(&mut out);
        out
    }

    pub fn check_syntax(&self, program: &ProtocolProgram, artifact: &DslArtifact) -> Vec<Diagnostic> {
        if program.is_empty() {
            return vec![Diagnostic::new(
                DiagnosticKind::MalformedProgram,
                &Path::root(),
                "program has no statements",
                None,
            )];
        }
        let mut out = Vec::new();
        visit(&program.statements, &Path::root(), &[], 0, &mut |at, s, loop_depth| {
            if let Some(k) = s.construct() {
                if !artifact.is_active(k) {
                    out.push(Diagnostic::new(
                        DiagnosticKind::ConstructNotInDsl,
                        at,
                        format!("{} requires `{k}`, which the DSL does not provide", s.kind_name()),
                        None,
                    ));
                    return;
                }
            }
            if matches!(s, Statement::Break | Statement::Continue) && loop_depth == 0 {
                out.push(Diagnostic::new(
                    DiagnosticKind::MalformedProgram,
                    at,
                    format!("{} outside of a loop", s.kind_name()),
                    None,
                ));
            }
        });
        sort(&mut out);
        out
    }

    pub fn check_semantics(&self, program: &ProtocolProgram, artifact: &DslArtifact) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        program.walk(|at, s| {
            if let Statement::OpStep { opcode, args, .. } = s {
                self.check_step(at, opcode, args, artifact, &mut out);
            }
        });
        sort(&mut out);
        out
    }

    fn check_step(&self, at: &Path, opcode: &str, args: &[Arg], artifact: &DslArtifact, out: &mut Vec<Diagnostic>) {
        let registry = &artifact.registry;
        if !registry.contains_opcode(opcode) {
            let suggestion = self.nearest_opcode(opcode, artifact);
            out.push(Diagnostic::new(
                DiagnosticKind::ActionUndefinition,
                at,
                format!("opcode {} is not defined", opcode.to_uppercase()),
                suggestion,
            ));
            return;
        }

        let present: Vec<String> = args
            .iter()
            .filter(|a| a.value.is_some())
            .map(|a| canonical_category(&a.category))
            .collect();
        let have = multiset(present.iter().map(String::as_str));
        let mut best: Option<(usize, usize, Vec<String>)> = None;
        for pattern in registry.patterns(opcode) {
            let need = multiset(pattern.iter().map(String::as_str));
            let mut missing = Vec::new();
            for (cat, &n) in &need {
                let got = have.get(cat).copied().unwrap_or(0);
                missing.extend(std::iter::repeat_n(cat.to_string(), n.saturating_sub(got)));
            }
            let extra = present.len().saturating_sub(pattern.len() - missing.len());
            let key = (missing.len(), extra);
            if best.as_ref().is_none_or(|b| key < (b.0, b.1)) {
                best = Some((key.0, key.1, missing));
            }
        }
        if let Some((n, _, missing)) = best {
            if n > 0 {
                out.push(Diagnostic::new(
                    DiagnosticKind::ParameterOmission,
                    at,
                    format!("{} is missing {}", opcode.to_uppercase(), missing.join(", ")),
                    Some(format!("add {}", missing.join(", "))),
                ));
            }
        }

        for a in args {
            let cat = canonical_category(&a.category);
            let Some(value) = &a.value else { continue };
            if QUANTITATIVE_CATEGORIES.contains(&cat.as_str()) && !is_quantified(&cat, value) {
                out.push(Diagnostic::new(
                    DiagnosticKind::ParameterUnderSpecification,
                    at,
                    format!("{cat} value {value:?} has no numeric magnitude and unit"),
                    Some(format!("give {cat} as a number with a unit")),
                ));
            }
        }
    }

    fn nearest_opcode(&self, opcode: &str, artifact: &DslArtifact) -> Option<String> {
        let q = opcode.to_lowercase();
        artifact
            .registry
            .opcodes()
            .map(|o| (self.sim.sim(&q, &o.to_lowercase()), o))
            .filter(|(s, _)| *s >= self.delta)
            .fold(None::<(f64, &str)>, |best, cur| match best {
                Some(b) if b.0 >= cur.0 => Some(b),
                _ => Some(cur),
            })
            .map(|(_, o)| o.to_string())
    }
}

fn visit<'a>(
    block: &'a [Statement],
    at: &Path,
    segs: &[String],
    loop_depth: usize,
    f: &mut impl FnMut(&Path, &'a Statement, usize),
) {
    for (i, s) in block.iter().enumerate() {
        let p = at.child(segs, i);
        f(&p, s, loop_depth);
        let inner = loop_depth + usize::from(matches!(s, Statement::Loop { .. }));
        for (child_segs, child) in s.blocks() {
            visit(child, &p, &child_segs, inner, f);
        }
    }
}

fn multiset<'a>(items: impl Iterator<Item = &'a str>) -> BTreeMap<&'a str, usize> {
    let mut m = BTreeMap::new();
    for i in items {
        *m.entry(i).or_default() += 1;
    }
    m
}

static DIGIT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\d").expect("digit regex"));
static BARE_NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*[~≈]?\s*\d+(?:[.,]\d+)?\s*$").expect("number regex"));

/// True when `value` carries a magnitude, plus a unit for categories that
/// have one.
pub fn is_quantified(category: &str, value: &str) -> bool {
    if !DIGIT.is_match(value) {
        return false;
    }
    match category {
        "Quantity" | "Acidity" => true,
        _ => !BARE_NUMBER.is_match(value) && !quantity_entities(value).is_empty(),
    }
}

fn sort(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        let pa: Path = a.location.parse().expect("infallible");
        let pb: Path = b.location.parse().expect("infallible");
        pa.sort_key().cmp(&pb.sort_key()).then(a.kind.cmp(&b.kind)).then(a.detail.cmp(&b.detail))
    });
}

pub fn check_syntax(program: &ProtocolProgram, artifact: &DslArtifact) -> Vec<Diagnostic> {
    Checker::default().check_syntax(program, artifact)
}

pub fn check_semantics(program: &ProtocolProgram, artifact: &DslArtifact) -> Vec<Diagnostic> {
    Checker::default().check_semantics(program, artifact)
}

pub fn check(program: &ProtocolProgram, artifact: &DslArtifact) -> Vec<Diagnostic> {
    Checker::default().check(program, artifact)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::artifact::Provenance;
    use crate::corpus::Domain;
    use crate::em::DslSyntax;
    use crate::filters::ConstraintId;
    use crate::grammar::Grammar;
    use crate::program::{parse_program_text, LoopKind, ParallelKind};
    use crate::semantic::{build_registry, OperationRecord};

    fn artifact(active: &[ConstraintId]) -> DslArtifact {
        let rec = |op: &str, pat: &[&str]| OperationRecord {
            opcode: op.into(),
            pattern: pat.iter().map(|s| s.to_string()).collect(),
            sentence: String::new(),
        };
        let records = vec![
            rec("ADD", &["REG", "REG"]),
            rec("DENATURE", &["REG", "Temperature", "Time"]),
            rec("SPIN", &["Force", "Time", "Temperature", "Container"]),
            rec("MIX", &["Quantity"]),
        ];
        let ids: Vec<usize> = (0..records.len()).collect();
        let mut wanted: BTreeSet<_> = active.iter().copied().collect();
        wanted.extend([ConstraintId::DeviceType, ConstraintId::ScientificType]);
        let syntax = DslSyntax::from_active(&Grammar::load_prior(), &wanted).unwrap();
        DslArtifact::assemble(Domain::Genetics, syntax, build_registry(&records, &ids), Provenance::default()).unwrap()
    }

    fn kinds(d: &[Diagnostic]) -> Vec<(DiagnosticKind, &str)> {
        d.iter().map(|d| (d.kind, d.location.as_str())).collect()
    }

    #[test]
    fn showcase_spin_is_clean() {
        let p = parse_program_text(
            "SPIN: [[Force: 3000g], [Time: 10min], [Temperature: 4°C], [Container: centrifuge tube]] -> centrifuged sample",
        )
        .unwrap();
        assert!(check(&p, &artifact(&[])).is_empty());
    }

    #[test]
    fn missing_temperature() {
        let p = parse_program_text("{'DENATURE': [['REG', 'DNA'], ['Time', '30 s']]}").unwrap();
        let d = check_semantics(&p, &artifact(&[]));
        assert_eq!(kinds(&d), [(DiagnosticKind::ParameterOmission, "0")]);
        assert!(d[0].detail.ends_with("Temperature"), "{}", d[0].detail);
    }

    #[test]
    fn none_value_counts_as_missing() {
        let p = parse_program_text("{'ADD': [['Reg', 'buffer'], ['Reg', None]]}").unwrap();
        assert_eq!(kinds(&check(&p, &artifact(&[]))), [(DiagnosticKind::ParameterOmission, "0")]);
    }

    #[test]
    fn qualitative_quantity() {
        let p = parse_program_text("{'MIX': [['Quantity', 'some']]}").unwrap();
        assert_eq!(kinds(&check(&p, &artifact(&[]))), [(DiagnosticKind::ParameterUnderSpecification, "0")]);
        assert!(is_quantified("Time", "10min"));
        assert!(is_quantified("Force", "3000g"));
        assert!(is_quantified("Temperature", "4°C"));
        assert!(!is_quantified("Time", "overnight"));
        assert!(!is_quantified("Volume", "200"));
    }

    #[test]
    fn unknown_opcode_with_suggestion() {
        let p = parse_program_text("{'CENTRIFUGE': [['Force', '3000g']]}").unwrap();
        let d = check(&p, &artifact(&[]));
        assert_eq!(kinds(&d), [(DiagnosticKind::ActionUndefinition, "0")]);
        assert_eq!(d[0].suggestion.as_deref(), Some("SPIN"));
        let p = parse_program_text("{'FROBNICATE': []}").unwrap();
        assert_eq!(check(&p, &artifact(&[]))[0].suggestion, None);
    }

    #[test]
    fn constructs() {
        let step = Statement::step("MIX", &[("Quantity", Some("2"))], None);
        let p = ProtocolProgram::new(vec![
            Statement::Loop {
                kind: LoopKind::While,
                bound: None,
                condition: Some("band is faint".into()),
                body: vec![step.clone(), Statement::Break],
            },
            Statement::Parallel {
                kind: ParallelKind::For,
                branches: vec![vec![step.clone()], vec![step.clone()]],
            },
        ]);
        let a = artifact(&[ConstraintId::WhileLoop, ConstraintId::IfBranch, ConstraintId::Break]);
        assert_eq!(kinds(&check(&p, &a)), [(DiagnosticKind::ConstructNotInDsl, "1")]);
        let stray = ProtocolProgram::new(vec![Statement::Break]);
        assert_eq!(kinds(&check_syntax(&stray, &a)), [(DiagnosticKind::MalformedProgram, "0")]);
        assert_eq!(
            kinds(&check(&ProtocolProgram::default(), &a)),
            [(DiagnosticKind::MalformedProgram, "")]
        );
    }

    #[test]
    fn display_is_tab_separated() {
        let d = Diagnostic::new(DiagnosticKind::ParameterOmission, &"1/body/0".parse().unwrap(), "x", Some("y".into()));
        assert_eq!(d.to_string(), "1/body/0\tParameterOmission\tx\ty");
        assert_eq!("ConstructNotInDsl".parse::<DiagnosticKind>().unwrap(), DiagnosticKind::ConstructNotInDsl);
    }
}

//! Seeded generators with known ground truth: a protocol corpus with a
//! planted construct set, well-separated binary clusters, and random
//! programs with injected errors.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::artifact::{DslArtifact, Provenance};
use crate::checker::DiagnosticKind;
use crate::corpus::{Domain, DomainMappingTable, Protocol};
use crate::em::DslSyntax;
use crate::grammar::Grammar;
use crate::filters::ConstraintId;
use crate::program::{Arg, LoopKind, ParallelKind, Path, ProtocolProgram, Statement};
use crate::semantic::{build_registry, canonical_category, FeatureVector, OperationRecord, QUANTITATIVE_CATEGORIES};

struct Template {
    constructs: &'static [ConstraintId],
    sentences: &'static [&'static str],
}

use ConstraintId as C;

const TEMPLATES: &[Template] = &[
    Template {
        constructs: &[C::IntegerType, C::TemporalType],
        sentences: &[
            "Incubate the sample for {n} min.",
            "Wait for {n} h before imaging.",
            "Hold the position for {n} s.",
        ],
    },
    Template {
        constructs: &[C::FloatType],
        sentences: &["Adjust the pH to {f}.", "Dilute the stock to {f} percent."],
    },
    Template {
        constructs: &[C::StringType],
        sentences: &[
            "Record the value \"done\" in the log.",
            "Label the sample \"control\" on the sheet.",
        ],
    },
    Template {
        constructs: &[C::IfBranch],
        sentences: &["If the sample is cloudy, wait.", "If the color turns yellow, stop."],
    },
    Template {
        constructs: &[C::RegType, C::Allocate],
        sentences: &["Add PBS to the mixture.", "Add ethanol to the sample."],
    },
    Template {
        constructs: &[C::Event, C::Response],
        sentences: &["When the timer rings, record the value.", "When the color changes, stop."],
    },
    Template {
        constructs: &[C::Assignment],
        sentences: &["Set x = y.", "Set the gain = high."],
    },
];

const FILLERS: &[&str] = &[
    "Proceed to the next step.",
    "Observe the color change.",
    "Discard the waste.",
    "Check the sample.",
    "Record the result.",
    "Clean the bench.",
];

/// Probability that a protocol carries a given template.
pub const TEMPLATE_RATE: f64 = 0.8;

/// Constructs planted by [`planted_corpus`], including the two that every
/// protocol exhibits.
pub fn planted_constraints() -> BTreeSet<ConstraintId> {
    let mut set: BTreeSet<_> = TEMPLATES.iter().flat_map(|t| t.constructs.iter().copied()).collect();
    set.insert(C::DeviceType);
    set.insert(C::ScientificType);
    set
}

/// `n` protocols, each holding every template with probability
/// [`TEMPLATE_RATE`] plus a few filler steps that trigger no construct.
pub fn planted_corpus(n: usize, seed: u64) -> Vec<Protocol> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table = DomainMappingTable::default();
    (0..n)
        .map(|i| {
            let mut lines: Vec<String> = Vec::new();
            for t in TEMPLATES {
                if rng.random_bool(TEMPLATE_RATE) {
                    let s = t.sentences.choose(&mut rng).expect("non-empty");
                    let int = rng.random_range(2..90).to_string();
                    let float = format!("{}.{}", rng.random_range(1..14), rng.random_range(1..10));
                    lines.push(s.replace("{n}", &int).replace("{f}", &float));
                }
            }
            for _ in 0..rng.random_range(1..4) {
                let s = FILLERS.choose(&mut rng).expect("non-empty");
                let at = rng.random_range(0..=lines.len());
                lines.insert(at, s.to_string());
            }
            Protocol::new(&format!("planted-{i:04}"), "Synthetic", "generator", &lines.join("\n"), &table)
        })
        .collect()
}

/// Row `r` of the Sylvester Hadamard matrix of size `2^order`, as 0/1.
pub fn hadamard_row(order: u32, r: usize) -> Vec<f64> {
    (0..1usize << order)
        .map(|c| if (r & c).count_ones() % 2 == 0 { 1.0 } else { 0.0 })
        .collect()
}

/// `k` clusters of `copies` identical binary vectors each: rows 1..=k of a
/// 16-wide Hadamard matrix, pairwise Hamming distance 8. Returns the points
/// and their ground-truth labels.
pub fn hadamard_clusters(k: usize, copies: usize) -> (Vec<FeatureVector>, Vec<usize>) {
    assert!(k < 16, "at most 15 non-constant rows");
    let mut xs = Vec::with_capacity(k * copies);
    let mut labels = Vec::with_capacity(k * copies);
    for c in 0..k {
        let row = hadamard_row(4, c + 1);
        for _ in 0..copies {
            xs.push(row.clone());
            labels.push(c);
        }
    }
    (xs, labels)
}

/// An artifact with the given registry rows, one record per row, and the
/// grammar pruned to `active` plus the constant constructs.
pub fn fixture_artifact(domain: Domain, rows: &[(&str, &[&str])], active: &[ConstraintId]) -> DslArtifact {
    let records: Vec<OperationRecord> = rows
        .iter()
        .map(|(op, pat)| OperationRecord {
            opcode: op.to_string(),
            pattern: pat.iter().map(|s| s.to_string()).collect(),
            sentence: String::new(),
        })
        .collect();
    let ids: Vec<usize> = (0..records.len()).collect();
    let mut wanted: BTreeSet<_> = active.iter().copied().collect();
    wanted.extend([C::DeviceType, C::ScientificType]);
    let syntax = DslSyntax::from_active(&Grammar::load_prior(), &wanted).expect("constant constructs keep the grammar productive");
    DslArtifact::assemble(domain, syntax, build_registry(&records, &ids), Provenance::default())
        .expect("fixture rows form a valid artifact")
}

/// The registry rows of the three showcase programs.
pub const SHOWCASE_ROWS: &[(&str, &[&str])] = &[
    ("ADD", &["REG", "REG"]),
    ("SPIN", &["Force", "Time", "Temperature", "Container"]),
    ("COLLECT", &["REG", "Container"]),
];

/// A value that satisfies the checker for each parameter category.
pub fn sample_value(category: &str, rng: &mut impl Rng) -> String {
    let pool: &[&str] = match category {
        "REG" => &["ethanol", "PBS", "bile", "ammonium acetate buffer", "RNaseT2"],
        "Container" => &["centrifuge tube", "flask", "sterile collection bottle"],
        "Device" => &["centrifuge", "thermocycler", "microscope"],
        "Time" => &["10 min", "30 s", "2 h"],
        "Temperature" => &["4°C", "37 °C", "95°C"],
        "Force" => &["3000g", "12000 x g"],
        "Volume" => &["5 ml", "200 µl"],
        "Concentration" => &["10 mg/ml", "5%"],
        "Mass" => &["2 mg", "10 g"],
        "Length" => &["2 cm", "500 bp"],
        "Speed" => &["300 rpm"],
        "Acceleration" => &["9.8 m/s2"],
        "Density" => &["1.2 g/ml"],
        "Frequency" => &["50 Hz"],
        "Flow Rate" => &["1 ml/min"],
        "Pressure" => &["2 bar"],
        "Voltage" => &["120 V"],
        "Energy" => &["5 kJ"],
        "Acidity" => &["7.4"],
        "Quantity" => &["2", "3 samples"],
        _ => &["sample", "solution"],
    };
    pool.choose(rng).expect("non-empty pool").to_string()
}

const VAGUE_VALUES: &[&str] = &["briefly", "a little", "some", "room temperature", "high speed", "overnight"];

/// Opcode that no generated registry contains.
pub const UNKNOWN_OPCODE: &str = "FROBNICATE";

/// Random programs that check clean against one artifact.
pub struct ProgramGenerator<'a> {
    artifact: &'a DslArtifact,
    ops: Vec<(String, Vec<String>)>,
    pub max_depth: usize,
    pub max_block: usize,
}

impl<'a> ProgramGenerator<'a> {
    pub fn new(artifact: &'a DslArtifact) -> Self {
        let ops = artifact
            .registry
            .entries
            .iter()
            .flat_map(|(op, es)| es.iter().map(move |e| (op.clone(), e.pattern.clone())))
            .collect::<Vec<_>>();
        assert!(!ops.is_empty(), "artifact registry is empty");
        ProgramGenerator {
            artifact,
            ops,
            max_depth: 2,
            max_block: 4,
        }
    }

    fn active(&self, k: ConstraintId) -> bool {
        self.artifact.is_active(k)
    }

    pub fn step(&self, rng: &mut impl Rng) -> Statement {
        let (op, pattern) = self.ops.choose(rng).expect("non-empty");
        let mut args: Vec<Arg> = pattern
            .iter()
            .map(|c| Arg {
                category: c.clone(),
                value: Some(sample_value(c, rng)),
            })
            .collect();
        args.shuffle(rng);
        Statement::OpStep {
            opcode: op.clone(),
            args,
            output: rng.random_bool(0.5).then(|| format!("out{}", rng.random_range(0..100))),
        }
    }

    pub fn block(&self, rng: &mut impl Rng, depth: usize, in_loop: bool) -> Vec<Statement> {
        let n = rng.random_range(1..=self.max_block);
        (0..n).map(|_| self.statement(rng, depth, in_loop)).collect()
    }

    fn statement(&self, rng: &mut impl Rng, depth: usize, in_loop: bool) -> Statement {
        use ConstraintId as C;
        let mut choices: Vec<C> = Vec::new();
        if depth < self.max_depth {
            choices.extend(
                [C::ForLoop, C::WhileLoop, C::IfBranch, C::IfElseBranch, C::ParallelFor, C::ParallelMap, C::Event]
                    .into_iter()
                    .filter(|&k| self.active(k)),
            );
        }
        choices.extend([C::FunctionCall, C::Allocate, C::Response].into_iter().filter(|&k| self.active(k)));
        if in_loop {
            choices.extend([C::Break, C::Continue].into_iter().filter(|&k| self.active(k)));
        }
        if choices.is_empty() || rng.random_bool(0.6) {
            return self.step(rng);
        }
        let d = depth + 1;
        match *choices.choose(rng).expect("non-empty") {
            C::ForLoop => Statement::Loop {
                kind: LoopKind::For,
                bound: Some(rng.random_range(2..6)),
                condition: None,
                body: self.block(rng, d, true),
            },
            C::WhileLoop => Statement::Loop {
                kind: LoopKind::While,
                bound: None,
                condition: Some("not done".into()),
                body: self.block(rng, d, true),
            },
            C::IfBranch => Statement::Branch {
                condition: "sample is cloudy".into(),
                then_body: self.block(rng, d, in_loop),
                else_body: None,
            },
            C::IfElseBranch => Statement::Branch {
                condition: "sample is cloudy".into(),
                then_body: self.block(rng, d, in_loop),
                else_body: Some(self.block(rng, d, in_loop)),
            },
            C::ParallelFor | C::ParallelMap => Statement::Parallel {
                kind: if self.active(C::ParallelFor) { ParallelKind::For } else { ParallelKind::Map },
                branches: (0..rng.random_range(2..4)).map(|_| self.block(rng, d, false)).collect(),
            },
            C::Event => Statement::Event {
                on: "timer".into(),
                body: self.block(rng, d, false),
            },
            C::FunctionCall => Statement::Call {
                name: "wash".into(),
                args: vec![],
            },
            C::Allocate => {
                if rng.random_bool(0.5) {
                    Statement::Alloc {
                        ty: "Container".into(),
                        name: "tube1".into(),
                    }
                } else {
                    Statement::Dealloc { name: "tube1".into() }
                }
            }
            C::Response => Statement::Emit { event: "done".into() },
            C::Break => Statement::Break,
            C::Continue => Statement::Continue,
            _ => self.step(rng),
        }
    }

    pub fn program(&self, rng: &mut impl Rng) -> ProtocolProgram {
        ProtocolProgram::new(self.block(rng, 0, false))
    }

    /// Injects one error of `class` and returns the mutated program and the
    /// location the checker should report. `None` when `program` offers no
    /// site for that class.
    pub fn inject(
        &self,
        program: &ProtocolProgram,
        class: DiagnosticKind,
        rng: &mut impl Rng,
    ) -> Option<(ProtocolProgram, Path)> {
        let mut out = program.clone();
        let mut steps = Vec::new();
        program.walk(|at, s| {
            if let Statement::OpStep { opcode, args, .. } = s {
                steps.push((at.clone(), opcode.clone(), args.clone()));
            }
        });
        match class {
            DiagnosticKind::ActionUndefinition => {
                let (at, _, _) = steps.choose(rng)?;
                if let Some(Statement::OpStep { opcode, .. }) = out.get_mut(at) {
                    *opcode = UNKNOWN_OPCODE.to_string();
                }
                Some((out, at.clone()))
            }
            DiagnosticKind::ParameterOmission => {
                let sites: Vec<(Path, usize)> = steps
                    .iter()
                    .flat_map(|(at, op, args)| {
                        (0..args.len())
                            .filter(|&i| args[i].value.is_some() && self.omission_breaks(op, args, i))
                            .map(move |i| (at.clone(), i))
                    })
                    .collect();
                let (at, i) = sites.choose(rng)?;
                if let Some(Statement::OpStep { args, .. }) = out.get_mut(at) {
                    args[*i].value = None;
                }
                Some((out, at.clone()))
            }
            DiagnosticKind::ParameterUnderSpecification => {
                let sites: Vec<(Path, usize)> = steps
                    .iter()
                    .flat_map(|(at, _, args)| {
                        (0..args.len())
                            .filter(|&i| {
                                args[i].value.is_some()
                                    && QUANTITATIVE_CATEGORIES.contains(&canonical_category(&args[i].category).as_str())
                            })
                            .map(move |i| (at.clone(), i))
                    })
                    .collect();
                let (at, i) = sites.choose(rng)?;
                if let Some(Statement::OpStep { args, .. }) = out.get_mut(at) {
                    args[*i].value = Some(VAGUE_VALUES.choose(rng).expect("non-empty").to_string());
                }
                Some((out, at.clone()))
            }
            DiagnosticKind::ConstructNotInDsl => {
                let inactive: Vec<ConstraintId> = STATEMENT_CONSTRUCTS
                    .iter()
                    .copied()
                    .filter(|&k| !self.active(k))
                    .collect();
                let k = *inactive.choose(rng)?;
                let stmt = self.statement_for(k, rng);
                let i = rng.random_range(0..=out.statements.len());
                out.statements.insert(i, stmt);
                Some((out, Path::root().index(i)))
            }
            DiagnosticKind::MalformedProgram => None,
        }
    }

    fn omission_breaks(&self, opcode: &str, args: &[Arg], drop: usize) -> bool {
        let mut have: Vec<String> = args
            .iter()
            .enumerate()
            .filter(|&(i, a)| i != drop && a.value.is_some())
            .map(|(_, a)| canonical_category(&a.category))
            .collect();
        have.sort();
        !self.artifact.registry.patterns(opcode).any(|p| contains_multiset(&have, p))
    }

    /// A statement needing construct `k` whose nested blocks are clean.
    fn statement_for(&self, k: ConstraintId, rng: &mut impl Rng) -> Statement {
        use ConstraintId as C;
        let body = || vec![self.step(&mut ChaCha8Rng::seed_from_u64(0))];
        match k {
            C::ForLoop => Statement::Loop {
                kind: LoopKind::For,
                bound: Some(3),
                condition: None,
                body: body(),
            },
            C::WhileLoop => Statement::Loop {
                kind: LoopKind::While,
                bound: None,
                condition: Some("not done".into()),
                body: body(),
            },
            C::IfBranch => Statement::Branch {
                condition: "sample is cloudy".into(),
                then_body: body(),
                else_body: None,
            },
            C::IfElseBranch => Statement::Branch {
                condition: "sample is cloudy".into(),
                then_body: body(),
                else_body: Some(body()),
            },
            C::ParallelFor => Statement::Parallel {
                kind: ParallelKind::For,
                branches: vec![body(), body()],
            },
            C::ParallelMap => Statement::Parallel {
                kind: ParallelKind::Map,
                branches: vec![body(), body()],
            },
            C::FunctionCall => Statement::Call {
                name: "wash".into(),
                args: vec![],
            },
            C::Allocate => Statement::Alloc {
                ty: "Container".into(),
                name: format!("tube{}", rng.random_range(0..10)),
            },
            C::Event => Statement::Event {
                on: "timer".into(),
                body: body(),
            },
            C::Response => Statement::Emit { event: "done".into() },
            C::Break => Statement::Break,
            _ => Statement::Continue,
        }
    }
}

/// Constructs a program statement can require.
pub const STATEMENT_CONSTRUCTS: &[ConstraintId] = &[
    ConstraintId::ForLoop,
    ConstraintId::WhileLoop,
    ConstraintId::IfBranch,
    ConstraintId::IfElseBranch,
    ConstraintId::ParallelFor,
    ConstraintId::ParallelMap,
    ConstraintId::FunctionCall,
    ConstraintId::Allocate,
    ConstraintId::Event,
    ConstraintId::Response,
    ConstraintId::Break,
    ConstraintId::Continue,
];

/// `have` (sorted) contains every element of `need`, with multiplicity.
fn contains_multiset(have: &[String], need: &[String]) -> bool {
    let mut need: Vec<&String> = need.iter().collect();
    need.sort();
    let mut it = have.iter();
    need.into_iter().all(|n| it.by_ref().any(|h| h == n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Annotator;
    use crate::filters::{score_all, FilterConfig};
    use crate::lexicon::Lexicons;
    use crate::similarity::LexicalSimilarity;

    fn fired(text: &str) -> BTreeSet<ConstraintId> {
        let ann = Annotator::new(Lexicons::bundled());
        score_all(&ann.annotate_text(text), &FilterConfig::default(), &LexicalSimilarity::default())
            .into_iter()
            .filter(|(_, v)| *v > 0.0)
            .map(|(k, _)| k)
            .collect()
    }

    #[test]
    fn templates_fire_exactly_their_constructs() {
        for t in TEMPLATES {
            for s in t.sentences {
                let s = s.replace("{n}", "30").replace("{f}", "7.4");
                let mut want: BTreeSet<_> = t.constructs.iter().copied().collect();
                want.insert(C::DeviceType);
                want.insert(C::ScientificType);
                assert_eq!(fired(&s), want, "{s}");
            }
        }
    }

    #[test]
    fn fillers_fire_nothing() {
        let want: BTreeSet<_> = [C::DeviceType, C::ScientificType].into();
        for s in FILLERS {
            assert_eq!(fired(s), want, "{s}");
        }
    }

    #[test]
    fn hadamard_rows_are_half_apart() {
        for a in 1..16 {
            for b in a + 1..16 {
                let d = hadamard_row(4, a)
                    .iter()
                    .zip(hadamard_row(4, b))
                    .filter(|(x, y)| **x != *y)
                    .count();
                assert_eq!(d, 8);
            }
        }
    }

    #[test]
    fn planted_is_twelve() {
        assert_eq!(planted_constraints().len(), 12);
        assert_eq!(planted_corpus(5, 1), planted_corpus(5, 1));
    }

    #[test]
    fn sample_values_are_quantified() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for cat in QUANTITATIVE_CATEGORIES {
            for _ in 0..20 {
                let v = sample_value(cat, &mut rng);
                assert!(crate::checker::is_quantified(cat, &v), "{cat}: {v}");
            }
        }
        for v in VAGUE_VALUES {
            assert!(!crate::checker::is_quantified("Time", v));
        }
    }

    #[test]
    fn multiset_containment() {
        let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        assert!(contains_multiset(&s(&["A", "B", "B", "C"]), &s(&["B", "A", "B"])));
        assert!(!contains_multiset(&s(&["A", "B", "C"]), &s(&["B", "B"])));
        assert!(contains_multiset(&s(&[]), &s(&[])));
    }
}

//! The filter bank: one scoring rule per candidate syntactic construct.
//!
//! Each rule maps the annotated sentences of a whole protocol to a score in
//! `[0, 1]`. Word and sentence similarities are binarized at `delta`, so
//! every score is 0 or 1.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::features::{chem_set, Sentence, StepFeatures, Tag};
use crate::similarity::SimilarityProvider;

macro_rules! constraints {
    ($($variant:ident => $name:literal),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum ConstraintId {
            $(#[serde(rename = $name)] $variant,)*
        }

        impl ConstraintId {
            pub const ALL: &'static [ConstraintId] = &[$(ConstraintId::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(ConstraintId::$variant => $name,)*
                }
            }
        }

        impl FromStr for ConstraintId {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self, Error> {
                match s.trim() {
                    $($name => Ok(ConstraintId::$variant),)*
                    other => Err(Error::UnknownConstraint(other.to_string())),
                }
            }
        }
    };
}

constraints! {
    IntegerType => "integer-type-declaration",
    FloatType => "floatingpoint-type-declaration",
    BooleanType => "boolean-type-declaration",
    StringType => "string-type-declaration",
    VectorType => "vector-type-declaration",
    DictType => "dict-type-declaration",
    SetType => "set-type-declaration",
    TemporalType => "temporal-type-declaration",
    RegType => "reg-type-declaration",
    DeviceType => "device-type-declaration",
    ContainerType => "container-type-declaration",
    ScientificType => "scientific-type-declaration",
    ForLoop => "for-loop",
    WhileLoop => "while-loop",
    IfBranch => "if-branch",
    IfElseBranch => "if-else-branch",
    FunctionCall => "function-procedure-call",
    FunctionDeclaration => "function-procedure-declaration",
    Break => "break-statement",
    Continue => "continue-statement",
    Allocate => "allocate-statement",
    AddOperator => "add-arithmetic-operator",
    MinusOperator => "minus-arithmetic-operator",
    MultiOperator => "multi-arithmetic-operator",
    DevidOperator => "devid-arithmetic-operator",
    AndOperator => "and-arithmetic-operator",
    OrOperator => "or-arithmetic-operator",
    NotOperator => "not-arithmetic-operator",
    Assignment => "assignment-expression",
    Raise => "raise-statement",
    Resolve => "resolve-statement",
    ClassType => "class-type-declaration",
    SpawnProcess => "spawn-process",
    SendMessage => "send-message",
    ReceiveMessage => "receive-message",
    Event => "event-statement",
    Response => "response-statement",
    ParallelFor => "parallel-for",
    ParallelMap => "parallel-map",
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl ConstraintId {
    /// Constraints whose filter is a constant and which are never pruned.
    pub fn is_constant(self) -> bool {
        matches!(self, ConstraintId::DeviceType | ConstraintId::ScientificType | ConstraintId::Continue)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub epsilon: usize,
    pub delta: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            epsilon: 4,
            delta: 0.5,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if self.epsilon < 1 {
            return Err(Error::Config("filters.epsilon must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config("filters.delta must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Sentence pairs considered by the parallel-map rule are limited to this
/// prefix of the protocol.
pub const PARALLEL_MAP_SENTENCE_CAP: usize = 200;

struct Ctx<'a> {
    sentences: &'a [Sentence],
    cfg: &'a FilterConfig,
    sim: &'a dyn SimilarityProvider,
}

impl Ctx<'_> {
    fn bin(&self, s: f64) -> f64 {
        if s >= self.cfg.delta {
            1.0
        } else {
            0.0
        }
    }

    fn max_over(&self, f: impl Fn(&Sentence) -> f64) -> f64 {
        self.sentences.iter().map(f).fold(0.0, f64::max)
    }

    fn exists(&self, tag: Tag) -> f64 {
        self.max_over(|s| exists(s, tag))
    }

    fn opc(&self, s: &Sentence, word: &str) -> f64 {
        s.opcode.as_deref().map_or(0.0, |o| self.bin(self.sim.sim(o, word)))
    }

    fn noun(&self, s: &Sentence, word: &str) -> f64 {
        s.nouns.iter().map(|n| self.bin(self.sim.sim(n, word))).fold(0.0, f64::max)
    }
}

fn exists(s: &Sentence, tag: Tag) -> f64 {
    if s.has(tag) {
        1.0
    } else {
        0.0
    }
}

/// Scores one construct on a protocol's annotated sentences.
pub fn score(k: ConstraintId, features: &StepFeatures, cfg: &FilterConfig, sim: &dyn SimilarityProvider) -> f64 {
    let ctx = Ctx {
        sentences: &features.sentences,
        cfg,
        sim,
    };
    score_in(k, &ctx)
}

/// Like [`score`], taking the construct by name.
pub fn score_named(
    name: &str,
    features: &StepFeatures,
    cfg: &FilterConfig,
    sim: &dyn SimilarityProvider,
) -> crate::Result<f64> {
    Ok(score(name.parse()?, features, cfg, sim))
}

fn score_in(k: ConstraintId, c: &Ctx<'_>) -> f64 {
    use ConstraintId::*;
    match k {
        IntegerType => c.exists(Tag::Int),
        FloatType => c.exists(Tag::Float),
        BooleanType => c.max_over(|s| exists(s, Tag::True).max(exists(s, Tag::False))),
        StringType => c.exists(Tag::String),
        VectorType => c.max_over(|s| c.noun(s, "vector")),
        DictType => c.max_over(|s| c.noun(s, "dictionary")),
        SetType => c.max_over(|s| c.noun(s, "set")),
        TemporalType => c.exists(Tag::Time),
        RegType => c.exists(Tag::Chem),
        DeviceType | ScientificType => 1.0,
        ContainerType => c.exists(Tag::Container),
        ForLoop => c.max_over(|s| c.opc(s, "repeat")),
        WhileLoop => c.max_over(|s| c.opc(s, "repeat") * (1.0 - exists(s, Tag::Int))),
        IfBranch => c.exists(Tag::If),
        IfElseBranch => c.max_over(|s| exists(s, Tag::If) * exists(s, Tag::Else)),
        FunctionCall | FunctionDeclaration => c.max_over(|s| c.opc(s, "call")),
        Break => score_in(WhileLoop, c) * score_in(IfBranch, c),
        Continue => 0.0,
        Allocate => c.max_over(|s| exists(s, Tag::Chem).max(exists(s, Tag::Container))),
        AddOperator => c.exists(Tag::Add),
        MinusOperator => c.exists(Tag::Minus),
        MultiOperator => c.exists(Tag::Multiply),
        DevidOperator => c.exists(Tag::Devide),
        AndOperator => c.exists(Tag::And),
        OrOperator => c.exists(Tag::Or),
        NotOperator => c.exists(Tag::Not),
        Assignment => c.exists(Tag::Equal),
        Raise => c.max_over(|s| c.noun(s, "error")),
        Resolve => c.max_over(|s| c.opc(s, "resolve") * c.noun(s, "error")),
        ClassType => class_type(c),
        SpawnProcess => c.exists(Tag::Persons),
        SendMessage | ReceiveMessage => score_in(SpawnProcess, c) * c.max_over(|s| c.opc(s, "say")),
        Event | Response => c.exists(Tag::When),
        ParallelFor => c.max_over(|s| {
            if s.num_run_lengths.iter().any(|&n| n >= c.cfg.epsilon) {
                1.0
            } else {
                0.0
            }
        }),
        ParallelMap => parallel_map(c),
    }
}

fn class_type(c: &Ctx<'_>) -> f64 {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in c.sentences {
        for x in chem_set(s) {
            *counts.entry(x).or_default() += 1;
        }
    }
    if counts.values().any(|&n| n >= c.cfg.epsilon) {
        1.0
    } else {
        0.0
    }
}

fn parallel_map(c: &Ctx<'_>) -> f64 {
    let n = c.sentences.len().min(PARALLEL_MAP_SENTENCE_CAP);
    let sents = &c.sentences[..n];
    let chems: Vec<_> = sents.iter().map(chem_set).collect();
    for i in 0..n {
        if chems[i].is_empty() || sents[i].has(Tag::Pron) {
            continue;
        }
        for j in i + 1..n {
            if sents[j].has(Tag::Pron) || chems[i].is_disjoint(&chems[j]) {
                continue;
            }
            let different = 1.0 - c.bin(c.sim.sentence_sim(&sents[i].text, &sents[j].text));
            if different > 0.0 {
                return 1.0;
            }
        }
    }
    0.0
}

/// Scores every construct, in enum order.
pub fn score_all(
    features: &StepFeatures,
    cfg: &FilterConfig,
    sim: &dyn SimilarityProvider,
) -> BTreeMap<ConstraintId, f64> {
    let ctx = Ctx {
        sentences: &features.sentences,
        cfg,
        sim,
    };
    ConstraintId::ALL.iter().map(|&k| (k, score_in(k, &ctx))).collect()
}

//! Scores predicted protocol programs against ground truth.
//!
//! Programs match when their statement trees have the same shape. Step
//! arguments compare as multisets. Names and free-text fields use a smoothed
//! 4-gram BLEU score and match at [`NAME_MATCH_THRESHOLD`]; everything else
//! must be equal.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::checker::DiagnosticKind;
use crate::program::{Arg, ProtocolProgram, Statement};
use crate::semantic::{canonical_category, QUANTITATIVE_CATEGORIES};

pub const NAME_MATCH_THRESHOLD: f64 = 0.5;
const MAX_ORDER: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum UtilityError {
    #[error("{predicted} predicted programs for {truth} ground-truth programs")]
    Unpaired { predicted: usize, truth: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FeatureClass {
    ImperativeControlFlow,
    TypeSystem,
    Concurrent,
    ReactiveModel,
}

impl FeatureClass {
    pub const ALL: [FeatureClass; 4] = [
        FeatureClass::ImperativeControlFlow,
        FeatureClass::TypeSystem,
        FeatureClass::Concurrent,
        FeatureClass::ReactiveModel,
    ];

    pub fn of(s: &Statement) -> Option<FeatureClass> {
        match s {
            Statement::Loop { .. }
            | Statement::Branch { .. }
            | Statement::Call { .. }
            | Statement::Break
            | Statement::Continue => Some(FeatureClass::ImperativeControlFlow),
            Statement::Alloc { .. } | Statement::Dealloc { .. } => Some(FeatureClass::TypeSystem),
            Statement::Parallel { .. } => Some(FeatureClass::Concurrent),
            Statement::Event { .. } | Statement::Emit { .. } => Some(FeatureClass::ReactiveModel),
            Statement::OpStep { .. } => None,
        }
    }
}

/// Feature classes exhibited anywhere in a program.
pub fn feature_classes(p: &ProtocolProgram) -> BTreeSet<FeatureClass> {
    let mut out = BTreeSet::new();
    p.walk(|_, s| out.extend(FeatureClass::of(s)));
    out
}

/// Sentence BLEU of `candidate` against `reference` on lowercase
/// whitespace tokens, orders 1 to 4 with uniform weights. Orders above 1 use
/// add-one smoothing, so short names are not zeroed out by missing 4-grams.
pub fn bleu(candidate: &str, reference: &str) -> f64 {
    let c: Vec<String> = candidate.split_whitespace().map(str::to_lowercase).collect();
    let r: Vec<String> = reference.split_whitespace().map(str::to_lowercase).collect();
    if c.is_empty() || r.is_empty() {
        return if c.is_empty() && r.is_empty() { 1.0 } else { 0.0 };
    }
    let mut log_sum = 0.0;
    for n in 1..=MAX_ORDER {
        let cand = ngrams(&c, n);
        let refs = ngrams(&r, n);
        let total: usize = cand.values().sum();
        let clipped: usize = cand.iter().map(|(g, &k)| k.min(refs.get(g).copied().unwrap_or(0))).sum();
        let p = if n == 1 {
            clipped as f64 / total as f64
        } else {
            (clipped as f64 + 1.0) / (total as f64 + 1.0)
        };
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln() / MAX_ORDER as f64;
    }
    let bp = if c.len() >= r.len() {
        1.0
    } else {
        (1.0 - r.len() as f64 / c.len() as f64).exp()
    };
    bp * log_sum.exp()
}

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_default() += 1;
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NameComparison {
    pub predicted: String,
    pub reference: String,
    pub score: f64,
    pub matched: bool,
}

#[derive(Default)]
struct Matcher {
    names: Vec<NameComparison>,
}

impl Matcher {
    fn name(&mut self, p: &str, r: &str) -> bool {
        let score = bleu(p, r);
        let matched = score >= NAME_MATCH_THRESHOLD;
        self.names.push(NameComparison {
            predicted: p.to_string(),
            reference: r.to_string(),
            score,
            matched,
        });
        matched
    }

    fn opt_name(&mut self, p: &Option<String>, r: &Option<String>) -> bool {
        match (p, r) {
            (None, None) => true,
            (Some(p), Some(r)) => self.name(p, r),
            _ => false,
        }
    }

    fn arg(&mut self, p: &Arg, r: &Arg) -> bool {
        let cat = canonical_category(&p.category);
        if cat != canonical_category(&r.category) {
            return false;
        }
        if QUANTITATIVE_CATEGORIES.contains(&cat.as_str()) {
            norm(&p.value) == norm(&r.value)
        } else {
            self.opt_name(&p.value, &r.value)
        }
    }

    /// Order-insensitive: a perfect bipartite matching must exist.
    fn args(&mut self, p: &[Arg], r: &[Arg]) -> bool {
        if p.len() != r.len() {
            return false;
        }
        let adj: Vec<Vec<usize>> = p
            .iter()
            .map(|a| (0..r.len()).filter(|&j| self.arg(a, &r[j])).collect())
            .collect();
        max_bipartite_matching(&adj, r.len()) == p.len()
    }

    fn block(&mut self, p: &[Statement], r: &[Statement]) -> bool {
        p.len() == r.len() && p.iter().zip(r).all(|(a, b)| self.stmt(a, b))
    }

    fn stmt(&mut self, p: &Statement, r: &Statement) -> bool {
        use Statement as S;
        match (p, r) {
            (
                S::OpStep { opcode, args, output },
                S::OpStep {
                    opcode: o2,
                    args: a2,
                    output: out2,
                },
            ) => opcode.eq_ignore_ascii_case(o2) && self.args(args, a2) && self.opt_name(output, out2),
            (
                S::Loop {
                    kind,
                    bound,
                    condition,
                    body,
                },
                S::Loop {
                    kind: k2,
                    bound: b2,
                    condition: c2,
                    body: body2,
                },
            ) => kind == k2 && bound == b2 && self.opt_name(condition, c2) && self.block(body, body2),
            (
                S::Branch {
                    condition,
                    then_body,
                    else_body,
                },
                S::Branch {
                    condition: c2,
                    then_body: t2,
                    else_body: e2,
                },
            ) => {
                self.name(condition, c2)
                    && self.block(then_body, t2)
                    && match (else_body, e2) {
                        (None, None) => true,
                        (Some(a), Some(b)) => self.block(a, b),
                        _ => false,
                    }
            }
            (S::Parallel { kind, branches }, S::Parallel { kind: k2, branches: b2 }) => {
                kind == k2 && branches.len() == b2.len() && branches.iter().zip(b2).all(|(a, b)| self.block(a, b))
            }
            (S::Call { name, args }, S::Call { name: n2, args: a2 }) => self.name(name, n2) && self.args(args, a2),
            (S::Alloc { ty, name }, S::Alloc { ty: t2, name: n2 }) => ty.eq_ignore_ascii_case(t2) && self.name(name, n2),
            (S::Dealloc { name }, S::Dealloc { name: n2 }) => self.name(name, n2),
            (S::Event { on, body }, S::Event { on: o2, body: b2 }) => self.name(on, o2) && self.block(body, b2),
            (S::Emit { event }, S::Emit { event: e2 }) => self.name(event, e2),
            (S::Break, S::Break) | (S::Continue, S::Continue) => true,
            _ => false,
        }
    }
}

fn norm(v: &Option<String>) -> Option<String> {
    v.as_ref().map(|s| s.split_whitespace().collect::<String>().to_lowercase())
}

/// Size of a maximum matching; `adj[i]` lists right vertices of left `i`.
pub fn max_bipartite_matching(adj: &[Vec<usize>], right: usize) -> usize {
    fn augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                if owner[v].is_none_or(|w| augment(w, adj, seen, owner)) {
                    owner[v] = Some(u);
                    return true;
                }
            }
        }
        false
    }
    let mut owner = vec![None; right];
    (0..adj.len())
        .filter(|&u| augment(u, adj, &mut vec![false; right], &mut owner))
        .count()
}

/// Structural match of two programs, with the name comparisons made.
pub fn programs_match(predicted: &ProtocolProgram, truth: &ProtocolProgram) -> (bool, Vec<NameComparison>) {
    let mut m = Matcher::default();
    let ok = m.block(&predicted.statements, &truth.statements);
    (ok, m.names)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtilitySample {
    pub id: String,
    pub predicted: ProtocolProgram,
    pub truth: ProtocolProgram,
    /// The error class seeded into the source protocol, if any.
    pub seeded_error: Option<DiagnosticKind>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub hits: usize,
    pub total: usize,
}

impl Rate {
    pub fn value(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.hits as f64 / self.total as f64
        }
    }

    fn add(&mut self, hit: bool) {
        self.total += 1;
        self.hits += usize::from(hit);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDetail {
    pub id: String,
    pub matched: bool,
    pub features: BTreeSet<FeatureClass>,
    pub seeded_error: Option<DiagnosticKind>,
    pub names: Vec<NameComparison>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UtilityScore {
    pub syntactic_success: BTreeMap<FeatureClass, Rate>,
    pub semantic_success: BTreeMap<DiagnosticKind, Rate>,
    pub overall: Rate,
    pub details: Vec<SampleDetail>,
}

/// Pairs `predicted[i]` with `truth[i]`.
pub fn score_utility(predicted: &[ProtocolProgram], truth: &[ProtocolProgram]) -> Result<UtilityScore, UtilityError> {
    if predicted.len() != truth.len() {
        return Err(UtilityError::Unpaired {
            predicted: predicted.len(),
            truth: truth.len(),
        });
    }
    let samples: Vec<_> = predicted
        .iter()
        .zip(truth)
        .enumerate()
        .map(|(i, (p, t))| UtilitySample {
            id: t.name.clone().unwrap_or_else(|| i.to_string()),
            predicted: p.clone(),
            truth: t.clone(),
            seeded_error: None,
        })
        .collect();
    Ok(score_samples(&samples))
}

/// A sample counts toward each feature class its ground truth exhibits and
/// toward its seeded error class.
pub fn score_samples(samples: &[UtilitySample]) -> UtilityScore {
    let mut score = UtilityScore::default();
    for s in samples {
        let (matched, names) = programs_match(&s.predicted, &s.truth);
        let features = feature_classes(&s.truth);
        for &f in &features {
            score.syntactic_success.entry(f).or_default().add(matched);
        }
        if let Some(e) = s.seeded_error {
            score.semantic_success.entry(e).or_default().add(matched);
        }
        score.overall.add(matched);
        score.details.push(SampleDetail {
            id: s.id.clone(),
            matched,
            features,
            seeded_error: s.seeded_error,
            names,
        });
    }
    score
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{parse_program_text, LoopKind};

    #[test]
    fn bleu_golden_values() {
        assert_eq!(bleu("centrifuge tube", "centrifuge tube"), 1.0);
        let short = bleu("tube", "centrifuge tube");
        assert!((short - (-1.0f64).exp()).abs() < 1e-12, "{short}");
        assert!(short < NAME_MATCH_THRESHOLD);
        assert_eq!(bleu("pellet", "bile sample"), 0.0);
        assert_eq!(bleu("", ""), 1.0);
        // 3 of 3 unigrams, bigrams (1+1)/(2+1), trigrams (0+1)/(1+1),
        // 4-grams 1/1, brevity exp(1 - 4/3).
        let s = bleu("sterile collection bottle", "sterile bile collection bottle");
        let want = (1.0f64 - 4.0 / 3.0).exp() * (2.0f64 / 3.0 * 0.5).powf(0.25);
        assert!((s - want).abs() < 1e-12, "{s} {want}");
    }

    #[test]
    fn matching() {
        assert_eq!(max_bipartite_matching(&[vec![0, 1], vec![0]], 2), 2);
        assert_eq!(max_bipartite_matching(&[vec![0], vec![0]], 2), 1);
    }

    #[test]
    fn permuted_args_match() {
        let gt = parse_program_text(
            "SPIN: [[Force: 3000g], [Time: 10min], [Temperature: 4°C], [Container: centrifuge tube]] -> centrifuged sample",
        )
        .unwrap();
        let dl = parse_program_text(
            "SPIN: [[Force: 3000g], [Time: 10min], [Container: centrifuge tube], [Temperature: 4°C]] -> centrifuged sample",
        )
        .unwrap();
        let bl = parse_program_text("SPIN: [[Container: tube], [Force: 3000g], [Time: 10min], [Temperature: 4°C]] ->").unwrap();
        let s = score_utility(&[dl, bl], &[gt.clone(), gt]).unwrap();
        assert!(s.details[0].matched);
        assert!(!s.details[1].matched);
        assert!(s.details[1].names.iter().any(|n| n.predicted == "tube" && !n.matched));
    }

    #[test]
    fn identical_programs_score_one() {
        let p = ProtocolProgram::new(vec![Statement::Loop {
            kind: LoopKind::For,
            bound: Some(3),
            condition: None,
            body: vec![Statement::step("WASH", &[("REG", Some("PBS"))], None)],
        }]);
        let s = score_utility(std::slice::from_ref(&p), std::slice::from_ref(&p)).unwrap();
        assert_eq!(s.syntactic_success[&FeatureClass::ImperativeControlFlow].value(), 1.0);
        assert_eq!(s.overall.value(), 1.0);
        assert!(score_utility(&[p], &[]).is_err());
    }
}

//! Context-free grammars in BNF, the bundled prior grammar, and pruning by
//! construct.
//!
//! Every [`ConstraintId`] owns a disjoint set of productions of the prior.
//! Pruning a construct removes its productions, then repeatedly drops
//! productions that became unproductive or unreachable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::filters::ConstraintId;

const PRIOR_BNF: &str = include_str!("../data/prior_grammar.bnf");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GrammarError {
    #[error("grammar line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("grammar has no productions for start symbol <{0}>")]
    MissingStart(String),
    #[error("pruning {pruned:?} leaves the start symbol unproductive")]
    UnproductiveStart { pruned: Vec<String> },
    #[error("grammar is not well formed: unreachable {unreachable:?}, unproductive {unproductive:?}")]
    NotWellFormed {
        unreachable: Vec<String>,
        unproductive: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    N(String),
    T(String),
}

impl Symbol {
    pub fn nonterminal(&self) -> Option<&str> {
        match self {
            Symbol::N(n) => Some(n),
            Symbol::T(_) => None,
        }
    }

    fn first_terminal(rhs: &[Symbol]) -> Option<&str> {
        rhs.iter().find_map(|s| match s {
            Symbol::T(t) => Some(t.as_str()),
            Symbol::N(_) => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Production {
    pub lhs: String,
    pub rhs: Vec<Symbol>,
}

impl Production {
    pub fn render(&self) -> String {
        format!("<{}> ::= {}", self.lhs, render_rhs(&self.rhs))
    }
}

fn render_rhs(rhs: &[Symbol]) -> String {
    if rhs.is_empty() {
        return "\"\"".to_string();
    }
    rhs.iter()
        .map(|s| match s {
            Symbol::N(n) => format!("<{n}>"),
            Symbol::T(t) => format!("\"{t}\""),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    start: String,
    productions: Vec<Production>,
}

impl Grammar {
    /// Builds a grammar, dropping duplicate productions and grouping
    /// productions by left-hand side in order of first appearance.
    pub fn new(start: impl Into<String>, productions: Vec<Production>) -> Self {
        let mut order: Vec<String> = Vec::new();
        let mut groups: BTreeMap<String, Vec<Production>> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for p in productions {
            if !seen.insert(p.clone()) {
                continue;
            }
            if !groups.contains_key(&p.lhs) {
                order.push(p.lhs.clone());
            }
            groups.entry(p.lhs.clone()).or_default().push(p);
        }
        let productions = order
            .iter()
            .flat_map(|lhs| groups.remove(lhs).unwrap_or_default())
            .collect();
        Grammar {
            start: start.into(),
            productions,
        }
    }

    /// The bundled general-purpose prior.
    pub fn load_prior() -> Self {
        let g = parse_bnf(PRIOR_BNF).expect("bundled prior grammar parses");
        g.check_well_formed().expect("bundled prior grammar is well formed");
        g
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn nonterminals(&self) -> BTreeSet<&str> {
        let mut out: BTreeSet<&str> = BTreeSet::new();
        out.insert(&self.start);
        for p in &self.productions {
            out.insert(&p.lhs);
            out.extend(p.rhs.iter().filter_map(Symbol::nonterminal));
        }
        out
    }

    pub fn terminals(&self) -> BTreeSet<&str> {
        self.productions
            .iter()
            .flat_map(|p| &p.rhs)
            .filter_map(|s| match s {
                Symbol::T(t) => Some(t.as_str()),
                Symbol::N(_) => None,
            })
            .collect()
    }

    pub fn alternatives<'a>(&'a self, lhs: &'a str) -> impl Iterator<Item = &'a Production> + 'a {
        self.productions.iter().filter(move |p| p.lhs == lhs)
    }

    pub fn contains(&self, p: &Production) -> bool {
        self.productions.contains(p)
    }

    pub fn productive(&self) -> BTreeSet<String> {
        productive(&self.productions)
    }

    pub fn reachable(&self) -> BTreeSet<String> {
        reachable(&self.start, &self.productions)
    }

    pub fn is_well_formed(&self) -> bool {
        self.check_well_formed().is_ok()
    }

    /// Every nonterminal must be reachable from the start and derive some
    /// terminal string.
    pub fn check_well_formed(&self) -> Result<(), GrammarError> {
        if self.alternatives(&self.start).next().is_none() {
            return Err(GrammarError::MissingStart(self.start.clone()));
        }
        let prod = self.productive();
        let reach = self.reachable();
        let all = self.nonterminals();
        let unreachable: Vec<String> = all.iter().filter(|n| !reach.contains(**n)).map(|n| n.to_string()).collect();
        let unproductive: Vec<String> = all.iter().filter(|n| !prod.contains(**n)).map(|n| n.to_string()).collect();
        if unreachable.is_empty() && unproductive.is_empty() {
            Ok(())
        } else {
            Err(GrammarError::NotWellFormed {
                unreachable,
                unproductive,
            })
        }
    }

    /// Writes the grammar as BNF that [`parse_bnf`] reads back to an equal
    /// grammar.
    pub fn to_bnf(&self) -> String {
        let mut out = String::new();
        let mut current: Option<&str> = None;
        for p in &self.productions {
            if current == Some(p.lhs.as_str()) {
                let _ = write!(out, "\n    | {}", render_rhs(&p.rhs));
            } else {
                if current.is_some() {
                    out.push_str("\n\n");
                }
                let _ = write!(out, "<{}> ::= {}", p.lhs, render_rhs(&p.rhs));
                current = Some(&p.lhs);
            }
        }
        out.push('\n');
        out
    }

    /// Removes the productions of `inactive` (closed under the dependency
    /// table) and everything that stops being productive or reachable.
    pub fn prune(&self, inactive: &BTreeSet<ConstraintId>) -> Result<Grammar, GrammarError> {
        let closed = dependency_closure(inactive);
        let mut prods: Vec<Production> = self
            .productions
            .iter()
            .filter(|p| owner(p).is_none_or(|k| !closed.contains(&k)))
            .cloned()
            .collect();
        loop {
            let before = prods.len();
            let prod = productive(&prods);
            prods.retain(|p| prod.contains(&p.lhs) && p.rhs.iter().filter_map(Symbol::nonterminal).all(|n| prod.contains(n)));
            let reach = reachable(&self.start, &prods);
            prods.retain(|p| reach.contains(&p.lhs));
            if prods.len() == before {
                break;
            }
        }
        if !prods.iter().any(|p| p.lhs == self.start) {
            return Err(GrammarError::UnproductiveStart {
                pruned: closed.iter().map(|k| k.name().to_string()).collect(),
            });
        }
        Ok(Grammar {
            start: self.start.clone(),
            productions: prods,
        })
    }

    /// True when the construct's productions survive in this grammar and the
    /// constructs it depends on are accepted too.
    pub fn accepts_construct(&self, k: ConstraintId) -> bool {
        let prod = self.productive();
        let reach = self.reachable();
        self.accepts_with(k, &prod, &reach)
    }

    fn accepts_with(&self, k: ConstraintId, prod: &BTreeSet<String>, reach: &BTreeSet<String>) -> bool {
        let survives = self.productions.iter().any(|p| {
            owner(p) == Some(k)
                && reach.contains(&p.lhs)
                && prod.contains(&p.lhs)
                && p.rhs.iter().filter_map(Symbol::nonterminal).all(|n| prod.contains(n))
        });
        survives && dependencies_met(k, |d| self.accepts_with(d, prod, reach))
    }

    pub fn accepted_constructs(&self) -> BTreeSet<ConstraintId> {
        let prod = self.productive();
        let reach = self.reachable();
        ConstraintId::ALL
            .iter()
            .copied()
            .filter(|&k| self.accepts_with(k, &prod, &reach))
            .collect()
    }

    /// Productions owned by `k` that are present in this grammar.
    pub fn owned_productions(&self, k: ConstraintId) -> Vec<&Production> {
        self.productions.iter().filter(|p| owner(p) == Some(k)).collect()
    }
}

fn productive(prods: &[Production]) -> BTreeSet<String> {
    let mut set: BTreeSet<String> = BTreeSet::new();
    loop {
        let mut changed = false;
        for p in prods {
            if !set.contains(&p.lhs) && p.rhs.iter().filter_map(Symbol::nonterminal).all(|n| set.contains(n)) {
                set.insert(p.lhs.clone());
                changed = true;
            }
        }
        if !changed {
            return set;
        }
    }
}

fn reachable(start: &str, prods: &[Production]) -> BTreeSet<String> {
    let mut set = BTreeSet::from([start.to_string()]);
    let mut stack = vec![start.to_string()];
    while let Some(n) = stack.pop() {
        for p in prods.iter().filter(|p| p.lhs == n) {
            for m in p.rhs.iter().filter_map(Symbol::nonterminal) {
                if set.insert(m.to_string()) {
                    stack.push(m.to_string());
                }
            }
        }
    }
    set
}

/// The construct a production belongs to, if any.
pub fn owner(p: &Production) -> Option<ConstraintId> {
    use ConstraintId::*;
    let first = Symbol::first_terminal(&p.rhs);
    let only_nt = match p.rhs.as_slice() {
        [Symbol::N(n)] => Some(n.as_str()),
        _ => None,
    };
    match p.lhs.as_str() {
        "data-type" => match first? {
            "int" => Some(IntegerType),
            "float" => Some(FloatType),
            "bool" => Some(BooleanType),
            "string" => Some(StringType),
            "set" => Some(SetType),
            "dict" => Some(DictType),
            "vector" => Some(VectorType),
            _ => None,
        },
        "domain-specified-type" => match (first, only_nt) {
            (Some("time"), _) => Some(TemporalType),
            (Some("reagent"), _) => Some(RegType),
            (Some("device"), _) => Some(DeviceType),
            (Some("container"), _) => Some(ContainerType),
            (_, Some("scientific-type")) => Some(ScientificType),
            _ => None,
        },
        "loop-statement" => match first? {
            "While" => Some(WhileLoop),
            "For" => Some(ForLoop),
            _ => None,
        },
        "if-statement" => {
            if p.rhs.contains(&Symbol::T("else".into())) {
                Some(IfElseBranch)
            } else {
                Some(IfBranch)
            }
        }
        "function-procedure" => match first? {
            "Call" => Some(FunctionCall),
            "Function" => Some(FunctionDeclaration),
            _ => None,
        },
        "jump-statement" => match first? {
            "break" => Some(Break),
            "continue" => Some(Continue),
            _ => None,
        },
        "memory-management" => match first? {
            "allocate" | "deallocate" => Some(Allocate),
            _ => None,
        },
        "arithmetic-operator" => match first? {
            "+" => Some(AddOperator),
            "-" => Some(MinusOperator),
            "*" => Some(MultiOperator),
            "/" => Some(DevidOperator),
            _ => None,
        },
        "logical-operator" => match first? {
            "&&" => Some(AndOperator),
            "||" => Some(OrOperator),
            "!" => Some(NotOperator),
            _ => None,
        },
        "imperative-model" if only_nt == Some("assignment-expression") => Some(Assignment),
        "raise-stmt" => Some(Raise),
        "resolve-stmt" => Some(Resolve),
        "class-type" => Some(ClassType),
        "data-parallel" => match first? {
            "parallelFor" => Some(ParallelFor),
            "parallelMap" => Some(ParallelMap),
            _ => None,
        },
        "message-passing" => match first? {
            "spawnProcess" => Some(SpawnProcess),
            "sendMessage" => Some(SendMessage),
            "receiveMessage" => Some(ReceiveMessage),
            _ => None,
        },
        "event-stmt" => Some(Event),
        "response-stmt" => Some(Response),
        _ => None,
    }
}

/// Constructs that are meaningless without another construct. Each inner
/// list is a disjunction: at least one of its members must be present.
pub fn dependencies(k: ConstraintId) -> &'static [&'static [ConstraintId]] {
    use ConstraintId::*;
    match k {
        Break => &[&[WhileLoop]],
        Continue => &[&[ForLoop, WhileLoop]],
        IfElseBranch => &[&[IfBranch]],
        SendMessage | ReceiveMessage => &[&[SpawnProcess]],
        _ => &[],
    }
}

fn dependencies_met(k: ConstraintId, mut present: impl FnMut(ConstraintId) -> bool) -> bool {
    dependencies(k).iter().all(|any_of| any_of.iter().any(|&d| present(d)))
}

/// Adds every construct whose dependencies are no longer met.
pub fn dependency_closure(inactive: &BTreeSet<ConstraintId>) -> BTreeSet<ConstraintId> {
    let mut closed = inactive.clone();
    loop {
        let extra: Vec<ConstraintId> = ConstraintId::ALL
            .iter()
            .copied()
            .filter(|k| !closed.contains(k) && !dependencies_met(*k, |d| !closed.contains(&d)))
            .collect();
        if extra.is_empty() {
            return closed;
        }
        closed.extend(extra);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Nt(String),
    Term(String),
    Def,
    Bar,
    Open,
    Close,
    Star,
    Ellipsis,
}

fn lex_bnf(text: &str) -> Result<Vec<(Tok, usize)>, GrammarError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut line = 1;
    let err = |line: usize, message: String| GrammarError::Parse { line, message };
    while i < chars.len() {
        let c = chars[i];
        match c {
            '\n' => {
                line += 1;
                i += 1;
            }
            c if c.is_whitespace() => i += 1,
            '/' if chars.get(i + 1) == Some(&'*') => {
                i += 2;
                while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                    if chars[i] == '\n' {
                        line += 1;
                    }
                    i += 1;
                }
                if i >= chars.len() {
                    return Err(err(line, "unterminated comment".into()));
                }
                i += 2;
            }
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '<' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '>' && chars[j] != '\n' {
                    j += 1;
                }
                if chars.get(j) != Some(&'>') {
                    return Err(err(line, "unterminated nonterminal".into()));
                }
                out.push((Tok::Nt(chars[start..j].iter().collect()), line));
                i = j + 1;
            }
            '"' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '"' && chars[j] != '\n' {
                    j += 1;
                }
                if chars.get(j) != Some(&'"') {
                    return Err(err(line, "unterminated terminal".into()));
                }
                out.push((Tok::Term(chars[start..j].iter().collect()), line));
                i = j + 1;
            }
            ':' if chars[i..].starts_with(&[':', ':', '=']) => {
                out.push((Tok::Def, line));
                i += 3;
            }
            '.' if chars[i..].starts_with(&['.', '.', '.']) => {
                out.push((Tok::Ellipsis, line));
                i += 3;
            }
            '|' => {
                out.push((Tok::Bar, line));
                i += 1;
            }
            '(' => {
                out.push((Tok::Open, line));
                i += 1;
            }
            ')' => {
                out.push((Tok::Close, line));
                i += 1;
            }
            '*' => {
                out.push((Tok::Star, line));
                i += 1;
            }
            other => return Err(err(line, format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

/// Reads BNF with `/* */` and `//` comments, `|` alternatives (also on
/// continuation lines), repeated left-hand sides, `""` for the empty string,
/// `( ... )*` groups and `"a" | ... | "z"` character ranges.
///
/// The start symbol is the left-hand side of the first rule.
pub fn parse_bnf(text: &str) -> Result<Grammar, GrammarError> {
    let toks = lex_bnf(text)?;
    // Split into rules: a rule starts at `<name> ::=`.
    let mut rules: Vec<(String, usize, Vec<(Tok, usize)>)> = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        match (&toks[i], toks.get(i + 1)) {
            ((Tok::Nt(name), line), Some((Tok::Def, _))) => {
                rules.push((name.clone(), *line, Vec::new()));
                i += 2;
            }
            (tok, _) => {
                let Some(rule) = rules.last_mut() else {
                    return Err(GrammarError::Parse {
                        line: tok.1,
                        message: "expected `<name> ::=`".into(),
                    });
                };
                rule.2.push(tok.clone());
                i += 1;
            }
        }
    }
    let start = rules
        .first()
        .map(|r| r.0.clone())
        .ok_or_else(|| GrammarError::Parse {
            line: 1,
            message: "no rules".into(),
        })?;
    let mut prods = Vec::new();
    let mut helper_count: BTreeMap<String, usize> = BTreeMap::new();
    for (lhs, line, body) in rules {
        let mut extra = Vec::new();
        let alts = parse_alternatives(&lhs, line, &body, &mut extra, &mut helper_count)?;
        prods.extend(alts.into_iter().map(|rhs| Production { lhs: lhs.clone(), rhs }));
        prods.extend(extra);
    }
    Ok(Grammar::new(start, prods))
}

fn parse_alternatives(
    lhs: &str,
    line: usize,
    body: &[(Tok, usize)],
    extra: &mut Vec<Production>,
    helpers: &mut BTreeMap<String, usize>,
) -> Result<Vec<Vec<Symbol>>, GrammarError> {
    let err = |line: usize, message: &str| GrammarError::Parse {
        line,
        message: message.to_string(),
    };
    let mut alts: Vec<Option<Vec<Symbol>>> = vec![Some(Vec::new())];
    let mut i = 0;
    while i < body.len() {
        let (tok, tline) = &body[i];
        match tok {
            Tok::Bar => alts.push(Some(Vec::new())),
            Tok::Ellipsis => {
                let cur = alts.last_mut().expect("alternative");
                if cur.as_ref().is_some_and(|c| !c.is_empty()) {
                    return Err(err(*tline, "`...` must stand alone as an alternative"));
                }
                *cur = None;
            }
            Tok::Nt(n) => push(&mut alts, Symbol::N(n.clone())),
            Tok::Term(t) if t.is_empty() => {}
            Tok::Term(t) => push(&mut alts, Symbol::T(t.clone())),
            Tok::Open => {
                let close = body[i..]
                    .iter()
                    .position(|(t, _)| *t == Tok::Close)
                    .map(|p| p + i)
                    .ok_or_else(|| err(*tline, "unclosed group"))?;
                if body.get(close + 1).map(|t| &t.0) != Some(&Tok::Star) {
                    return Err(err(*tline, "only `( ... )*` groups are supported"));
                }
                let count = helpers.entry(lhs.to_string()).or_default();
                *count += 1;
                let helper = format!("{lhs}-rep{count}");
                let inner = parse_alternatives(&helper, *tline, &body[i + 1..close], extra, helpers)?;
                extra.push(Production {
                    lhs: helper.clone(),
                    rhs: Vec::new(),
                });
                for mut rhs in inner {
                    rhs.push(Symbol::N(helper.clone()));
                    extra.push(Production {
                        lhs: helper.clone(),
                        rhs,
                    });
                }
                push(&mut alts, Symbol::N(helper));
                i = close + 2;
                continue;
            }
            Tok::Close | Tok::Star => return Err(err(*tline, "unbalanced group")),
            Tok::Def => return Err(err(*tline, "unexpected `::=`")),
        }
        i += 1;
    }
    expand_ranges(alts).ok_or_else(|| err(line, "`...` must sit between two single-character terminals"))
}

fn push(alts: &mut [Option<Vec<Symbol>>], s: Symbol) {
    if let Some(Some(cur)) = alts.last_mut() {
        cur.push(s);
    }
}

fn single_char(alt: &Option<Vec<Symbol>>) -> Option<char> {
    match alt.as_deref() {
        Some([Symbol::T(t)]) => {
            let mut cs = t.chars();
            let c = cs.next()?;
            cs.next().is_none().then_some(c)
        }
        _ => None,
    }
}

fn expand_ranges(alts: Vec<Option<Vec<Symbol>>>) -> Option<Vec<Vec<Symbol>>> {
    let mut out = Vec::new();
    for i in 0..alts.len() {
        match &alts[i] {
            Some(rhs) => out.push(rhs.clone()),
            None => {
                let lo = single_char(alts.get(i.checked_sub(1)?)?)?;
                let hi = single_char(alts.get(i + 1)?)?;
                if hi <= lo {
                    return None;
                }
                let mut c = char::from_u32(lo as u32 + 1)?;
                while c < hi {
                    out.push(vec![Symbol::T(c.to_string())]);
                    c = char::from_u32(c as u32 + 1)?;
                }
            }
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ks: &[ConstraintId]) -> BTreeSet<ConstraintId> {
        ks.iter().copied().collect()
    }

    #[test]
    fn prior_contains_while_loop() {
        let g = Grammar::load_prior();
        let text = g.to_bnf();
        assert!(text.contains(
            "<loop-statement> ::= \"While\" \"(\" <expression> \")\" \"{\" <statements> \"}\""
        ));
        assert!(g.is_well_formed());
    }

    #[test]
    fn ranges_and_groups() {
        let g = parse_bnf("<id> ::= <l> (<l> | <d>)*\n<l> ::= \"a\" | ... | \"d\"\n<d> ::= \"0\" | \"1\" | ... | \"3\"").unwrap();
        assert_eq!(g.alternatives("l").count(), 4);
        assert_eq!(g.alternatives("d").count(), 4);
        assert_eq!(g.alternatives("id-rep1").count(), 3);
        assert!(g.is_well_formed());
        assert!(parse_bnf("<l> ::= ... | \"d\"").is_err());
    }

    #[test]
    fn every_construct_owns_a_prior_production() {
        let g = Grammar::load_prior();
        for &k in ConstraintId::ALL {
            assert!(!g.owned_productions(k).is_empty(), "{k}");
            assert!(g.accepts_construct(k), "{k}");
        }
    }

    #[test]
    fn prune_nothing_is_identity() {
        let g = Grammar::load_prior();
        assert_eq!(g.prune(&BTreeSet::new()).unwrap(), g);
    }

    #[test]
    fn prune_continue_removes_one_alternative() {
        let g = Grammar::load_prior();
        let p = g.prune(&set(&[ConstraintId::Continue])).unwrap();
        let removed: Vec<_> = g.productions().iter().filter(|x| !p.contains(x)).map(Production::render).collect();
        assert_eq!(removed, vec!["<jump-statement> ::= \"continue\""]);
        assert_eq!(p.productions().len(), g.productions().len() - 1);
    }

    #[test]
    fn prune_families() {
        use ConstraintId::*;
        let g = Grammar::load_prior();
        let inactive = set(&[Event, Response, ParallelFor, ParallelMap, SpawnProcess, SendMessage, ReceiveMessage, Raise, Resolve]);
        let p = g.prune(&inactive).unwrap();
        let stmts: Vec<_> = p.alternatives("statement").map(|x| render_rhs(&x.rhs)).collect();
        assert_eq!(stmts, vec!["<imperative-model>", "<type-system>"]);
        for gone in ["react", "concurrent", "runtime-error-handling", "message-passing"] {
            assert!(!p.nonterminals().contains(gone), "{gone}");
        }
        assert!(p.is_well_formed());
    }

    #[test]
    fn break_needs_while() {
        let g = Grammar::load_prior();
        let p = g.prune(&set(&[ConstraintId::WhileLoop])).unwrap();
        assert!(!p.accepts_construct(ConstraintId::WhileLoop));
        assert!(!p.accepts_construct(ConstraintId::Break));
        assert!(p.accepts_construct(ConstraintId::Continue));
        assert!(p.accepts_construct(ConstraintId::IfBranch));
    }

    #[test]
    fn pruning_everything_fails() {
        let g = Grammar::load_prior();
        let all: BTreeSet<_> = ConstraintId::ALL.iter().copied().collect();
        assert!(matches!(g.prune(&all), Err(GrammarError::UnproductiveStart { .. })));
    }

    #[test]
    fn bnf_round_trip() {
        let g = Grammar::load_prior();
        assert_eq!(parse_bnf(&g.to_bnf()).unwrap(), g);
        let p = g.prune(&set(&[ConstraintId::ClassType, ConstraintId::IfBranch])).unwrap();
        assert_eq!(parse_bnf(&p.to_bnf()).unwrap(), p);
    }
}

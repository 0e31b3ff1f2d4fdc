//! Protocol programs: the opcode/argument step format plus a versioned
//! extension for control structures.
//!
//! A single step is an object with one opcode key:
//!
//! ```text
//! {"GROW": [["REG", "GFP-fusion"], ["Device", "confocal microscope"], ["output", "Z-stack images"]]}
//! ```
//!
//! Programs with several statements or control flow use
//! `{"version": 1, "program": [...]}` where each element is either a step
//! object or one of the lowercase wrappers `loop`, `branch`, `parallel`,
//! `call`, `alloc`, `dealloc`, `event`, `emit`, `break`, `continue`.

use std::fmt;

use serde_json::{json, Map, Value};

use crate::filters::ConstraintId;
use crate::literal::{self, Literal, LiteralError};

pub const PROGRAM_FORMAT_VERSION: u64 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ProgramError {
    #[error(transparent)]
    Syntax(#[from] LiteralError),
    #[error("no opcode in step object")]
    NoOpcode,
    #[error("at {at}: {message}")]
    Shape { at: String, message: String },
    #[error("unsupported program format version {0}")]
    Version(u64),
    #[error("line {line}: {message}")]
    Showcase { line: usize, message: String },
}

fn shape(at: &Path, message: impl Into<String>) -> ProgramError {
    ProgramError::Shape {
        at: if at.is_root() { "program".into() } else { at.to_string() },
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arg {
    pub category: String,
    /// `None` marks an absent datum.
    pub value: Option<String>,
}

impl Arg {
    pub fn new(category: &str, value: Option<&str>) -> Self {
        Arg {
            category: category.to_string(),
            value: value.map(str::to_string),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopKind {
    For,
    While,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParallelKind {
    For,
    Map,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    OpStep {
        opcode: String,
        args: Vec<Arg>,
        output: Option<String>,
    },
    Loop {
        kind: LoopKind,
        bound: Option<u64>,
        condition: Option<String>,
        body: Vec<Statement>,
    },
    Branch {
        condition: String,
        then_body: Vec<Statement>,
        else_body: Option<Vec<Statement>>,
    },
    Parallel {
        kind: ParallelKind,
        branches: Vec<Vec<Statement>>,
    },
    Call {
        name: String,
        args: Vec<Arg>,
    },
    Alloc {
        ty: String,
        name: String,
    },
    Dealloc {
        name: String,
    },
    Event {
        on: String,
        body: Vec<Statement>,
    },
    Emit {
        event: String,
    },
    Break,
    Continue,
}

impl Statement {
    pub fn step(opcode: &str, args: &[(&str, Option<&str>)], output: Option<&str>) -> Self {
        Statement::OpStep {
            opcode: opcode.to_string(),
            args: args.iter().map(|(c, v)| Arg::new(c, *v)).collect(),
            output: output.map(str::to_string),
        }
    }

    /// The syntactic construct this statement needs, if any.
    pub fn construct(&self) -> Option<ConstraintId> {
        use ConstraintId as C;
        Some(match self {
            Statement::OpStep { .. } => return None,
            Statement::Loop { kind: LoopKind::For, .. } => C::ForLoop,
            Statement::Loop { kind: LoopKind::While, .. } => C::WhileLoop,
            Statement::Branch { else_body: None, .. } => C::IfBranch,
            Statement::Branch { else_body: Some(_), .. } => C::IfElseBranch,
            Statement::Parallel { kind: ParallelKind::For, .. } => C::ParallelFor,
            Statement::Parallel { kind: ParallelKind::Map, .. } => C::ParallelMap,
            Statement::Call { .. } => C::FunctionCall,
            Statement::Alloc { .. } | Statement::Dealloc { .. } => C::Allocate,
            Statement::Event { .. } => C::Event,
            Statement::Emit { .. } => C::Response,
            Statement::Break => C::Break,
            Statement::Continue => C::Continue,
        })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Statement::OpStep { .. } => "step",
            Statement::Loop { .. } => "loop",
            Statement::Branch { .. } => "branch",
            Statement::Parallel { .. } => "parallel",
            Statement::Call { .. } => "call",
            Statement::Alloc { .. } => "alloc",
            Statement::Dealloc { .. } => "dealloc",
            Statement::Event { .. } => "event",
            Statement::Emit { .. } => "emit",
            Statement::Break => "break",
            Statement::Continue => "continue",
        }
    }

    /// Child blocks with the path segments that address them.
    pub fn blocks(&self) -> Vec<(Vec<String>, &[Statement])> {
        match self {
            Statement::Loop { body, .. } | Statement::Event { body, .. } => vec![(vec!["body".into()], body)],
            Statement::Branch {
                then_body, else_body, ..
            } => {
                let mut v = vec![(vec!["then".to_string()], then_body.as_slice())];
                if let Some(e) = else_body {
                    v.push((vec!["else".into()], e));
                }
                v
            }
            Statement::Parallel { branches, .. } => branches
                .iter()
                .enumerate()
                .map(|(i, b)| (vec!["branch".to_string(), i.to_string()], b.as_slice()))
                .collect(),
            _ => Vec::new(),
        }
    }

    fn blocks_mut(&mut self) -> Vec<(Vec<String>, &mut Vec<Statement>)> {
        match self {
            Statement::Loop { body, .. } | Statement::Event { body, .. } => vec![(vec!["body".into()], body)],
            Statement::Branch {
                then_body, else_body, ..
            } => {
                let mut v = vec![(vec!["then".to_string()], then_body)];
                if let Some(e) = else_body {
                    v.push((vec!["else".into()], e));
                }
                v
            }
            Statement::Parallel { branches, .. } => branches
                .iter_mut()
                .enumerate()
                .map(|(i, b)| (vec!["branch".to_string(), i.to_string()], b))
                .collect(),
            _ => Vec::new(),
        }
    }
}

/// Address of a statement, written like `2/then/0`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path(Vec<String>);

impl Path {
    pub fn root() -> Self {
        Path(Vec::new())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn segments(&self) -> &[String] {
        &self.0
    }

    pub fn child(&self, segs: &[String], index: usize) -> Path {
        let mut v = self.0.clone();
        v.extend(segs.iter().cloned());
        v.push(index.to_string());
        Path(v)
    }

    pub fn index(&self, index: usize) -> Path {
        self.child(&[], index)
    }

    /// Orders paths by document position: numeric segments compare as
    /// numbers.
    pub fn sort_key(&self) -> Vec<(u8, usize, String)> {
        self.0
            .iter()
            .map(|s| match s.parse::<usize>() {
                Ok(n) => (0, n, String::new()),
                Err(_) => (1, 0, s.clone()),
            })
            .collect()
    }
}

impl std::str::FromStr for Path {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(Path(s.split('/').filter(|x| !x.is_empty()).map(str::to_string).collect()))
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("/"))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProtocolProgram {
    pub name: Option<String>,
    pub statements: Vec<Statement>,
}

impl ProtocolProgram {
    pub fn new(statements: Vec<Statement>) -> Self {
        ProtocolProgram { name: None, statements }
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, mut f: impl FnMut(&Path, &'a Statement)) {
        fn go<'a>(block: &'a [Statement], at: &Path, segs: &[String], f: &mut impl FnMut(&Path, &'a Statement)) {
            for (i, s) in block.iter().enumerate() {
                let p = at.child(segs, i);
                f(&p, s);
                for (child_segs, child) in s.blocks() {
                    go(child, &p, &child_segs, f);
                }
            }
        }
        go(&self.statements, &Path::root(), &[], &mut f);
    }

    pub fn get(&self, path: &Path) -> Option<&Statement> {
        let mut block: &[Statement] = &self.statements;
        let mut segs = path.segments().iter().peekable();
        let mut current = None;
        while let Some(seg) = segs.next() {
            if current.is_some() {
                let s: &Statement = current.expect("checked");
                let mut want = vec![seg.clone()];
                if seg == "branch" {
                    want.push(segs.next()?.clone());
                }
                block = s.blocks().into_iter().find(|(k, _)| *k == want)?.1;
                current = None;
                continue;
            }
            let i: usize = seg.parse().ok()?;
            current = Some(block.get(i)?);
        }
        current
    }

    pub fn get_mut(&mut self, path: &Path) -> Option<&mut Statement> {
        let segs = path.segments();
        let (last, rest) = segs.split_last()?;
        let mut block: &mut Vec<Statement> = &mut self.statements;
        let mut i = 0;
        while i < rest.len() {
            let idx: usize = rest[i].parse().ok()?;
            let stmt = block.get_mut(idx)?;
            let mut want = vec![rest.get(i + 1)?.clone()];
            i += 2;
            if want[0] == "branch" {
                want.push(rest.get(i)?.clone());
                i += 1;
            }
            block = stmt.blocks_mut().into_iter().find(|(k, _)| *k == want)?.1;
        }
        block.get_mut(last.parse::<usize>().ok()?)
    }

    pub fn len(&self) -> usize {
        let mut n = 0;
        self.walk(|_, _| n += 1);
        n
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("version".into(), json!(PROGRAM_FORMAT_VERSION));
        if let Some(name) = &self.name {
            obj.insert("name".into(), json!(name));
        }
        obj.insert("program".into(), block_json(&self.statements));
        Value::Object(obj)
    }
}

fn args_json(args: &[Arg]) -> Vec<Value> {
    args.iter().map(|a| json!([a.category, a.value])).collect()
}

fn block_json(block: &[Statement]) -> Value {
    Value::Array(block.iter().map(statement_json).collect())
}

pub fn statement_json(s: &Statement) -> Value {
    match s {
        Statement::OpStep { opcode, args, output } => {
            let mut list = args_json(args);
            if let Some(o) = output {
                list.push(json!(["output", o]));
            }
            json!({ opcode.clone(): list })
        }
        Statement::Loop {
            kind,
            bound,
            condition,
            body,
        } => json!({"loop": {
            "kind": match kind { LoopKind::For => "for", LoopKind::While => "while" },
            "bound": bound,
            "condition": condition,
            "body": block_json(body),
        }}),
        Statement::Branch {
            condition,
            then_body,
            else_body,
        } => {
            let mut inner = Map::new();
            inner.insert("condition".into(), json!(condition));
            inner.insert("then".into(), block_json(then_body));
            if let Some(e) = else_body {
                inner.insert("else".into(), block_json(e));
            }
            json!({ "branch": inner })
        }
        Statement::Parallel { kind, branches } => json!({"parallel": {
            "kind": match kind { ParallelKind::For => "for", ParallelKind::Map => "map" },
            "branches": branches.iter().map(|b| block_json(b)).collect::<Vec<_>>(),
        }}),
        Statement::Call { name, args } => json!({"call": {"name": name, "args": args_json(args)}}),
        Statement::Alloc { ty, name } => json!({"alloc": {"type": ty, "name": name}}),
        Statement::Dealloc { name } => json!({"dealloc": {"name": name}}),
        Statement::Event { on, body } => json!({"event": {"on": on, "body": block_json(body)}}),
        Statement::Emit { event } => json!({"emit": {"event": event}}),
        Statement::Break => json!({"break": {}}),
        Statement::Continue => json!({"continue": {}}),
    }
}

/// Parses one step object or a versioned program object.
pub fn parse_program_text(text: &str) -> Result<ProtocolProgram, ProgramError> {
    let trimmed = text.trim_start();
    if !trimmed.starts_with('{') && looks_like_showcase(trimmed) {
        return parse_showcase(text);
    }
    let lit = literal::parse(text)?;
    program_from_literal(&lit)
}

pub fn program_from_literal(lit: &Literal) -> Result<ProtocolProgram, ProgramError> {
    let root = Path::root();
    let dict = lit.as_dict().ok_or_else(|| shape(&root, "expected an object"))?;
    if dict.is_empty() {
        return Err(ProgramError::NoOpcode);
    }
    if let Some(body) = lit.get("program") {
        if let Some(v) = lit.get("version") {
            match v {
                Literal::Number(n) if *n == PROGRAM_FORMAT_VERSION as f64 => {}
                Literal::Number(n) if n.fract() == 0.0 && *n >= 0.0 => return Err(ProgramError::Version(*n as u64)),
                _ => return Err(shape(&root, "version must be an integer")),
            }
        }
        for (k, _) in dict {
            if !matches!(k.as_str(), Some("program" | "version" | "name")) {
                return Err(shape(&root, format!("unknown program field {:?}", k.text())));
            }
        }
        let name = lit.get("name").and_then(Literal::text);
        let statements = parse_block(body, &root, &[])?;
        return Ok(ProtocolProgram { name, statements });
    }
    Ok(ProtocolProgram::new(vec![parse_statement(lit, &root.index(0))?]))
}

fn parse_block(lit: &Literal, parent: &Path, segs: &[String]) -> Result<Vec<Statement>, ProgramError> {
    let items = lit.as_list().ok_or_else(|| shape(parent, "expected a list of statements"))?;
    items
        .iter()
        .enumerate()
        .map(|(i, s)| parse_statement(s, &parent.child(segs, i)))
        .collect()
}

fn field<'a>(inner: &'a Literal, key: &str, at: &Path) -> Result<&'a Literal, ProgramError> {
    inner.get(key).ok_or_else(|| shape(at, format!("missing field '{key}'")))
}

fn text_field(inner: &Literal, key: &str, at: &Path) -> Result<String, ProgramError> {
    field(inner, key, at)?
        .text()
        .ok_or_else(|| shape(at, format!("field '{key}' must not be None")))
}

fn parse_args(lit: &Literal, at: &Path) -> Result<(Vec<Arg>, Option<String>), ProgramError> {
    let items = lit.as_list().ok_or_else(|| shape(at, "arguments must be a list"))?;
    let mut args = Vec::new();
    let mut output = None;
    for (i, item) in items.iter().enumerate() {
        let pair = item
            .as_list()
            .filter(|p| p.len() == 2)
            .ok_or_else(|| shape(at, format!("argument {i} is not a [category, value] pair")))?;
        let category = pair[0]
            .as_str()
            .ok_or_else(|| shape(at, format!("argument {i} has a non-string category")))?;
        if category.eq_ignore_ascii_case("output") {
            output = pair[1].text();
            continue;
        }
        args.push(Arg {
            category: category.to_string(),
            value: pair[1].text(),
        });
    }
    Ok((args, output))
}

fn parse_statement(lit: &Literal, at: &Path) -> Result<Statement, ProgramError> {
    let dict = lit.as_dict().ok_or_else(|| shape(at, "statement must be an object"))?;
    let (key, inner) = match dict {
        [] => return Err(ProgramError::NoOpcode),
        [(k, v)] => (k.as_str().ok_or_else(|| shape(at, "statement key must be a string"))?, v),
        _ => return Err(shape(at, "statement object must have exactly one key")),
    };
    let seg = |s: &str| vec![s.to_string()];
    Ok(match key {
        "loop" => {
            let kind = match text_field(inner, "kind", at)?.as_str() {
                "for" => LoopKind::For,
                "while" => LoopKind::While,
                other => return Err(shape(at, format!("unknown loop kind '{other}'"))),
            };
            let bound = match inner.get("bound") {
                None | Some(Literal::None) => None,
                Some(Literal::Number(n)) if n.fract() == 0.0 && *n >= 0.0 => Some(*n as u64),
                Some(_) => return Err(shape(at, "loop bound must be a non-negative integer")),
            };
            Statement::Loop {
                kind,
                bound,
                condition: inner.get("condition").and_then(Literal::text),
                body: parse_block(field(inner, "body", at)?, at, &seg("body"))?,
            }
        }
        "branch" => Statement::Branch {
            condition: text_field(inner, "condition", at)?,
            then_body: parse_block(field(inner, "then", at)?, at, &seg("then"))?,
            else_body: match inner.get("else") {
                None | Some(Literal::None) => None,
                Some(e) => Some(parse_block(e, at, &seg("else"))?),
            },
        },
        "parallel" => {
            let kind = match text_field(inner, "kind", at)?.as_str() {
                "for" => ParallelKind::For,
                "map" => ParallelKind::Map,
                other => return Err(shape(at, format!("unknown parallel kind '{other}'"))),
            };
            let list = field(inner, "branches", at)?
                .as_list()
                .ok_or_else(|| shape(at, "branches must be a list"))?;
            let branches = list
                .iter()
                .enumerate()
                .map(|(i, b)| parse_block(b, at, &["branch".to_string(), i.to_string()]))
                .collect::<Result<_, _>>()?;
            Statement::Parallel { kind, branches }
        }
        "call" => Statement::Call {
            name: text_field(inner, "name", at)?,
            args: match inner.get("args") {
                None => Vec::new(),
                Some(a) => parse_args(a, at)?.0,
            },
        },
        "alloc" => Statement::Alloc {
            ty: text_field(inner, "type", at)?,
            name: text_field(inner, "name", at)?,
        },
        "dealloc" => Statement::Dealloc {
            name: text_field(inner, "name", at)?,
        },
        "event" => Statement::Event {
            on: text_field(inner, "on", at)?,
            body: parse_block(field(inner, "body", at)?, at, &seg("body"))?,
        },
        "emit" => Statement::Emit {
            event: text_field(inner, "event", at)?,
        },
        "break" => Statement::Break,
        "continue" => Statement::Continue,
        opcode => {
            if opcode.trim().is_empty() {
                return Err(ProgramError::NoOpcode);
            }
            let (args, output) = parse_args(inner, at)?;
            Statement::OpStep {
                opcode: opcode.to_string(),
                args,
                output,
            }
        }
    })
}

fn looks_like_showcase(text: &str) -> bool {
    let head = text.split(':').next().unwrap_or("");
    !head.is_empty() && head.chars().all(|c| c.is_ascii_uppercase() || c == '_' || c == '-')
}

/// Parses the table notation, one step per line:
/// `SPIN: [[Force: 3000g], [Time: 10min]] -> centrifuged sample`.
pub fn parse_showcase(text: &str) -> Result<ProtocolProgram, ProgramError> {
    let mut statements = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: &str| ProgramError::Showcase {
            line: n + 1,
            message: message.to_string(),
        };
        let (opcode, rest) = line.split_once(':').ok_or_else(|| err("expected 'OPCODE: [...]'"))?;
        let (args_part, output) = match rest.rsplit_once("->") {
            Some((a, o)) => (a.trim(), Some(o.trim()).filter(|o| !o.is_empty()).map(str::to_string)),
            None => (rest.trim(), None),
        };
        let inner = args_part
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| err("arguments must be enclosed in [ ]"))?
            .trim();
        let mut args = Vec::new();
        for piece in inner.split(']').map(|p| p.trim().trim_start_matches(',').trim()) {
            if piece.is_empty() {
                continue;
            }
            let body = piece.strip_prefix('[').ok_or_else(|| err("argument must start with '['"))?;
            let (cat, val) = body.split_once(':').ok_or_else(|| err("argument must be 'Category: value'"))?;
            let val = val.trim().trim_matches(|c| c == '"' || c == '\'');
            args.push(Arg {
                category: cat.trim().to_string(),
                value: (val != "None").then(|| val.to_string()),
            });
        }
        statements.push(Statement::OpStep {
            opcode: opcode.trim().to_string(),
            args,
            output,
        });
    }
    if statements.is_empty() {
        return Err(ProgramError::NoOpcode);
    }
    Ok(ProtocolProgram::new(statements))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step() {
        let p = parse_program_text(
            r#"{"GROW": [["REG","GFP-fusion"],["REG","solid media"],["Device","spinning disk confocal microscope"],["output","Z-stack images"]]}"#,
        )
        .unwrap();
        match &p.statements[..] {
            [Statement::OpStep { opcode, args, output }] => {
                assert_eq!(opcode, "GROW");
                assert_eq!(args.len(), 3);
                assert_eq!(output.as_deref(), Some("Z-stack images"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_object_and_none() {
        assert!(matches!(parse_program_text("{}"), Err(ProgramError::NoOpcode)));
        let p = parse_program_text("{'ADD': [['Volume', None]]}").unwrap();
        assert_eq!(p.statements[0], Statement::step("ADD", &[("Volume", None)], None));
        assert!(matches!(parse_program_text("{'A': []} {'B': []}"), Err(ProgramError::Syntax(_))));
    }

    #[test]
    fn nested_paths_and_round_trip() {
        let text = r#"{"version": 1, "program": [
            {"MIX": [["REG", "buffer"]]},
            {"loop": {"kind": "while", "condition": "band is faint", "body": [
                {"PCR": [["Temperature", "60°C"]]},
                {"branch": {"condition": "band visible", "then": [{"break": {}}]}}
            ]}},
            {"parallel": {"kind": "for", "branches": [[{"SPIN": []}], [{"SPIN": []}, {"WASH": []}]]}}
        ]}"#;
        let p = parse_program_text(text).unwrap();
        let mut paths = Vec::new();
        p.walk(|at, _| paths.push(at.to_string()));
        assert_eq!(
            paths,
            ["0", "1", "1/body/0", "1/body/1", "1/body/1/then/0", "2", "2/branch/0/0", "2/branch/1/0", "2/branch/1/1"]
        );
        assert_eq!(p.get(&"1/body/1/then/0".parse().unwrap()), Some(&Statement::Break));
        assert!(matches!(p.get(&"2/branch/1/1".parse().unwrap()), Some(Statement::OpStep { opcode, .. }) if opcode == "WASH"));
        assert!(p.get(&"1/then/0".parse().unwrap()).is_none());
        let back = parse_program_text(&p.to_json().to_string()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn version_and_shape_errors() {
        assert!(matches!(parse_program_text(r#"{"version": 2, "program": []}"#), Err(ProgramError::Version(2))));
        let e = parse_program_text(r#"{"program": [{"loop": {"kind": "until", "body": []}}]}"#).unwrap_err();
        assert!(e.to_string().contains("at 0"), "{e}");
    }

    #[test]
    fn showcase_notation() {
        let p = parse_program_text(
            "SPIN: [[Force: 3000g], [Time: 10min], [Temperature: 4°C], [Container: centrifuge tube]] -> centrifuged sample\n\
             ADD: [[Reg: ammonium acetate buffer], [Volume: None]] -> incubated RNaseT2",
        )
        .unwrap();
        assert_eq!(p.statements.len(), 2);
        assert_eq!(
            p.statements[1],
            Statement::step("ADD", &[("Reg", Some("ammonium acetate buffer")), ("Volume", None)], Some("incubated RNaseT2"))
        );
    }
}

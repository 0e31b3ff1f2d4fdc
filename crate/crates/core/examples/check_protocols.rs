//! Checks programs against a DSL and prints the diagnostics.
//!
//! The three showcase programs check clean against a registry holding
//! their opcodes; a second program trips every kind of finding.

use std::path::Path;

use protodsl::corpus::Domain;
use protodsl::pipeline::{check_programs, load_programs};
use protodsl::synthetic::{fixture_artifact, SHOWCASE_ROWS};
use protodsl::ConstraintId;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

pub fn run_example() -> protodsl::Result<String> {
    let artifact = fixture_artifact(Domain::Genetics, SHOWCASE_ROWS, &[ConstraintId::ForLoop]);
    let dir = Path::new(FIXTURES);

    let showcase = load_programs(&dir.join("showcase/gt.jsonl"))?;
    let clean = check_programs(&artifact, &showcase, 1);
    let mut out = format!("showcase: {} finding(s)\n", clean.findings.len());

    let mixed = load_programs(&dir.join("programs/mixed.json"))?;
    out += &check_programs(&artifact, &mixed, 1).render();
    Ok(out)
}

fn main() -> protodsl::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}

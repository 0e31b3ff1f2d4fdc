//! Generates clean programs for a DSL, injects one error of each kind and
//! shows what the checker reports.

use protodsl::checker::{check, DiagnosticKind};
use protodsl::corpus::Domain;
use protodsl::synthetic::{fixture_artifact, ProgramGenerator};
use protodsl::ConstraintId;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ROWS: &[(&str, &[&str])] = &[
    ("ADD", &["REG", "REG"]),
    ("SPIN", &["Force", "Time", "Temperature", "Container"]),
    ("INCUBATE", &["REG", "Temperature", "Time"]),
    ("COLLECT", &["REG", "Container"]),
];

pub fn run_example() -> protodsl::Result<String> {
    let artifact = fixture_artifact(
        Domain::Genetics,
        ROWS,
        &[ConstraintId::ForLoop, ConstraintId::IfElseBranch, ConstraintId::Allocate],
    );
    let generator = ProgramGenerator::new(&artifact);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let clean = generator.program(&mut rng);
    let mut out = format!(
        "clean program: {} statements, {} findings\n",
        clean.len(),
        check(&clean, &artifact).len()
    );
    for class in [
        DiagnosticKind::ActionUndefinition,
        DiagnosticKind::ParameterOmission,
        DiagnosticKind::ParameterUnderSpecification,
        DiagnosticKind::ConstructNotInDsl,
    ] {
        let Some((bad, at)) = generator.inject(&clean, class, &mut rng) else {
            out += &format!("{class}: no site in this program\n");
            continue;
        };
        out += &format!("{class} injected at {at}\n");
        for d in check(&bad, &artifact) {
            out += &format!("    {d}\n");
        }
    }
    Ok(out)
}

fn main() -> protodsl::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}

//! Compares translated programs with ground truth, order-insensitively.

use std::path::Path;

use protodsl::pipeline::load_programs;
use protodsl::utility::{programs_match, score_utility};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

pub fn run_example() -> protodsl::Result<String> {
    let dir = Path::new(FIXTURES).join("showcase");
    let truth = load_programs(&dir.join("gt.jsonl"))?;
    let mut out = String::new();
    for name in ["dl", "bl"] {
        let predicted = load_programs(&dir.join(format!("{name}.jsonl")))?;
        let score = score_utility(&predicted, &truth)?;
        out += &format!("{name}: {}/{} programs match\n", score.overall.hits, score.overall.total);
        for (p, t) in predicted.iter().zip(&truth) {
            let (ok, names) = programs_match(p, t);
            let accepted = names.iter().filter(|n| n.matched).count();
            out += &format!("  match={ok}, {accepted} of {} name comparisons accepted\n", names.len());
        }
    }
    Ok(out)
}

fn main() -> protodsl::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}

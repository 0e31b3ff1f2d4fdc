//! Replays the committed judge exchanges for the fixture DSL. No network
//! access is attempted; a missing exchange is an error.

use std::path::Path;

use protodsl::corpus::load_corpus;
use protodsl::gateway::{judge_all, judge_questions, Gateway};
use protodsl::pipeline::{design, Config};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

pub fn run_example() -> protodsl::Result<String> {
    let cfg = Config::load(&Path::new(FIXTURES).join("design.toml"))?;
    let (artifact, _, _) = design(&load_corpus(&cfg.corpus)?, &cfg, 1)?;
    let gw = Gateway::replay(Path::new(FIXTURES).join("judge"));
    let summary = judge_all(&artifact, &judge_questions(), &gw, 4)?;

    let mut out = String::new();
    for v in summary.verdicts.iter().take(5) {
        out += &format!("[{}, {}] {}\n", v.opinion, v.confidence, v.question);
    }
    out += &format!(
        "... {} verdicts, mean opinion {:.2}, mean confidence {:.2}\n",
        summary.verdicts.len(),
        summary.mean_opinion,
        summary.mean_confidence
    );
    Ok(out)
}

fn main() -> protodsl::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}

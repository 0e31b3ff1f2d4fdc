//! Records judge exchanges for the fixture DSL so later runs can replay
//! them without a network.
//!
//! ```text
//! cargo run --example record_judge_fixtures -- fixtures/judge           # scripted rater
//! PROTODSL_LLM_URL=... PROTODSL_LLM_KEY=... \
//!     cargo run --example record_judge_fixtures -- fixtures/judge --live  # real endpoint
//! ```
//!
//! The scripted rater derives a rating from the prompt digest. It stands in
//! for a model when none is reachable and keeps the committed fixtures
//! reproducible.

use std::path::Path;

use protodsl::corpus::load_corpus;
use protodsl::gateway::{judge_all, judge_questions, Gateway, GatewayError, JudgeSummary, Mode, Transport, DEFAULT_MODEL};
use protodsl::pipeline::{design, Config};
use sha2::{Digest, Sha256};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

struct ScriptedRater;

impl Transport for ScriptedRater {
    fn send(&self, prompt: &str, _model: &str, _temperature: f64) -> Result<String, GatewayError> {
        let h = Sha256::digest(prompt.as_bytes());
        let opinion = 2 + h[0] % 4;
        let confidence = 3 + h[1] % 3;
        Ok(format!(
            "The registry and grammar were compared with the question.\nRating: [[{opinion}, {confidence}]]"
        ))
    }
}

pub fn record_into(dir: &Path, live: bool) -> protodsl::Result<JudgeSummary> {
    let cfg = Config::load(&Path::new(FIXTURES).join("design.toml"))?;
    let (artifact, _, _) = design(&load_corpus(&cfg.corpus)?, &cfg, 1)?;
    let mut gw = Gateway::new(Mode::Record, dir, DEFAULT_MODEL);
    if !live {
        gw = gw.with_transport(Box::new(ScriptedRater));
    }
    Ok(judge_all(&artifact, &judge_questions(), &gw, 4)?)
}

pub fn run_example() -> protodsl::Result<String> {
    let dir = tempfile::tempdir().map_err(|e| protodsl::Error::io("tempdir", e))?;
    let summary = record_into(dir.path(), false)?;
    let files = std::fs::read_dir(dir.path()).map_err(|e| protodsl::Error::io(dir.path(), e))?.count();
    Ok(format!(
        "recorded {files} exchanges, mean opinion {:.2}, mean confidence {:.2}\n",
        summary.mean_opinion, summary.mean_confidence
    ))
}

fn main() -> protodsl::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.first() {
        Some(dir) => {
            let s = record_into(Path::new(dir), args.iter().any(|a| a == "--live"))?;
            println!("{} verdicts written to {dir}, mean opinion {:.2}", s.verdicts.len(), s.mean_opinion);
        }
        None => print!("{}", run_example()?),
    }
    Ok(())
}

//! Designs a DSL from the Genetics mini corpus and prints what was kept.
//!
//! ```text
//! cargo run --example design_dsl
//! ```

use std::path::Path;

use protodsl::corpus::load_corpus;
use protodsl::pipeline::{design, Config};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

pub fn run_example() -> protodsl::Result<String> {
    let cfg = Config::load(&Path::new(FIXTURES).join("design.toml"))?;
    let protocols = load_corpus(&cfg.corpus)?;
    let (artifact, em, dpmm) = design(&protocols, &cfg, 2)?;

    let mut out = format!(
        "{} protocols, EM converged after {} iterations ({} of {} constructs kept)\n",
        protocols.len(),
        em.iterations,
        em.active_constraints.len(),
        em.k_prime
    );
    for k in &artifact.active_constraints {
        out += &format!("  syntax   {k}\n");
    }
    out += &format!("DPMM stopped after {} sweeps\n", dpmm.sweeps.len());
    for (op, entries) in artifact.registry.entries.iter().take(8) {
        for e in entries {
            out += &format!("  {op:<11} [{}]\n", e.pattern.join(", "));
        }
    }
    out += &format!("checksum {}\n", artifact.checksum());
    Ok(out)
}

fn main() -> protodsl::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}

//! Ontology metrics: a hand-sized mapping, then a designed DSL against
//! expert triplets.

use std::collections::BTreeSet;
use std::path::Path;

use protodsl::corpus::Domain;
use protodsl::ontology::{build_ontology, evaluate, load_triplets, metrics, RelationDictionary};
use protodsl::synthetic::{fixture_artifact, SHOWCASE_ROWS};
use protodsl::LexicalSimilarity;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

pub fn run_example() -> protodsl::Result<String> {
    let ids = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let mapping: BTreeSet<(String, String)> = [("e1", "d1"), ("e2", "d1"), ("e2", "d2")]
        .iter()
        .map(|(e, d)| (e.to_string(), d.to_string()))
        .collect();
    let r = metrics(&mapping, &ids(&["e1", "e2", "e3"]), &ids(&["d1", "d2"]))?;
    let mut out = format!(
        "toy: soundness {:.4} lucidity {:.4} completeness {:.4} laconicity {:.4}\n",
        r.soundness, r.lucidity, r.completeness, r.laconicity
    );

    let triplets = load_triplets(&Path::new(FIXTURES).join("ontology/genetics_triplets.jsonl"))?;
    let graph = build_ontology(triplets, &RelationDictionary::default())?;
    let artifact = fixture_artifact(Domain::Genetics, SHOWCASE_ROWS, &[]);
    let r = evaluate(&graph, &artifact, &LexicalSimilarity::default(), 0.7);
    out += &format!(
        "showcase DSL: soundness {:.4} lucidity {:.4} completeness {:.4} laconicity {:.4}\n",
        r.soundness, r.lucidity, r.completeness, r.laconicity
    );
    for (e, d) in &r.mapping {
        out += &format!("  {e} -> {d}\n");
    }
    Ok(out)
}

fn main() -> protodsl::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}

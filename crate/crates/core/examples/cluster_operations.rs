//! Clusters the operations of a small surgical corpus into opcode patterns.

use std::path::Path;

use protodsl::corpus::load_corpus;
use protodsl::features::Annotator;
use protodsl::semantic::{extract_records, reduce, DpmmConfig};
use protodsl::Lexicons;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

pub fn run_example() -> protodsl::Result<String> {
    let protocols = load_corpus(&Path::new(FIXTURES).join("corpus/medical_transect.jsonl"))?;
    let annotator = Annotator::new(Lexicons::bundled());
    let features: Vec<_> = protocols.iter().map(|p| annotator.annotate_protocol(p)).collect();
    let records = extract_records(&features);
    let (state, registry, trace) = reduce(&records, &DpmmConfig::default())?;

    let mut out = format!(
        "{} records, {} clusters after {} sweeps\n",
        records.len(),
        state.num_clusters(),
        trace.sweeps.len()
    );
    out += &registry.to_json();
    out.push('\n');
    Ok(out)
}

fn main() -> protodsl::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}

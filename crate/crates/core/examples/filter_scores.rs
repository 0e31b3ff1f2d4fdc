//! Scores single sentences with the filter bank.
//!
//! Each sentence is treated as a one-step protocol; only constructs that
//! fire are printed.

use protodsl::features::Annotator;
use protodsl::filters::{score_all, FilterConfig};
use protodsl::{Lexicons, LexicalSimilarity};

const SENTENCES: &[&str] = &[
    "Inoculate 5 ml LB medium containing 100 µg/ml ampicillin with bacteria.",
    "If cells are to be treated with PTX, divide them into two groups: one receives 100 ng/ml PTX.",
    "Iterate different MgCl2 concentrations (1.5mM, 2.0mM, 2.5mM, and 3.0mM) to find the optimal concentration for DNA amplification.",
    "Gently shake the reagent for 5 seconds to mix.",
    "Close the soundproof chamber as instruction manual (see \"https://---\").",
    "Repeat the culture as long as the cells have not reached the harvested density.",
];

pub fn run_example() -> protodsl::Result<String> {
    let annotator = Annotator::new(Lexicons::bundled());
    let sim = LexicalSimilarity::default();
    let cfg = FilterConfig::default();
    let mut out = String::new();
    for s in SENTENCES {
        let scores = score_all(&annotator.annotate_text(s), &cfg, &sim);
        let fired: Vec<_> = scores
            .iter()
            .filter(|(k, &v)| v > 0.0 && !k.is_constant())
            .map(|(k, _)| k.name())
            .collect();
        out += &format!("{s}\n    {}\n", fired.join(", "));
    }
    Ok(out)
}

fn main() -> protodsl::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}

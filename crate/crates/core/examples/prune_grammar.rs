//! Prunes the prior grammar and shows which constructs survive.

use std::collections::BTreeSet;

use protodsl::grammar::dependency_closure;
use protodsl::{ConstraintId, Grammar};

pub fn run_example() -> protodsl::Result<String> {
    let prior = Grammar::load_prior();
    let inactive: BTreeSet<ConstraintId> = [
        ConstraintId::WhileLoop,
        ConstraintId::SpawnProcess,
        ConstraintId::Event,
        ConstraintId::Continue,
    ]
    .into();
    let pruned = prior.prune(&inactive)?;

    let mut out = format!(
        "prior: {} productions, {} nonterminals\n",
        prior.productions().len(),
        prior.nonterminals().len()
    );
    out += &format!(
        "pruned: {} productions, {} nonterminals, well-formed={}\n",
        pruned.productions().len(),
        pruned.nonterminals().len(),
        pruned.is_well_formed()
    );
    let lost: Vec<_> = dependency_closure(&inactive).into_iter().map(ConstraintId::name).collect();
    out += &format!("removed with dependents: {}\n", lost.join(", "));
    out += &format!("break still accepted: {}\n", pruned.accepts_construct(ConstraintId::Break));
    out += "\nloop productions left:\n";
    for p in pruned.alternatives("loop-statement") {
        out += &format!("  {}\n", p.render());
    }
    Ok(out)
}

fn main() -> protodsl::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}

//! Every runnable example, executed as a test.

#![allow(dead_code)]

#[path = "../examples/design_dsl.rs"]
mod design_dsl;
#[path = "../examples/check_protocols.rs"]
mod check_protocols;
#[path = "../examples/filter_scores.rs"]
mod filter_scores;
#[path = "../examples/prune_grammar.rs"]
mod prune_grammar;
#[path = "../examples/cluster_operations.rs"]
mod cluster_operations;
#[path = "../examples/ontology_metrics.rs"]
mod ontology_metrics;
#[path = "../examples/utility_scoring.rs"]
mod utility_scoring;
#[path = "../examples/replay_judge.rs"]
mod replay_judge;
#[path = "../examples/record_judge_fixtures.rs"]
mod record_judge_fixtures;
#[path = "../examples/inject_errors.rs"]
mod inject_errors;

#[test]
fn design_dsl_runs() {
    let out = design_dsl::run_example().unwrap();
    assert!(out.starts_with("22 protocols"), "{out}");
    assert!(out.contains("syntax   for-loop"));
}

#[test]
fn check_protocols_reports_each_kind() {
    let out = check_protocols::run_example().unwrap();
    assert!(out.starts_with("showcase: 0 finding(s)"));
    for kind in ["ActionUndefinition", "ParameterOmission", "ParameterUnderSpecification", "ConstructNotInDsl"] {
        assert!(out.contains(kind), "{kind} missing from\n{out}");
    }
}

#[test]
fn filter_scores_runs() {
    let out = filter_scores::run_example().unwrap();
    assert!(out.contains("parallel-for"));
    assert!(out.contains("string-type-declaration"));
}

#[test]
fn prune_grammar_drops_break_with_while() {
    let out = prune_grammar::run_example().unwrap();
    assert!(out.contains("well-formed=true"));
    assert!(out.contains("break still accepted: false"));
    assert!(!out.contains("\"While\""));
}

#[test]
fn cluster_operations_finds_transect_patterns() {
    let out = cluster_operations::run_example().unwrap();
    assert!(out.contains("\"TRANSECT\""));
    assert!(out.starts_with("12 records"));
}

#[test]
fn ontology_metrics_toy_values() {
    let out = ontology_metrics::run_example().unwrap();
    assert!(out.contains("toy: soundness 0.6667 lucidity 0.3333 completeness 1.0000 laconicity 0.5000"));
}

#[test]
fn utility_scoring_accepts_permutation() {
    let out = utility_scoring::run_example().unwrap();
    assert!(out.contains("dl: 3/3 programs match"));
    assert!(out.contains("bl: 0/3 programs match"));
}

#[test]
fn replay_judge_runs_offline() {
    let out = replay_judge::run_example().unwrap();
    assert!(out.contains("50 verdicts"), "{out}");
}

#[test]
fn record_judge_fixtures_into_tempdir() {
    let out = record_judge_fixtures::run_example().unwrap();
    assert!(out.starts_with("recorded 50 exchanges"), "{out}");
}

#[test]
fn inject_errors_runs() {
    let out = inject_errors::run_example().unwrap();
    assert!(out.contains("0 findings"));
}

//! Operation patterns and their reduction into a semantic registry.
//!
//! Verb-initial sentences become [`OperationRecord`]s, records become binary
//! vectors, a Dirichlet-process mixture groups the vectors, and each cluster
//! contributes its modal pattern to the [`SemanticRegistry`].

mod dpmm;
mod records;
mod registry;
mod vectorize;

pub use dpmm::{
    adjusted_rand_index, crp_prior, run_dpmm, Cluster, DpmmConfig, DpmmError, DpmmSampler, DpmmState, DpmmTrace,
    SweepStats,
};
pub use records::{canonical_category, extract_records, render_annotated, OperationRecord, QUANTITATIVE_CATEGORIES};
pub use registry::{build_registry, PatternEntry, SemanticRegistry, MAX_EXAMPLES};
pub use vectorize::{vectorize, FeatureVector, Vocabulary};

use crate::error::Result;

/// Records to registry in one call.
pub fn reduce(records: &[OperationRecord], cfg: &DpmmConfig) -> Result<(DpmmState, SemanticRegistry, DpmmTrace)> {
    let (xs, _) = vectorize(records);
    let (state, trace) = run_dpmm(&xs, cfg)?;
    let registry = build_registry(records, &state.assignments);
    Ok((state, registry, trace))
}

//! Automatic design of domain-specific languages for experimental protocols.
//!
//! A corpus of natural-language protocols is sliced and annotated, a bank of
//! rule-based filters scores every candidate syntactic construct, and an EM
//! loop prunes a general-purpose context-free grammar down to the constructs
//! the corpus actually needs. Verb-initial sentences are turned into
//! operation patterns and clustered with a Dirichlet-process mixture to form
//! the semantic registry. The pair (pruned grammar, registry) is a
//! [`DslArtifact`], which the [`checker`] then uses to validate new protocol
//! programs.
//!
//! The [`pipeline`] module strings the stages together; the `examples/`
//! directory has one runnable program per capability.

pub mod artifact;
pub mod checker;
pub mod corpus;
pub mod em;
pub mod features;
pub mod filters;
pub mod gateway;
pub mod grammar;
pub mod lexicon;
pub mod literal;
pub mod ontology;
pub mod pipeline;
pub mod program;
pub mod semantic;
pub mod similarity;
pub mod synthetic;
pub mod tagger;
pub mod utility;

mod error;

pub use corpus::{Domain, Protocol, Step};
pub use error::{Error, Result};
pub use filters::ConstraintId;
pub use grammar::Grammar;
pub use artifact::DslArtifact;
pub use lexicon::Lexicons;
pub use program::ProtocolProgram;
pub use semantic::SemanticRegistry;
pub use similarity::{LexicalSimilarity, SimilarityProvider};

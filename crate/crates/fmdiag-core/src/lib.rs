//! Debugging of feature models against test cases.
//!
//! A feature model is compiled into a labeled propositional constraint set
//! ([`encode`]). Positive test cases state behavior the model must admit,
//! negative ones behavior it must forbid. When tests fail, a debugging
//! session ([`preprocess`]) filters them against the background knowledge
//! and [`DebugSession::diagnose`] computes a minimal set of constraints
//! whose removal restores consistency, by divide-and-conquer over the
//! consideration set.
//!
//! The crate is `no_std` (alloc required); file IO, the CLI, and the
//! benchmark harness live in the companion `fmdiag` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod diagnosis;
pub mod encode;
pub mod model;
pub mod parse;
pub mod sat;
pub mod synth;

pub use analysis::{analyze, generate_tests, AnalysisReport, TestKind};
pub use diagnosis::{preprocess, DebugError, DebugSession, DiagnosisResult, TraceNode};
pub use encode::{
    encode, encode_formula, AuxAllocator, ConstraintSet, LabeledConstraint, Provenance, VarTable,
};
pub use model::{
    CrossTreeConstraint, CtcKind, FeatureModel, Formula, ModelError, Polarity, Relationship,
    RelationshipKind, TestCase, TestSuite,
};
pub use parse::{parse_expression, parse_model, parse_test_suite, ParseError, ParseErrorKind};
pub use sat::{Clause, ClauseDb, Lit, SatResult, Solver};
pub use synth::{derive_seed, synth_model, synth_tests, SynthError, SynthParams};

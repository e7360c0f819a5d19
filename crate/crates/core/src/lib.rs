//! Rewriting conjunctive queries over views while keeping their structure.
//!
//! The crate decides whether a conjunctive query has an exact rewriting over
//! a set of views and, if it does, builds one that stays in the query's class
//! (acyclic, free-connex acyclic, hierarchical or q-hierarchical). Every
//! produced rewriting is checked by expanding it and testing equivalence.

pub mod evaluation;
pub mod homomorphism;
mod matching;
pub mod model;
pub mod rewriting;
pub mod structure;
pub mod text;

#[cfg(any(test, feature = "testing"))]
pub mod testing;

pub use model::{
    Atom, ConjunctiveQuery, Const, Database, Fact, Rel, Schema, Substitution, Var, View, ViewSet,
};

//! Cover partitions and the class-preserving rewriting pipeline.

mod cover;
mod pipeline;
mod split;
mod views;

use thiserror::Error;

use crate::evaluation::EvalError;
use crate::homomorphism::HomError;
use crate::model::{Atom, ModelError, Rel};

pub use cover::{
    bridge_vars, extract_cover_partition, induced_expansion, induced_rewriting, is_consistent,
    make_consistent, validate_cover_description, validate_cover_partition, CoverDescription,
    CoverPartition, CoverViolation, PartitionViolation,
};
pub use pipeline::{
    acyclic_rewriting, hierarchical_rewriting, rewrite, verify_rewriting, NoneReason, Options,
    RewriteReport, SplitPolicy, Target, Verification,
};
pub use split::{hierarchical_split, split_connected, split_free_connex, split_hierarchical};
pub use views::{split_views_bounded, translate_rewriting_back, Fragment, SplitMode, SplitViews};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error("query is not {target} (its core is not in the requested class)")]
    ClassMismatch { target: Target },
    #[error("query is not acyclic")]
    NotAcyclic,
    #[error("query is not hierarchical")]
    NotHierarchical,
    #[error("view {view} is not free-connex acyclic")]
    NotFreeConnex { view: Rel },
    #[error("{atom} is not a body atom of the query")]
    NotASubset { atom: Atom },
    #[error("the given query is not a rewriting")]
    NotARewriting,
    #[error("the query is not minimal")]
    NotMinimal,
    #[error("the cover partition is not consistent")]
    Inconsistent,
    #[error("unknown split view {name}")]
    UnknownSplitView { name: Rel },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Hom(#[from] HomError),
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<ModelError> for RewriteError {
    fn from(e: ModelError) -> Self {
        RewriteError::Eval(EvalError::Model(e))
    }
}

impl RewriteError {
    pub fn code(&self) -> &'static str {
        match self {
            RewriteError::ClassMismatch { .. } => "CLASS_MISMATCH",
            RewriteError::NotAcyclic => "NOT_ACYCLIC",
            RewriteError::NotHierarchical => "NOT_HIERARCHICAL",
            RewriteError::NotFreeConnex { .. } => "NOT_FREE_CONNEX",
            RewriteError::NotASubset { .. } => "NOT_A_SUBSET",
            RewriteError::NotARewriting => "NOT_A_REWRITING",
            RewriteError::NotMinimal => "NOT_MINIMAL",
            RewriteError::Inconsistent => "INCONSISTENT",
            RewriteError::UnknownSplitView { .. } => "UNKNOWN_SPLIT_VIEW",
            RewriteError::Eval(e) => e.code(),
            RewriteError::Hom(HomError::ArityMismatch { .. }) => "ARITY_MISMATCH",
            RewriteError::Hom(_) => "NOT_A_REWRITING",
            RewriteError::Internal(_) => "INTERNAL",
        }
    }
}

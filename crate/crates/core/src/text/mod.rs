//! The line-oriented rule format, database files and JSON result envelopes.
//!
//! ```text
//! # comments run to the end of the line
//! query H(x,y) :- R(x,z), S(z,y).
//! view V1(a,b) :- R(a,b).
//! ```
//!
//! Rule arguments are always variables. Database files hold facts such as
//! `R(a, b).` whose arguments are constants, bare or quoted.

pub mod json;
mod parse;
mod serialize;

use std::fmt;

use thiserror::Error;

use crate::model::{ConjunctiveQuery, ModelError, Schema, ViewSet};

pub use parse::{parse_database, parse_problem, parse_query};
pub use serialize::{format_constant, serialize_database, serialize_problem, serialize_query};

/// A query together with the views to rewrite it over.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemFile {
    /// Arity of every relation symbol in the file, view heads included.
    pub schema: Schema,
    pub query: ConjunctiveQuery,
    pub views: ViewSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TextErrorKind {
    Syntax(String),
    ArityConflict {
        relation: String,
        expected: usize,
        found: usize,
    },
    DuplicateView {
        name: String,
    },
    DuplicateQuery,
    MissingQuery,
    UnknownRelation {
        relation: String,
    },
    Model(ModelError),
}

/// A parse failure at a 1-based line and column.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct TextError {
    pub kind: TextErrorKind,
    pub line: usize,
    pub column: usize,
}

impl TextError {
    pub(crate) fn new(kind: TextErrorKind, line: usize, column: usize) -> Self {
        TextError { kind, line, column }
    }

    pub(crate) fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        TextError::new(TextErrorKind::Syntax(message.into()), line, column)
    }

    pub fn code(&self) -> &'static str {
        match &self.kind {
            TextErrorKind::Syntax(_) => "SYNTAX_ERROR",
            TextErrorKind::ArityConflict { .. } => "ARITY_CONFLICT",
            TextErrorKind::DuplicateView { .. } => "DUPLICATE_VIEW",
            TextErrorKind::DuplicateQuery => "DUPLICATE_QUERY",
            TextErrorKind::MissingQuery => "MISSING_QUERY",
            TextErrorKind::UnknownRelation { .. } => "UNKNOWN_RELATION",
            TextErrorKind::Model(e) => e.code(),
        }
    }
}

impl fmt::Display for TextError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: ", self.line, self.column)?;
        match &self.kind {
            TextErrorKind::Syntax(message) => write!(f, "{message}"),
            TextErrorKind::ArityConflict {
                relation,
                expected,
                found,
            } => write!(
                f,
                "{relation} used with arity {found}, earlier with arity {expected}"
            ),
            TextErrorKind::DuplicateView { name } => write!(f, "view {name} is defined twice"),
            TextErrorKind::DuplicateQuery => write!(f, "more than one query rule"),
            TextErrorKind::MissingQuery => write!(f, "no query rule"),
            TextErrorKind::UnknownRelation { relation } => write!(f, "unknown relation {relation}"),
            TextErrorKind::Model(e) => write!(f, "{e}"),
        }
    }
}

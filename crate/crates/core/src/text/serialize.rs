use std::fmt::Write;

use crate::model::{ConjunctiveQuery, Const, Database};

use super::ProblemFile;

/// `H(x,y) :- R(x,z), S(z,y).` with the body in canonical atom order.
pub fn serialize_query(q: &ConjunctiveQuery) -> String {
    q.to_string()
}

pub fn serialize_problem(p: &ProblemFile) -> String {
    let mut out = format!("query {}\n", serialize_query(&p.query));
    for view in p.views.views() {
        let _ = writeln!(out, "view {}", serialize_query(view.query()));
    }
    out
}

/// Bare when the constant is a plain identifier, double-quoted otherwise.
pub fn format_constant(c: &Const) -> String {
    let s = c.as_str();
    let bare = s
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'');
    if bare {
        s.to_string()
    } else {
        let escaped = s.replace('\\', "\\\\").replace('"', "\\\"");
        format!("\"{escaped}\"")
    }
}

/// One fact per line, in canonical order.
pub fn serialize_database(d: &Database) -> String {
    let mut out = String::new();
    for fact in d.facts() {
        let args: Vec<String> = fact.args.iter().map(format_constant).collect();
        let _ = writeln!(out, "{}({}).", fact.relation, args.join(","));
    }
    out
}

use std::fmt::Write;
use std::fs;
use std::path::Path;

use cqrewrite::evaluation::evaluate;
use cqrewrite::homomorphism::{core, Homomorphism};
use cqrewrite::rewriting::{
    rewrite as run_rewrite, split_views_bounded, verify_rewriting, Options, RewriteError,
    SplitMode, SplitPolicy, Target,
};
use cqrewrite::structure::ClassReport;
use cqrewrite::text::json::{
    back_map_json, partition_json, ClassJson, ErrorJson, HomomorphismsJson, RewriteJson,
};
use cqrewrite::text::{
    parse_database, parse_problem, parse_query, serialize_database, ProblemFile,
};
use cqrewrite::{ConjunctiveQuery, Database, Rel};
use serde_json::{json, Value};

pub const OK: u8 = 0;
pub const ABSENT: u8 = 1;
pub const INPUT_ERROR: u8 = 2;
pub const LIMIT: u8 = 3;
pub const CLASS_MISMATCH: u8 = 4;

/// What a command prints in either format, and its exit code.
pub struct Outcome {
    pub code: u8,
    pub text: String,
    pub json: Value,
}

impl Outcome {
    fn ok(code: u8, text: String, json: Value) -> Self {
        Outcome { code, text, json }
    }

    pub fn error(code: &str, message: String) -> Self {
        let exit = match code {
            "SIZE_LIMIT_EXCEEDED" => LIMIT,
            "CLASS_MISMATCH" => CLASS_MISMATCH,
            _ => INPUT_ERROR,
        };
        Outcome {
            code: exit,
            text: format!("error[{code}]: {message}\n"),
            json: serde_json::to_value(ErrorJson::new(code, message)).expect("serializable"),
        }
    }

    fn rewrite_error(e: RewriteError) -> Self {
        Outcome::error(e.code(), e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Outcome> {
    fs::read_to_string(path)
        .map_err(|e| Outcome::error("IO_ERROR", format!("{}: {e}", path.display())))
}

fn load_problem(path: &Path) -> Result<ProblemFile, Outcome> {
    let text = read(path)?;
    parse_problem(&text).map_err(|e| Outcome::error(e.code(), format!("{}:{e}", path.display())))
}

fn load_rule(path: &Path) -> Result<ConjunctiveQuery, Outcome> {
    let text = read(path)?;
    parse_query(&text).map_err(|e| Outcome::error(e.code(), format!("{}:{e}", path.display())))
}

fn load_database(path: &Path, p: &ProblemFile) -> Result<Database, Outcome> {
    let text = read(path)?;
    parse_database(&text, &p.schema)
        .map_err(|e| Outcome::error(e.code(), format!("{}:{e}", path.display())))
}

fn class_lines(out: &mut String, c: &ClassReport) {
    let _ = writeln!(out, "  acyclic          {}", c.acyclic);
    let _ = writeln!(out, "  free-connex      {}", c.free_connex);
    let _ = writeln!(out, "  hierarchical     {}", c.hierarchical);
    let _ = writeln!(out, "  q-hierarchical   {}", c.q_hierarchical);
    let _ = writeln!(out, "  weak head arity  {}", c.weak_head_arity);
}

fn mapping_line(h: &Option<Homomorphism>) -> String {
    match h {
        None => "none".into(),
        Some(h) => {
            let pairs: Vec<String> = h.mapping.iter().map(|(k, v)| format!("{k}->{v}")).collect();
            format!("{{{}}}", pairs.join(", "))
        }
    }
}

pub fn classify(path: &Path) -> Outcome {
    let p = match load_problem(path) {
        Ok(p) => p,
        Err(e) => return e,
    };
    let mut text = String::new();
    let qc = ClassReport::of(&p.query);
    let _ = writeln!(text, "query {}", p.query);
    class_lines(&mut text, &qc);
    let mut views = Vec::new();
    for v in p.views.views() {
        let c = ClassReport::of(v.query());
        let _ = writeln!(text, "view {}", v.query());
        class_lines(&mut text, &c);
        views.push(json!({
            "name": v.name().to_string(),
            "rule": v.query().to_string(),
            "class": ClassJson::from(&c),
        }));
    }
    let json = json!({
        "status": "OK",
        "query": { "rule": p.query.to_string(), "class": ClassJson::from(&qc) },
        "views": views,
    });
    Outcome::ok(OK, text, json)
}

pub fn minimize(path: &Path) -> Outcome {
    let p = match load_problem(path) {
        Ok(p) => p,
        Err(e) => return e,
    };
    let c = core(&p.query);
    let removed: Vec<String> = p
        .query
        .body()
        .iter()
        .filter(|a| !c.body().contains(*a))
        .map(ToString::to_string)
        .collect();
    let json = json!({
        "status": "OK",
        "query": p.query.to_string(),
        "core": c.to_string(),
        "removed": removed,
    });
    Outcome::ok(OK, format!("{c}\n"), json)
}

pub fn rewrite(path: &Path, target: Target, limit: usize, split: SplitPolicy) -> Outcome {
    let p = match load_problem(path) {
        Ok(p) => p,
        Err(e) => return e,
    };
    let options = Options {
        target,
        limit,
        split,
    };
    let report = match run_rewrite(&p.query, &p.views, &options) {
        Ok(r) => r,
        Err(e) => return Outcome::rewrite_error(e),
    };
    let json = serde_json::to_value(RewriteJson::from(&report)).expect("serializable");
    let mut text = String::new();
    let _ = writeln!(text, "target: {target}");
    let _ = writeln!(text, "core: {}", report.query_core);
    if let Some(c) = &report.candidate {
        let _ = writeln!(text, "candidate: {c}");
    }
    match (&report.rewriting, report.none_reason) {
        (Some(r), _) => {
            let _ = writeln!(text, "status: OK");
            let _ = writeln!(text, "rewriting: {r}");
            if let Some(v) = &report.verification {
                let _ = writeln!(text, "expansion: {}", v.expansion.query);
            }
            if let Some(cp) = &report.witness {
                for d in partition_json(cp) {
                    let _ = writeln!(text, "  {} covers {}", d.view, d.atoms.join(", "));
                }
            }
            Outcome::ok(OK, text, json)
        }
        (None, reason) => {
            let _ = writeln!(text, "status: NONE");
            if let Some(reason) = reason {
                let _ = writeln!(text, "reason: {}", reason.code());
            }
            Outcome::ok(ABSENT, text, json)
        }
    }
}

pub fn verify(path: &Path, rewriting: &Path) -> Outcome {
    let (p, r) = match (load_problem(path), load_rule(rewriting)) {
        (Ok(p), Ok(r)) => (p, r),
        (Err(e), _) | (_, Err(e)) => return e,
    };
    let v = match verify_rewriting(&p.query, &p.views, &r) {
        Ok(v) => v,
        Err(e) => return Outcome::rewrite_error(e),
    };
    let status = if v.holds() { "OK" } else { "FAIL" };
    let mut text = String::new();
    let _ = writeln!(text, "{status}");
    let _ = writeln!(text, "expansion: {}", v.expansion.query);
    let _ = writeln!(
        text,
        "query into expansion: {}",
        mapping_line(&v.into_expansion)
    );
    let _ = writeln!(
        text,
        "expansion into query: {}",
        mapping_line(&v.from_expansion)
    );
    let json = json!({
        "status": status,
        "rewriting": r.to_string(),
        "expansion": v.expansion.query.to_string(),
        "homomorphisms": HomomorphismsJson::from(&v),
    });
    Outcome::ok(if v.holds() { OK } else { ABSENT }, text, json)
}

pub fn eval(path: &Path, database: &Path, view: Option<&str>) -> Outcome {
    let p = match load_problem(path) {
        Ok(p) => p,
        Err(e) => return e,
    };
    let d = match load_database(database, &p) {
        Ok(d) => d,
        Err(e) => return e,
    };
    let q = match view {
        None => &p.query,
        Some(name) => match p.views.get(&Rel::new(name)) {
            Some(v) => v.query(),
            None => return Outcome::error("UNKNOWN_VIEW", format!("no view named {name}")),
        },
    };
    let answers: Database = evaluate(q, &d).into_iter().collect();
    let text = serialize_database(&answers);
    let json = json!({
        "status": "OK",
        "relation": q.head().relation.to_string(),
        "facts": text.lines().collect::<Vec<_>>(),
    });
    Outcome::ok(OK, text, json)
}

pub fn split_views(path: &Path, mode: SplitMode) -> Outcome {
    let p = match load_problem(path) {
        Ok(p) => p,
        Err(e) => return e,
    };
    let split = match split_views_bounded(&p.views, mode) {
        Ok(s) => s,
        Err(e) => return Outcome::rewrite_error(e),
    };
    let mut text = String::new();
    for v in split.views.views() {
        let _ = writeln!(text, "view {}", v.query());
    }
    let back = back_map_json(&split);
    for f in &back {
        let positions: Vec<String> = f.positions.iter().map(ToString::to_string).collect();
        let _ = writeln!(text, "# {} = {}[{}]", f.name, f.view, positions.join(","));
    }
    let json = json!({
        "status": "OK",
        "mode": mode,
        "views": split.views.views().iter().map(|v| v.query().to_string()).collect::<Vec<_>>(),
        "back_map": back,
    });
    Outcome::ok(OK, text, json)
}

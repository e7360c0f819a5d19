use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqrewrite"))
        .args(args)
        .current_dir(fixtures())
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let o = run(&all);
    let v = serde_json::from_slice(&o.stdout)
        .unwrap_or_else(|e| panic!("{args:?}: {e}\n{}", stdout(&o)));
    (o.status.code().unwrap(), v)
}

/// Compares JSON output with `tests/golden/<name>.json`. Set
/// `UPDATE_GOLDEN=1` to rewrite the files.
fn golden(name: &str, args: &[&str], code: i32) {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let o = run(&all);
    assert_eq!(o.status.code(), Some(code), "{args:?}\n{}", stdout(&o));
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.json"));
    let actual = stdout(&o);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, &actual).unwrap();
    }
    let expected = fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(actual, expected, "{name} differs from its golden file");
    check_envelope(&serde_json::from_str(&actual).unwrap());
}

/// The documented envelope: a status, and for rewriting results the
/// rewriting, class and witness fields.
fn check_envelope(v: &Value) {
    let status = v["status"].as_str().expect("status is a string");
    assert!(
        ["OK", "NONE", "FAIL", "ERROR"].contains(&status),
        "{status}"
    );
    if status == "ERROR" {
        assert!(v["error"]["code"].is_string() && v["error"]["message"].is_string());
        return;
    }
    if v.get("target").is_some() {
        assert!(v["rewriting"].is_string() || v["rewriting"].is_null());
        assert!(v["class"].is_object() || v["class"].is_null());
        assert!(v["witness"].is_object() || v["witness"].is_null());
        assert_eq!(v["rewriting"].is_null(), status == "NONE");
        if status == "NONE" {
            assert!(["NO_CANDIDATE", "NOT_CONTAINED"].contains(&v["reason"].as_str().unwrap()));
        } else {
            let w = &v["witness"];
            assert!(w["expansion"].is_string());
            for d in w["cover_partition"].as_array().unwrap() {
                assert!(d["atoms"].is_array() && d["view"].is_string());
                assert!(d["alpha"].is_object() && d["psi"].is_object());
            }
            assert!(w["homomorphisms"]["into_expansion"].is_object());
            assert!(w["homomorphisms"]["from_expansion"].is_object());
        }
    }
}

#[test]
fn golden_outputs() {
    golden("classify_star_family", &["classify", "star_family.cq"], 0);
    golden("classify_unary_pairs", &["classify", "unary_pairs.cq"], 0);
    golden("minimize_redundant", &["minimize", "redundant.cq"], 0);
    golden("rewrite_two_view_path", &["rewrite", "two_view_path.cq"], 0);
    golden(
        "rewrite_covered_triangle",
        &["rewrite", "covered_triangle.cq"],
        0,
    );
    golden(
        "rewrite_split_unary_pairs_acyclic",
        &["rewrite", "split_unary_pairs.cq", "--target", "acyclic"],
        0,
    );
    golden(
        "rewrite_connected_views_acyclic",
        &["rewrite", "connected_views.cq", "--target", "acyclic"],
        0,
    );
    golden(
        "rewrite_unary_pairs_hierarchical",
        &["rewrite", "unary_pairs.cq", "--target", "hierarchical"],
        0,
    );
    golden("rewrite_triangle_none", &["rewrite", "triangle.cq"], 1);
    golden(
        "rewrite_triangle_mismatch",
        &["rewrite", "triangle.cq", "--target", "acyclic"],
        4,
    );
    golden(
        "rewrite_fan_out_limit",
        &["rewrite", "fan_out.cq", "--limit", "2"],
        3,
    );
    golden(
        "verify_two_view_path",
        &["verify", "two_view_path.cq", "two_view_path.rule"],
        0,
    );
    golden(
        "verify_two_view_path_detached",
        &["verify", "two_view_path.cq", "two_view_path_detached.rule"],
        1,
    );
    golden(
        "verify_identity",
        &["verify", "identity.cq", "identity.rule"],
        0,
    );
    golden(
        "eval_covered_triangle_v1",
        &[
            "eval",
            "covered_triangle.cq",
            "covered_triangle.db",
            "--view",
            "V1",
        ],
        0,
    );
    golden(
        "split_views_star_family",
        &["split-views", "star_family.cq", "--mode", "weak-head"],
        0,
    );
    golden(
        "classify_arity_conflict",
        &["classify", "arity_conflict.cq"],
        2,
    );
}

#[test]
fn classification_reports() {
    let (_, v) = json(&["classify", "star_family.cq"]);
    assert_eq!(v["query"]["class"]["weak_head_arity"], 3);
    let (_, v) = json(&["classify", "unary_pairs.cq"]);
    assert_eq!(v["query"]["class"]["hierarchical"], true);
    assert_eq!(v["query"]["class"]["q_hierarchical"], true);
    let (_, v) = json(&["classify", "identity.cq"]);
    let c = &v["query"]["class"];
    for key in ["acyclic", "free_connex", "hierarchical", "q_hierarchical"] {
        assert_eq!(c[key], true, "{key}");
    }
}

#[test]
fn rewriting_commands() {
    let o = run(&["rewrite", "two_view_path.cq", "--target", "any"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("rewriting: H(x,y,y1) :- V1(x,w), V2(w,y), V2(w,y1)."));

    let (code, v) = json(&["rewrite", "split_unary_pairs.cq", "--target", "acyclic"]);
    assert_eq!(code, 0);
    assert_eq!(v["class"]["acyclic"], true);

    let (code, v) = json(&["rewrite", "triangle.cq"]);
    assert_eq!((code, v["status"].as_str()), (1, Some("NONE")));

    for split in ["auto", "off", "weak-head"] {
        let (code, v) = json(&[
            "rewrite",
            "unary_pairs.cq",
            "--target",
            "q-hierarchical",
            "--split-views",
            split,
        ]);
        assert_eq!(code, 0, "{split}");
        assert_eq!(v["class"]["q_hierarchical"], true);
    }
}

#[test]
fn verification_and_minimization() {
    let o = run(&["verify", "split_unary_pairs.cq", "split_unary_pairs.rule"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("OK\n"));
    let o = run(&["verify", "connected_views.cq", "connected_views.rule"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["verify", "unary_pairs.cq", "unary_pairs.rule"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["minimize", "redundant.cq"]);
    assert_eq!(stdout(&o), "H(x) :- R(x,z).\n");
    let o = run(&["minimize", "two_view_path.cq"]);
    assert_eq!(
        stdout(&o),
        "H(x,y,y1) :- P(u,u1,x), R(x,w), S(w), T(w,y), T(w,y1).\n"
    );
}

#[test]
fn evaluation_and_splitting() {
    let o = run(&[
        "eval",
        "covered_triangle.cq",
        "covered_triangle.db",
        "--view",
        "V1",
    ]);
    assert_eq!(stdout(&o), "V1(x,y,z).\n");
    let o = run(&["eval", "covered_triangle.cq", "covered_triangle.db"]);
    assert_eq!(stdout(&o), "H(x,y,z).\n");
    let (code, v) = json(&[
        "eval",
        "covered_triangle.cq",
        "covered_triangle.db",
        "--view",
        "W",
    ]);
    assert_eq!(
        (code, v["error"]["code"].as_str()),
        (2, Some("UNKNOWN_VIEW"))
    );

    let (_, v) = json(&["split-views", "star_family.cq"]);
    assert_eq!(v["views"].as_array().unwrap().len(), 6);
    let (code, v) = json(&["split-views", "star_family.cq", "--mode", "free-connex"]);
    assert_eq!(
        (code, v["error"]["code"].as_str()),
        (2, Some("NOT_FREE_CONNEX"))
    );
}

#[test]
fn input_errors_exit_with_two() {
    let o = run(&["classify", "arity_conflict.cq"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ARITY_CONFLICT"));
    assert_eq!(run(&["classify", "no_such_file.cq"]).status.code(), Some(2));
    assert_eq!(
        run(&["rewrite", "identity.cq", "--target", "cyclic"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["rewrite", "identity.cq", "--limit", "0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn output_is_deterministic() {
    for args in [
        vec![
            "rewrite",
            "covered_triangle.cq",
            "--target",
            "acyclic",
            "--format",
            "json",
        ],
        vec!["rewrite", "connected_views.cq", "--target", "acyclic"],
        vec!["split-views", "star_family.cq", "--format", "json"],
    ] {
        let a = run(&args).stdout;
        let b = run(&args).stdout;
        let mut seeded = args.clone();
        seeded.extend(["--seed", "17"]);
        assert_eq!(a, b);
        assert_eq!(a, run(&seeded).stdout);
    }
}

#[test]
fn batch_directories() {
    let dir = tempfile::tempdir().unwrap();
    for name in [
        "two_view_path.cq",
        "unary_pairs.cq",
        "triangle.cq",
        "identity.cq",
    ] {
        fs::copy(fixtures().join(name), dir.path().join(name)).unwrap();
    }
    let path = dir.path().display().to_string();
    let one = run(&["rewrite", &path, "--jobs", "1", "--format", "json"]);
    let four = run(&["rewrite", &path, "--jobs", "4", "--format", "json"]);
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.status.code(), Some(1), "the triangle has no rewriting");
    let v: Value = serde_json::from_slice(&one.stdout).unwrap();
    let statuses: Vec<&str> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["result"]["status"].as_str().unwrap())
        .collect();
    assert_eq!(statuses, ["OK", "NONE", "OK", "OK"]);
}

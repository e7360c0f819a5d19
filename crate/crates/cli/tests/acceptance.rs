//! Acceptance suite. Every test prints one `PASS` or `FAIL` line (written
//! to stderr directly, so it shows even when output is captured) and then
//! asserts the verdict.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use cqrewrite::evaluation::{
    canonical_candidate, decide_and_rewrite_baseline, evaluate, evaluate_views, DEFAULT_LIMIT,
};
use cqrewrite::homomorphism::{core, equivalent, find_homomorphism, HomKind};
use cqrewrite::model::FreshVariableSource;
use cqrewrite::rewriting::{
    extract_cover_partition, induced_rewriting, make_consistent, rewrite, split_views_bounded,
    translate_rewriting_back, validate_cover_description, validate_cover_partition,
    verify_rewriting, Options, SplitMode, SplitPolicy, Target,
};
use cqrewrite::structure::{
    cover_graph, is_acyclic, is_free_connex, is_hierarchical, weak_head_arity, ClassReport,
};
use cqrewrite::testing::{
    brute_force_homomorphism, naive_evaluate, random_database, random_instance, random_query,
    random_query_in, rng, views_from_query, QueryClass, QueryShape, TestRng,
};
use cqrewrite::text::{parse_problem, parse_query};
use cqrewrite::{Atom, ConjunctiveQuery, Fact, Schema, ViewSet};
use serde_json::Value;

// Pinned sizes and tolerances.
const EXAMPLE_BUDGET: Duration = Duration::from_secs(1);
const ROUND_TRIP_INSTANCES: usize = 300;
const ROUND_TRIP_BUDGET: Duration = Duration::from_secs(60);
const CLASS_INSTANCES: usize = 200;
const ORACLE_DATABASES: usize = 200;
const ORACLE_DOMAIN: usize = 4;
const ORACLE_FACTS: usize = 20;
const SPLIT_INSTANCES: usize = 100;
const HOM_PAIRS: usize = 500;
const HOM_MAX_VARS: usize = 5;
const CORE_INPUTS: usize = 500;
const SPEED_INSTANCES: usize = 100;
const SPEED_MEDIAN: Duration = Duration::from_millis(100);
/// Give up on generating a batch after this many draws per wanted instance.
const DRAWS_PER_INSTANCE: usize = 200;

const INSTANCE_SHAPE: QueryShape = QueryShape {
    max_atoms: 6,
    max_vars: 6,
    max_arity: 3,
    relations_per_arity: 2,
};

fn verdict(id: &str, what: &str, ok: bool, detail: String) {
    let line = format!(
        "{} {id} {what}: {detail}\n",
        if ok { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "criterion {id} failed: {detail}");
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn problem(name: &str) -> (ConjunctiveQuery, ViewSet) {
    let text = fs::read_to_string(fixtures().join(name)).unwrap();
    let p = parse_problem(&text).unwrap();
    (p.query, p.views)
}

fn rule(name: &str) -> ConjunctiveQuery {
    parse_query(&fs::read_to_string(fixtures().join(name)).unwrap()).unwrap()
}

fn cli(args: &[&str]) -> (i32, Value) {
    let o = Command::new(env!("CARGO_BIN_EXE_cqrewrite"))
        .args(args)
        .args(["--format", "json"])
        .current_dir(fixtures())
        .output()
        .unwrap();
    (
        o.status.code().unwrap(),
        serde_json::from_slice(&o.stdout).unwrap(),
    )
}

/// Same query up to variable renaming and body order: for cores this is
/// equivalence plus equal body size.
fn isomorphic(a: &ConjunctiveQuery, b: &ConjunctiveQuery) -> bool {
    core(a).body().len() == a.body().len()
        && core(b).body().len() == b.body().len()
        && a.body().len() == b.body().len()
        && equivalent(a, b).unwrap_or(false)
}

/// A rewriting produced somewhere in the suite, kept for the semantic
/// oracle.
#[derive(Clone)]
struct Produced {
    query: ConjunctiveQuery,
    views: ViewSet,
    rewriting: ConjunctiveQuery,
}

struct Examples {
    results: Vec<(&'static str, &'static str, bool, String)>,
    produced: Vec<Produced>,
}

fn cli_rewriting(args: &[&str]) -> Option<ConjunctiveQuery> {
    let (code, v) = cli(args);
    if code != 0 {
        return None;
    }
    parse_query(v["rewriting"].as_str()?).ok()
}

fn star_family(n: usize) -> ConjunctiveQuery {
    let mut head = vec!["x".to_string()];
    head.extend((1..=n).map(|i| format!("y{i}")));
    head.extend((1..=n).map(|i| format!("z{i}")));
    let head = Atom::new("V", head.iter().map(|s| s.as_str().into()));
    let body = (1..=n).flat_map(|i| {
        let (u, y, z) = (format!("u{i}"), format!("y{i}"), format!("z{i}"));
        [
            Atom::of("R", &["x", &u, &y]),
            Atom::of("S", &["x", &u, &z]),
            Atom::of("T", &[&y]),
        ]
    });
    ConjunctiveQuery::new(head, body).unwrap()
}

fn examples() -> &'static Examples {
    static CELL: OnceLock<Examples> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut results = Vec::new();
        let mut produced = Vec::new();
        let mut keep = |file: &str, r: &ConjunctiveQuery| {
            let (query, views) = problem(file);
            produced.push(Produced {
                query,
                views,
                rewriting: r.clone(),
            });
        };

        // 1a
        let start = Instant::now();
        let (q, vs) = problem("two_view_path.cq");
        let out = cli_rewriting(&["rewrite", "two_view_path.cq", "--target", "any"]);
        let out_ok = out
            .as_ref()
            .is_some_and(|r| verify_rewriting(&q, &vs, r).unwrap().holds());
        let given_ok = cli(&["verify", "two_view_path.cq", "two_view_path.rule"]).0 == 0;
        let elapsed = start.elapsed();
        if let Some(r) = &out {
            keep("two_view_path.cq", r);
        }
        keep("two_view_path.cq", &rule("two_view_path.rule"));
        results.push((
            "1a",
            "two-view path",
            out_ok && given_ok && elapsed < EXAMPLE_BUDGET,
            format!("rewrite verified={out_ok}, given rewriting verified={given_ok}, {elapsed:.2?} < {EXAMPLE_BUDGET:?}"),
        ));

        // 1b
        let start = Instant::now();
        let (q, vs) = problem("covered_triangle.cq");
        let candidate = canonical_candidate(&q, &vs, DEFAULT_LIMIT).unwrap().unwrap().query;
        let expected = parse_query("H(x,y,z) :- V1(x,y,z), V2(x,y,z,x).").unwrap();
        let same = isomorphic(&candidate, &expected);
        let elapsed = start.elapsed();
        keep("covered_triangle.cq", &candidate);
        results.push((
            "1b",
            "covered triangle candidate",
            same && elapsed < EXAMPLE_BUDGET,
            format!("candidate {candidate} matches={same}, {elapsed:.2?} < {EXAMPLE_BUDGET:?}"),
        ));

        // 1c, 1d
        for (id, what, file, given) in [
            ("1c", "split unary pairs", "split_unary_pairs.cq", "split_unary_pairs.rule"),
            ("1d", "connected views", "connected_views.cq", "connected_views.rule"),
        ] {
            let start = Instant::now();
            let (q, vs) = problem(file);
            let candidate = canonical_candidate(&q, &vs, DEFAULT_LIMIT).unwrap().unwrap().query;
            let cyclic = is_acyclic(&candidate).is_none();
            let out = cli_rewriting(&["rewrite", file, "--target", "acyclic"]);
            let out_ok = out.as_ref().is_some_and(|r| {
                is_acyclic(r).is_some() && verify_rewriting(&q, &vs, r).unwrap().holds()
            });
            let given_ok = cli(&["verify", file, given]).0 == 0;
            let elapsed = start.elapsed();
            if let Some(r) = &out {
                keep(file, r);
            }
            keep(file, &rule(given));
            results.push((
                id,
                what,
                cyclic && out_ok && given_ok && elapsed < EXAMPLE_BUDGET,
                format!(
                    "candidate cyclic={cyclic}, acyclic rewriting verified={out_ok}, given rewriting verified={given_ok}, {elapsed:.2?} < {EXAMPLE_BUDGET:?}"
                ),
            ));
        }

        // 1e
        let g = cover_graph(&star_family(3));
        let edges_ok = g.edges.len() == 3
            && g.edges.iter().all(|&(i, j)| {
                let (a, b) = (&g.nodes[i], &g.nodes[j]);
                let mut rels = [a.relation.as_str(), b.relation.as_str()];
                rels.sort_unstable();
                rels == ["R", "S"] && a.args[1] == b.args[1]
            });
        let isolated: Vec<&Atom> = g
            .nodes
            .iter()
            .enumerate()
            .filter(|(n, _)| g.edges.iter().all(|&(i, j)| i != *n && j != *n))
            .map(|(_, a)| a)
            .collect();
        let isolated_ok = isolated.len() == 3 && isolated.iter().all(|a| a.relation.as_str() == "T");
        let arities: Vec<usize> = (1..=5).map(|n| weak_head_arity(&star_family(n)).0).collect();
        results.push((
            "1e",
            "star family cover graph",
            edges_ok && isolated_ok && arities == [3; 5],
            format!(
                "{} edges (R-S only: {edges_ok}), {} isolated T nodes, weak head arity for n=1..5: {arities:?}",
                g.edges.len(),
                isolated.len()
            ),
        ));

        // 1f
        let start = Instant::now();
        let (q, vs) = problem("unary_pairs.cq");
        let candidate = canonical_candidate(&q, &vs, DEFAULT_LIMIT).unwrap().unwrap().query;
        let not_hier = !is_hierarchical(&candidate);
        let out = cli_rewriting(&["rewrite", "unary_pairs.cq", "--target", "hierarchical"]);
        let out_ok = out
            .as_ref()
            .is_some_and(|r| is_hierarchical(r) && verify_rewriting(&q, &vs, r).unwrap().holds());
        let given_ok = cli(&["verify", "unary_pairs.cq", "unary_pairs.rule"]).0 == 0;
        let elapsed = start.elapsed();
        if let Some(r) = &out {
            keep("unary_pairs.cq", r);
        }
        keep("unary_pairs.cq", &rule("unary_pairs.rule"));
        results.push((
            "1f",
            "unary pairs",
            not_hier && out_ok && given_ok && elapsed < EXAMPLE_BUDGET,
            format!(
                "candidate non-hierarchical={not_hier}, hierarchical rewriting verified={out_ok}, given rewriting verified={given_ok}, {elapsed:.2?} < {EXAMPLE_BUDGET:?}"
            ),
        ));

        Examples { results, produced }
    })
}

fn example(id: &str) {
    let (_, what, ok, detail) = examples().results.iter().find(|r| r.0 == id).unwrap();
    verdict(id, what, *ok, detail.clone());
}

#[test]
fn criterion_1a() {
    example("1a");
}

#[test]
fn criterion_1b() {
    example("1b");
}

#[test]
fn criterion_1c() {
    example("1c");
}

#[test]
fn criterion_1d() {
    example("1d");
}

#[test]
fn criterion_1e() {
    example("1e");
}

#[test]
fn criterion_1f() {
    example("1f");
}

/// Draws instances until `wanted` satisfy `accept`.
fn draw<T>(seed: u64, wanted: usize, mut make: impl FnMut(&mut TestRng) -> Option<T>) -> Vec<T> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    for _ in 0..wanted * DRAWS_PER_INSTANCE {
        if out.len() == wanted {
            break;
        }
        if let Some(t) = make(&mut r) {
            out.push(t);
        }
    }
    out
}

fn rewritable(q: &ConjunctiveQuery, vs: &ViewSet) -> bool {
    decide_and_rewrite_baseline(q, vs, DEFAULT_LIMIT)
        .map(|b| b.rewriting().is_some())
        .unwrap_or(false)
}

struct RoundTrip {
    instances: usize,
    passed: usize,
    descriptions: usize,
    bad_descriptions: usize,
    elapsed: Duration,
    produced: Vec<Produced>,
}

fn round_trip() -> &'static RoundTrip {
    static CELL: OnceLock<RoundTrip> = OnceLock::new();
    CELL.get_or_init(|| {
        let instances = draw(2, ROUND_TRIP_INSTANCES, |r| {
            let (q, vs) = random_instance(r, &INSTANCE_SHAPE, QueryClass::Any, 3);
            let q = core(&q);
            rewritable(&q, &vs).then_some((q, vs))
        });
        let start = Instant::now();
        let (mut passed, mut descriptions, mut bad_descriptions) = (0, 0, 0);
        let mut produced = Vec::new();
        for (q, vs) in &instances {
            let baseline = decide_and_rewrite_baseline(q, vs, DEFAULT_LIMIT).unwrap();
            let candidate = baseline.rewriting().unwrap();
            let Ok(cp) = extract_cover_partition(q, vs, candidate) else {
                continue;
            };
            descriptions += cp.descriptions.len();
            bad_descriptions += cp
                .descriptions
                .iter()
                .filter(|cd| validate_cover_description(cd, q).is_err())
                .count();
            let mut fresh = FreshVariableSource::new("_c", &q.vars());
            fresh.reserve(&vs.vars());
            let consistent = make_consistent(&cp, &mut fresh);
            descriptions += consistent.descriptions.len();
            bad_descriptions += consistent
                .descriptions
                .iter()
                .filter(|cd| validate_cover_description(cd, q).is_err())
                .count();
            let Ok(induced) = induced_rewriting(&consistent, vs) else {
                continue;
            };
            if validate_cover_partition(&consistent).is_ok()
                && verify_rewriting(q, vs, &induced).is_ok_and(|v| v.holds())
            {
                passed += 1;
                produced.push(Produced {
                    query: q.clone(),
                    views: vs.clone(),
                    rewriting: induced,
                });
            }
        }
        RoundTrip {
            instances: instances.len(),
            passed,
            descriptions,
            bad_descriptions,
            elapsed: start.elapsed(),
            produced,
        }
    })
}

#[test]
fn criterion_2() {
    let rt = round_trip();
    let ok = rt.instances == ROUND_TRIP_INSTANCES
        && rt.passed == rt.instances
        && rt.bad_descriptions == 0
        && rt.elapsed < ROUND_TRIP_BUDGET;
    verdict(
        "2",
        "cover partition round trip",
        ok,
        format!(
            "{}/{} rewritable instances verified, {} of {} descriptions invalid, {:.2?} < {:?}",
            rt.passed,
            rt.instances,
            rt.bad_descriptions,
            rt.descriptions,
            rt.elapsed,
            ROUND_TRIP_BUDGET
        ),
    );
}

struct ClassRun {
    target: Target,
    instances: usize,
    passed: usize,
    produced: Vec<Produced>,
}

fn class_runs() -> &'static Vec<ClassRun> {
    static CELL: OnceLock<Vec<ClassRun>> = OnceLock::new();
    CELL.get_or_init(|| {
        [
            (Target::Acyclic, QueryClass::Acyclic),
            (Target::FreeConnex, QueryClass::FreeConnex),
            (Target::Hierarchical, QueryClass::Hierarchical),
            (Target::QHierarchical, QueryClass::QHierarchical),
        ]
        .into_iter()
        .enumerate()
        .map(|(i, (target, class))| {
            let instances = draw(30 + i as u64, CLASS_INSTANCES, |r| {
                let (q, vs) = random_instance(r, &INSTANCE_SHAPE, class, 3);
                rewritable(&core(&q), &vs).then_some((q, vs))
            });
            let mut passed = 0;
            let mut produced = Vec::new();
            for (q, vs) in &instances {
                let options = Options {
                    target,
                    ..Options::default()
                };
                let Ok(report) = rewrite(q, vs, &options) else {
                    continue;
                };
                let Some(r) = report.rewriting else {
                    continue;
                };
                if target.admits(&ClassReport::of(&r))
                    && verify_rewriting(q, vs, &r).is_ok_and(|v| v.holds())
                {
                    passed += 1;
                }
                produced.push(Produced {
                    query: q.clone(),
                    views: vs.clone(),
                    rewriting: r,
                });
            }
            ClassRun {
                target,
                instances: instances.len(),
                passed,
                produced,
            }
        })
        .collect()
    })
}

#[test]
fn criterion_3() {
    let runs = class_runs();
    let ok = runs
        .iter()
        .all(|r| r.instances == CLASS_INSTANCES && r.passed == r.instances);
    let detail: Vec<String> = runs
        .iter()
        .map(|r| format!("{} {}/{}", r.target, r.passed, r.instances))
        .collect();
    verdict("3", "class preservation", ok, detail.join(", "));
}

struct SplitRun {
    instances: usize,
    rewritable: usize,
    agree: usize,
    arity_ok: usize,
    translated_ok: usize,
    produced: Vec<Produced>,
}

fn free_connex_views(r: &mut TestRng, q: &ConjunctiveQuery) -> Option<ViewSet> {
    for _ in 0..20 {
        let vs = views_from_query(r, q, 3, 0.3);
        if vs
            .views()
            .iter()
            .all(|v| is_free_connex(v.query()).is_some())
        {
            return Some(vs);
        }
    }
    None
}

fn split_run() -> &'static SplitRun {
    static CELL: OnceLock<SplitRun> = OnceLock::new();
    CELL.get_or_init(|| {
        let instances = draw(5, SPLIT_INSTANCES, |r| {
            let q = core(&random_query(r, &INSTANCE_SHAPE));
            let vs = free_connex_views(r, &q)?;
            Some((q, vs))
        });
        let mut run = SplitRun {
            instances: instances.len(),
            rewritable: 0,
            agree: 0,
            arity_ok: 0,
            translated_ok: 0,
            produced: Vec::new(),
        };
        for (q, vs) in &instances {
            let split = split_views_bounded(vs, SplitMode::FreeConnex).unwrap();
            let bound = vs.base_schema().max_arity();
            if split.views.views().iter().all(|v| v.arity() <= bound) {
                run.arity_ok += 1;
            }
            let over_vs = rewritable(q, vs);
            let over_split = decide_and_rewrite_baseline(q, &split.views, DEFAULT_LIMIT).unwrap();
            if over_vs == over_split.rewriting().is_some() {
                run.agree += 1;
            }
            match over_split.rewriting() {
                None => run.translated_ok += 1,
                Some(w) => {
                    run.rewritable += 1;
                    let mut fresh = FreshVariableSource::new("_p", &q.vars());
                    fresh.reserve(&vs.vars());
                    let back = translate_rewriting_back(w, &split, vs, &mut fresh).unwrap();
                    if verify_rewriting(q, vs, &back).is_ok_and(|v| v.holds()) {
                        run.translated_ok += 1;
                    }
                    run.produced.push(Produced {
                        query: q.clone(),
                        views: vs.clone(),
                        rewriting: back,
                    });
                }
            }
        }
        run
    })
}

#[test]
fn criterion_5() {
    let s = split_run();
    let n = s.instances;
    let ok = n == SPLIT_INSTANCES
        && s.agree == n
        && s.arity_ok == n
        && s.translated_ok == n
        && s.rewritable > 0;
    verdict(
        "5",
        "view splitting",
        ok,
        format!(
            "{n} instances ({} rewritable): rewritability agrees {}/{n}, arity bound {}/{n}, translations verified {}/{n}",
            s.rewritable, s.agree, s.arity_ok, s.translated_ok
        ),
    );
}

#[test]
fn criterion_4() {
    let mut all: Vec<&Produced> = examples().produced.iter().collect();
    all.extend(&round_trip().produced);
    for run in class_runs() {
        all.extend(&run.produced);
    }
    all.extend(&split_run().produced);

    let mut r = rng(4);
    let (mut passed, mut naive_checked) = (0, 0);
    let mut first_failure = None;
    for p in &all {
        let mut schema: Schema = p.query.schema().clone();
        schema.extend(p.views.base_schema()).unwrap();
        let mut ok = true;
        for i in 0..ORACLE_DATABASES {
            let d = random_database(&mut r, &schema, ORACLE_DOMAIN, ORACLE_FACTS);
            let expected = evaluate(&p.query, &d);
            if i == 0 && p.query.vars().len() <= 6 {
                naive_checked += 1;
                ok &= naive_evaluate(&p.query, &d) == expected;
            }
            let derived = evaluate_views(&p.views, &d);
            let got: BTreeSet<_> = evaluate(&p.rewriting, &derived)
                .into_iter()
                .map(|f| Fact::new(p.query.head().relation.clone(), f.args))
                .collect();
            if got != expected {
                ok = false;
                break;
            }
        }
        if ok {
            passed += 1;
        } else if first_failure.is_none() {
            first_failure = Some(format!("{} over {:?}", p.rewriting, p.query.to_string()));
        }
    }
    verdict(
        "4",
        "semantic oracle",
        passed == all.len() && !all.is_empty(),
        format!(
            "{passed}/{} rewritings agree on {ORACLE_DATABASES} databases each (domain {ORACLE_DOMAIN}, <= {ORACLE_FACTS} facts); {naive_checked} query answers cross-checked by nested loops{}",
            all.len(),
            first_failure.map(|f| format!("; first failure {f}")).unwrap_or_default()
        ),
    );
}

#[test]
fn criterion_6() {
    let shape = QueryShape {
        max_atoms: 4,
        max_vars: HOM_MAX_VARS,
        max_arity: 2,
        relations_per_arity: 1,
    };
    let mut r = rng(6);
    let (mut agree, mut exists) = (0, 0);
    for _ in 0..HOM_PAIRS {
        let a = random_query(&mut r, &shape);
        let b = random_query(&mut r, &shape);
        let same = [HomKind::Body, HomKind::Full].into_iter().all(|kind| {
            let found = find_homomorphism(&a, &b, kind);
            let valid = found.as_ref().is_none_or(|h| h.validate(&a, &b).is_ok());
            valid && found.is_some() == brute_force_homomorphism(&a, &b, kind)
        });
        if same {
            agree += 1;
        }
        if brute_force_homomorphism(&a, &b, HomKind::Body) {
            exists += 1;
        }
    }
    verdict(
        "6",
        "homomorphism search",
        agree == HOM_PAIRS,
        format!("{agree}/{HOM_PAIRS} pairs agree with exhaustive enumeration ({exists} with a body homomorphism)"),
    );
}

fn removable_atoms(q: &ConjunctiveQuery) -> usize {
    q.body()
        .iter()
        .filter(|atom| {
            q.with_body(q.body().iter().filter(|a| a != atom).cloned())
                .is_ok_and(|smaller| brute_force_homomorphism(q, &smaller, HomKind::Full))
        })
        .count()
}

#[test]
fn criterion_7() {
    let classes = [
        QueryClass::Any,
        QueryClass::Acyclic,
        QueryClass::FreeConnex,
        QueryClass::Hierarchical,
        QueryClass::QHierarchical,
    ];
    let mut r = rng(7);
    let mut passed = 0;
    for i in 0..CORE_INPUTS {
        let q = random_query_in(&mut r, &INSTANCE_SHAPE, classes[i % classes.len()]);
        let c = core(&q);
        let before = ClassReport::of(&q);
        let after = ClassReport::of(&c);
        let preserved = (!before.acyclic || after.acyclic)
            && (!before.free_connex || after.free_connex)
            && (!before.hierarchical || after.hierarchical)
            && (!before.q_hierarchical || after.q_hierarchical);
        if core(&c) == c && preserved && equivalent(&q, &c).unwrap() && removable_atoms(&c) == 0 {
            passed += 1;
        }
    }
    let (q, _) = problem("two_view_path.cq");
    let identity = core(&q) == q && removable_atoms(&q) == 0;
    verdict(
        "7",
        "minimization",
        passed == CORE_INPUTS && identity,
        format!("{passed}/{CORE_INPUTS} cores idempotent, minimal and class preserving; two-view path query is its own core: {identity}"),
    );
}

#[test]
fn criterion_8() {
    let shape = QueryShape {
        max_atoms: 8,
        max_vars: 8,
        max_arity: 3,
        relations_per_arity: 2,
    };
    let instances = draw(8, SPEED_INSTANCES, |r| {
        let q = random_query_in(r, &shape, QueryClass::Acyclic);
        let vs = views_from_query(r, &q, 4, 0.1);
        Some((q, vs))
    });
    let mut times = Vec::new();
    let mut completed = 0;
    for (q, vs) in &instances {
        let start = Instant::now();
        let options = Options {
            target: Target::Acyclic,
            split: SplitPolicy::Auto,
            ..Options::default()
        };
        let done = rewrite(q, vs, &options).is_ok();
        times.push(start.elapsed());
        completed += usize::from(done);
    }
    times.sort();
    let median = times[times.len() / 2];
    verdict(
        "8",
        "bounded-arity pipeline speed",
        completed == instances.len() && instances.len() == SPEED_INSTANCES && median < SPEED_MEDIAN,
        format!(
            "{completed}/{} acyclic instances (<= 8 atoms, arity <= 3) completed, median {median:.2?} < {SPEED_MEDIAN:?}, max {:.2?}",
            instances.len(),
            times.last().unwrap()
        ),
    );
}

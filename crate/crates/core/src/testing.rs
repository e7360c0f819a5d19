//! Brute-force oracles and random instance generators for tests.
//!
//! The oracles are deliberately naive and share no code with the engine:
//! homomorphisms by enumerating every variable map, evaluation by
//! enumerating every valuation over the active domain, weak head arity by
//! enumerating every partition of the body.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::homomorphism::HomKind;
use crate::model::{
    vars_of, Atom, ConjunctiveQuery, Const, Database, Fact, Rel, Schema, Var, View, ViewSet,
};
use crate::structure::ClassReport;

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Calls `f` on every total map from `from` into `to`; stops when `f`
/// returns true and reports whether it did.
fn any_map<T: Clone>(
    from: &[Var],
    to: &[T],
    f: &mut impl FnMut(&BTreeMap<Var, T>) -> bool,
) -> bool {
    fn go<T: Clone>(
        i: usize,
        from: &[Var],
        to: &[T],
        map: &mut BTreeMap<Var, T>,
        f: &mut impl FnMut(&BTreeMap<Var, T>) -> bool,
    ) -> bool {
        if i == from.len() {
            return f(map);
        }
        for t in to {
            map.insert(from[i].clone(), t.clone());
            if go(i + 1, from, to, map, f) {
                return true;
            }
        }
        map.remove(&from[i]);
        false
    }
    go(0, from, to, &mut BTreeMap::new(), f)
}

/// Existence of a homomorphism by trying every map `vars(source) →
/// vars(target)`. Head symbols are compared positionally for the full kind.
pub fn brute_force_homomorphism(
    source: &ConjunctiveQuery,
    target: &ConjunctiveQuery,
    kind: HomKind,
) -> bool {
    let from: Vec<Var> = source.vars().into_iter().collect();
    let to: Vec<Var> = target.vars().into_iter().collect();
    if kind == HomKind::Full && source.arity() != target.arity() {
        return false;
    }
    any_map(&from, &to, &mut |map| {
        let image = |a: &Atom| Atom::new(a.relation.clone(), a.args.iter().map(|v| map[v].clone()));
        let body_ok = source
            .body()
            .iter()
            .all(|a| target.body().contains(&image(a)));
        let head_ok = kind == HomKind::Body
            || source
                .head()
                .args
                .iter()
                .zip(&target.head().args)
                .all(|(s, t)| &map[s] == t);
        body_ok && head_ok
    })
}

/// Nested-loop evaluation: every valuation of the query variables over the
/// active domain of `d`.
pub fn naive_evaluate(q: &ConjunctiveQuery, d: &Database) -> BTreeSet<Fact> {
    let domain: Vec<Const> = d
        .facts()
        .iter()
        .flat_map(|f| f.args.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let vars: Vec<Var> = q.vars().into_iter().collect();
    let mut out = BTreeSet::new();
    any_map(&vars, &domain, &mut |nu| {
        let ground = |a: &Atom| Fact::new(a.relation.clone(), a.args.iter().map(|v| nu[v].clone()));
        if q.body().iter().all(|a| d.contains(&ground(a))) {
            out.insert(ground(q.head()));
        }
        false
    });
    out
}

fn set_partitions<T: Clone>(items: &[T]) -> Vec<Vec<Vec<T>>> {
    let Some((first, rest)) = items.split_first() else {
        return vec![Vec::new()];
    };
    let mut out = Vec::new();
    for partition in set_partitions(rest) {
        for i in 0..partition.len() {
            let mut p = partition.clone();
            p[i].insert(0, first.clone());
            out.push(p);
        }
        let mut p = partition;
        p.insert(0, vec![first.clone()]);
        out.push(p);
    }
    out
}

/// Smallest `k` over all partitions of the body in which blocks share only
/// head variables, `k` being the largest number of head variables of a
/// block.
pub fn brute_force_weak_head_arity(q: &ConjunctiveQuery) -> usize {
    let atoms: Vec<Atom> = q.body().iter().cloned().collect();
    let head = q.head_vars();
    set_partitions(&atoms)
        .into_iter()
        .filter(|p| {
            let vars: Vec<BTreeSet<Var>> = p.iter().map(vars_of).collect();
            (0..vars.len()).all(|i| {
                (i + 1..vars.len())
                    .all(|j| vars[i].intersection(&vars[j]).all(|x| head.contains(x)))
            })
        })
        .map(|p| {
            p.iter()
                .map(|b| vars_of(b).intersection(&head).count())
                .max()
                .unwrap_or(0)
        })
        .min()
        .unwrap_or(0)
}

/// Shape of random queries.
#[derive(Clone, Copy, Debug)]
pub struct QueryShape {
    pub max_atoms: usize,
    pub max_vars: usize,
    pub max_arity: usize,
    /// Relation symbols available per arity.
    pub relations_per_arity: usize,
}

impl Default for QueryShape {
    fn default() -> Self {
        QueryShape {
            max_atoms: 6,
            max_vars: 6,
            max_arity: 3,
            relations_per_arity: 2,
        }
    }
}

fn relation(rng: &mut TestRng, shape: &QueryShape, arity: usize) -> Rel {
    let k = rng.gen_range(1..=shape.relations_per_arity);
    let letter = ["A", "B", "C", "D"][arity.min(3)];
    Rel::new(format!("{letter}{k}"))
}

fn var(i: usize) -> Var {
    const NAMES: [&str; 8] = ["x", "y", "z", "u", "v", "w", "s", "t"];
    match NAMES.get(i) {
        Some(n) => Var::new(n),
        None => Var::new(format!("x{i}")),
    }
}

fn random_head(rng: &mut TestRng, body: &BTreeSet<Atom>) -> Atom {
    let mut vars: Vec<Var> = vars_of(body).into_iter().collect();
    vars.shuffle(rng);
    let n = rng.gen_range(0..=vars.len().min(3));
    Atom::new("H", vars.into_iter().take(n))
}

/// Arbitrary query: atoms over random relations and variables.
pub fn random_query(rng: &mut TestRng, shape: &QueryShape) -> ConjunctiveQuery {
    let atoms = rng.gen_range(1..=shape.max_atoms);
    let nvars = rng.gen_range(1..=shape.max_vars);
    let body: BTreeSet<Atom> = (0..atoms)
        .map(|_| {
            let arity = rng.gen_range(1..=shape.max_arity);
            let rel = relation(rng, shape, arity);
            Atom::new(rel, (0..arity).map(|_| var(rng.gen_range(0..nvars))))
        })
        .collect();
    let head = random_head(rng, &body);
    ConjunctiveQuery::new(head, body).expect("generated queries are well formed")
}

/// Acyclic by construction: every new atom shares variables with one
/// earlier atom only.
pub fn random_acyclic_query(rng: &mut TestRng, shape: &QueryShape) -> ConjunctiveQuery {
    let atoms = rng.gen_range(1..=shape.max_atoms);
    let mut next_var = 0;
    let mut body: Vec<Atom> = Vec::new();
    for _ in 0..atoms {
        let arity = rng.gen_range(1..=shape.max_arity);
        let mut args = Vec::with_capacity(arity);
        if let Some(parent) = body.choose(rng).cloned() {
            let shared = rng.gen_range(1..=arity.min(parent.arity()));
            let mut pool = parent.args.clone();
            pool.shuffle(rng);
            args.extend(pool.into_iter().take(shared));
        }
        while args.len() < arity {
            if next_var < shape.max_vars.max(arity) && (args.is_empty() || rng.gen_bool(0.7)) {
                args.push(var(next_var));
                next_var += 1;
            } else {
                let i = rng.gen_range(0..args.len().max(1));
                let repeat = args.get(i).cloned().unwrap_or_else(|| var(0));
                args.push(repeat);
            }
        }
        args.shuffle(rng);
        body.push(Atom::new(relation(rng, shape, arity), args));
    }
    let body: BTreeSet<Atom> = body.into_iter().collect();
    let head = random_head(rng, &body);
    ConjunctiveQuery::new(head, body).expect("generated queries are well formed")
}

/// Hierarchical by construction: variables form a forest and each atom
/// holds a root-to-node path.
pub fn random_hierarchical_query(
    rng: &mut TestRng,
    shape: &QueryShape,
    q_hierarchical: bool,
) -> ConjunctiveQuery {
    let nvars = rng.gen_range(1..=shape.max_vars);
    let parent: Vec<Option<usize>> = (0..nvars)
        .map(|i| {
            if i == 0 || rng.gen_bool(0.25) {
                None
            } else {
                Some(rng.gen_range(0..i))
            }
        })
        .collect();
    let path = |mut i: usize| {
        let mut p = vec![i];
        while let Some(up) = parent[i] {
            p.push(up);
            i = up;
        }
        p
    };
    let atoms = rng.gen_range(1..=shape.max_atoms);
    let mut body = BTreeSet::new();
    // every variable must occur, so start with the leaves' paths
    let mut nodes: Vec<usize> = (0..nvars).collect();
    nodes.shuffle(rng);
    for (k, node) in nodes
        .into_iter()
        .chain(std::iter::repeat_with(|| 0))
        .enumerate()
    {
        if k >= atoms.max(nvars) {
            break;
        }
        let node = if k < nvars {
            node
        } else {
            rng.gen_range(0..nvars)
        };
        let vars: Vec<Var> = path(node).into_iter().map(var).collect();
        if vars.len() > shape.max_arity {
            continue;
        }
        let mut args = vars.clone();
        args.shuffle(rng);
        body.insert(Atom::new(relation(rng, shape, args.len()), args));
    }
    if body.is_empty() {
        body.insert(Atom::new(relation(rng, shape, 1), [var(0)]));
    }
    let present = vars_of(&body);
    let head: Vec<Var> = if q_hierarchical {
        // upward closed sets of variables
        let mut chosen: BTreeSet<usize> = BTreeSet::new();
        for i in 0..nvars {
            if present.contains(&var(i)) && rng.gen_bool(0.4) {
                chosen.extend(path(i));
            }
        }
        chosen
            .into_iter()
            .map(var)
            .filter(|v| present.contains(v))
            .collect()
    } else {
        let mut v: Vec<Var> = present.iter().cloned().collect();
        v.shuffle(rng);
        let n = rng.gen_range(0..=v.len().min(3));
        v.into_iter().take(n).collect()
    };
    ConjunctiveQuery::new(Atom::new("H", head), body).expect("generated queries are well formed")
}

/// Facts over the relations of `schema` with constants `c0..c{domain-1}`.
pub fn random_database(
    rng: &mut TestRng,
    schema: &Schema,
    domain: usize,
    max_facts: usize,
) -> Database {
    let relations: Vec<(Rel, usize)> = schema.relations().map(|(r, a)| (r.clone(), a)).collect();
    let n = rng.gen_range(0..=max_facts);
    (0..n)
        .map(|_| {
            let (rel, arity) = relations.choose(rng).expect("non-empty schema").clone();
            Fact::new(
                rel,
                (0..arity).map(|_| Const::new(format!("c{}", rng.gen_range(0..domain)))),
            )
        })
        .collect()
}

/// Which family of queries to draw from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueryClass {
    Any,
    Acyclic,
    FreeConnex,
    Hierarchical,
    QHierarchical,
}

impl QueryClass {
    pub fn admits(self, class: &ClassReport) -> bool {
        match self {
            QueryClass::Any => true,
            QueryClass::Acyclic => class.acyclic,
            QueryClass::FreeConnex => class.free_connex,
            QueryClass::Hierarchical => class.hierarchical,
            QueryClass::QHierarchical => class.q_hierarchical,
        }
    }
}

/// Draws a query of the given class (by construction, then rejection).
pub fn random_query_in(
    rng: &mut TestRng,
    shape: &QueryShape,
    class: QueryClass,
) -> ConjunctiveQuery {
    loop {
        let q = match class {
            QueryClass::Any => random_query(rng, shape),
            QueryClass::Acyclic | QueryClass::FreeConnex => random_acyclic_query(rng, shape),
            QueryClass::Hierarchical => random_hierarchical_query(rng, shape, false),
            QueryClass::QHierarchical => random_hierarchical_query(rng, shape, true),
        };
        if class.admits(&ClassReport::of(&q)) {
            return q;
        }
    }
}

/// Views cut out of the body of `q`: the body is split into blocks, each
/// view's body is a block (sometimes with one more atom of `q`), and its
/// head keeps the block's bridge variables plus a few others. With
/// probability `drop_bridge` a bridge variable is left out of a head, which
/// usually destroys rewritability.
pub fn views_from_query(
    rng: &mut TestRng,
    q: &ConjunctiveQuery,
    max_views: usize,
    drop_bridge: f64,
) -> ViewSet {
    let atoms: Vec<Atom> = q.body().iter().cloned().collect();
    let m = rng.gen_range(1..=max_views.min(atoms.len()));
    let mut blocks: Vec<BTreeSet<Atom>> = vec![BTreeSet::new(); m];
    let mut order: Vec<usize> = (0..atoms.len()).collect();
    order.shuffle(rng);
    for (k, &i) in order.iter().enumerate() {
        let b = if k < m { k } else { rng.gen_range(0..m) };
        blocks[b].insert(atoms[i].clone());
    }
    let head_vars = q.head_vars();
    let views = blocks.into_iter().enumerate().map(|(i, block)| {
        let outside: BTreeSet<Var> = vars_of(atoms.iter().filter(|a| !block.contains(*a)));
        let mut body = block.clone();
        if rng.gen_bool(0.2) {
            body.insert(atoms.choose(rng).unwrap().clone());
        }
        let mut head: Vec<Var> = vars_of(&body)
            .into_iter()
            .filter(|x| {
                let bridge =
                    vars_of(&block).contains(x) && (head_vars.contains(x) || outside.contains(x));
                (bridge && !rng.gen_bool(drop_bridge)) || rng.gen_bool(0.25)
            })
            .collect();
        head.shuffle(rng);
        let suffix = i + 1;
        let rename = |v: &Var| Var::new(format!("{v}{suffix}"));
        let head = Atom::new(format!("V{suffix}").as_str(), head.iter().map(rename));
        let body = body
            .iter()
            .map(|a| Atom::new(a.relation.clone(), a.args.iter().map(rename)));
        View::new(ConjunctiveQuery::new(head, body).expect("views are safe by construction"))
    });
    ViewSet::new(views).expect("generated views are well formed")
}

/// A query of the given class with views cut from its body.
pub fn random_instance(
    rng: &mut TestRng,
    shape: &QueryShape,
    class: QueryClass,
    max_views: usize,
) -> (ConjunctiveQuery, ViewSet) {
    let q = random_query_in(rng, shape, class);
    let vs = views_from_query(rng, &q, max_views, 0.1);
    (q, vs)
}

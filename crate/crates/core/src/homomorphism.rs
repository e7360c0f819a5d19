//! Homomorphisms between conjunctive queries: search, containment,
//! equivalence, cores, and inversion of a homomorphism on its image.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;

use serde::Serialize;
use thiserror::Error;

use crate::matching::{for_each_match, Binding, TupleIndex};
use crate::model::{Atom, ConjunctiveQuery, Rel, Substitution, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HomKind {
    /// Body atoms map into the target body.
    Body,
    /// Additionally the head maps onto the target head.
    Full,
}

/// A variable map from a source query into a target query. The mapping is
/// total on the source variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Homomorphism {
    pub mapping: Substitution,
    pub kind: HomKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HomError {
    #[error("head arities differ ({left} vs {right})")]
    ArityMismatch { left: usize, right: usize },
    #[error("no homomorphism back into the minimal query; the queries are not equivalent")]
    NoInverse,
    #[error("the composed endomorphism is not a permutation; the query is not minimal")]
    NotMinimal,
}

impl HomError {
    pub fn code(&self) -> &'static str {
        match self {
            HomError::ArityMismatch { .. } => "ARITY_MISMATCH",
            HomError::NoInverse => "NO_INVERSE",
            HomError::NotMinimal => "NOT_MINIMAL",
        }
    }
}

/// Ways a claimed homomorphism can fail validation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HomViolation {
    #[error("variable {0} is unmapped")]
    Unmapped(Var),
    #[error("image {0} of a body atom is missing from the target body")]
    BodyAtomMissing(Atom),
    #[error("head image {image} differs from target head {target}")]
    HeadMismatch { image: Atom, target: Atom },
}

impl Homomorphism {
    pub fn apply(&self, atom: &Atom) -> Atom {
        self.mapping.apply(atom)
    }

    /// Checks conditions (1) and, for full homomorphisms, (2) directly.
    pub fn validate(
        &self,
        source: &ConjunctiveQuery,
        target: &ConjunctiveQuery,
    ) -> Result<(), HomViolation> {
        if let Some(var) = source
            .vars()
            .into_iter()
            .find(|v| !self.mapping.contains(v))
        {
            return Err(HomViolation::Unmapped(var));
        }
        for atom in source.body() {
            let image = self.apply(atom);
            if !target.body().contains(&image) {
                return Err(HomViolation::BodyAtomMissing(image));
            }
        }
        if self.kind == HomKind::Full {
            let image = self.apply(source.head());
            if &image != target.head() {
                return Err(HomViolation::HeadMismatch {
                    image,
                    target: target.head().clone(),
                });
            }
        }
        Ok(())
    }
}

fn search(
    source: &ConjunctiveQuery,
    target: &ConjunctiveQuery,
    kind: HomKind,
) -> Option<Homomorphism> {
    let mut seed: Binding<Var> = Binding::new();
    if kind == HomKind::Full {
        if source.head().relation != target.head().relation || source.arity() != target.arity() {
            return None;
        }
        for (s, t) in source.head().args.iter().zip(&target.head().args) {
            match seed.get(s) {
                Some(bound) if bound != t => return None,
                Some(_) => {}
                None => {
                    seed.insert(s.clone(), t.clone());
                }
            }
        }
    }
    let index = TupleIndex::new(
        target
            .body()
            .iter()
            .map(|a| (&a.relation, a.args.as_slice())),
    );
    let mut found = None;
    let _ = for_each_match(source.body(), &index, seed, |binding| {
        found = Some(binding.clone());
        ControlFlow::Break(())
    });
    found.map(|binding| Homomorphism {
        mapping: binding.into_iter().collect(),
        kind,
    })
}

/// First homomorphism from `source` into `target` under the canonical search
/// order, if any.
pub fn find_homomorphism(
    source: &ConjunctiveQuery,
    target: &ConjunctiveQuery,
    kind: HomKind,
) -> Option<Homomorphism> {
    search(source, target, kind)
}

fn check_arity(q1: &ConjunctiveQuery, q2: &ConjunctiveQuery) -> Result<(), HomError> {
    if q1.arity() != q2.arity() {
        return Err(HomError::ArityMismatch {
            left: q1.arity(),
            right: q2.arity(),
        });
    }
    Ok(())
}

/// Homomorphism witnessing `q1 ⊑ q2`: a full homomorphism from `q2` into
/// `q1`. Head symbols are compared positionally only.
pub fn containment_witness(
    q1: &ConjunctiveQuery,
    q2: &ConjunctiveQuery,
) -> Result<Option<Homomorphism>, HomError> {
    check_arity(q1, q2)?;
    if q1.head().relation == q2.head().relation {
        Ok(search(q2, q1, HomKind::Full))
    } else {
        let renamed = q2.with_head_relation(q1.head().relation.clone());
        Ok(search(&renamed, q1, HomKind::Full))
    }
}

/// `q1 ⊑ q2`.
pub fn contained(q1: &ConjunctiveQuery, q2: &ConjunctiveQuery) -> Result<bool, HomError> {
    Ok(containment_witness(q1, q2)?.is_some())
}

/// `q1 ≡ q2`.
pub fn equivalent(q1: &ConjunctiveQuery, q2: &ConjunctiveQuery) -> Result<bool, HomError> {
    Ok(contained(q1, q2)? && contained(q2, q1)?)
}

/// A minimal equivalent query together with a full homomorphism from `q`
/// onto it. The core's body is a subset of `q`'s body.
pub fn core_with_retraction(q: &ConjunctiveQuery) -> (ConjunctiveQuery, Homomorphism) {
    let mut current = q.clone();
    for atom in q.body() {
        if current.body().len() == 1 {
            break;
        }
        let reduced: Vec<Atom> = current
            .body()
            .iter()
            .filter(|a| *a != atom)
            .cloned()
            .collect();
        let Ok(candidate) = current.with_body(reduced) else {
            continue;
        };
        if search(&current, &candidate, HomKind::Full).is_some() {
            current = candidate;
        }
    }
    let retraction =
        search(q, &current, HomKind::Full).expect("a query always maps onto its own core");
    (current, retraction)
}

/// Removes redundant body atoms one at a time in canonical order.
pub fn core(q: &ConjunctiveQuery) -> ConjunctiveQuery {
    core_with_retraction(q).0
}

/// Given a minimal `q_min`, an equivalent `q_other` and a full homomorphism
/// `h1: q_min → q_other`, returns `h2: q_other → q_min` with `h2(h1(A)) = A`
/// for every body atom `A` of `q_min`.
///
/// Any `h2'` back into `q_min` composes with `h1` to an automorphism `g` of
/// `q_min`; with `k` the order of `g`, the result is `g^(k-1) ∘ h2'`.
pub fn invert_on_image(
    q_min: &ConjunctiveQuery,
    q_other: &ConjunctiveQuery,
    h1: &Homomorphism,
) -> Result<Homomorphism, HomError> {
    let back = containment_witness(q_min, q_other)?.ok_or(HomError::NoInverse)?;
    let vars: Vec<Var> = q_min.vars().into_iter().collect();
    let permutation: BTreeMap<Var, Var> = vars
        .iter()
        .map(|x| (x.clone(), back.mapping.get(h1.mapping.get(x)).clone()))
        .collect();
    let image: BTreeSet<&Var> = permutation.values().collect();
    if image.len() != vars.len() || image.iter().any(|v| !permutation.contains_key(*v)) {
        return Err(HomError::NotMinimal);
    }

    let order = permutation_order(&permutation);
    let power = |x: &Var| -> Var {
        let mut y = x.clone();
        for _ in 1..order {
            y = permutation[&y].clone();
        }
        y
    };
    let mapping: Substitution = q_other
        .vars()
        .into_iter()
        .map(|x| {
            let first = back.mapping.get(&x).clone();
            (x, power(&first))
        })
        .collect();
    let h2 = Homomorphism {
        mapping,
        kind: HomKind::Full,
    };
    for atom in q_min.body() {
        assert_eq!(
            &h2.apply(&h1.apply(atom)),
            atom,
            "inverse-on-image property violated"
        );
    }
    Ok(h2)
}

/// Order of a permutation given as a map: lcm of its cycle lengths.
fn permutation_order(permutation: &BTreeMap<Var, Var>) -> usize {
    let mut seen: BTreeSet<&Var> = BTreeSet::new();
    let mut order = 1usize;
    for start in permutation.keys() {
        if seen.contains(start) {
            continue;
        }
        let mut len = 0;
        let mut x = start;
        while seen.insert(x) {
            len += 1;
            x = &permutation[x];
        }
        order = lcm(order, len);
    }
    order
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

impl ConjunctiveQuery {
    /// Copy with a different head symbol. Only used for positional head
    /// comparisons, so the body-disjointness rule is not rechecked.
    pub(crate) fn with_head_relation(&self, relation: Rel) -> ConjunctiveQuery {
        let mut q = self.clone();
        q.set_head_relation(relation);
        q
    }
}

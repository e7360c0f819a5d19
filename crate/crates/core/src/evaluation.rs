//! Query evaluation, canonical databases, the canonical candidate and
//! expansions of rewritings.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;

use thiserror::Error;

use crate::homomorphism::{containment_witness, core_with_retraction, HomKind, Homomorphism};
use crate::matching::{for_each_match, Binding, TupleIndex};
use crate::model::{
    Atom, ConjunctiveQuery, Const, Database, Fact, FreshVariableSource, ModelError, Rel,
    Substitution, Var, View, ViewSet,
};

/// Default bound on the number of derived view facts in a canonical
/// candidate.
pub const DEFAULT_LIMIT: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("view evaluation produced more than {limit} facts")]
    SizeLimitExceeded { limit: usize },
    #[error("atom {atom} does not use a known view")]
    UnknownView { atom: Atom },
    #[error("atom {atom} has arity {found}, view {view} has arity {expected}")]
    ViewArity {
        atom: Atom,
        view: Rel,
        expected: usize,
        found: usize,
    },
    #[error("atom {atom} disagrees where the head of view {view} repeats a variable")]
    RepeatedHeadMismatch { atom: Atom, view: Rel },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl EvalError {
    pub fn code(&self) -> &'static str {
        match self {
            EvalError::SizeLimitExceeded { .. } => "SIZE_LIMIT_EXCEEDED",
            EvalError::UnknownView { .. } => "UNKNOWN_VIEW",
            EvalError::ViewArity { .. } => "ARITY_MISMATCH",
            EvalError::RepeatedHeadMismatch { .. } => "REPEATED_HEAD_MISMATCH",
            EvalError::Model(e) => e.code(),
        }
    }
}

/// Calls `emit` with the head image of every satisfying valuation. Stops
/// when `emit` breaks.
fn for_each_answer<F>(q: &ConjunctiveQuery, d: &Database, mut emit: F) -> ControlFlow<()>
where
    F: FnMut(Fact, &Binding<Const>) -> ControlFlow<()>,
{
    let index = TupleIndex::new(d.facts().iter().map(|f| (&f.relation, f.args.as_slice())));
    for_each_match(q.body(), &index, Binding::new(), |binding| {
        let args = q.head().args.iter().map(|v| binding[v].clone());
        emit(Fact::new(q.head().relation.clone(), args), binding)
    })
}

/// `q(d)` under set semantics.
///
/// Joins one atom at a time and, after each join, projects the partial
/// answers onto the variables still needed (head variables and variables of
/// atoms not joined yet), so the work is bounded by the number of distinct
/// partial answers rather than the number of valuations.
pub fn evaluate(q: &ConjunctiveQuery, d: &Database) -> BTreeSet<Fact> {
    let mut by_relation: BTreeMap<&Rel, Vec<&[Const]>> = BTreeMap::new();
    for f in d.facts() {
        by_relation.entry(&f.relation).or_default().push(&f.args);
    }
    let head: BTreeSet<&Var> = q.head().args.iter().collect();
    let mut remaining: Vec<&Atom> = q.body().iter().collect();
    let mut columns: Vec<&Var> = Vec::new();
    let mut rows: BTreeSet<Vec<Const>> = BTreeSet::from([Vec::new()]);
    while !remaining.is_empty() && !rows.is_empty() {
        let next = (0..remaining.len())
            .max_by_key(|&i| {
                let shared = remaining[i]
                    .args
                    .iter()
                    .filter(|v| columns.contains(v))
                    .count();
                (shared, std::cmp::Reverse(i))
            })
            .unwrap_or(0);
        let atom = remaining.remove(next);
        let mut joined_columns = columns.clone();
        for v in &atom.args {
            if !joined_columns.contains(&v) {
                joined_columns.push(v);
            }
        }
        let live: BTreeSet<&Var> = remaining
            .iter()
            .flat_map(|a| a.args.iter())
            .chain(head.iter().copied())
            .collect();
        let keep: Vec<usize> = (0..joined_columns.len())
            .filter(|&i| live.contains(joined_columns[i]))
            .collect();
        let position: BTreeMap<&Var, usize> = joined_columns
            .iter()
            .enumerate()
            .map(|(i, v)| (*v, i))
            .collect();
        let tuples = by_relation
            .get(&atom.relation)
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        let mut next_rows = BTreeSet::new();
        for row in &rows {
            for tuple in tuples {
                let mut extended: Vec<Option<&Const>> = row.iter().map(Some).collect();
                extended.resize(joined_columns.len(), None);
                let fits = atom.args.iter().zip(tuple.iter()).all(|(v, c)| {
                    let slot = &mut extended[position[v]];
                    match slot {
                        Some(bound) => *bound == c,
                        None => {
                            *slot = Some(c);
                            true
                        }
                    }
                });
                if fits {
                    next_rows.insert(
                        keep.iter()
                            .map(|&i| extended[i].expect("joined").clone())
                            .collect(),
                    );
                }
            }
        }
        columns = keep.iter().map(|&i| joined_columns[i]).collect();
        rows = next_rows;
    }
    let position: BTreeMap<&Var, usize> =
        columns.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    rows.into_iter()
        .map(|row| {
            Fact::new(
                q.head().relation.clone(),
                q.head().args.iter().map(|v| row[position[v]].clone()),
            )
        })
        .collect()
}

/// The derived database `vs(d)`: all view answers, keyed by view name.
pub fn evaluate_views(vs: &ViewSet, d: &Database) -> Database {
    vs.views()
        .iter()
        .flat_map(|v| evaluate(v.query(), d))
        .collect()
}

/// Body atoms of a query frozen into facts; each variable becomes the
/// constant of the same name.
#[derive(Clone, Debug)]
pub struct CanonicalDatabase {
    pub database: Database,
    pub to_const: BTreeMap<Var, Const>,
    pub to_var: BTreeMap<Const, Var>,
}

impl CanonicalDatabase {
    pub fn thaw(&self, fact: &Fact) -> Atom {
        Atom::new(
            fact.relation.clone(),
            fact.args.iter().map(|c| self.to_var[c].clone()),
        )
    }
}

pub fn canonical_database(q: &ConjunctiveQuery) -> CanonicalDatabase {
    let to_const: BTreeMap<Var, Const> = q
        .vars()
        .into_iter()
        .map(|v| {
            let c = Const::new(v.as_str());
            (v, c)
        })
        .collect();
    let to_var = to_const
        .iter()
        .map(|(v, c)| (c.clone(), v.clone()))
        .collect();
    let database = q
        .body()
        .iter()
        .map(|a| {
            Fact::new(
                a.relation.clone(),
                a.args.iter().map(|v| to_const[v].clone()),
            )
        })
        .collect();
    CanonicalDatabase {
        database,
        to_const,
        to_var,
    }
}

/// The canonical candidate together with, for each of its body atoms, a
/// valuation of the producing view into the query's variables.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub query: ConjunctiveQuery,
    pub valuations: BTreeMap<Atom, Substitution>,
}

/// Evaluates every view on the canonical database of `q` and builds the
/// query `head(q) :- vs(D^q)`. `Ok(None)` when the result is empty or misses
/// a head variable of `q`.
pub fn canonical_candidate(
    q: &ConjunctiveQuery,
    vs: &ViewSet,
    limit: usize,
) -> Result<Option<Candidate>, EvalError> {
    let canonical = canonical_database(q);
    let mut valuations: BTreeMap<Atom, Substitution> = BTreeMap::new();
    for view in vs.views() {
        let flow = for_each_answer(view.query(), &canonical.database, |fact, binding| {
            let atom = canonical.thaw(&fact);
            if !valuations.contains_key(&atom) {
                if valuations.len() == limit {
                    return ControlFlow::Break(());
                }
                let nu = binding
                    .iter()
                    .map(|(x, c)| (x.clone(), canonical.to_var[c].clone()))
                    .collect();
                valuations.insert(atom, nu);
            }
            ControlFlow::Continue(())
        });
        if flow.is_break() {
            return Err(EvalError::SizeLimitExceeded { limit });
        }
    }
    let body_vars = crate::model::vars_of(valuations.keys());
    if valuations.is_empty() || q.head().args.iter().any(|v| !body_vars.contains(v)) {
        return Ok(None);
    }
    let query = ConjunctiveQuery::make(
        q.head().clone(),
        valuations.keys().cloned(),
        &vs.derived_schema(),
    )?;
    Ok(Some(Candidate { query, valuations }))
}

/// One inlined view atom: `alpha` maps the view's variables into the
/// expansion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViewApplication {
    pub view: View,
    pub alpha: Substitution,
}

impl ViewApplication {
    pub fn head_image(&self) -> Atom {
        self.alpha.apply(self.view.head())
    }

    pub fn body_image(&self) -> BTreeSet<Atom> {
        self.alpha.apply_all(self.view.body())
    }

    /// Variables in the range of `alpha`.
    pub fn range(&self) -> BTreeSet<Var> {
        self.view
            .query()
            .vars()
            .iter()
            .map(|x| self.alpha.get(x).clone())
            .collect()
    }

    fn unifies_quantified(&self) -> bool {
        let vars = self.view.query().vars();
        self.view.query().quantified_vars().iter().any(|x| {
            let image = self.alpha.get(x);
            vars.iter().any(|y| y != x && self.alpha.get(y) == image)
        })
    }
}

/// A rewriting with every view atom replaced by a renamed copy of the view
/// body.
#[derive(Clone, Debug)]
pub struct Expansion {
    pub query: ConjunctiveQuery,
    /// One application per rewriting body atom, in canonical atom order.
    pub applications: Vec<ViewApplication>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExpansionViolation {
    #[error("application {0} unifies a quantified variable with another view variable")]
    NotAnApplication(usize),
    #[error("quantified variable image {var} of application {application} is shared")]
    SharedQuantified { application: usize, var: Var },
    #[error("expansion body is not the union of the applied view bodies")]
    BodyMismatch,
}

/// Structural check of the disjointness invariant and of the body union.
pub fn validate_expansion(e: &Expansion) -> Result<(), ExpansionViolation> {
    for (i, app) in e.applications.iter().enumerate() {
        if app.unifies_quantified() {
            return Err(ExpansionViolation::NotAnApplication(i));
        }
        for x in app.view.query().quantified_vars() {
            let image = app.alpha.get(&x);
            let shared = e
                .applications
                .iter()
                .enumerate()
                .any(|(j, other)| j != i && other.range().contains(image))
                || e.query.head().contains(image);
            if shared {
                return Err(ExpansionViolation::SharedQuantified {
                    application: i,
                    var: image.clone(),
                });
            }
        }
    }
    let union: BTreeSet<Atom> = e.applications.iter().flat_map(|a| a.body_image()).collect();
    if &union != e.query.body() {
        return Err(ExpansionViolation::BodyMismatch);
    }
    Ok(())
}

/// Head variables of `view` map positionally onto the arguments of `atom`;
/// quantified variables map to fresh variables.
pub fn apply_view(
    view: &View,
    atom: &Atom,
    fresh: &mut FreshVariableSource,
) -> Result<ViewApplication, EvalError> {
    if view.arity() != atom.arity() {
        return Err(EvalError::ViewArity {
            atom: atom.clone(),
            view: view.name().clone(),
            expected: view.arity(),
            found: atom.arity(),
        });
    }
    let mut alpha = Substitution::new();
    for (x, y) in view.head().args.iter().zip(&atom.args) {
        if let Some(prev) = alpha.insert(x.clone(), y.clone()) {
            if &prev != y {
                return Err(EvalError::RepeatedHeadMismatch {
                    atom: atom.clone(),
                    view: view.name().clone(),
                });
            }
        }
    }
    for x in view.query().quantified_vars() {
        alpha.insert(x, fresh.fresh());
    }
    Ok(ViewApplication {
        view: view.clone(),
        alpha,
    })
}

/// Expands a rewriting over the view schema into a query over the base
/// schema. `fresh` should not produce variables of the rewriting; they are
/// reserved here as well.
pub fn expand(
    rewriting: &ConjunctiveQuery,
    vs: &ViewSet,
    fresh: &mut FreshVariableSource,
) -> Result<Expansion, EvalError> {
    fresh.reserve(&rewriting.vars());
    let mut applications = Vec::with_capacity(rewriting.body().len());
    for atom in rewriting.body() {
        let view = vs
            .get(&atom.relation)
            .ok_or_else(|| EvalError::UnknownView { atom: atom.clone() })?;
        applications.push(apply_view(view, atom, fresh)?);
    }
    let body: BTreeSet<Atom> = applications.iter().flat_map(|a| a.body_image()).collect();
    let query = ConjunctiveQuery::make(rewriting.head().clone(), body, vs.base_schema())?;
    let expansion = Expansion {
        query,
        applications,
    };
    debug_assert_eq!(validate_expansion(&expansion), Ok(()));
    Ok(expansion)
}

/// Fresh variables for expansions of rewritings of `q`: never clashes with
/// variables of `q` or of the views.
pub fn expansion_source(q: &ConjunctiveQuery, vs: &ViewSet) -> FreshVariableSource {
    let mut fresh = FreshVariableSource::new("_e", &q.vars());
    fresh.reserve(&vs.vars());
    fresh
}

/// What the baseline decision procedure found.
#[derive(Clone, Debug)]
pub enum BaselineOutcome {
    NoCandidate,
    NotContained {
        candidate: Candidate,
    },
    Rewriting {
        candidate: Candidate,
        expansion: Expansion,
        /// Full homomorphism from the query core into the expansion.
        into_expansion: Homomorphism,
        /// Full homomorphism from the expansion into the query core, built
        /// from the candidate's valuations.
        from_expansion: Homomorphism,
    },
}

#[derive(Clone, Debug)]
pub struct Baseline {
    pub core: ConjunctiveQuery,
    /// Full homomorphism from the input query onto its core.
    pub retraction: Homomorphism,
    pub outcome: BaselineOutcome,
}

impl Baseline {
    pub fn rewriting(&self) -> Option<&ConjunctiveQuery> {
        match &self.outcome {
            BaselineOutcome::Rewriting { candidate, .. } => Some(&candidate.query),
            _ => None,
        }
    }
}

/// Homomorphism from the expansion of a candidate back into the query it was
/// built from: head variables stay, and each fresh variable follows the
/// valuation that produced its view atom.
fn candidate_witness(candidate: &Candidate, expansion: &Expansion) -> Homomorphism {
    let mut mapping = Substitution::identity_on(&candidate.query.vars());
    for (atom, app) in candidate.query.body().iter().zip(&expansion.applications) {
        let nu = &candidate.valuations[atom];
        for x in app.view.query().quantified_vars() {
            mapping.insert(app.alpha.get(&x).clone(), nu.get(&x).clone());
        }
    }
    Homomorphism {
        mapping,
        kind: HomKind::Full,
    }
}

/// Decides rewritability: the canonical candidate is a rewriting iff its
/// expansion is contained in `q`. The query is cored first.
pub fn decide_and_rewrite_baseline(
    q: &ConjunctiveQuery,
    vs: &ViewSet,
    limit: usize,
) -> Result<Baseline, EvalError> {
    let (core, retraction) = core_with_retraction(q);
    let Some(candidate) = canonical_candidate(&core, vs, limit)? else {
        return Ok(Baseline {
            core,
            retraction,
            outcome: BaselineOutcome::NoCandidate,
        });
    };
    let mut fresh = expansion_source(&core, vs);
    let expansion = expand(&candidate.query, vs, &mut fresh)?;
    let from_expansion = candidate_witness(&candidate, &expansion);
    from_expansion
        .validate(&expansion.query, &core)
        .expect("the candidate valuations map its expansion into the query");

    let into = containment_witness(&expansion.query, &core)
        .expect("expansion and query have the same head arity");
    let outcome = match into {
        Some(into_expansion) => BaselineOutcome::Rewriting {
            candidate,
            expansion,
            into_expansion,
            from_expansion,
        },
        None => BaselineOutcome::NotContained { candidate },
    };
    Ok(Baseline {
        core,
        retraction,
        outcome,
    })
}

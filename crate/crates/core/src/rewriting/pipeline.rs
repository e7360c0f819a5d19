//! The rewriting dispatcher: core, decide, extract, refine, repair, induce,
//! translate back and verify.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::evaluation::{
    decide_and_rewrite_baseline, expand, expansion_source, BaselineOutcome, Expansion,
    DEFAULT_LIMIT,
};
use crate::homomorphism::{containment_witness, core, Homomorphism};
use crate::model::{rename_fresh_variables, ConjunctiveQuery, FreshVariableSource, ViewSet};
use crate::structure::{is_acyclic, is_free_connex, ClassReport};

use super::cover::{
    check_partition, extract_cover_partition, induced_rewriting, make_consistent, CoverPartition,
};
use super::split::{split_connected, split_free_connex, split_hierarchical};
use super::views::{split_views_bounded, translate_rewriting_back, SplitMode, SplitViews};
use super::RewriteError;

/// Structural class the rewriting has to belong to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Any,
    Acyclic,
    FreeConnex,
    Hierarchical,
    QHierarchical,
}

impl Target {
    pub const ALL: [Target; 5] = [
        Target::Any,
        Target::Acyclic,
        Target::FreeConnex,
        Target::Hierarchical,
        Target::QHierarchical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Target::Any => "any",
            Target::Acyclic => "acyclic",
            Target::FreeConnex => "free-connex",
            Target::Hierarchical => "hierarchical",
            Target::QHierarchical => "q-hierarchical",
        }
    }

    pub fn admits(self, class: &ClassReport) -> bool {
        match self {
            Target::Any => true,
            Target::Acyclic => class.acyclic,
            Target::FreeConnex => class.free_connex,
            Target::Hierarchical => class.hierarchical,
            Target::QHierarchical => class.q_hierarchical,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Target::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown target class `{s}`"))
    }
}

/// When to split views before rewriting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitPolicy {
    /// Split along free-connex join trees when every view allows it and the
    /// target is a structured class.
    Auto,
    Off,
    /// Always split along cover-graph components.
    WeakHead,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Options {
    pub target: Target,
    pub limit: usize,
    pub split: SplitPolicy,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            target: Target::Any,
            limit: DEFAULT_LIMIT,
            split: SplitPolicy::Auto,
        }
    }
}

/// Why no rewriting exists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NoneReason {
    /// The views yield nothing usable on the canonical database.
    NoCandidate,
    /// The canonical candidate is not contained in the query.
    NotContained,
}

impl NoneReason {
    pub fn code(self) -> &'static str {
        match self {
            NoneReason::NoCandidate => "NO_CANDIDATE",
            NoneReason::NotContained => "NOT_CONTAINED",
        }
    }
}

/// An expansion of a rewriting together with the homomorphisms in both
/// directions between it and the query, when they exist.
#[derive(Clone, Debug)]
pub struct Verification {
    pub expansion: Expansion,
    /// Full homomorphism from the query into the expansion.
    pub into_expansion: Option<Homomorphism>,
    /// Full homomorphism from the expansion into the query.
    pub from_expansion: Option<Homomorphism>,
}

impl Verification {
    pub fn holds(&self) -> bool {
        self.into_expansion.is_some() && self.from_expansion.is_some()
    }
}

/// Checks that `rewriting` is a rewriting of `q` over `vs`: its expansion
/// must be equivalent to `q`.
pub fn verify_rewriting(
    q: &ConjunctiveQuery,
    vs: &ViewSet,
    rewriting: &ConjunctiveQuery,
) -> Result<Verification, RewriteError> {
    let mut fresh = expansion_source(q, vs);
    let expansion = expand(rewriting, vs, &mut fresh)?;
    let into_expansion = containment_witness(&expansion.query, q)?;
    let from_expansion = containment_witness(q, &expansion.query)?;
    Ok(Verification {
        expansion,
        into_expansion,
        from_expansion,
    })
}

#[derive(Clone, Debug)]
pub struct RewriteReport {
    pub target: Target,
    pub query_core: ConjunctiveQuery,
    /// Views the pipeline ran on, when they were split.
    pub split: Option<SplitViews>,
    /// Canonical candidate over the (possibly split) views.
    pub candidate: Option<ConjunctiveQuery>,
    pub rewriting: Option<ConjunctiveQuery>,
    pub none_reason: Option<NoneReason>,
    pub class: Option<ClassReport>,
    pub verification: Option<Verification>,
    /// Cover partition read off the final rewriting.
    pub witness: Option<CoverPartition>,
}

impl RewriteReport {
    fn none(
        target: Target,
        query_core: ConjunctiveQuery,
        split: Option<SplitViews>,
        candidate: Option<ConjunctiveQuery>,
        reason: NoneReason,
    ) -> Self {
        RewriteReport {
            target,
            query_core,
            split,
            candidate,
            rewriting: None,
            none_reason: Some(reason),
            class: None,
            verification: None,
            witness: None,
        }
    }
}

fn refine(
    cp: CoverPartition,
    target: Target,
    class: &ClassReport,
) -> Result<CoverPartition, RewriteError> {
    let q = &cp.query;
    match target {
        Target::Any => Ok(cp),
        Target::Acyclic | Target::FreeConnex => {
            let tree = class.join_tree.as_ref().ok_or(RewriteError::NotAcyclic)?;
            match &class.free_connex_tree {
                Some(extended) => split_free_connex(&cp, tree, extended),
                None if target == Target::Acyclic => Ok(split_connected(&cp, tree)),
                None => Err(RewriteError::NotFreeConnex {
                    view: q.head().relation.clone(),
                }),
            }
        }
        Target::Hierarchical | Target::QHierarchical => split_hierarchical(&cp),
    }
}

/// Computes a rewriting of `q` over `vs` in the class `options.target`, or
/// explains why none exists.
///
/// The query is cored first and the class check applies to the core. The
/// result is cored, its non-query variables are renamed `_f1, _f2, ...`, and
/// it is verified by expansion before it is returned.
pub fn rewrite(
    q: &ConjunctiveQuery,
    vs: &ViewSet,
    options: &Options,
) -> Result<RewriteReport, RewriteError> {
    let target = options.target;
    let query_core = core(q);
    let class = ClassReport::of(&query_core);
    if !target.admits(&class) {
        return Err(RewriteError::ClassMismatch { target });
    }

    let split = match options.split {
        SplitPolicy::Off => None,
        SplitPolicy::WeakHead => Some(split_views_bounded(vs, SplitMode::WeakHead)?),
        SplitPolicy::Auto => {
            if target != Target::Any
                && vs
                    .views()
                    .iter()
                    .all(|v| is_free_connex(v.query()).is_some())
            {
                Some(split_views_bounded(vs, SplitMode::FreeConnex)?)
            } else {
                None
            }
        }
    }
    .filter(|s| !s.is_identity());
    let ws = split.as_ref().map_or(vs, |s| &s.views);
    log::debug!("rewriting {query_core} over {} views", ws.len());

    let baseline = decide_and_rewrite_baseline(&query_core, ws, options.limit)?;
    let candidate = match baseline.outcome {
        BaselineOutcome::NoCandidate => {
            return Ok(RewriteReport::none(
                target,
                query_core,
                split,
                None,
                NoneReason::NoCandidate,
            ))
        }
        BaselineOutcome::NotContained { candidate } => {
            return Ok(RewriteReport::none(
                target,
                query_core,
                split,
                Some(candidate.query),
                NoneReason::NotContained,
            ))
        }
        BaselineOutcome::Rewriting { candidate, .. } => candidate.query,
    };
    log::debug!("canonical candidate {candidate}");

    let mut fresh = FreshVariableSource::new("_c", &q.vars());
    fresh.reserve(&vs.vars());
    fresh.reserve(&ws.vars());
    let over_ws = if target == Target::Any {
        candidate.clone()
    } else {
        let cp = extract_cover_partition(&query_core, ws, &candidate)?;
        let cp = refine(cp, target, &class)?;
        check_partition(&cp, "refinement")?;
        let cp = make_consistent(&cp, &mut fresh);
        check_partition(&cp, "consistency")?;
        induced_rewriting(&cp, ws)?
    };
    let over_vs = match &split {
        Some(s) => translate_rewriting_back(&over_ws, s, vs, &mut fresh)?,
        None => over_ws,
    };
    let rewriting = rename_fresh_variables(&core(&over_vs), &q.vars(), "_f");

    let verification = verify_rewriting(q, vs, &rewriting)?;
    if !verification.holds() {
        return Err(RewriteError::Internal(format!(
            "constructed query {rewriting} failed verification"
        )));
    }
    let rewriting_class = ClassReport::of(&rewriting);
    if !target.admits(&rewriting_class) {
        return Err(RewriteError::Internal(format!(
            "constructed query {rewriting} is not {target}"
        )));
    }
    let witness = extract_cover_partition(&query_core, vs, &rewriting)?;
    Ok(RewriteReport {
        target,
        query_core,
        split,
        candidate: Some(candidate),
        rewriting: Some(rewriting),
        none_reason: None,
        class: Some(rewriting_class),
        verification: Some(verification),
        witness: Some(witness),
    })
}

/// An acyclic rewriting of an acyclic query (free-connex when the query is),
/// computed over the views as given.
pub fn acyclic_rewriting(
    q: &ConjunctiveQuery,
    vs: &ViewSet,
    limit: usize,
) -> Result<Option<ConjunctiveQuery>, RewriteError> {
    let query_core = core(q);
    if is_acyclic(&query_core).is_none() {
        return Err(RewriteError::NotAcyclic);
    }
    let target = if is_free_connex(&query_core).is_some() {
        Target::FreeConnex
    } else {
        Target::Acyclic
    };
    let options = Options {
        target,
        limit,
        split: SplitPolicy::Off,
    };
    Ok(rewrite(q, vs, &options)?.rewriting)
}

/// A hierarchical rewriting of a hierarchical query (q-hierarchical when the
/// query is), computed over the views as given.
pub fn hierarchical_rewriting(
    q: &ConjunctiveQuery,
    vs: &ViewSet,
    limit: usize,
) -> Result<Option<ConjunctiveQuery>, RewriteError> {
    let class = ClassReport::of(&core(q));
    if !class.hierarchical {
        return Err(RewriteError::NotHierarchical);
    }
    let target = if class.q_hierarchical {
        Target::QHierarchical
    } else {
        Target::Hierarchical
    };
    let options = Options {
        target,
        limit,
        split: SplitPolicy::Off,
    };
    Ok(rewrite(q, vs, &options)?.rewriting)
}

//! Splitting views into fragments of bounded head arity, and translating
//! rewritings over the fragments back to the original views.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::model::{vars_of, Atom, ConjunctiveQuery, FreshVariableSource, Rel, Var, View, ViewSet};
use crate::structure::{cover_graph, is_free_connex};

use super::RewriteError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    /// One fragment per child of the head node in a join tree of
    /// `body ∪ {head}`. Every view must be free-connex acyclic.
    FreeConnex,
    /// One fragment per connected component of the cover graph.
    WeakHead,
}

/// Where a fragment came from: its original view and, for each fragment
/// head position, the position in the original head that it keeps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Fragment {
    pub view: Rel,
    pub positions: Vec<usize>,
}

/// A split view set with the data needed to translate rewritings back.
#[derive(Clone, Debug)]
pub struct SplitViews {
    pub views: ViewSet,
    pub back_map: BTreeMap<Rel, Fragment>,
}

impl SplitViews {
    /// True when no view was replaced.
    pub fn is_identity(&self) -> bool {
        self.back_map.iter().all(|(name, f)| {
            name == &f.view && f.positions.iter().copied().eq(0..f.positions.len())
        })
    }
}

/// Head positions of `view` whose variable occurs in `block`, in head order.
/// A repeated head variable keeps its first position only.
fn kept_positions(view: &View, block: &BTreeSet<Atom>) -> Vec<usize> {
    let vars = vars_of(block);
    let mut seen = BTreeSet::new();
    view.head()
        .args
        .iter()
        .enumerate()
        .filter(|(_, x)| vars.contains(*x) && seen.insert(*x))
        .map(|(i, _)| i)
        .collect()
}

fn blocks_of(view: &View, mode: SplitMode) -> Result<Vec<BTreeSet<Atom>>, RewriteError> {
    match mode {
        SplitMode::WeakHead => Ok(cover_graph(view.query()).components()),
        SplitMode::FreeConnex => {
            let tree = is_free_connex(view.query()).ok_or_else(|| RewriteError::NotFreeConnex {
                view: view.name().clone(),
            })?;
            let root = tree
                .index_of(view.head())
                .expect("the extended join tree contains the head");
            Ok(tree
                .subtrees_below(root)
                .into_iter()
                .map(|(_, nodes)| nodes.into_iter().map(|n| tree.nodes()[n].clone()).collect())
                .collect())
        }
    }
}

/// Replaces every view by fragments that share its body and keep only the
/// head variables of one block. Fragments without head variables are
/// dropped (they hold exactly when any other fragment is non-empty), as are
/// duplicates; a view that would keep its full head stays as it is.
pub fn split_views_bounded(vs: &ViewSet, mode: SplitMode) -> Result<SplitViews, RewriteError> {
    let mut taken: BTreeSet<Rel> = vs.views().iter().map(|v| v.name().clone()).collect();
    taken.extend(vs.base_schema().relations().map(|(r, _)| r.clone()));
    let mut views = Vec::new();
    let mut back_map = BTreeMap::new();
    for view in vs.views() {
        let mut kept: Vec<Vec<usize>> = Vec::new();
        for block in blocks_of(view, mode)? {
            let positions = kept_positions(view, &block);
            if !positions.is_empty() && !kept.contains(&positions) {
                kept.push(positions);
            }
        }
        let identity: Vec<usize> = kept_positions(view, view.body());
        let unchanged = kept.is_empty()
            || (kept.len() == 1 && kept[0] == identity && identity.len() == view.arity());
        if unchanged {
            back_map.insert(
                view.name().clone(),
                Fragment {
                    view: view.name().clone(),
                    positions: (0..view.arity()).collect(),
                },
            );
            views.push(view.clone());
            continue;
        }
        for (n, positions) in kept.into_iter().enumerate() {
            let mut name = Rel::new(format!("{}_{}", view.name(), n + 1));
            let mut suffix = 2;
            while taken.contains(&name) {
                name = Rel::new(format!("{}_{}_{}", view.name(), n + 1, suffix));
                suffix += 1;
            }
            taken.insert(name.clone());
            let head = Atom::new(
                name.clone(),
                positions.iter().map(|&p| view.head().args[p].clone()),
            );
            let query = ConjunctiveQuery::new(head, view.body().iter().cloned())?;
            views.push(View::new(query));
            back_map.insert(
                name,
                Fragment {
                    view: view.name().clone(),
                    positions,
                },
            );
        }
    }
    Ok(SplitViews {
        views: ViewSet::new(views)?,
        back_map,
    })
}

/// Replaces every fragment atom by an atom over its original view. Head
/// positions the fragment dropped get fresh variables (the same fresh
/// variable for repeated occurrences of one head variable).
pub fn translate_rewriting_back(
    rewriting: &ConjunctiveQuery,
    split: &SplitViews,
    vs: &ViewSet,
    fresh: &mut FreshVariableSource,
) -> Result<ConjunctiveQuery, RewriteError> {
    fresh.reserve(&rewriting.vars());
    let mut body = Vec::with_capacity(rewriting.body().len());
    for atom in rewriting.body() {
        let fragment =
            split
                .back_map
                .get(&atom.relation)
                .ok_or_else(|| RewriteError::UnknownSplitView {
                    name: atom.relation.clone(),
                })?;
        let view = vs
            .get(&fragment.view)
            .ok_or_else(|| RewriteError::UnknownSplitView {
                name: fragment.view.clone(),
            })?;
        let mut value: BTreeMap<&Var, Var> = BTreeMap::new();
        for (arg, &p) in atom.args.iter().zip(&fragment.positions) {
            value.insert(&view.head().args[p], arg.clone());
        }
        let args: Vec<Var> = view
            .head()
            .args
            .iter()
            .map(|x| value.entry(x).or_insert_with(|| fresh.fresh()).clone())
            .collect();
        body.push(Atom::new(fragment.view.clone(), args));
    }
    Ok(ConjunctiveQuery::make(
        rewriting.head().clone(),
        body,
        &vs.derived_schema(),
    )?)
}

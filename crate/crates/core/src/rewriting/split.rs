//! Refining cover partitions so that the induced rewriting inherits the
//! structure of the query.

use std::collections::{BTreeSet, VecDeque};

use crate::model::{vars_of, Atom, ConjunctiveQuery, Var};
use crate::structure::{is_hierarchical, JoinTree};

use super::cover::{CoverDescription, CoverPartition};
use super::RewriteError;

/// Splits every description whose atoms are disconnected in `tree` into one
/// description per connected component, all sharing the same view,
/// application and `psi`.
pub fn split_connected(cp: &CoverPartition, tree: &JoinTree) -> CoverPartition {
    let mut out = cp.clone();
    let mut index = 0;
    while index < out.descriptions.len() {
        let components = tree.components_of(&out.descriptions[index].atoms);
        let n = components.len();
        if n > 1 {
            out.split_description(index, components);
        }
        index += n.max(1);
    }
    out
}

/// Alternates [`split_connected`] over the join tree of the body and the one
/// that includes the head until nothing changes.
pub fn split_free_connex(
    cp: &CoverPartition,
    tree: &JoinTree,
    extended: &JoinTree,
) -> Result<CoverPartition, RewriteError> {
    let mut current = split_connected(cp, tree);
    for _ in 0..=cp.query.body().len() {
        let next = split_connected(&split_connected(&current, extended), tree);
        if next.descriptions.len() == current.descriptions.len() {
            return Ok(next);
        }
        current = next;
    }
    Err(RewriteError::Internal(
        "free-connex refinement did not stabilise".into(),
    ))
}

/// Splits the atoms of `cd` along variables outside `vars(alpha(head(V)))`:
/// atoms sharing such a variable end up in the same block.
///
/// Each resulting block is a singleton or has a variable common to all of its
/// atoms, and no variable outside the head image occurs in two blocks. Both
/// properties are checked.
pub fn hierarchical_split(
    cd: &CoverDescription,
    q: &ConjunctiveQuery,
) -> Result<Vec<CoverDescription>, RewriteError> {
    if !is_hierarchical(q) {
        return Err(RewriteError::NotHierarchical);
    }
    let head: BTreeSet<Var> = cd.head_image().vars();
    let atoms: Vec<&Atom> = cd.atoms.iter().collect();
    let linked = |a: &Atom, b: &Atom| a.args.iter().any(|x| !head.contains(x) && b.contains(x));
    let mut seen = vec![false; atoms.len()];
    let mut blocks: Vec<BTreeSet<Atom>> = Vec::new();
    for start in 0..atoms.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut block = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            block.insert(atoms[i].clone());
            for j in 0..atoms.len() {
                if !seen[j] && linked(atoms[i], atoms[j]) {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        blocks.push(block);
    }

    for (i, block) in blocks.iter().enumerate() {
        let vars = vars_of(block);
        for other in &blocks[i + 1..] {
            if let Some(x) = vars_of(other)
                .intersection(&vars)
                .find(|x| !head.contains(*x))
            {
                return Err(RewriteError::Internal(format!(
                    "variable {x} occurs in two hierarchical blocks"
                )));
            }
        }
        let common = block
            .iter()
            .map(Atom::vars)
            .reduce(|a, b| a.intersection(&b).cloned().collect())
            .unwrap_or_default();
        if block.len() > 1 && common.is_empty() {
            return Err(RewriteError::Internal(
                "hierarchical block has no common variable".into(),
            ));
        }
    }
    Ok(blocks
        .into_iter()
        .map(|atoms| CoverDescription {
            atoms,
            ..cd.clone()
        })
        .collect())
}

/// [`hierarchical_split`] applied to every description.
pub fn split_hierarchical(cp: &CoverPartition) -> Result<CoverPartition, RewriteError> {
    let mut out = cp.clone();
    let mut index = 0;
    while index < out.descriptions.len() {
        let parts = hierarchical_split(&out.descriptions[index], &cp.query)?;
        let n = parts.len();
        out.split_description(index, parts.into_iter().map(|p| p.atoms).collect());
        index += n;
    }
    Ok(out)
}

//! Backtracking search for variable bindings that map a set of atoms into a
//! set of tuples. Used with `Var` targets for homomorphisms and with `Const`
//! targets for query evaluation.

use std::collections::{BTreeSet, HashMap};
use std::hash::Hash;
use std::ops::ControlFlow;

use crate::model::{Atom, Rel, Var};

/// Target tuples grouped by relation.
pub(crate) struct TupleIndex<'a, T> {
    by_relation: HashMap<&'a Rel, Vec<&'a [T]>>,
}

impl<'a, T> TupleIndex<'a, T> {
    pub(crate) fn new(tuples: impl IntoIterator<Item = (&'a Rel, &'a [T])>) -> Self {
        let mut by_relation: HashMap<&'a Rel, Vec<&'a [T]>> = HashMap::new();
        for (rel, tuple) in tuples {
            by_relation.entry(rel).or_default().push(tuple);
        }
        TupleIndex { by_relation }
    }

    fn candidates(&self, rel: &Rel) -> &[&'a [T]] {
        self.by_relation.get(rel).map(Vec::as_slice).unwrap_or(&[])
    }
}

pub(crate) type Binding<T> = HashMap<Var, T>;

/// Greedy placement order: next is the atom sharing the most variables with
/// what is already bound; ties go to the earlier atom (canonical order).
fn placement_order<'s>(atoms: &[&'s Atom], bound: &BTreeSet<&'s Var>) -> Vec<&'s Atom> {
    let mut bound = bound.clone();
    let mut remaining: Vec<&Atom> = atoms.to_vec();
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let (best, _) = remaining
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let shared = a.args.iter().filter(|v| bound.contains(v)).count();
                (i, shared)
            })
            .fold((0, None), |(bi, bs), (i, s)| match bs {
                Some(best) if best >= s => (bi, Some(best)),
                _ => (i, Some(s)),
            });
        let atom = remaining.remove(best);
        bound.extend(atom.args.iter());
        order.push(atom);
    }
    order
}

/// Calls `visit` for every binding (extending `seed`) under which each atom of
/// `atoms` maps onto some tuple of `index`. Stops early when `visit` breaks.
pub(crate) fn for_each_match<'s, T, F>(
    atoms: impl IntoIterator<Item = &'s Atom>,
    index: &TupleIndex<'_, T>,
    seed: Binding<T>,
    mut visit: F,
) -> ControlFlow<()>
where
    T: Clone + Eq + Hash,
    F: FnMut(&Binding<T>) -> ControlFlow<()>,
{
    let atoms: Vec<&Atom> = atoms.into_iter().collect();
    let seeded: BTreeSet<&Var> = atoms
        .iter()
        .flat_map(|a| a.args.iter())
        .filter(|v| seed.contains_key(*v))
        .collect();
    let order = placement_order(&atoms, &seeded);
    let mut binding = seed;
    search(&order, index, &mut binding, &mut visit)
}

fn search<T, F>(
    order: &[&Atom],
    index: &TupleIndex<'_, T>,
    binding: &mut Binding<T>,
    visit: &mut F,
) -> ControlFlow<()>
where
    T: Clone + Eq + Hash,
    F: FnMut(&Binding<T>) -> ControlFlow<()>,
{
    let Some((atom, rest)) = order.split_first() else {
        return visit(binding);
    };
    let mut trail: Vec<Var> = Vec::with_capacity(atom.args.len());
    for tuple in index.candidates(&atom.relation) {
        if tuple.len() != atom.args.len() {
            continue;
        }
        let mut ok = true;
        for (var, value) in atom.args.iter().zip(tuple.iter()) {
            match binding.get(var) {
                Some(bound) if bound != value => {
                    ok = false;
                    break;
                }
                Some(_) => {}
                None => {
                    binding.insert(var.clone(), value.clone());
                    trail.push(var.clone());
                }
            }
        }
        if ok {
            search(rest, index, binding, visit)?;
        }
        for var in trail.drain(..) {
            binding.remove(&var);
        }
    }
    ControlFlow::Continue(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Var;

    #[test]
    fn greedy_order_prefers_connected_atoms() {
        let a = Atom::of("A", &["x"]);
        let b = Atom::of("B", &["y", "z"]);
        let c = Atom::of("C", &["x", "y"]);
        let order = placement_order(&[&a, &b, &c], &BTreeSet::new());
        assert_eq!(order, vec![&a, &c, &b]);
    }

    #[test]
    fn counts_all_matches() {
        let tuples: Vec<(Rel, Vec<Var>)> = vec![
            (Rel::new("E"), vec![Var::new("1"), Var::new("2")]),
            (Rel::new("E"), vec![Var::new("2"), Var::new("3")]),
            (Rel::new("E"), vec![Var::new("3"), Var::new("1")]),
        ];
        let index = TupleIndex::new(tuples.iter().map(|(r, t)| (r, t.as_slice())));
        let path = [Atom::of("E", &["x", "y"]), Atom::of("E", &["y", "z"])];
        let mut count = 0;
        let _ = for_each_match(&path, &index, Binding::new(), |_| {
            count += 1;
            ControlFlow::Continue(())
        });
        assert_eq!(count, 3);
    }
}

//! Structural classification of conjunctive queries.
//!
//! Acyclicity is decided by GYO ear removal, which also yields a join tree.
//! Free-connexness reuses the same procedure on the body extended by the head
//! atom. Hierarchical tests are the direct pairwise comparison of
//! `atoms(x)` sets.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::model::{vars_of, Atom, ConjunctiveQuery, Var};

/// A tree over atoms in which, for every variable, the atoms containing it
/// form a connected subtree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JoinTree {
    nodes: Vec<Atom>,
    edges: Vec<(usize, usize)>,
}

impl JoinTree {
    pub fn nodes(&self) -> &[Atom] {
        &self.nodes
    }

    /// Index pairs into [`JoinTree::nodes`].
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn index_of(&self, atom: &Atom) -> Option<usize> {
        self.nodes.iter().position(|n| n == atom)
    }

    pub fn neighbours(&self, node: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == node {
                    Some(b)
                } else if b == node {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Connected components of the subgraph induced by `atoms`. Components are
    /// returned in the order of their canonically smallest atom.
    pub fn components_of(&self, atoms: &BTreeSet<Atom>) -> Vec<BTreeSet<Atom>> {
        let members: BTreeSet<usize> = atoms.iter().filter_map(|a| self.index_of(a)).collect();
        let mut seen = BTreeSet::new();
        let mut components = Vec::new();
        for atom in atoms {
            let Some(start) = self.index_of(atom) else {
                continue;
            };
            if seen.contains(&start) {
                continue;
            }
            let mut component = BTreeSet::new();
            let mut queue = VecDeque::from([start]);
            seen.insert(start);
            while let Some(n) = queue.pop_front() {
                component.insert(self.nodes[n].clone());
                for m in self.neighbours(n) {
                    if members.contains(&m) && seen.insert(m) {
                        queue.push_back(m);
                    }
                }
            }
            components.push(component);
        }
        components
    }

    /// Node sets of the subtrees hanging below `root`, one per child, in
    /// child order.
    pub fn subtrees_below(&self, root: usize) -> Vec<(usize, BTreeSet<usize>)> {
        self.neighbours(root)
            .into_iter()
            .map(|child| {
                let mut subtree = BTreeSet::from([child]);
                let mut queue = VecDeque::from([child]);
                while let Some(n) = queue.pop_front() {
                    for m in self.neighbours(n) {
                        if m != root && subtree.insert(m) {
                            queue.push_back(m);
                        }
                    }
                }
                (child, subtree)
            })
            .collect()
    }
}

/// Why a claimed join tree is invalid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JoinTreeViolation {
    NodeMismatch,
    NotATree,
    PathProperty(Var),
}

/// Independent check of a join tree against an atom set: the nodes are the
/// atoms, the edges form a tree, and every variable's atoms are connected.
pub fn validate_join_tree(
    tree: &JoinTree,
    atoms: &BTreeSet<Atom>,
) -> Result<(), JoinTreeViolation> {
    let nodes: BTreeSet<&Atom> = tree.nodes.iter().collect();
    if nodes.len() != tree.nodes.len() || nodes != atoms.iter().collect() {
        return Err(JoinTreeViolation::NodeMismatch);
    }
    let n = tree.nodes.len();
    if tree.edges.len() + 1 != n || tree.edges.iter().any(|&(a, b)| a >= n || b >= n || a == b) {
        return Err(JoinTreeViolation::NotATree);
    }
    // union-find connectivity
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        parent[x] = r;
        r
    }
    for &(a, b) in &tree.edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return Err(JoinTreeViolation::NotATree);
        }
        parent[ra] = rb;
    }
    for var in vars_of(atoms) {
        let holding: BTreeSet<Atom> = atoms.iter().filter(|a| a.contains(&var)).cloned().collect();
        if tree.components_of(&holding).len() > 1 {
            return Err(JoinTreeViolation::PathProperty(var));
        }
    }
    Ok(())
}

/// GYO ear removal over `atoms` (taken in canonical order). Returns a join
/// tree iff the hypergraph is alpha-acyclic.
///
/// An ear is an atom whose variables shared with the remaining atoms are all
/// contained in a single other remaining atom, its witness. The first ear in
/// canonical order is removed each round and linked to its first witness.
pub fn gyo_join_tree<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> Option<JoinTree> {
    let nodes: Vec<Atom> = atoms
        .into_iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if nodes.is_empty() {
        return None;
    }
    let var_sets: Vec<BTreeSet<Var>> = nodes.iter().map(Atom::vars).collect();
    let mut alive: Vec<bool> = vec![true; nodes.len()];
    let mut occurrences: BTreeMap<&Var, usize> = BTreeMap::new();
    for vars in &var_sets {
        for v in vars {
            *occurrences.entry(v).or_default() += 1;
        }
    }
    let mut edges = Vec::with_capacity(nodes.len().saturating_sub(1));
    let mut remaining = nodes.len();
    while remaining > 1 {
        let mut removed = None;
        'ears: for ear in (0..nodes.len()).filter(|&i| alive[i]) {
            let shared: Vec<&Var> = var_sets[ear]
                .iter()
                .filter(|v| occurrences[v] > 1)
                .collect();
            for witness in (0..nodes.len()).filter(|&j| alive[j] && j != ear) {
                if shared.iter().all(|v| var_sets[witness].contains(*v)) {
                    removed = Some((ear, witness));
                    break 'ears;
                }
            }
        }
        let (ear, witness) = removed?;
        alive[ear] = false;
        for v in &var_sets[ear] {
            *occurrences.get_mut(v).unwrap() -= 1;
        }
        edges.push((ear, witness));
        remaining -= 1;
    }
    Some(JoinTree { nodes, edges })
}

/// Join tree of the body, if the query is acyclic.
pub fn is_acyclic(q: &ConjunctiveQuery) -> Option<JoinTree> {
    gyo_join_tree(q.body())
}

/// Join tree of `body ∪ {head}`, if the query is free-connex acyclic.
pub fn is_free_connex(q: &ConjunctiveQuery) -> Option<JoinTree> {
    is_acyclic(q)?;
    gyo_join_tree(q.body().iter().chain(std::iter::once(q.head())))
}

fn atoms_per_var(q: &ConjunctiveQuery) -> BTreeMap<Var, BTreeSet<usize>> {
    let mut map: BTreeMap<Var, BTreeSet<usize>> = BTreeMap::new();
    for (i, atom) in q.body().iter().enumerate() {
        for v in &atom.args {
            map.entry(v.clone()).or_default().insert(i);
        }
    }
    map
}

/// For all variables x, y: `atoms(x)` and `atoms(y)` are nested or disjoint.
pub fn is_hierarchical(q: &ConjunctiveQuery) -> bool {
    let sets: Vec<BTreeSet<usize>> = atoms_per_var(q).into_values().collect();
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            if !(a.is_subset(b) || b.is_subset(a) || a.is_disjoint(b)) {
                return false;
            }
        }
    }
    true
}

/// Hierarchical, and `atoms(x) ⊊ atoms(y)` with x in the head forces y into
/// the head.
pub fn is_q_hierarchical(q: &ConjunctiveQuery) -> bool {
    if !is_hierarchical(q) {
        return false;
    }
    let head = q.head_vars();
    let per_var = atoms_per_var(q);
    for (x, ax) in &per_var {
        if !head.contains(x) {
            continue;
        }
        for (y, ay) in &per_var {
            if ax.len() < ay.len() && ax.is_subset(ay) && !head.contains(y) {
                return false;
            }
        }
    }
    true
}

/// Body atoms linked when they share a variable outside the head.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverGraph {
    pub nodes: Vec<Atom>,
    /// Index pairs `(i, j)` with `i < j`, sorted.
    pub edges: Vec<(usize, usize)>,
}

impl CoverGraph {
    /// Connected components as atom sets, ordered by smallest atom.
    pub fn components(&self) -> Vec<BTreeSet<Atom>> {
        let n = self.nodes.len();
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            let mut component = BTreeSet::new();
            while let Some(x) = queue.pop_front() {
                component.insert(self.nodes[x].clone());
                for &y in &adjacency[x] {
                    if !seen[y] {
                        seen[y] = true;
                        queue.push_back(y);
                    }
                }
            }
            out.push(component);
        }
        out
    }
}

pub fn cover_graph(q: &ConjunctiveQuery) -> CoverGraph {
    let nodes: Vec<Atom> = q.body().iter().cloned().collect();
    let head = q.head_vars();
    let mut edges = Vec::new();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            let linked = nodes[i]
                .args
                .iter()
                .any(|v| !head.contains(v) && nodes[j].contains(v));
            if linked {
                edges.push((i, j));
            }
        }
    }
    CoverGraph { nodes, edges }
}

/// Weak head arity with its witnessing partition: the components of the
/// cover graph, and the largest number of head variables in one of them.
pub fn weak_head_arity(q: &ConjunctiveQuery) -> (usize, Vec<BTreeSet<Atom>>) {
    let partition = cover_graph(q).components();
    let head = q.head_vars();
    let k = partition
        .iter()
        .map(|block| vars_of(block).intersection(&head).count())
        .max()
        .unwrap_or(0);
    (k, partition)
}

/// Everything the classifiers know about one query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassReport {
    pub acyclic: bool,
    pub free_connex: bool,
    pub hierarchical: bool,
    pub q_hierarchical: bool,
    pub weak_head_arity: usize,
    pub join_tree: Option<JoinTree>,
    pub free_connex_tree: Option<JoinTree>,
}

impl ClassReport {
    pub fn of(q: &ConjunctiveQuery) -> Self {
        let join_tree = is_acyclic(q);
        let free_connex_tree = join_tree.as_ref().and_then(|_| is_free_connex(q));
        ClassReport {
            acyclic: join_tree.is_some(),
            free_connex: free_connex_tree.is_some(),
            hierarchical: is_hierarchical(q),
            q_hierarchical: is_q_hierarchical(q),
            weak_head_arity: weak_head_arity(q).0,
            join_tree,
            free_connex_tree,
        }
    }
}

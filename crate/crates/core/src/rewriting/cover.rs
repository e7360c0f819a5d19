//! Cover descriptions and cover partitions: extraction from a rewriting,
//! validation, the consistency transformation and the induced rewriting.

use std::collections::BTreeSet;
use std::fmt;

use crate::evaluation::{expand, expansion_source, Expansion, ViewApplication};
use crate::homomorphism::{containment_witness, invert_on_image, HomError, HomKind, Homomorphism};
use crate::model::{
    vars_of, Atom, ConjunctiveQuery, FreshVariableSource, Substitution, Var, View, ViewSet,
};

use super::RewriteError;

/// `B(atoms)`: variables of `atoms` that also occur in the head of `q` or in
/// a body atom of `q` outside `atoms`.
pub fn bridge_vars(
    q: &ConjunctiveQuery,
    atoms: &BTreeSet<Atom>,
) -> Result<BTreeSet<Var>, RewriteError> {
    if let Some(atom) = atoms.iter().find(|a| !q.body().contains(*a)) {
        return Err(RewriteError::NotASubset { atom: atom.clone() });
    }
    Ok(bridge_vars_unchecked(q, atoms))
}

pub(crate) fn bridge_vars_unchecked(q: &ConjunctiveQuery, atoms: &BTreeSet<Atom>) -> BTreeSet<Var> {
    let mut outside = q.head_vars();
    outside.extend(vars_of(q.body().difference(atoms)));
    vars_of(atoms).intersection(&outside).cloned().collect()
}

/// `(atoms, view, alpha, psi)`: `alpha` applies the view so that its body
/// covers `atoms`, and `psi` maps the applied view back into the query.
#[derive(Clone, PartialEq, Eq)]
pub struct CoverDescription {
    pub atoms: BTreeSet<Atom>,
    pub view: View,
    pub alpha: Substitution,
    pub psi: Substitution,
}

impl CoverDescription {
    pub fn application(&self) -> ViewApplication {
        ViewApplication {
            view: self.view.clone(),
            alpha: self.alpha.clone(),
        }
    }

    /// `alpha(head(V))`, the atom contributed to the induced rewriting.
    pub fn head_image(&self) -> Atom {
        self.alpha.apply(self.view.head())
    }

    pub fn body_image(&self) -> BTreeSet<Atom> {
        self.alpha.apply_all(self.view.body())
    }

    /// `vars(alpha(V))`, which is also the range of `alpha`.
    pub fn image_vars(&self) -> BTreeSet<Var> {
        vars_of(&self.body_image())
    }

    fn with_atoms(&self, atoms: BTreeSet<Atom>) -> Self {
        CoverDescription {
            atoms,
            ..self.clone()
        }
    }
}

impl fmt::Debug for CoverDescription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoverDescription")
            .field("atoms", &self.atoms)
            .field("view", self.view.name())
            .field("alpha", &self.alpha)
            .field("psi", &self.psi)
            .finish()
    }
}

/// A violated condition of a cover description, numbered (1) to (4).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverViolation {
    pub condition: u8,
    pub detail: String,
}

impl fmt::Display for CoverViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "condition ({}): {}", self.condition, self.detail)
    }
}

/// Checks the four defining conditions directly and lists every violation:
/// (1) atoms ⊆ α(body(V)), (2) B(atoms) ⊆ α(vars(head(V))), (3) ψ is a body
/// homomorphism from α(V) into `q`, (4) ψ is the identity on vars(atoms).
pub fn validate_cover_description(
    cd: &CoverDescription,
    q: &ConjunctiveQuery,
) -> Result<(), Vec<CoverViolation>> {
    let mut violations = Vec::new();
    let mut violation =
        |condition: u8, detail: String| violations.push(CoverViolation { condition, detail });
    let body_image = cd.body_image();
    for atom in &cd.atoms {
        if !q.body().contains(atom) {
            violation(1, format!("{atom} is not a body atom of the query"));
        } else if !body_image.contains(atom) {
            violation(1, format!("{atom} is not covered by the applied view"));
        }
    }
    let head_image = cd.head_image().vars();
    for x in bridge_vars_unchecked(q, &cd.atoms) {
        if !head_image.contains(&x) {
            violation(2, format!("bridge variable {x} is not a head image"));
        }
    }
    for x in vars_of(&body_image) {
        if !cd.psi.contains(&x) {
            violation(3, format!("psi is undefined on {x}"));
        }
    }
    for atom in &body_image {
        let image = cd.psi.apply(atom);
        if !q.body().contains(&image) {
            violation(3, format!("psi maps {atom} to {image}, not a body atom"));
        }
    }
    for x in vars_of(&cd.atoms) {
        if cd.psi.get(&x) != &x {
            violation(4, format!("psi moves {x} to {}", cd.psi.get(&x)));
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Cover descriptions whose atom sets partition the body of `query`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverPartition {
    pub descriptions: Vec<CoverDescription>,
    pub query: ConjunctiveQuery,
    pub consistent: bool,
}

/// Ways a cover partition can be malformed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PartitionViolation {
    Description {
        index: usize,
        violations: Vec<CoverViolation>,
    },
    EmptyBlock {
        index: usize,
    },
    Overlap {
        atom: Atom,
    },
    Uncovered {
        atom: Atom,
    },
    /// `var` occurs in the image of description `index` outside its bridge
    /// variables and in the range of description `other`.
    Inconsistent {
        index: usize,
        other: usize,
        var: Var,
    },
}

impl fmt::Display for PartitionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartitionViolation::Description { index, violations } => {
                write!(f, "description {index}:")?;
                for v in violations {
                    write!(f, " {v};")?;
                }
                Ok(())
            }
            PartitionViolation::EmptyBlock { index } => write!(f, "description {index} has no atoms"),
            PartitionViolation::Overlap { atom } => write!(f, "{atom} is in two blocks"),
            PartitionViolation::Uncovered { atom } => write!(f, "{atom} is in no block"),
            PartitionViolation::Inconsistent { index, other, var } => write!(
                f,
                "{var} is a non-bridge variable of description {index} and in the range of description {other}"
            ),
        }
    }
}

/// First consistency conflict `(j, z, i)`, if any.
fn find_conflict(cp: &CoverPartition) -> Option<(usize, Var, usize)> {
    let ranges: Vec<BTreeSet<Var>> = cp
        .descriptions
        .iter()
        .map(CoverDescription::image_vars)
        .collect();
    for (j, cd) in cp.descriptions.iter().enumerate() {
        let bridges = bridge_vars_unchecked(&cp.query, &cd.atoms);
        for z in ranges[j].difference(&bridges) {
            if let Some(i) = (0..ranges.len()).find(|&i| i != j && ranges[i].contains(z)) {
                return Some((j, z.clone(), i));
            }
        }
    }
    None
}

pub fn is_consistent(cp: &CoverPartition) -> bool {
    find_conflict(cp).is_none()
}

/// Validates every description, the partition property and, when the
/// partition claims it, consistency.
pub fn validate_cover_partition(cp: &CoverPartition) -> Result<(), Vec<PartitionViolation>> {
    let mut violations = Vec::new();
    let mut seen = BTreeSet::new();
    for (index, cd) in cp.descriptions.iter().enumerate() {
        if cd.atoms.is_empty() {
            violations.push(PartitionViolation::EmptyBlock { index });
        }
        if let Err(vs) = validate_cover_description(cd, &cp.query) {
            violations.push(PartitionViolation::Description {
                index,
                violations: vs,
            });
        }
        for atom in &cd.atoms {
            if !seen.insert(atom) {
                violations.push(PartitionViolation::Overlap { atom: atom.clone() });
            }
        }
    }
    for atom in cp.query.body() {
        if !seen.contains(atom) {
            violations.push(PartitionViolation::Uncovered { atom: atom.clone() });
        }
    }
    if cp.consistent {
        if let Some((index, var, other)) = find_conflict(cp) {
            violations.push(PartitionViolation::Inconsistent { index, other, var });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

pub(crate) fn check_partition(cp: &CoverPartition, stage: &str) -> Result<(), RewriteError> {
    validate_cover_partition(cp).map_err(|violations| {
        let detail: Vec<String> = violations.iter().map(ToString::to_string).collect();
        RewriteError::Internal(format!(
            "{stage}: invalid cover partition: {}",
            detail.join("; ")
        ))
    })
}

/// Reads a cover partition off a rewriting of the minimal query `q_min`.
///
/// The rewriting is expanded; a homomorphism `h` from `q_min` into the
/// expansion and an inverse `h'` on its image are computed, and the expansion
/// is renamed so that `h` becomes the identity. Each body atom of `q_min` then
/// goes to the first application whose body covers it, with `psi` the
/// restriction of `h'`. Applications that receive no atom are dropped.
pub fn extract_cover_partition(
    q_min: &ConjunctiveQuery,
    vs: &ViewSet,
    rewriting: &ConjunctiveQuery,
) -> Result<CoverPartition, RewriteError> {
    let mut fresh = expansion_source(q_min, vs);
    let expansion = expand(rewriting, vs, &mut fresh)?;
    let h = containment_witness(&expansion.query, q_min)?.ok_or(RewriteError::NotARewriting)?;
    let h_inv = invert_on_image(q_min, &expansion.query, &h).map_err(|e| match e {
        HomError::NoInverse => RewriteError::NotARewriting,
        HomError::NotMinimal => RewriteError::NotMinimal,
        other => RewriteError::Hom(other),
    })?;

    // rho(h(x)) = x on vars(q_min); other expansion variables keep their name
    // unless it is taken by q_min.
    let q_vars = q_min.vars();
    fresh.reserve(&expansion.query.vars());
    let mut rho = Substitution::new();
    for x in &q_vars {
        rho.insert(h.mapping.get(x).clone(), x.clone());
    }
    for y in expansion.query.vars() {
        if !rho.contains(&y) && q_vars.contains(&y) {
            rho.insert(y, fresh.fresh());
        }
    }
    let mut rho_inv = Substitution::new();
    for (from, to) in rho.iter() {
        rho_inv.insert(to.clone(), from.clone());
    }
    let psi_all = h_inv.mapping.after(&rho_inv);

    let applications: Vec<ViewApplication> = expansion
        .applications
        .iter()
        .map(|app| ViewApplication {
            view: app.view.clone(),
            alpha: app
                .alpha
                .iter()
                .map(|(x, y)| (x.clone(), rho.get(y).clone()))
                .collect(),
        })
        .collect();
    let mut blocks: Vec<BTreeSet<Atom>> = vec![BTreeSet::new(); applications.len()];
    let images: Vec<BTreeSet<Atom>> = applications
        .iter()
        .map(ViewApplication::body_image)
        .collect();
    for atom in q_min.body() {
        let i = images
            .iter()
            .position(|image| image.contains(atom))
            .ok_or_else(|| {
                RewriteError::Internal(format!("{atom} is not covered by the expansion"))
            })?;
        blocks[i].insert(atom.clone());
    }
    let descriptions = applications
        .into_iter()
        .zip(blocks)
        .filter(|(_, atoms)| !atoms.is_empty())
        .map(|(app, atoms)| {
            let range = app.range();
            CoverDescription {
                atoms,
                psi: psi_all.restricted_to(&range),
                view: app.view,
                alpha: app.alpha,
            }
        })
        .collect();
    let cp = CoverPartition {
        descriptions,
        query: q_min.clone(),
        consistent: false,
    };
    let cp = CoverPartition {
        consistent: is_consistent(&cp),
        ..cp
    };
    check_partition(&cp, "extraction")?;
    Ok(cp)
}

/// Renames variables until no non-bridge variable of one description is in
/// the range of another. The atom partition is left untouched.
///
/// For a conflict on `z` between description `j` (where `z` is not a bridge
/// variable) and description `i`: if `z` does not occur in the atoms of `j`,
/// every `alpha_j` image `z` becomes a fresh `z'` with `psi_j(z') =
/// psi_j(z)`; otherwise `z` occurs only in the atoms of `j` and is renamed
/// the same way inside `i`.
pub fn make_consistent(cp: &CoverPartition, fresh: &mut FreshVariableSource) -> CoverPartition {
    let mut cp = cp.clone();
    for cd in &cp.descriptions {
        fresh.reserve(&cd.image_vars());
    }
    fresh.reserve(&cp.query.vars());
    let cap = 1 + cp
        .descriptions
        .iter()
        .map(|cd| cd.image_vars().len())
        .sum::<usize>()
        * cp.descriptions.len().max(1);
    let mut steps = 0;
    while let Some((j, z, i)) = find_conflict(&cp) {
        steps += 1;
        assert!(steps <= cap, "consistency renaming does not terminate");
        let target = if vars_of(&cp.descriptions[j].atoms).contains(&z) {
            i
        } else {
            j
        };
        let cd = &mut cp.descriptions[target];
        let z_new = fresh.fresh();
        let renamed: Vec<Var> = cd
            .alpha
            .iter()
            .filter(|(_, image)| **image == z)
            .map(|(x, _)| x.clone())
            .collect();
        for x in renamed {
            cd.alpha.insert(x, z_new.clone());
        }
        let back = cd.psi.get(&z).clone();
        cd.psi.remove(&z);
        cd.psi.insert(z_new, back);
        log::trace!("renamed {z} in description {target}");
    }
    cp.consistent = true;
    cp
}

/// `head(q) :- alpha_1(head(V_1)), ..., alpha_m(head(V_m))`.
pub fn induced_rewriting(
    cp: &CoverPartition,
    vs: &ViewSet,
) -> Result<ConjunctiveQuery, RewriteError> {
    if !cp.consistent || !is_consistent(cp) {
        return Err(RewriteError::Inconsistent);
    }
    let body: Vec<Atom> = cp
        .descriptions
        .iter()
        .map(CoverDescription::head_image)
        .collect();
    Ok(ConjunctiveQuery::make(
        cp.query.head().clone(),
        body,
        &vs.derived_schema(),
    )?)
}

/// The expansion of the induced rewriting along the partition's own
/// applications, with the two homomorphisms that show it equivalent to the
/// query: the identity into it, and the union of the `psi` maps out of it.
pub fn induced_expansion(
    cp: &CoverPartition,
    vs: &ViewSet,
) -> Result<(Expansion, Homomorphism, Homomorphism), RewriteError> {
    if !cp.consistent || !is_consistent(cp) {
        return Err(RewriteError::Inconsistent);
    }
    let applications: Vec<ViewApplication> = cp
        .descriptions
        .iter()
        .map(CoverDescription::application)
        .collect();
    let body: BTreeSet<Atom> = applications
        .iter()
        .flat_map(ViewApplication::body_image)
        .collect();
    let query = ConjunctiveQuery::make(cp.query.head().clone(), body, vs.base_schema())?;
    let into = Homomorphism {
        mapping: Substitution::identity_on(&cp.query.vars()),
        kind: HomKind::Full,
    };
    let mut psi = Substitution::new();
    for cd in &cp.descriptions {
        for (x, y) in cd.psi.iter() {
            if let Some(prev) = psi.insert(x.clone(), y.clone()) {
                if &prev != y {
                    return Err(RewriteError::Internal(format!(
                        "psi maps {x} to both {prev} and {y}"
                    )));
                }
            }
        }
    }
    let out = Homomorphism {
        mapping: psi,
        kind: HomKind::Full,
    };
    into.validate(&cp.query, &query)
        .and_then(|_| out.validate(&query, &cp.query))
        .map_err(|v| RewriteError::Internal(format!("induced expansion: {v}")))?;
    Ok((
        Expansion {
            query,
            applications,
        },
        into,
        out,
    ))
}

impl CoverPartition {
    /// Replaces description `index` by copies restricted to `blocks`.
    pub(crate) fn split_description(&mut self, index: usize, blocks: Vec<BTreeSet<Atom>>) {
        let cd = self.descriptions.remove(index);
        let parts: Vec<CoverDescription> = blocks.into_iter().map(|b| cd.with_atoms(b)).collect();
        if parts.len() > 1 {
            self.consistent = false;
        }
        for (offset, part) in parts.into_iter().enumerate() {
            self.descriptions.insert(index + offset, part);
        }
    }
}

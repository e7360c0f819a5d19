//! Serializable envelopes for machine-readable output. Queries and atoms
//! appear as strings in the rule syntax.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::homomorphism::Homomorphism;
use crate::model::{Atom, Substitution};
use crate::rewriting::{CoverDescription, CoverPartition, RewriteReport, SplitViews, Verification};
use crate::structure::{ClassReport, JoinTree};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TreeJson {
    pub nodes: Vec<String>,
    pub edges: Vec<[usize; 2]>,
}

impl From<&JoinTree> for TreeJson {
    fn from(tree: &JoinTree) -> Self {
        TreeJson {
            nodes: tree.nodes().iter().map(Atom::to_string).collect(),
            edges: tree.edges().iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassJson {
    pub acyclic: bool,
    pub free_connex: bool,
    pub hierarchical: bool,
    pub q_hierarchical: bool,
    pub weak_head_arity: usize,
    pub join_tree: Option<TreeJson>,
    pub free_connex_tree: Option<TreeJson>,
}

impl From<&ClassReport> for ClassJson {
    fn from(c: &ClassReport) -> Self {
        ClassJson {
            acyclic: c.acyclic,
            free_connex: c.free_connex,
            hierarchical: c.hierarchical,
            q_hierarchical: c.q_hierarchical,
            weak_head_arity: c.weak_head_arity,
            join_tree: c.join_tree.as_ref().map(TreeJson::from),
            free_connex_tree: c.free_connex_tree.as_ref().map(TreeJson::from),
        }
    }
}

pub fn substitution_json(s: &Substitution) -> BTreeMap<String, String> {
    s.iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn homomorphism_json(h: &Option<Homomorphism>) -> Option<BTreeMap<String, String>> {
    h.as_ref().map(|h| substitution_json(&h.mapping))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DescriptionJson {
    pub atoms: Vec<String>,
    pub view: String,
    pub alpha: BTreeMap<String, String>,
    pub psi: BTreeMap<String, String>,
}

impl From<&CoverDescription> for DescriptionJson {
    fn from(cd: &CoverDescription) -> Self {
        DescriptionJson {
            atoms: cd.atoms.iter().map(Atom::to_string).collect(),
            view: cd.view.name().to_string(),
            alpha: substitution_json(&cd.alpha),
            psi: substitution_json(&cd.psi),
        }
    }
}

pub fn partition_json(cp: &CoverPartition) -> Vec<DescriptionJson> {
    cp.descriptions.iter().map(DescriptionJson::from).collect()
}

/// Homomorphisms between a query and the expansion of a rewriting.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HomomorphismsJson {
    /// Query into expansion.
    pub into_expansion: Option<BTreeMap<String, String>>,
    /// Expansion into query.
    pub from_expansion: Option<BTreeMap<String, String>>,
}

impl From<&Verification> for HomomorphismsJson {
    fn from(v: &Verification) -> Self {
        HomomorphismsJson {
            into_expansion: homomorphism_json(&v.into_expansion),
            from_expansion: homomorphism_json(&v.from_expansion),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessJson {
    pub expansion: String,
    pub cover_partition: Vec<DescriptionJson>,
    pub homomorphisms: HomomorphismsJson,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FragmentJson {
    pub name: String,
    pub view: String,
    pub positions: Vec<usize>,
}

pub fn back_map_json(split: &SplitViews) -> Vec<FragmentJson> {
    split
        .back_map
        .iter()
        .map(|(name, f)| FragmentJson {
            name: name.to_string(),
            view: f.view.to_string(),
            positions: f.positions.clone(),
        })
        .collect()
}

/// Result of a rewriting run. `status` is `OK` or `NONE`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RewriteJson {
    pub status: &'static str,
    pub reason: Option<&'static str>,
    pub target: &'static str,
    pub query_core: String,
    pub candidate: Option<String>,
    pub rewriting: Option<String>,
    pub class: Option<ClassJson>,
    pub witness: Option<WitnessJson>,
    pub split_views: Option<Vec<FragmentJson>>,
}

impl From<&RewriteReport> for RewriteJson {
    fn from(r: &RewriteReport) -> Self {
        let witness = match (&r.verification, &r.witness) {
            (Some(v), Some(cp)) => Some(WitnessJson {
                expansion: v.expansion.query.to_string(),
                cover_partition: partition_json(cp),
                homomorphisms: HomomorphismsJson::from(v),
            }),
            _ => None,
        };
        RewriteJson {
            status: if r.rewriting.is_some() { "OK" } else { "NONE" },
            reason: r.none_reason.map(|n| n.code()),
            target: r.target.as_str(),
            query_core: r.query_core.to_string(),
            candidate: r.candidate.as_ref().map(ToString::to_string),
            rewriting: r.rewriting.as_ref().map(ToString::to_string),
            class: r.class.as_ref().map(ClassJson::from),
            witness,
            split_views: r.split.as_ref().map(back_map_json),
        }
    }
}

/// Failure envelope shared by every command.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ErrorJson {
    pub status: &'static str,
    pub error: ErrorBody,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

impl ErrorJson {
    pub fn new(code: impl Into<String>, message: impl Into<String>) -> Self {
        ErrorJson {
            status: "ERROR",
            error: ErrorBody {
                code: code.into(),
                message: message.into(),
            },
        }
    }
}

//! Value types shared by every other module: variables, constants, atoms,
//! conjunctive queries, views, databases and substitutions.
//!
//! Query atoms only ever carry variables; constants live exclusively in
//! database facts. The two namespaces are kept apart by the type system
//! ([`Var`] vs [`Const`]) instead of a runtime tag.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

macro_rules! name_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(name: impl AsRef<str>) -> Self {
                $name(Arc::from(name.as_ref()))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name::new(s)
            }
        }

        impl serde::Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.0)
            }
        }
    };
}

name_type!(
    /// A query variable.
    Var
);
name_type!(
    /// A data value appearing in database facts.
    Const
);
name_type!(
    /// A relation symbol.
    Rel
);

/// Head symbol used for queries whose head name is not given.
pub const DEFAULT_HEAD: &str = "Ans";

/// Errors raised while constructing model values. Each variant carries a
/// stable code (see [`ModelError::code`]).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("head variable {var} does not occur in the body")]
    UnsafeQuery { var: Var },
    #[error("query body is empty")]
    EmptyBody,
    #[error("head relation {relation} occurs in the body")]
    HeadInBody { relation: Rel },
    #[error("relation {relation} used with arity {found}, expected {expected}")]
    ArityMismatch {
        relation: Rel,
        expected: usize,
        found: usize,
    },
    #[error("relation {relation} is not part of the schema")]
    UnknownRelation { relation: Rel },
    #[error("duplicate view name {name}")]
    DuplicateView { name: Rel },
    #[error("view name {name} clashes with a base relation")]
    ViewNameClash { name: Rel },
}

impl ModelError {
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::UnsafeQuery { .. } => "UNSAFE_QUERY",
            ModelError::EmptyBody => "EMPTY_BODY",
            ModelError::HeadInBody { .. } => "HEAD_IN_BODY",
            ModelError::ArityMismatch { .. } => "ARITY_MISMATCH",
            ModelError::UnknownRelation { .. } => "UNKNOWN_RELATION",
            ModelError::DuplicateView { .. } => "DUPLICATE_VIEW",
            ModelError::ViewNameClash { .. } => "VIEW_NAME_CLASH",
        }
    }
}

/// Relation symbols with their arities.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schema {
    arities: BTreeMap<Rel, usize>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `relation` with `arity`, failing if it is already known with a
    /// different arity.
    pub fn declare(&mut self, relation: &Rel, arity: usize) -> Result<(), ModelError> {
        match self.arities.get(relation) {
            Some(&known) if known != arity => Err(ModelError::ArityMismatch {
                relation: relation.clone(),
                expected: known,
                found: arity,
            }),
            Some(_) => Ok(()),
            None => {
                self.arities.insert(relation.clone(), arity);
                Ok(())
            }
        }
    }

    /// Schema of exactly the relations used by `atoms`.
    pub fn infer<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> Result<Self, ModelError> {
        let mut schema = Schema::new();
        for atom in atoms {
            schema.declare(&atom.relation, atom.arity())?;
        }
        Ok(schema)
    }

    pub fn arity(&self, relation: &Rel) -> Option<usize> {
        self.arities.get(relation).copied()
    }

    pub fn contains(&self, relation: &Rel) -> bool {
        self.arities.contains_key(relation)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&Rel, usize)> {
        self.arities.iter().map(|(r, a)| (r, *a))
    }

    pub fn max_arity(&self) -> usize {
        self.arities.values().copied().max().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.arities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arities.is_empty()
    }

    /// Merges `other` into `self`, reporting the first arity conflict.
    pub fn extend(&mut self, other: &Schema) -> Result<(), ModelError> {
        for (rel, arity) in other.relations() {
            self.declare(rel, arity)?;
        }
        Ok(())
    }

    fn check(&self, atom: &Atom) -> Result<(), ModelError> {
        match self.arity(&atom.relation) {
            None => Err(ModelError::UnknownRelation {
                relation: atom.relation.clone(),
            }),
            Some(expected) if expected != atom.arity() => Err(ModelError::ArityMismatch {
                relation: atom.relation.clone(),
                expected,
                found: atom.arity(),
            }),
            Some(_) => Ok(()),
        }
    }
}

/// `R(x1, ..., xr)` over variables. The derived ordering (relation, then
/// arguments lexicographically) is the canonical atom order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub relation: Rel,
    pub args: Vec<Var>,
}

impl Atom {
    pub fn new(relation: impl Into<Rel>, args: impl IntoIterator<Item = Var>) -> Self {
        Atom {
            relation: relation.into(),
            args: args.into_iter().collect(),
        }
    }

    /// `Atom::of("R", &["x", "y"])` is `R(x,y)`.
    pub fn of(relation: &str, args: &[&str]) -> Self {
        Atom::new(Rel::new(relation), args.iter().map(Var::new))
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.args.iter().cloned().collect()
    }

    pub fn contains(&self, var: &Var) -> bool {
        self.args.contains(var)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, arg) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{arg}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Variables occurring in any of `atoms`.
pub fn vars_of<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> BTreeSet<Var> {
    atoms
        .into_iter()
        .flat_map(|a| a.args.iter().cloned())
        .collect()
}

/// A finite variable-to-variable map. Variables outside the domain are fixed
/// points.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Substitution {
    map: BTreeMap<Var, Var>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn identity_on<'a>(vars: impl IntoIterator<Item = &'a Var>) -> Self {
        vars.into_iter().map(|v| (v.clone(), v.clone())).collect()
    }

    pub fn insert(&mut self, from: Var, to: Var) -> Option<Var> {
        self.map.insert(from, to)
    }

    pub fn remove(&mut self, var: &Var) -> Option<Var> {
        self.map.remove(var)
    }

    /// Image of `var`; identity when unmapped.
    pub fn get<'a>(&'a self, var: &'a Var) -> &'a Var {
        self.map.get(var).unwrap_or(var)
    }

    pub fn mapped(&self, var: &Var) -> Option<&Var> {
        self.map.get(var)
    }

    pub fn contains(&self, var: &Var) -> bool {
        self.map.contains_key(var)
    }

    pub fn apply(&self, atom: &Atom) -> Atom {
        Atom {
            relation: atom.relation.clone(),
            args: atom.args.iter().map(|v| self.get(v).clone()).collect(),
        }
    }

    pub fn apply_all<'a>(&self, atoms: impl IntoIterator<Item = &'a Atom>) -> BTreeSet<Atom> {
        atoms.into_iter().map(|a| self.apply(a)).collect()
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &Substitution) -> Substitution {
        let mut out: BTreeMap<Var, Var> = first
            .map
            .iter()
            .map(|(k, v)| (k.clone(), self.get(v).clone()))
            .collect();
        for (k, v) in &self.map {
            out.entry(k.clone()).or_insert_with(|| v.clone());
        }
        Substitution { map: out }
    }

    /// Keeps only the bindings of variables in `vars`.
    pub fn restricted_to(&self, vars: &BTreeSet<Var>) -> Substitution {
        self.map
            .iter()
            .filter(|(k, _)| vars.contains(*k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Var> {
        self.map.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Var)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl FromIterator<(Var, Var)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (Var, Var)>>(iter: I) -> Self {
        Substitution {
            map: iter.into_iter().collect(),
        }
    }
}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}->{v}")?;
        }
        f.write_str("}")
    }
}

/// Applies `s` to `atom`. Unmapped variables stay fixed.
pub fn apply_substitution(s: &Substitution, atom: &Atom) -> Atom {
    s.apply(atom)
}

/// `head ← body` with a non-empty body, a safe head and a head symbol that
/// does not occur in the body.
#[derive(Clone, PartialEq, Eq)]
pub struct ConjunctiveQuery {
    head: Atom,
    body: BTreeSet<Atom>,
    schema: Schema,
}

impl ConjunctiveQuery {
    /// Validates and builds a query over `schema`. The body is deduplicated.
    pub fn make(
        head: Atom,
        body: impl IntoIterator<Item = Atom>,
        schema: &Schema,
    ) -> Result<Self, ModelError> {
        let body: BTreeSet<Atom> = body.into_iter().collect();
        if body.is_empty() {
            return Err(ModelError::EmptyBody);
        }
        if body.iter().any(|a| a.relation == head.relation) || schema.contains(&head.relation) {
            return Err(ModelError::HeadInBody {
                relation: head.relation,
            });
        }
        for atom in &body {
            schema.check(atom)?;
        }
        let body_vars = vars_of(&body);
        if let Some(var) = head.args.iter().find(|v| !body_vars.contains(*v)) {
            return Err(ModelError::UnsafeQuery { var: var.clone() });
        }
        let schema = Schema::infer(&body)?;
        Ok(ConjunctiveQuery { head, body, schema })
    }

    /// Builds a query whose schema is inferred from its own body.
    pub fn new(head: Atom, body: impl IntoIterator<Item = Atom>) -> Result<Self, ModelError> {
        let body: Vec<Atom> = body.into_iter().collect();
        let schema = Schema::infer(&body)?;
        Self::make(head, body, &schema)
    }

    pub fn head(&self) -> &Atom {
        &self.head
    }

    pub fn body(&self) -> &BTreeSet<Atom> {
        &self.body
    }

    /// Relations used by the body.
    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn head_vars(&self) -> BTreeSet<Var> {
        self.head.vars()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        vars_of(&self.body)
    }

    pub fn quantified_vars(&self) -> BTreeSet<Var> {
        let head = self.head_vars();
        self.vars()
            .into_iter()
            .filter(|v| !head.contains(v))
            .collect()
    }

    pub fn arity(&self) -> usize {
        self.head.arity()
    }

    pub fn is_boolean(&self) -> bool {
        self.head.args.is_empty()
    }

    /// Same head, different body; re-validated.
    pub fn with_body(&self, body: impl IntoIterator<Item = Atom>) -> Result<Self, ModelError> {
        ConjunctiveQuery::new(self.head.clone(), body)
    }

    pub(crate) fn set_head_relation(&mut self, relation: Rel) {
        self.head.relation = relation;
    }

    /// Image of the whole query under `s`.
    pub fn substitute(&self, s: &Substitution) -> ConjunctiveQuery {
        ConjunctiveQuery {
            head: s.apply(&self.head),
            body: s.apply_all(&self.body),
            schema: self.schema.clone(),
        }
    }
}

impl fmt::Display for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :- ", self.head)?;
        for (i, atom) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{atom}")?;
        }
        f.write_str(".")
    }
}

impl fmt::Debug for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A query whose head relation names a derived relation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct View {
    query: ConjunctiveQuery,
}

impl View {
    pub fn new(query: ConjunctiveQuery) -> Self {
        View { query }
    }

    pub fn name(&self) -> &Rel {
        &self.query.head.relation
    }

    pub fn query(&self) -> &ConjunctiveQuery {
        &self.query
    }

    pub fn head(&self) -> &Atom {
        self.query.head()
    }

    pub fn body(&self) -> &BTreeSet<Atom> {
        self.query.body()
    }

    pub fn arity(&self) -> usize {
        self.query.arity()
    }

    pub fn is_quantified(&self, var: &Var) -> bool {
        !self.query.head.contains(var) && vars_of(self.body()).contains(var)
    }
}

/// Views over one base schema with pairwise distinct head symbols and
/// pairwise disjoint variable names.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ViewSet {
    views: Vec<View>,
    base: Schema,
}

impl ViewSet {
    /// Validates `views` and renames variables so that no two views share a
    /// variable name. Renamed variables get the suffix `_<view name>`.
    pub fn new(views: impl IntoIterator<Item = View>) -> Result<Self, ModelError> {
        let views: Vec<View> = views.into_iter().collect();
        let mut base = Schema::new();
        let mut names = BTreeSet::new();
        for view in &views {
            base.extend(view.query.schema())?;
            if !names.insert(view.name().clone()) {
                return Err(ModelError::DuplicateView {
                    name: view.name().clone(),
                });
            }
        }
        if let Some(name) = names.iter().find(|n| base.contains(n)) {
            return Err(ModelError::ViewNameClash { name: name.clone() });
        }

        let mut taken: HashSet<Var> = HashSet::new();
        let all_vars: HashSet<Var> = views.iter().flat_map(|v| v.query.vars()).collect();
        let mut normalized = Vec::with_capacity(views.len());
        for view in views {
            let mut renaming = Substitution::new();
            for var in view.query.vars() {
                if taken.contains(&var) {
                    let mut candidate = Var::new(format!("{}_{}", var, view.name()));
                    let mut n = 2;
                    while taken.contains(&candidate) || all_vars.contains(&candidate) {
                        candidate = Var::new(format!("{}_{}{}", var, view.name(), n));
                        n += 1;
                    }
                    renaming.insert(var, candidate);
                }
            }
            let view = if renaming.is_empty() {
                view
            } else {
                View::new(view.query.substitute(&renaming))
            };
            taken.extend(view.query.vars());
            normalized.push(view);
        }
        Ok(ViewSet {
            views: normalized,
            base,
        })
    }

    pub fn views(&self) -> &[View] {
        &self.views
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    pub fn base_schema(&self) -> &Schema {
        &self.base
    }

    /// Schema of the view head relations.
    pub fn derived_schema(&self) -> Schema {
        let mut schema = Schema::new();
        for view in &self.views {
            // Names are distinct, so this cannot conflict.
            let _ = schema.declare(view.name(), view.arity());
        }
        schema
    }

    pub fn index_of(&self, name: &Rel) -> Option<usize> {
        self.views.iter().position(|v| v.name() == name)
    }

    pub fn get(&self, name: &Rel) -> Option<&View> {
        self.views.iter().find(|v| v.name() == name)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.views.iter().flat_map(|v| v.query.vars()).collect()
    }
}

/// A ground `R(a1, ..., ar)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub relation: Rel,
    pub args: Vec<Const>,
}

impl Fact {
    pub fn new(relation: impl Into<Rel>, args: impl IntoIterator<Item = Const>) -> Self {
        Fact {
            relation: relation.into(),
            args: args.into_iter().collect(),
        }
    }

    pub fn of(relation: &str, args: &[&str]) -> Self {
        Fact::new(Rel::new(relation), args.iter().map(Const::new))
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, arg) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{arg}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A finite set of facts.
#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct Database {
    facts: BTreeSet<Fact>,
}

impl Database {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a database, checking every fact against `schema`.
    pub fn with_schema(
        facts: impl IntoIterator<Item = Fact>,
        schema: &Schema,
    ) -> Result<Self, ModelError> {
        let facts: BTreeSet<Fact> = facts.into_iter().collect();
        for fact in &facts {
            match schema.arity(&fact.relation) {
                None => {
                    return Err(ModelError::UnknownRelation {
                        relation: fact.relation.clone(),
                    })
                }
                Some(expected) if expected != fact.args.len() => {
                    return Err(ModelError::ArityMismatch {
                        relation: fact.relation.clone(),
                        expected,
                        found: fact.args.len(),
                    })
                }
                Some(_) => {}
            }
        }
        Ok(Database { facts })
    }

    pub fn insert(&mut self, fact: Fact) -> bool {
        self.facts.insert(fact)
    }

    pub fn facts(&self) -> &BTreeSet<Fact> {
        &self.facts
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.facts.contains(fact)
    }
}

impl FromIterator<Fact> for Database {
    fn from_iter<I: IntoIterator<Item = Fact>>(iter: I) -> Self {
        Database {
            facts: iter.into_iter().collect(),
        }
    }
}

impl Extend<Fact> for Database {
    fn extend<I: IntoIterator<Item = Fact>>(&mut self, iter: I) {
        self.facts.extend(iter)
    }
}

/// Deterministic generator of variables named `<prefix><n>` that never
/// collide with a declared in-use set or with each other.
#[derive(Clone, Debug)]
pub struct FreshVariableSource {
    prefix: String,
    counter: u64,
    in_use: HashSet<Var>,
}

impl FreshVariableSource {
    pub fn new<'a>(prefix: &str, in_use: impl IntoIterator<Item = &'a Var>) -> Self {
        FreshVariableSource {
            prefix: prefix.to_string(),
            counter: 1,
            in_use: in_use.into_iter().cloned().collect(),
        }
    }

    /// Starts numbering at `start` instead of 1.
    pub fn starting_at(mut self, start: u64) -> Self {
        self.counter = start;
        self
    }

    pub fn reserve<'a>(&mut self, vars: impl IntoIterator<Item = &'a Var>) {
        self.in_use.extend(vars.into_iter().cloned());
    }

    pub fn fresh(&mut self) -> Var {
        loop {
            let candidate = Var::new(format!("{}{}", self.prefix, self.counter));
            self.counter += 1;
            if self.in_use.insert(candidate.clone()) {
                return candidate;
            }
        }
    }
}

/// Renames every variable of `query` outside `keep` to `<prefix>1`,
/// `<prefix>2`, ... in order of first use (canonical body order, head
/// first).
pub fn rename_fresh_variables(
    query: &ConjunctiveQuery,
    keep: &BTreeSet<Var>,
    prefix: &str,
) -> ConjunctiveQuery {
    let mut source = FreshVariableSource::new(prefix, keep.iter());
    let mut renaming = Substitution::new();
    let order = query
        .head()
        .args
        .iter()
        .chain(query.body().iter().flat_map(|a| a.args.iter()));
    for var in order {
        if !keep.contains(var) && !renaming.contains(var) {
            renaming.insert(var.clone(), source.fresh());
        }
    }
    query.substitute(&renaming)
}

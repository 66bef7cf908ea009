//! Linear constraints over typed instance variables.
//!
//! Atoms are kept in a canonical form `Σ cᵢ·xᵢ (≤ | < | =) b`: `≥` and `>`
//! are negated into `≤`/`<` at construction, and zero coefficients are
//! dropped. Strictness is a first-class relation, never an epsilon.

mod distance;
mod domain;
mod parse;
mod render;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::Q;

pub use distance::{l1_distance, l1_encoding, DistanceEncoding};
pub use domain::{domain_atoms, DomainAtoms};
pub use parse::{parse_constraint, ParseContext, ParseError, ParseErrorKind};
pub use render::{render_atom, render_atoms, VarOrder};

/// A feature variable of a named instance, e.g. `CE.age` or `CE.race[Black]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarRef {
    pub instance: String,
    pub feature: String,
    /// One-hot coordinate of a categorical feature.
    pub coord: Option<String>,
}

impl VarRef {
    pub fn new(instance: &str, feature: &str) -> Self {
        VarRef {
            instance: instance.into(),
            feature: feature.into(),
            coord: None,
        }
    }

    pub fn coordinate(instance: &str, feature: &str, value: &str) -> Self {
        VarRef {
            instance: instance.into(),
            feature: feature.into(),
            coord: Some(value.into()),
        }
    }

    pub fn with_instance(&self, instance: &str) -> Self {
        VarRef {
            instance: instance.to_string(),
            ..self.clone()
        }
    }
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.instance, self.feature)?;
        if let Some(c) = &self.coord {
            write!(f, "[{c}]")?;
        }
        Ok(())
    }
}

/// A solver variable: an instance feature, or an auxiliary variable introduced
/// by an encoding (distance slacks).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Feature(VarRef),
    Aux(String),
}

impl Var {
    pub fn feature(instance: &str, feature: &str) -> Self {
        Var::Feature(VarRef::new(instance, feature))
    }

    pub fn aux(name: impl Into<String>) -> Self {
        Var::Aux(name.into())
    }

    pub fn as_feature(&self) -> Option<&VarRef> {
        match self {
            Var::Feature(v) => Some(v),
            Var::Aux(_) => None,
        }
    }
}

impl From<VarRef> for Var {
    fn from(v: VarRef) -> Self {
        Var::Feature(v)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Feature(v) => v.fmt(f),
            Var::Aux(name) => write!(f, "${name}"),
        }
    }
}

pub type Assignment = BTreeMap<Var, Q>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Le,
    Lt,
    Eq,
}

impl Relation {
    pub fn is_strict(self) -> bool {
        self == Relation::Lt
    }

    fn holds(self, lhs: &Q, rhs: &Q) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Lt => lhs < rhs,
            Relation::Eq => lhs == rhs,
        }
    }
}

/// Comparison operators accepted on input, before canonicalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Le,
    Lt,
    Eq,
    Ge,
    Gt,
}

impl Comparison {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Le => "<=",
            Comparison::Lt => "<",
            Comparison::Eq => "=",
            Comparison::Ge => ">=",
            Comparison::Gt => ">",
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("no value for variable {0}")]
pub struct MissingVariable(pub String);

/// Affine expression `Σ cᵢ·xᵢ + k`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinearExpr {
    pub terms: BTreeMap<Var, Q>,
    pub constant: Q,
}

impl LinearExpr {
    pub fn zero() -> Self {
        LinearExpr::default()
    }

    pub fn var(var: impl Into<Var>) -> Self {
        Self::term(Q::one(), var)
    }

    pub fn term(coef: Q, var: impl Into<Var>) -> Self {
        let mut e = LinearExpr::zero();
        e.add_term(coef, var.into());
        e
    }

    pub fn constant(k: Q) -> Self {
        LinearExpr {
            terms: BTreeMap::new(),
            constant: k,
        }
    }

    pub fn add_term(&mut self, coef: Q, var: Var) {
        let entry = self.terms.entry(var.clone()).or_insert_with(Q::zero);
        *entry += coef;
        if entry.is_zero() {
            self.terms.remove(&var);
        }
    }

    pub fn add(&mut self, other: &LinearExpr, factor: &Q) {
        for (v, c) in &other.terms {
            self.add_term(c * factor, v.clone());
        }
        self.constant += &other.constant * factor;
    }

    pub fn scaled(&self, factor: &Q) -> Self {
        let mut out = LinearExpr::zero();
        out.add(self, factor);
        out
    }

    pub fn evaluate(&self, assignment: &Assignment) -> Result<Q, MissingVariable> {
        let mut total = self.constant.clone();
        for (v, c) in &self.terms {
            let x = assignment
                .get(v)
                .ok_or_else(|| MissingVariable(v.to_string()))?;
            total += c * x;
        }
        Ok(total)
    }
}

/// `Σ cᵢ·xᵢ rel b` in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearAtom {
    terms: BTreeMap<Var, Q>,
    relation: Relation,
    rhs: Q,
}

impl LinearAtom {
    pub fn new(terms: BTreeMap<Var, Q>, relation: Relation, rhs: Q) -> Self {
        let terms = terms.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        LinearAtom {
            terms,
            relation,
            rhs,
        }
    }

    /// `lhs op rhs` for two affine expressions.
    pub fn compare(lhs: &LinearExpr, op: Comparison, rhs: &LinearExpr) -> Self {
        let mut diff = lhs.clone();
        diff.add(rhs, &-Q::one());
        let bound = -diff.constant.clone();
        let terms = diff.terms;
        match op {
            Comparison::Le => LinearAtom::new(terms, Relation::Le, bound),
            Comparison::Lt => LinearAtom::new(terms, Relation::Lt, bound),
            Comparison::Eq => LinearAtom::new(terms, Relation::Eq, bound),
            Comparison::Ge => LinearAtom::new(negate(terms), Relation::Le, -bound),
            Comparison::Gt => LinearAtom::new(negate(terms), Relation::Lt, -bound),
        }
    }

    pub fn var_le(var: impl Into<Var>, bound: Q) -> Self {
        Self::compare(
            &LinearExpr::var(var),
            Comparison::Le,
            &LinearExpr::constant(bound),
        )
    }

    pub fn var_lt(var: impl Into<Var>, bound: Q) -> Self {
        Self::compare(
            &LinearExpr::var(var),
            Comparison::Lt,
            &LinearExpr::constant(bound),
        )
    }

    pub fn var_ge(var: impl Into<Var>, bound: Q) -> Self {
        Self::compare(
            &LinearExpr::var(var),
            Comparison::Ge,
            &LinearExpr::constant(bound),
        )
    }

    pub fn var_gt(var: impl Into<Var>, bound: Q) -> Self {
        Self::compare(
            &LinearExpr::var(var),
            Comparison::Gt,
            &LinearExpr::constant(bound),
        )
    }

    pub fn var_eq(var: impl Into<Var>, value: Q) -> Self {
        Self::compare(
            &LinearExpr::var(var),
            Comparison::Eq,
            &LinearExpr::constant(value),
        )
    }

    pub fn terms(&self) -> &BTreeMap<Var, Q> {
        &self.terms
    }

    pub fn relation(&self) -> Relation {
        self.relation
    }

    pub fn rhs(&self) -> &Q {
        &self.rhs
    }

    pub fn is_strict(&self) -> bool {
        self.relation.is_strict()
    }

    pub fn coefficient(&self, var: &Var) -> Q {
        self.terms.get(var).cloned().unwrap_or_else(Q::zero)
    }

    pub fn variables(&self) -> impl Iterator<Item = &Var> {
        self.terms.keys()
    }

    pub fn lhs(&self) -> LinearExpr {
        LinearExpr {
            terms: self.terms.clone(),
            constant: Q::zero(),
        }
    }

    /// Truth value of a variable-free atom (`0 < 0` is false).
    pub fn ground_truth(&self) -> Option<bool> {
        self.terms
            .is_empty()
            .then(|| self.relation.holds(&Q::zero(), &self.rhs))
    }

    pub fn evaluate(&self, assignment: &Assignment) -> Result<bool, MissingVariable> {
        let lhs = self.lhs().evaluate(assignment)?;
        Ok(self.relation.holds(&lhs, &self.rhs))
    }

    /// Same atom with strictness dropped.
    pub fn closure(&self) -> Self {
        let relation = if self.relation == Relation::Lt {
            Relation::Le
        } else {
            self.relation
        };
        LinearAtom {
            relation,
            ..self.clone()
        }
    }

    /// Complement of an inequality: `¬(e ≤ b) = (−e < −b)`, `¬(e < b) = (−e ≤ −b)`.
    /// Equalities have a two-part complement; see [`LinearAtom::negations`].
    pub fn negations(&self) -> Vec<LinearAtom> {
        let neg = negate(self.terms.clone());
        match self.relation {
            Relation::Le => vec![LinearAtom::new(neg, Relation::Lt, -self.rhs.clone())],
            Relation::Lt => vec![LinearAtom::new(neg, Relation::Le, -self.rhs.clone())],
            Relation::Eq => vec![
                LinearAtom::new(self.terms.clone(), Relation::Lt, self.rhs.clone()),
                LinearAtom::new(neg, Relation::Lt, -self.rhs.clone()),
            ],
        }
    }

    /// Replaces `var` by `expr`.
    pub fn substitute(&self, var: &Var, expr: &LinearExpr) -> Self {
        let Some(coef) = self.terms.get(var).cloned() else {
            return self.clone();
        };
        let mut lhs = self.lhs();
        lhs.terms.remove(var);
        lhs.add(expr, &coef);
        let rhs = &self.rhs - &lhs.constant;
        LinearAtom::new(lhs.terms, self.relation, rhs)
    }

    pub fn map_vars(&self, f: impl Fn(&Var) -> Var) -> Self {
        let mut terms = BTreeMap::new();
        for (v, c) in &self.terms {
            *terms.entry(f(v)).or_insert_with(Q::zero) += c;
        }
        LinearAtom::new(terms, self.relation, self.rhs.clone())
    }

    /// Renames every feature variable of instance `from` to instance `to`.
    pub fn rename_instance(&self, from: &str, to: &str) -> Self {
        self.map_vars(|v| match v {
            Var::Feature(r) if r.instance == from => Var::Feature(r.with_instance(to)),
            other => other.clone(),
        })
    }

    /// Representative up to positive scaling (and sign, for equalities): the
    /// first coefficient becomes ±1 (+1 for equalities).
    pub fn normalized(&self) -> Self {
        let Some(lead) = self.terms.values().next() else {
            return self.normalized_ground();
        };
        let scale = if self.relation == Relation::Eq {
            lead.recip()
        } else {
            lead.abs().recip()
        };
        self.scaled(&scale)
    }

    fn normalized_ground(&self) -> Self {
        let truth = self.relation.holds(&Q::zero(), &self.rhs);
        if truth {
            LinearAtom::new(BTreeMap::new(), Relation::Le, Q::zero())
        } else {
            LinearAtom::new(BTreeMap::new(), Relation::Lt, Q::zero())
        }
    }

    /// Scales by a nonzero factor; a negative factor is only meaningful for
    /// equalities.
    pub fn scaled(&self, factor: &Q) -> Self {
        debug_assert!(!factor.is_zero());
        debug_assert!(factor.is_positive() || self.relation == Relation::Eq);
        LinearAtom {
            terms: self
                .terms
                .iter()
                .map(|(v, c)| (v.clone(), c * factor))
                .collect(),
            relation: self.relation,
            rhs: &self.rhs * factor,
        }
    }

    /// Canonical ground falsity `0 < 0`.
    pub fn falsity() -> Self {
        LinearAtom::new(BTreeMap::new(), Relation::Lt, Q::zero())
    }

    pub fn truth() -> Self {
        LinearAtom::new(BTreeMap::new(), Relation::Le, Q::zero())
    }
}

fn negate(terms: BTreeMap<Var, Q>) -> BTreeMap<Var, Q> {
    terms.into_iter().map(|(v, c)| (v, -c)).collect()
}

/// Closed variable interval; `None` is unbounded on that side.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Interval {
    pub lo: Option<Q>,
    pub hi: Option<Q>,
}

/// A conjunction of atoms with integrality marks and variable bounds.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConstraintStore {
    pub atoms: Vec<LinearAtom>,
    pub integer_vars: BTreeSet<Var>,
    pub bounds: BTreeMap<Var, Interval>,
    /// Branch-and-bound node budget; `None` uses the reasoner default.
    pub node_limit: Option<usize>,
}

impl ConstraintStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_atoms(atoms: impl IntoIterator<Item = LinearAtom>) -> Self {
        ConstraintStore {
            atoms: atoms.into_iter().collect(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, atom: LinearAtom) {
        self.atoms.push(atom);
    }

    pub fn extend(&mut self, atoms: impl IntoIterator<Item = LinearAtom>) {
        self.atoms.extend(atoms);
    }

    pub fn mark_integer(&mut self, var: impl Into<Var>) {
        self.integer_vars.insert(var.into());
    }

    pub fn set_bounds(&mut self, var: impl Into<Var>, lo: Option<Q>, hi: Option<Q>) {
        self.bounds.insert(var.into(), Interval { lo, hi });
    }

    /// All variables mentioned by atoms, bounds or integrality marks.
    pub fn variables(&self) -> BTreeSet<Var> {
        let mut vars: BTreeSet<Var> = self
            .atoms
            .iter()
            .flat_map(|a| a.variables().cloned())
            .collect();
        vars.extend(self.bounds.keys().cloned());
        vars.extend(self.integer_vars.iter().cloned());
        vars
    }

    /// Atoms plus the bounds written as atoms.
    pub fn all_atoms(&self) -> Vec<LinearAtom> {
        let mut out = self.atoms.clone();
        for (v, iv) in &self.bounds {
            if let Some(lo) = &iv.lo {
                out.push(LinearAtom::var_ge(v.clone(), lo.clone()));
            }
            if let Some(hi) = &iv.hi {
                out.push(LinearAtom::var_le(v.clone(), hi.clone()));
            }
        }
        out
    }

    /// Copy with every strict atom relaxed to its closure.
    pub fn closure(&self) -> Self {
        ConstraintStore {
            atoms: self.atoms.iter().map(LinearAtom::closure).collect(),
            ..self.clone()
        }
    }

    /// Copy without integrality marks.
    pub fn relaxed(&self) -> Self {
        ConstraintStore {
            integer_vars: BTreeSet::new(),
            ..self.clone()
        }
    }

    pub fn and(&self, atoms: impl IntoIterator<Item = LinearAtom>) -> Self {
        let mut out = self.clone();
        out.extend(atoms);
        out
    }

    /// Exact check of every atom, bound and integrality mark.
    pub fn satisfied_by(&self, assignment: &Assignment) -> Result<bool, MissingVariable> {
        for atom in &self.atoms {
            if !atom.evaluate(assignment)? {
                return Ok(false);
            }
        }
        for (v, iv) in &self.bounds {
            let x = assignment
                .get(v)
                .ok_or_else(|| MissingVariable(v.to_string()))?;
            if iv.lo.as_ref().is_some_and(|lo| x < lo) || iv.hi.as_ref().is_some_and(|hi| x > hi) {
                return Ok(false);
            }
        }
        for v in &self.integer_vars {
            let x = assignment
                .get(v)
                .ok_or_else(|| MissingVariable(v.to_string()))?;
            if !x.is_integer() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Exact evaluation of one atom.
pub fn evaluate(atom: &LinearAtom, assignment: &Assignment) -> Result<bool, MissingVariable> {
    atom.evaluate(assignment)
}

//! Data-type constraints induced by the schema for one instance.

use num_traits::One;

use super::{Comparison, LinearAtom, LinearExpr, Var};
use crate::rational::{self, Q};
use crate::schema::{FeatureKind, FeatureSchema};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainAtoms {
    pub atoms: Vec<LinearAtom>,
    pub integer_vars: Vec<Var>,
}

/// Bounds for every variable of `instance`, integrality for ordinal features
/// and one-hot coordinates, and `Σ coords = 1` per categorical feature.
pub fn domain_atoms(instance: &str, schema: &FeatureSchema) -> DomainAtoms {
    let mut atoms = Vec::new();
    let mut integer_vars = Vec::new();
    for spec in schema.features() {
        match &spec.kind {
            FeatureKind::Categorical { values } => {
                let mut sum = LinearExpr::zero();
                for value in values {
                    let var = Var::Feature(super::VarRef::coordinate(instance, &spec.name, value));
                    atoms.push(LinearAtom::var_ge(var.clone(), rational::int(0)));
                    atoms.push(LinearAtom::var_le(var.clone(), rational::int(1)));
                    sum.add_term(Q::one(), var.clone());
                    integer_vars.push(var);
                }
                atoms.push(LinearAtom::compare(
                    &sum,
                    Comparison::Eq,
                    &LinearExpr::constant(Q::one()),
                ));
            }
            FeatureKind::Ordinal { .. } | FeatureKind::Continuous { .. } => {
                let var = Var::feature(instance, &spec.name);
                let (lo, hi) = spec.interval().expect("numeric feature");
                atoms.push(LinearAtom::var_ge(var.clone(), lo));
                atoms.push(LinearAtom::var_le(var.clone(), hi));
                if matches!(spec.kind, FeatureKind::Ordinal { .. }) {
                    integer_vars.push(var);
                }
            }
        }
    }
    DomainAtoms {
        atoms,
        integer_vars,
    }
}

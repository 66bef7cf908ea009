//! L1 distance between two instances as linear channel constraints.
//!
//! Each channel `i` gets a slack `sᵢ` with `sᵢ ≥ aᵢ − bᵢ` and `sᵢ ≥ bᵢ − aᵢ`.
//! At the minimum of the objective every slack equals `|aᵢ − bᵢ|`. Numeric
//! channels are weighted by `1 / range`; one-hot coordinates by `1/2`, so a
//! changed category costs exactly one.

use num_traits::{One, Signed, Zero};

use super::{Assignment, Comparison, LinearAtom, LinearExpr, Var, VarRef};
use crate::rational::{self, Q};
use crate::schema::FeatureSchema;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceEncoding {
    pub aux_vars: Vec<Var>,
    pub channel_atoms: Vec<LinearAtom>,
    pub objective: LinearExpr,
}

fn channels(schema: &FeatureSchema) -> Vec<(VarRef, Q)> {
    let half = rational::ratio(1, 2);
    schema
        .columns()
        .iter()
        .map(|column| {
            let var = schema.var("", column);
            let spec = &schema.features()[column.feature];
            let weight = if column.category.is_some() {
                half.clone()
            } else {
                schema.range(spec).recip()
            };
            (var, weight)
        })
        .collect()
}

pub fn l1_encoding(a: &str, b: &str, schema: &FeatureSchema) -> DistanceEncoding {
    let mut aux_vars = Vec::new();
    let mut channel_atoms = Vec::new();
    let mut objective = LinearExpr::zero();
    for (template, weight) in channels(schema) {
        let xa = Var::Feature(template.with_instance(a));
        let xb = Var::Feature(template.with_instance(b));
        let name = match &template.coord {
            Some(c) => format!("l1({a},{b}).{}[{c}]", template.feature),
            None => format!("l1({a},{b}).{}", template.feature),
        };
        let slack = Var::aux(name);
        let mut diff = LinearExpr::var(xa);
        diff.add_term(-Q::one(), xb);
        let s = LinearExpr::var(slack.clone());
        channel_atoms.push(LinearAtom::compare(&s, Comparison::Ge, &diff));
        channel_atoms.push(LinearAtom::compare(
            &s,
            Comparison::Ge,
            &diff.scaled(&-Q::one()),
        ));
        objective.add_term(weight, slack.clone());
        aux_vars.push(slack);
    }
    DistanceEncoding {
        aux_vars,
        channel_atoms,
        objective,
    }
}

/// Weighted L1 distance between two fully assigned instances.
pub fn l1_distance(schema: &FeatureSchema, assignment: &Assignment, a: &str, b: &str) -> Option<Q> {
    let mut total = Q::zero();
    for (template, weight) in channels(schema) {
        let xa = assignment.get(&Var::Feature(template.with_instance(a)))?;
        let xb = assignment.get(&Var::Feature(template.with_instance(b)))?;
        total += (xa - xb).abs() * weight;
    }
    Some(total)
}

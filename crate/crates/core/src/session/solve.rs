//! Per-path-combination solving for `solveopt`.

use std::collections::BTreeSet;

use num_traits::One;
use rayon::prelude::*;

use super::{Query, Session, SessionError};
use crate::constraint::{
    domain_atoms, l1_encoding, render_atom, Assignment, Comparison, ConstraintStore, LinearAtom,
    LinearExpr, Var, VarOrder, VarRef,
};
use crate::rational::Q;
use crate::reasoner::{
    entails, is_satisfiable, minimize, project_ordered, OptStatus, ReasonerError,
};
use crate::schema::FeatureKind;
use crate::tree::{render_rule, PathFact};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceResult {
    /// Infimum of the distance over the combination's region.
    pub value: Q,
    pub attained: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    /// Path followed by each instance, in declaration order.
    pub path_assignment: Vec<(String, usize)>,
    /// `(instance, rule text)` per instance.
    pub rules: Vec<(String, String)>,
    /// Projection of the combination's answer region.
    pub answer_atoms: Vec<LinearAtom>,
    /// Atoms as displayed: schema-domain atoms dropped and pinned one-hot
    /// groups written as a single choice.
    pub display_atoms: Vec<LinearAtom>,
    pub answer_text: Vec<String>,
    /// The projection eliminated integer variables over their relaxation.
    pub lp_relaxation: bool,
    pub distance: Option<DistanceResult>,
    /// Values of every instance variable, instance then layout order.
    pub witness: Vec<(Var, Q)>,
    pub global_optimum: bool,
}

impl Solution {
    pub fn path_ids(&self) -> Vec<usize> {
        self.path_assignment.iter().map(|(_, p)| *p).collect()
    }
}

/// A combination the solver could not decide within its budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComboFailure {
    pub path_assignment: Vec<(String, usize)>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QueryResult {
    pub solutions: Vec<Solution>,
    pub failures: Vec<ComboFailure>,
    pub minimized: bool,
}

struct Plan<'a> {
    session: &'a Session,
    base: ConstraintStore,
    keep: Vec<Var>,
    /// Every feature variable of every instance, instance then layout order.
    all_vars: Vec<Var>,
    distance: Option<crate::constraint::DistanceEncoding>,
}

pub(super) fn solveopt(session: &Session, query: &Query) -> Result<QueryResult, SessionError> {
    if let Some(spec) = &query.minimize {
        for name in [&spec.from, &spec.to] {
            if session.instance(name).is_none() {
                return Err(SessionError::UnknownInstance(name.clone()));
            }
        }
    }
    let all_vars: Vec<Var> = session
        .instances()
        .iter()
        .flat_map(|i| session.schema().variables(&i.name))
        .map(Var::Feature)
        .collect();
    let keep = match &query.project {
        None => all_vars.clone(),
        Some(items) => {
            let mut seen = BTreeSet::new();
            let mut keep = Vec::new();
            for item in items {
                for v in item.resolve(session)? {
                    if seen.insert(v.clone()) {
                        keep.push(v);
                    }
                }
            }
            keep
        }
    };
    let mut base = ConstraintStore {
        node_limit: session.node_limit(),
        ..ConstraintStore::new()
    };
    for instance in session.instances() {
        let domain = domain_atoms(&instance.name, session.schema());
        base.extend(domain.atoms);
        for v in domain.integer_vars {
            base.mark_integer(v);
        }
    }
    for c in session.constraints() {
        base.extend(c.atoms.iter().cloned());
    }
    let distance = query
        .minimize
        .as_ref()
        .map(|spec| l1_encoding(&spec.from, &spec.to, session.schema()));
    let plan = Plan {
        session,
        base,
        keep,
        all_vars,
        distance,
    };

    let combos = combinations(session);
    let outcomes: Vec<Result<Option<Solution>, ComboFailure>> =
        combos.par_iter().map(|combo| plan.solve(combo)).collect();

    let mut result = QueryResult {
        minimized: query.minimize.is_some(),
        ..QueryResult::default()
    };
    for outcome in outcomes {
        match outcome {
            Ok(Some(s)) => result.solutions.push(s),
            Ok(None) => {}
            Err(f) => result.failures.push(f),
        }
    }
    result.solutions.sort_by(|a, b| {
        let da = a.distance.as_ref().map(|d| &d.value);
        let db = b.distance.as_ref().map(|d| &d.value);
        da.cmp(&db).then_with(|| a.path_ids().cmp(&b.path_ids()))
    });
    if result.minimized {
        if let Some(first) = result.solutions.first_mut() {
            first.global_optimum = true;
        }
    }
    Ok(result)
}

/// Cross product of admissible paths, instances in declaration order.
fn combinations(session: &Session) -> Vec<Vec<(String, &PathFact)>> {
    let mut combos: Vec<Vec<(String, &PathFact)>> = vec![Vec::new()];
    if session.instances().is_empty() {
        return Vec::new();
    }
    for instance in session.instances() {
        let paths = session.admissible_paths(instance);
        let mut next = Vec::with_capacity(combos.len() * paths.len());
        for combo in &combos {
            for path in &paths {
                let mut c = combo.clone();
                c.push((instance.name.clone(), *path));
                next.push(c);
            }
        }
        combos = next;
    }
    combos
}

impl Plan<'_> {
    fn solve(&self, combo: &[(String, &PathFact)]) -> Result<Option<Solution>, ComboFailure> {
        let path_assignment: Vec<(String, usize)> =
            combo.iter().map(|(n, p)| (n.clone(), p.path_id)).collect();
        self.solve_inner(combo, &path_assignment)
            .map_err(|e| ComboFailure {
                path_assignment,
                message: e.to_string(),
            })
    }

    fn solve_inner(
        &self,
        combo: &[(String, &PathFact)],
        path_assignment: &[(String, usize)],
    ) -> Result<Option<Solution>, ReasonerError> {
        let mut store = self.base.clone();
        for (name, path) in combo {
            store.extend(path.instantiate(name));
        }
        let (answer_store, distance, witness) = match &self.distance {
            None => {
                let sat = is_satisfiable(&store)?;
                let Some(witness) = sat.witness else {
                    return Ok(None);
                };
                (store, None, witness)
            }
            Some(encoding) => {
                store.extend(encoding.channel_atoms.iter().cloned());
                let optimum = minimize(&store, &encoding.objective)?;
                match optimum.status {
                    OptStatus::Unsat => return Ok(None),
                    OptStatus::Unbounded => unreachable!("weighted L1 distance is bounded below"),
                    OptStatus::Optimal => {}
                }
                let value = optimum.value.expect("optimal value");
                let mut face = if optimum.attained {
                    store.clone()
                } else {
                    store.closure()
                };
                face.push(LinearAtom::compare(
                    &encoding.objective,
                    Comparison::Le,
                    &LinearExpr::constant(value.clone()),
                ));
                let mut witness = self.lexicographic_witness(&face.closure())?;
                if optimum.attained && !store.satisfied_by(&witness).unwrap_or(false) {
                    witness = optimum.witness.expect("optimal witness");
                }
                (
                    face,
                    Some(DistanceResult {
                        value,
                        attained: optimum.attained,
                    }),
                    witness,
                )
            }
        };
        let projection = project_ordered(&answer_store, &self.keep)?;
        let display_atoms = self.display(&projection.atoms)?;
        let order = VarOrder::new(self.keep.iter().cloned());
        let schema = self.session.schema();
        Ok(Some(Solution {
            path_assignment: path_assignment.to_vec(),
            rules: combo
                .iter()
                .map(|(n, p)| (n.clone(), render_rule(p, schema, n)))
                .collect(),
            answer_text: display_atoms
                .iter()
                .map(|a| render_atom(a, &order))
                .collect(),
            answer_atoms: projection.atoms,
            display_atoms,
            lp_relaxation: projection.lp_relaxation,
            distance,
            witness: self
                .all_vars
                .iter()
                .filter_map(|v| witness.get(v).map(|q| (v.clone(), q.clone())))
                .collect(),
            global_optimum: false,
        }))
    }

    /// Minimizes each instance variable in turn over a closed region, fixing
    /// it before moving on.
    fn lexicographic_witness(&self, region: &ConstraintStore) -> Result<Assignment, ReasonerError> {
        let mut region = region.clone();
        let mut last = None;
        for var in &self.all_vars {
            let r = minimize(&region, &LinearExpr::var(var.clone()))?;
            if r.status != OptStatus::Optimal {
                continue;
            }
            region.push(LinearAtom::var_eq(
                var.clone(),
                r.value.expect("optimal value"),
            ));
            last = r.witness;
        }
        Ok(last.unwrap_or_default())
    }

    /// Answer atoms for display: pinned one-hot groups become one choice
    /// atom and atoms that only restate the schema domain are dropped.
    fn display(&self, atoms: &[LinearAtom]) -> Result<Vec<LinearAtom>, ReasonerError> {
        let schema = self.session.schema();
        let keep: BTreeSet<&Var> = self.keep.iter().collect();
        let mut domain = BTreeSet::new();
        for instance in self.session.instances() {
            domain.extend(
                domain_atoms(&instance.name, schema)
                    .atoms
                    .iter()
                    .map(LinearAtom::normalized),
            );
        }
        let store = ConstraintStore::with_atoms(atoms.iter().cloned());
        let order = VarOrder::new(self.keep.iter().cloned());
        let kept: Vec<LinearAtom> = atoms
            .iter()
            .filter(|a| !domain.contains(&a.normalized()))
            .cloned()
            .collect();
        let mut shown = reduce_equalities(kept, &order);
        for instance in self.session.instances() {
            for spec in schema.features() {
                let FeatureKind::Categorical { values } = &spec.kind else {
                    continue;
                };
                let coords: Vec<Var> = values
                    .iter()
                    .map(|v| Var::Feature(VarRef::coordinate(&instance.name, &spec.name, v)))
                    .collect();
                if !coords.iter().all(|c| keep.contains(c)) {
                    continue;
                }
                for coord in &coords {
                    let choice = LinearAtom::var_eq(coord.clone(), Q::one());
                    if entails(&store, &choice)? {
                        shown.retain(|a| !a.variables().all(|v| coords.contains(v)));
                        shown.push(choice);
                        break;
                    }
                }
            }
        }
        let key = |a: &LinearAtom| -> Vec<usize> {
            order
                .sorted(a.terms().keys())
                .into_iter()
                .map(|v| order.rank(v))
                .collect()
        };
        shown.sort_by(|a, b| key(a).cmp(&key(b)).then_with(|| a.cmp(b)));
        Ok(shown)
    }
}

/// Gauss-Jordan on the equalities, pivoting on each atom's leading variable,
/// so that a pinned variable reads `x=3.0` rather than through a combination.
fn reduce_equalities(atoms: Vec<LinearAtom>, order: &VarOrder) -> Vec<LinearAtom> {
    let (mut eqs, rest): (Vec<LinearAtom>, Vec<LinearAtom>) = atoms
        .into_iter()
        .partition(|a| a.relation() == crate::constraint::Relation::Eq);
    eqs.sort_by_key(|a| order.leading(a).map(|v| order.rank(v)));
    let mut pivots: Vec<(Var, LinearAtom)> = Vec::new();
    for eq in eqs {
        let mut eq = eq;
        for (v, row) in &pivots {
            eq = eq.substitute(v, &solved_for(row, v));
        }
        let Some(pivot) = order.leading(&eq).cloned() else {
            continue;
        };
        let row = eq.scaled(&eq.coefficient(&pivot).recip());
        for (_, other) in pivots.iter_mut() {
            *other = other.substitute(&pivot, &solved_for(&row, &pivot));
        }
        pivots.push((pivot, row));
    }
    pivots.into_iter().map(|(_, row)| row).chain(rest).collect()
}

/// `var` expressed from the equality `row` (whose `var` coefficient is 1).
fn solved_for(row: &LinearAtom, var: &Var) -> LinearExpr {
    let mut expr = LinearExpr::constant(row.rhs().clone());
    for (v, c) in row.terms() {
        if v != var {
            expr.add_term(-c.clone(), v.clone());
        }
    }
    expr
}

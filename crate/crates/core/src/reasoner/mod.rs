//! Satisfiability, projection, entailment and minimization over constraint
//! stores, in exact rational arithmetic.
//!
//! Strict inequalities keep their meaning throughout: a region that is
//! nonempty only in its closure is unsatisfiable, and minimization reports
//! the infimum together with whether it is attained.

mod fm;
mod lp;
mod milp;

use std::collections::BTreeSet;

use num_traits::Zero;

use crate::constraint::{Assignment, ConstraintStore, LinearAtom, LinearExpr, Var};
use crate::rational::Q;

pub use fm::{fm_eliminate, project, project_ordered, Projection};
pub use milp::NODE_LIMIT;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReasonerError {
    #[error("budget exceeded: branch-and-bound explored {nodes} nodes")]
    BudgetExceeded { nodes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatStatus {
    Sat,
    Unsat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilityResult {
    pub status: SatStatus,
    /// Present iff satisfiable; satisfies every atom exactly.
    pub witness: Option<Assignment>,
}

impl FeasibilityResult {
    pub fn is_sat(&self) -> bool {
        self.status == SatStatus::Sat
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptStatus {
    Optimal,
    Unsat,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptimumResult {
    pub status: OptStatus,
    /// Infimum of the objective; `None` unless optimal.
    pub value: Option<Q>,
    pub attained: bool,
    /// Attains `value`; lies in the region when attained, otherwise in its
    /// closure.
    pub witness: Option<Assignment>,
}

impl OptimumResult {
    fn status_only(status: OptStatus) -> Self {
        OptimumResult {
            status,
            value: None,
            attained: false,
            witness: None,
        }
    }
}

fn assignment(vars: &[Var], x: &[Q]) -> Assignment {
    vars.iter().cloned().zip(x.iter().cloned()).collect()
}

/// Decides `∃x. store`, honouring strictness and integrality marks.
pub fn is_satisfiable(store: &ConstraintStore) -> Result<FeasibilityResult, ReasonerError> {
    let compiled = milp::Compiled::new(store, []);
    let zero = vec![Q::zero(); compiled.vars.len()];
    Ok(match milp::solve(&compiled, &zero, true)? {
        milp::MilpOutcome::Optimal(c) if c.attained => FeasibilityResult {
            status: SatStatus::Sat,
            witness: Some(assignment(&compiled.vars, &c.x)),
        },
        _ => FeasibilityResult {
            status: SatStatus::Unsat,
            witness: None,
        },
    })
}

/// Infimum of `objective` over the store.
///
/// Strict atoms are relaxed for the optimization; `attained` tells whether
/// some point of the (strict) region reaches the reported value.
pub fn minimize(
    store: &ConstraintStore,
    objective: &LinearExpr,
) -> Result<OptimumResult, ReasonerError> {
    let compiled = milp::Compiled::new(store, objective.terms.keys());
    let dense = compiled.dense(objective);
    Ok(match milp::solve(&compiled, &dense, false)? {
        milp::MilpOutcome::Infeasible => OptimumResult::status_only(OptStatus::Unsat),
        milp::MilpOutcome::Unbounded => OptimumResult::status_only(OptStatus::Unbounded),
        milp::MilpOutcome::Optimal(c) => OptimumResult {
            status: OptStatus::Optimal,
            value: Some(c.value + &objective.constant),
            attained: c.attained,
            witness: Some(assignment(&compiled.vars, &c.x)),
        },
    })
}

/// Whether every solution of `store` satisfies `atom`.
pub fn entails(store: &ConstraintStore, atom: &LinearAtom) -> Result<bool, ReasonerError> {
    for negation in atom.negations() {
        if is_satisfiable(&store.and([negation]))?.is_sat() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Variables of a set of atoms.
pub(crate) fn atom_vars(atoms: &[LinearAtom]) -> BTreeSet<Var> {
    atoms.iter().flat_map(|a| a.variables().cloned()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::Comparison;
    use crate::rational::{int, ratio};

    fn v(name: &str) -> Var {
        Var::feature("I", name)
    }

    #[test]
    fn empty_bounded_store_is_sat() {
        let mut store = ConstraintStore::new();
        store.set_bounds(v("x"), Some(int(0)), Some(int(1)));
        assert!(is_satisfiable(&store).unwrap().is_sat());
    }

    #[test]
    fn disjoint_strict_bounds_unsat() {
        let store = ConstraintStore::with_atoms([
            LinearAtom::var_lt(v("x"), int(0)),
            LinearAtom::var_gt(v("x"), int(1)),
        ]);
        let r = is_satisfiable(&store).unwrap();
        assert_eq!(r.status, SatStatus::Unsat);
        assert!(r.witness.is_none());
    }

    #[test]
    fn witness_satisfies_strict_atoms() {
        let mut e = LinearExpr::var(v("x"));
        e.add_term(int(1), v("y"));
        let store = ConstraintStore::with_atoms([
            LinearAtom::compare(&e, Comparison::Lt, &LinearExpr::constant(int(1))),
            LinearAtom::var_gt(v("x"), int(0)),
            LinearAtom::var_gt(v("y"), int(0)),
        ]);
        let r = is_satisfiable(&store).unwrap();
        assert!(store.satisfied_by(r.witness.as_ref().unwrap()).unwrap());
    }

    #[test]
    fn minimize_at_lower_bound() {
        let store = ConstraintStore::with_atoms([LinearAtom::var_ge(v("x"), int(0))]);
        let r = minimize(&store, &LinearExpr::var(v("x"))).unwrap();
        assert_eq!(r.status, OptStatus::Optimal);
        assert_eq!(r.value, Some(int(0)));
        assert!(r.attained);
    }

    #[test]
    fn strict_boundary_infimum() {
        let store = ConstraintStore::with_atoms([LinearAtom::var_gt(v("x"), int(5119))]);
        let r = minimize(&store, &LinearExpr::var(v("x"))).unwrap();
        assert_eq!(r.value, Some(int(5119)));
        assert!(!r.attained);
        assert_eq!(r.witness.unwrap()[&v("x")], int(5119));
    }

    #[test]
    fn small_integer_program() {
        // min x + 2y, x,y in [0,5] integer, x + y >= 3  ->  3 at (3,0)
        let mut store = ConstraintStore::new();
        for name in ["x", "y"] {
            store.set_bounds(v(name), Some(int(0)), Some(int(5)));
            store.mark_integer(v(name));
        }
        let mut sum = LinearExpr::var(v("x"));
        sum.add_term(int(1), v("y"));
        store.push(LinearAtom::compare(
            &sum,
            Comparison::Ge,
            &LinearExpr::constant(int(3)),
        ));
        let mut obj = LinearExpr::var(v("x"));
        obj.add_term(int(2), v("y"));
        let r = minimize(&store, &obj).unwrap();
        assert_eq!(r.value, Some(int(3)));
        let w = r.witness.unwrap();
        assert_eq!((w[&v("x")].clone(), w[&v("y")].clone()), (int(3), int(0)));
    }

    #[test]
    fn unbounded_objective() {
        let store = ConstraintStore::with_atoms([LinearAtom::var_le(v("x"), int(0))]);
        let r = minimize(&store, &LinearExpr::var(v("x"))).unwrap();
        assert_eq!(r.status, OptStatus::Unbounded);
    }

    #[test]
    fn unsat_objective() {
        let store = ConstraintStore::with_atoms([
            LinearAtom::var_le(v("x"), int(0)),
            LinearAtom::var_ge(v("x"), int(1)),
        ]);
        assert_eq!(
            minimize(&store, &LinearExpr::var(v("x"))).unwrap().status,
            OptStatus::Unsat
        );
    }

    #[test]
    fn mixed_integer_strict_slice() {
        // z integer in [0,2], x continuous: x > z, x <= 1. Infimum of -z is
        // -0 at z=0 (z=1 makes 1 < x <= 1 empty).
        let mut store = ConstraintStore::new();
        store.set_bounds(v("z"), Some(int(0)), Some(int(2)));
        store.mark_integer(v("z"));
        let mut d = LinearExpr::var(v("x"));
        d.add_term(int(-1), v("z"));
        store.push(LinearAtom::compare(&d, Comparison::Gt, &LinearExpr::zero()));
        store.push(LinearAtom::var_le(v("x"), int(1)));
        let r = minimize(&store, &LinearExpr::term(int(-1), v("z"))).unwrap();
        assert_eq!(r.value, Some(int(0)));
        assert!(r.attained);
        assert!(store.satisfied_by(r.witness.as_ref().unwrap()).unwrap());
    }

    #[test]
    fn entailment_basics() {
        let store = ConstraintStore::with_atoms([LinearAtom::var_ge(v("x"), int(2))]);
        assert!(entails(&store, &LinearAtom::var_ge(v("x"), int(1))).unwrap());
        let store = ConstraintStore::with_atoms([LinearAtom::var_ge(v("x"), int(1))]);
        assert!(!entails(&store, &LinearAtom::var_ge(v("x"), int(2))).unwrap());
        let store = ConstraintStore::with_atoms([
            LinearAtom::var_le(v("x"), ratio(1, 2)),
            LinearAtom::var_ge(v("x"), ratio(1, 2)),
        ]);
        assert!(entails(&store, &LinearAtom::var_eq(v("x"), ratio(1, 2))).unwrap());
    }
}

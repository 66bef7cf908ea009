//! Existential projection by Gaussian substitution and Fourier–Motzkin
//! elimination, with LP-based cleanup of the result.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};

use super::{atom_vars, entails, is_satisfiable, minimize, ReasonerError};
use crate::constraint::{ConstraintStore, LinearAtom, LinearExpr, Relation, Var, VarOrder};
use crate::rational::Q;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Projection {
    /// Irredundant atoms over the kept variables; `[0 < 0]` if the store is
    /// unsatisfiable, empty if the projection is unconstrained.
    pub atoms: Vec<LinearAtom>,
    /// Integrality of an eliminated variable was dropped, so the atoms
    /// describe the projection of the LP relaxation.
    pub lp_relaxation: bool,
}

/// One elimination step on a conjunction. Gaussian substitution is used when
/// an equality mentions `var`, Fourier–Motzkin otherwise.
pub fn fm_eliminate(atoms: &[LinearAtom], var: &Var) -> Vec<LinearAtom> {
    if let Some(pos) = atoms
        .iter()
        .position(|a| a.relation() == Relation::Eq && a.terms().contains_key(var))
    {
        let pivot = &atoms[pos];
        let expr = solve_for(pivot, var);
        return atoms
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != pos)
            .map(|(_, a)| a.substitute(var, &expr))
            .collect();
    }
    let mut out = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for atom in atoms {
        let c = atom.coefficient(var);
        if c.is_zero() {
            out.push(atom.clone());
        } else if c.is_positive() {
            upper.push((atom, c));
        } else {
            lower.push((atom, c));
        }
    }
    for (p, cp) in &upper {
        for (n, cn) in &lower {
            out.push(combine(p, &-cn.clone(), n, cp));
        }
    }
    out
}

/// `var = (rhs − Σ others) / c` from an equality.
fn solve_for(eq: &LinearAtom, var: &Var) -> LinearExpr {
    let c = eq.coefficient(var);
    let mut expr = LinearExpr::constant(eq.rhs() / &c);
    for (v, a) in eq.terms() {
        if v != var {
            expr.add_term(-(a / &c), v.clone());
        }
    }
    expr
}

/// `p·fp + n·fn` for positive factors; strict if either side is.
fn combine(p: &LinearAtom, fp: &Q, n: &LinearAtom, fn_: &Q) -> LinearAtom {
    let mut terms: BTreeMap<Var, Q> = BTreeMap::new();
    for (v, c) in p.terms() {
        *terms.entry(v.clone()).or_insert_with(Q::zero) += c * fp;
    }
    for (v, c) in n.terms() {
        *terms.entry(v.clone()).or_insert_with(Q::zero) += c * fn_;
    }
    let relation = if p.is_strict() || n.is_strict() {
        Relation::Lt
    } else {
        Relation::Le
    };
    LinearAtom::new(terms, relation, p.rhs() * fp + n.rhs() * fn_)
}

/// Projection onto `keep`, displayed in the variables' natural order.
pub fn project(store: &ConstraintStore, keep: &BTreeSet<Var>) -> Result<Projection, ReasonerError> {
    let ordered: Vec<Var> = keep.iter().cloned().collect();
    project_ordered(store, &ordered)
}

/// Projection onto `keep`; atoms are ordered by the position of their
/// leading variable in `keep`.
pub fn project_ordered(store: &ConstraintStore, keep: &[Var]) -> Result<Projection, ReasonerError> {
    let keep_set: BTreeSet<Var> = keep.iter().cloned().collect();
    let order = VarOrder::new(keep.iter().cloned());
    let lp_relaxation = store.integer_vars.iter().any(|v| !keep_set.contains(v));

    if !is_satisfiable(store)?.is_sat() {
        return Ok(Projection {
            atoms: vec![LinearAtom::falsity()],
            lp_relaxation,
        });
    }
    let relaxed = store.relaxed();
    let mut atoms = dedup(relaxed.all_atoms());
    let mut equalities_marked = false;
    loop {
        let present = atom_vars(&atoms);
        if let Some(var) = substitutable(&atoms, &present, &keep_set) {
            atoms = dedup(fm_eliminate(&atoms, &var));
            continue;
        }
        if !equalities_marked {
            atoms = dedup(mark_implicit_equalities(atoms)?);
            equalities_marked = true;
            continue;
        }
        let Some(var) = cheapest(&atoms, &present, &keep_set) else {
            break;
        };
        let before: BTreeSet<LinearAtom> = atoms.iter().cloned().collect();
        atoms = dedup(fm_eliminate(&atoms, &var));
        let fresh: Vec<usize> = (0..atoms.len())
            .filter(|&i| !before.contains(&atoms[i]))
            .collect();
        atoms = remove_redundant(atoms, &fresh, &order)?;
    }
    if atoms.iter().any(|a| a.ground_truth() == Some(false)) {
        return Ok(Projection {
            atoms: vec![LinearAtom::falsity()],
            lp_relaxation,
        });
    }

    atoms = dedup(mark_implicit_equalities(atoms)?);
    let all: Vec<usize> = (0..atoms.len()).collect();
    atoms = remove_redundant(atoms, &all, &order)?;
    atoms.sort_by(|a, b| {
        display_key(a, &order)
            .cmp(&display_key(b, &order))
            .then_with(|| a.cmp(b))
    });
    Ok(Projection {
        atoms,
        lp_relaxation,
    })
}

fn display_key(atom: &LinearAtom, order: &VarOrder) -> Vec<usize> {
    order
        .sorted(atom.terms().keys())
        .into_iter()
        .map(|v| order.rank(v))
        .collect()
}

/// An eliminable variable occurring in an equality.
fn substitutable(
    atoms: &[LinearAtom],
    present: &BTreeSet<Var>,
    keep: &BTreeSet<Var>,
) -> Option<Var> {
    present
        .iter()
        .filter(|v| !keep.contains(*v))
        .find(|v| {
            atoms
                .iter()
                .any(|a| a.relation() == Relation::Eq && a.terms().contains_key(*v))
        })
        .cloned()
}

/// The eliminable variable producing the fewest Fourier–Motzkin combinations.
fn cheapest(atoms: &[LinearAtom], present: &BTreeSet<Var>, keep: &BTreeSet<Var>) -> Option<Var> {
    present
        .iter()
        .filter(|v| !keep.contains(*v))
        .min_by_key(|v| {
            let pos = atoms
                .iter()
                .filter(|a| a.coefficient(v).is_positive())
                .count();
            let neg = atoms
                .iter()
                .filter(|a| a.coefficient(v).is_negative())
                .count();
            pos * neg
        })
        .cloned()
}

/// Normalizes, drops true ground atoms, keeps the tightest of parallel
/// atoms and merges opposite non-strict pairs with equal bounds into an
/// equality.
fn dedup(atoms: Vec<LinearAtom>) -> Vec<LinearAtom> {
    let mut equalities: BTreeSet<LinearAtom> = BTreeSet::new();
    let mut bounds: BTreeMap<BTreeMap<Var, Q>, (Q, bool)> = BTreeMap::new();
    let mut out = Vec::new();
    for atom in atoms {
        let atom = atom.normalized();
        match atom.ground_truth() {
            Some(true) => continue,
            Some(false) => return vec![LinearAtom::falsity()],
            None => {}
        }
        if atom.relation() == Relation::Eq {
            equalities.insert(atom);
            continue;
        }
        let strict = atom.is_strict();
        let key = atom.terms().clone();
        match bounds.get_mut(&key) {
            Some((rhs, s)) => {
                if atom.rhs() < rhs || (atom.rhs() == rhs && strict) {
                    *rhs = atom.rhs().clone();
                    *s = strict;
                }
            }
            None => {
                bounds.insert(key, (atom.rhs().clone(), strict));
            }
        }
    }
    let mut merged: BTreeSet<BTreeMap<Var, Q>> = BTreeSet::new();
    for (terms, (rhs, strict)) in &bounds {
        if merged.contains(terms) {
            continue;
        }
        let opposite: BTreeMap<Var, Q> = terms.iter().map(|(v, c)| (v.clone(), -c)).collect();
        if let Some((orhs, ostrict)) = bounds.get(&opposite) {
            if !strict && !ostrict && *orhs == -rhs.clone() {
                equalities
                    .insert(LinearAtom::new(terms.clone(), Relation::Eq, rhs.clone()).normalized());
                merged.insert(terms.clone());
                merged.insert(opposite);
                continue;
            }
        }
        let relation = if *strict { Relation::Lt } else { Relation::Le };
        out.push(LinearAtom::new(terms.clone(), relation, rhs.clone()));
    }
    let mut all: Vec<LinearAtom> = equalities.into_iter().collect();
    all.extend(out);
    all
}

/// Replaces every non-strict inequality that holds with equality on the
/// whole (satisfiable) region by that equality.
///
/// Each round maximizes the summed slack (each capped at 1) of the atoms
/// not yet seen loose; a zero optimum means all of them are tight.
fn mark_implicit_equalities(atoms: Vec<LinearAtom>) -> Result<Vec<LinearAtom>, ReasonerError> {
    let mut open: BTreeSet<usize> = (0..atoms.len())
        .filter(|&i| atoms[i].relation() == Relation::Le)
        .collect();
    let closed: Vec<LinearAtom> = atoms.iter().map(LinearAtom::closure).collect();
    while !open.is_empty() {
        let mut store = ConstraintStore::new();
        let mut objective = LinearExpr::zero();
        for (i, atom) in closed.iter().enumerate() {
            if !open.contains(&i) {
                store.push(atom.clone());
                continue;
            }
            let slack = Var::aux(format!("#slack{i}"));
            let mut terms = atom.terms().clone();
            terms.insert(slack.clone(), Q::one());
            store.push(LinearAtom::new(terms, Relation::Le, atom.rhs().clone()));
            store.set_bounds(slack.clone(), Some(Q::zero()), Some(Q::one()));
            objective.add_term(-Q::one(), slack);
        }
        let result = minimize(&store, &objective)?;
        let (Some(value), Some(w)) = (result.value, result.witness) else {
            break;
        };
        if value.is_zero() {
            break;
        }
        open.retain(|&i| {
            closed[i]
                .lhs()
                .evaluate(&w)
                .map_or(true, |lhs| &lhs >= closed[i].rhs())
        });
    }
    Ok(atoms
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            if open.contains(&i) {
                LinearAtom::new(a.terms().clone(), Relation::Eq, a.rhs().clone())
            } else {
                a
            }
        })
        .collect())
}

/// Drops atoms among `check` that the remaining atoms entail. Atoms with
/// more terms go first, then later atoms in display order.
fn remove_redundant(
    atoms: Vec<LinearAtom>,
    check: &[usize],
    order: &VarOrder,
) -> Result<Vec<LinearAtom>, ReasonerError> {
    let mut queue: Vec<usize> = check.to_vec();
    queue.sort_by(|&a, &b| {
        atoms[b]
            .terms()
            .len()
            .cmp(&atoms[a].terms().len())
            .then_with(|| display_key(&atoms[b], order).cmp(&display_key(&atoms[a], order)))
    });
    let mut alive = vec![true; atoms.len()];
    for i in queue {
        let others: Vec<LinearAtom> = (0..atoms.len())
            .filter(|&j| j != i && alive[j])
            .map(|j| atoms[j].clone())
            .collect();
        if entails(&ConstraintStore::with_atoms(others), &atoms[i])? {
            alive[i] = false;
        }
    }
    Ok(atoms
        .into_iter()
        .zip(alive)
        .filter(|(_, keep)| *keep)
        .map(|(a, _)| a)
        .collect())
}

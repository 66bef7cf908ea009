//! Store compilation and branch-and-bound with strict-inequality semantics.
//!
//! Every LP here optimizes over the closure (strict atoms relaxed). A node is
//! kept only if its strict relaxation is nonempty, which is decided by
//! maximizing a shared slack `t ≤ 1` on all strict rows: the region is
//! nonempty iff the optimum has `t > 0`.

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Signed, Zero};

use super::lp::{self, LpOutcome, LpProblem, LpRow, RowKind};
use super::ReasonerError;
use crate::constraint::{ConstraintStore, LinearAtom, LinearExpr, Relation, Var};
use crate::rational::{self, Q};

/// Nodes explored before giving up.
pub const NODE_LIMIT: usize = 100_000;

#[derive(Debug, Clone)]
pub(crate) struct Compiled {
    pub vars: Vec<Var>,
    pub index: HashMap<Var, usize>,
    /// Closure of the store: non-strict rows plus column bounds.
    pub closure: LpProblem,
    /// Strict atoms as `a·x ≤ b` rows, to be tightened by the slack `t`.
    pub strict_rows: Vec<LpRow>,
    pub integer: Vec<usize>,
    /// A ground atom or an integer-tightened atom is false.
    pub trivially_false: bool,
    pub node_limit: usize,
}

impl Compiled {
    pub fn new<'a>(store: &ConstraintStore, extra: impl IntoIterator<Item = &'a Var>) -> Compiled {
        let mut var_set: BTreeSet<Var> = store.variables();
        var_set.extend(extra.into_iter().cloned());
        let vars: Vec<Var> = var_set.into_iter().collect();
        let index: HashMap<Var, usize> = vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();
        let integer: Vec<usize> = store.integer_vars.iter().map(|v| index[v]).collect();

        let mut compiled = Compiled {
            closure: LpProblem::new(vars.len()),
            vars,
            index,
            strict_rows: Vec::new(),
            integer,
            trivially_false: false,
            node_limit: store.node_limit.unwrap_or(NODE_LIMIT),
        };
        for (var, interval) in &store.bounds {
            let col = compiled.index[var];
            if let Some(lo) = &interval.lo {
                compiled.closure.tighten_lower(col, lo.clone());
            }
            if let Some(hi) = &interval.hi {
                compiled.closure.tighten_upper(col, hi.clone());
            }
        }
        for atom in &store.atoms {
            let atom = if atom.variables().all(|v| store.integer_vars.contains(v)) {
                match tighten_integer_atom(atom) {
                    Some(a) => a,
                    None => {
                        compiled.trivially_false = true;
                        continue;
                    }
                }
            } else {
                atom.clone()
            };
            compiled.add_atom(&atom);
        }
        for &col in &compiled.integer {
            if let Some(lo) = compiled.closure.lower[col].clone() {
                compiled.closure.lower[col] = Some(Q::from_integer(lo.ceil().to_integer()));
            }
            if let Some(hi) = compiled.closure.upper[col].clone() {
                compiled.closure.upper[col] = Some(Q::from_integer(hi.floor().to_integer()));
            }
        }
        compiled
    }

    fn add_atom(&mut self, atom: &LinearAtom) {
        if let Some(truth) = atom.ground_truth() {
            if !truth {
                self.trivially_false = true;
            }
            return;
        }
        let coefs: Vec<(usize, Q)> = atom
            .terms()
            .iter()
            .map(|(v, c)| (self.index[v], c.clone()))
            .collect();
        if coefs.len() == 1 {
            let (col, c) = &coefs[0];
            let bound = atom.rhs() / c;
            match atom.relation() {
                Relation::Eq => {
                    self.closure.tighten_lower(*col, bound.clone());
                    self.closure.tighten_upper(*col, bound);
                }
                Relation::Le | Relation::Lt if c.is_positive() => {
                    self.closure.tighten_upper(*col, bound)
                }
                Relation::Le | Relation::Lt => self.closure.tighten_lower(*col, bound),
            }
        } else {
            let kind = if atom.relation() == Relation::Eq {
                RowKind::Eq
            } else {
                RowKind::Le
            };
            self.closure.rows.push(LpRow {
                coefs: coefs.clone(),
                kind,
                rhs: atom.rhs().clone(),
            });
        }
        if atom.is_strict() {
            self.strict_rows.push(LpRow {
                coefs,
                kind: RowKind::Le,
                rhs: atom.rhs().clone(),
            });
        }
    }

    pub fn dense(&self, expr: &LinearExpr) -> Vec<Q> {
        let mut out = vec![Q::zero(); self.vars.len()];
        for (v, c) in &expr.terms {
            out[self.index[v]] = c.clone();
        }
        out
    }

    pub fn has_strict(&self) -> bool {
        !self.strict_rows.is_empty()
    }
}

/// Integer-only atoms: scale to coprime integer coefficients and round the
/// right-hand side, turning `<` into `≤`. `None` if the atom has no integer
/// solution.
fn tighten_integer_atom(atom: &LinearAtom) -> Option<LinearAtom> {
    if atom.terms().is_empty() {
        return Some(atom.clone());
    }
    let coefs: Vec<&Q> = atom.terms().values().collect();
    let lcm = Q::from_integer(rational::lcm_of_denominators(coefs.iter().copied()));
    let scaled: Vec<Q> = coefs.iter().map(|c| *c * &lcm).collect();
    let gcd = Q::from_integer(rational::gcd_of_numerators(&scaled));
    let factor = &lcm / &gcd;
    let normalized = atom.scaled(&factor);
    let rhs = normalized.rhs().clone();
    let (relation, rhs) = match atom.relation() {
        Relation::Le => (Relation::Le, rhs.floor()),
        Relation::Lt => (Relation::Le, rhs.ceil() - Q::one()),
        Relation::Eq => {
            if !rhs.is_integer() {
                return None;
            }
            (Relation::Eq, rhs)
        }
    };
    Some(LinearAtom::new(normalized.terms().clone(), relation, rhs))
}

/// Point of the strict region of `problem`, if it is nonempty.
pub(crate) fn strict_point(problem: &LpProblem, strict_rows: &[LpRow]) -> Option<Vec<Q>> {
    let n = problem.columns();
    if strict_rows.is_empty() {
        return match lp::solve(problem, &vec![Q::zero(); n]) {
            LpOutcome::Optimal { x, .. } => Some(x),
            _ => None,
        };
    }
    let mut p = problem.clone();
    let t = p.add_column(None, Some(Q::one()));
    for row in strict_rows {
        let mut coefs = row.coefs.clone();
        coefs.push((t, Q::one()));
        p.rows.push(LpRow {
            coefs,
            kind: RowKind::Le,
            rhs: row.rhs.clone(),
        });
    }
    let mut objective = vec![Q::zero(); n + 1];
    objective[t] = -Q::one();
    match lp::solve(&p, &objective) {
        LpOutcome::Optimal { mut x, .. } => {
            let slack = x.pop().expect("slack column");
            slack.is_positive().then_some(x)
        }
        _ => None,
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Candidate {
    pub value: Q,
    pub attained: bool,
    pub x: Vec<Q>,
}

#[derive(Debug, Clone)]
pub(crate) enum MilpOutcome {
    Infeasible,
    Unbounded,
    Optimal(Candidate),
}

type NodeBounds = Vec<(Option<Q>, Option<Q>)>;

/// Infimum of `objective · x` over the store, with attainment. With
/// `first_feasible` the search stops at the first feasible slice.
pub(crate) fn solve(
    compiled: &Compiled,
    objective: &[Q],
    first_feasible: bool,
) -> Result<MilpOutcome, ReasonerError> {
    if compiled.trivially_false {
        return Ok(MilpOutcome::Infeasible);
    }
    let root: NodeBounds = compiled
        .integer
        .iter()
        .map(|&c| {
            (
                compiled.closure.lower[c].clone(),
                compiled.closure.upper[c].clone(),
            )
        })
        .collect();
    let mut stack = vec![root];
    let mut incumbent: Option<Candidate> = None;
    let mut explored = 0usize;

    while let Some(node) = stack.pop() {
        explored += 1;
        if explored > compiled.node_limit {
            return Err(ReasonerError::BudgetExceeded {
                nodes: compiled.node_limit,
            });
        }
        let problem = with_bounds(compiled, &node);
        if compiled.has_strict() && strict_point(&problem, &compiled.strict_rows).is_none() {
            continue;
        }
        let (x, value) = match lp::solve(&problem, objective) {
            LpOutcome::Infeasible => continue,
            LpOutcome::Unbounded => return Ok(MilpOutcome::Unbounded),
            LpOutcome::Optimal { x, value } => (x, value),
        };
        if let Some(best) = &incumbent {
            if value > best.value || (value == best.value && best.attained) {
                continue;
            }
        }
        if let Some(k) = most_fractional(compiled, &x) {
            let col = compiled.integer[k];
            let mut down = node.clone();
            down[k].1 = Some(Q::from_integer(x[col].floor().to_integer()));
            let mut up = node;
            up[k].0 = Some(Q::from_integer(x[col].ceil().to_integer()));
            stack.push(up);
            stack.push(down);
            continue;
        }

        let mut slice = problem.clone();
        for &col in &compiled.integer {
            slice.lower[col] = Some(x[col].clone());
            slice.upper[col] = Some(x[col].clone());
        }
        let slice_open =
            compiled.integer.is_empty() || strict_point(&slice, &compiled.strict_rows).is_some();
        if compiled.has_strict() && !slice_open {
            // The closure optimum sits on an integer slice whose strict part is
            // empty: split the node around it.
            if let Some(k) = (0..compiled.integer.len()).find(|&k| !is_singleton(&node[k])) {
                let z = x[compiled.integer[k]].clone();
                let one = Q::one();
                let mut children = Vec::new();
                if node[k].0.as_ref().is_none_or(|lo| *lo <= &z - &one) {
                    let mut below = node.clone();
                    below[k].1 = Some(&z - &one);
                    children.push(below);
                }
                let mut at = node.clone();
                at[k] = (Some(z.clone()), Some(z.clone()));
                children.push(at);
                if node[k].1.as_ref().is_none_or(|hi| *hi >= &z + &one) {
                    let mut above = node.clone();
                    above[k].0 = Some(&z + &one);
                    children.push(above);
                }
                stack.extend(children.into_iter().rev());
            }
            continue;
        }

        let candidate = if compiled.has_strict() {
            let mut optimal_face = slice.clone();
            let coefs: Vec<(usize, Q)> = objective
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(j, c)| (j, c.clone()))
                .collect();
            if !coefs.is_empty() {
                optimal_face.rows.push(LpRow {
                    coefs,
                    kind: RowKind::Le,
                    rhs: value.clone(),
                });
            }
            match strict_point(&optimal_face, &compiled.strict_rows) {
                Some(w) => Candidate {
                    value,
                    attained: true,
                    x: w,
                },
                None => Candidate {
                    value,
                    attained: false,
                    x,
                },
            }
        } else {
            Candidate {
                value,
                attained: true,
                x,
            }
        };
        let better = match &incumbent {
            None => true,
            Some(best) => candidate.value < best.value || (candidate.attained && !best.attained),
        };
        if better {
            incumbent = Some(candidate);
        }
        if first_feasible {
            break;
        }
    }
    Ok(match incumbent {
        Some(c) => MilpOutcome::Optimal(c),
        None => MilpOutcome::Infeasible,
    })
}

fn is_singleton(bounds: &(Option<Q>, Option<Q>)) -> bool {
    matches!(bounds, (Some(lo), Some(hi)) if lo == hi)
}

fn with_bounds(compiled: &Compiled, node: &NodeBounds) -> LpProblem {
    let mut p = compiled.closure.clone();
    for (k, &col) in compiled.integer.iter().enumerate() {
        p.lower[col] = node[k].0.clone();
        p.upper[col] = node[k].1.clone();
    }
    p
}

/// Integer column whose value is farthest from integrality; ties go to the
/// lowest variable.
fn most_fractional(compiled: &Compiled, x: &[Q]) -> Option<usize> {
    let half = rational::ratio(1, 2);
    let mut best: Option<(Q, usize)> = None;
    for (k, &col) in compiled.integer.iter().enumerate() {
        let frac = &x[col] - Q::from_integer(x[col].floor().to_integer());
        if frac.is_zero() {
            continue;
        }
        let distance = (&frac - &half).abs();
        if best.as_ref().is_none_or(|(d, _)| distance < *d) {
            best = Some((distance, k));
        }
    }
    best.map(|(_, k)| k)
}

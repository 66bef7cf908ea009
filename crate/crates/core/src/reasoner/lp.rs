//! Exact rational primal simplex with variable bounds and Bland's rule.
//!
//! Each row `aᵢ·x (≤|=) bᵢ` gets a logical variable `rᵢ = aᵢ·x` whose bounds
//! carry the row sense. Rows whose logical starts out of bounds receive an
//! artificial variable; phase one drives the artificials to zero.

use num_traits::{Signed, Zero};

use crate::rational::Q;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RowKind {
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub(crate) struct LpRow {
    pub coefs: Vec<(usize, Q)>,
    pub kind: RowKind,
    pub rhs: Q,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct LpProblem {
    pub lower: Vec<Option<Q>>,
    pub upper: Vec<Option<Q>>,
    pub rows: Vec<LpRow>,
}

impl LpProblem {
    pub fn new(columns: usize) -> Self {
        LpProblem {
            lower: vec![None; columns],
            upper: vec![None; columns],
            rows: Vec::new(),
        }
    }

    pub fn columns(&self) -> usize {
        self.lower.len()
    }

    pub fn add_column(&mut self, lower: Option<Q>, upper: Option<Q>) -> usize {
        self.lower.push(lower);
        self.upper.push(upper);
        self.lower.len() - 1
    }

    pub fn tighten_lower(&mut self, col: usize, value: Q) {
        if self.lower[col].as_ref().is_none_or(|lo| *lo < value) {
            self.lower[col] = Some(value);
        }
    }

    pub fn tighten_upper(&mut self, col: usize, value: Q) {
        if self.upper[col].as_ref().is_none_or(|hi| *hi > value) {
            self.upper[col] = Some(value);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal { x: Vec<Q>, value: Q },
}

/// Minimizes `objective · x` (dense, one entry per column).
pub(crate) fn solve(problem: &LpProblem, objective: &[Q]) -> LpOutcome {
    let n = problem.columns();
    debug_assert_eq!(objective.len(), n);
    for j in 0..n {
        if let (Some(lo), Some(hi)) = (&problem.lower[j], &problem.upper[j]) {
            if lo > hi {
                return LpOutcome::Infeasible;
            }
        }
    }
    let Some(mut tableau) = Tableau::build(problem) else {
        return LpOutcome::Infeasible;
    };

    let mut phase_one = vec![Q::zero(); tableau.width()];
    for &a in &tableau.artificials {
        phase_one[a] = Q::from_integer(1.into());
    }
    if !tableau.artificials.is_empty() {
        tableau.optimize(&phase_one);
        let infeasibility: Q = tableau
            .artificials
            .iter()
            .map(|&a| tableau.values[a].clone())
            .sum();
        if infeasibility.is_positive() {
            return LpOutcome::Infeasible;
        }
        for &a in &tableau.artificials.clone() {
            tableau.upper[a] = Some(Q::zero());
        }
    }

    let mut cost = vec![Q::zero(); tableau.width()];
    cost[..n].clone_from_slice(objective);
    if !tableau.optimize(&cost) {
        return LpOutcome::Unbounded;
    }
    let x: Vec<Q> = tableau.values[..n].to_vec();
    let value = x.iter().zip(objective).map(|(xi, ci)| xi * ci).sum();
    LpOutcome::Optimal { x, value }
}

struct Tableau {
    /// `B⁻¹ A`, one row per constraint.
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    values: Vec<Q>,
    lower: Vec<Option<Q>>,
    upper: Vec<Option<Q>>,
    artificials: Vec<usize>,
}

impl Tableau {
    fn build(problem: &LpProblem) -> Option<Tableau> {
        let n = problem.columns();
        let m = problem.rows.len();
        let mut lower = problem.lower.clone();
        let mut upper = problem.upper.clone();
        let mut values: Vec<Q> = (0..n)
            .map(|j| match (&lower[j], &upper[j]) {
                (Some(lo), _) => lo.clone(),
                (None, Some(hi)) => hi.clone(),
                (None, None) => Q::zero(),
            })
            .collect();

        // Logical columns n..n+m.
        for row in &problem.rows {
            match row.kind {
                RowKind::Le => {
                    lower.push(None);
                    upper.push(Some(row.rhs.clone()));
                }
                RowKind::Eq => {
                    lower.push(Some(row.rhs.clone()));
                    upper.push(Some(row.rhs.clone()));
                }
            }
            values.push(Q::zero());
        }

        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut artificials = Vec::new();
        let mut art_sign = Vec::new();
        for (i, row) in problem.rows.iter().enumerate() {
            let activity: Q = row.coefs.iter().map(|(j, c)| c * &values[*j]).sum();
            let logical = n + i;
            let inside = lower[logical].as_ref().is_none_or(|lo| *lo <= activity)
                && upper[logical].as_ref().is_none_or(|hi| activity <= *hi);
            if inside && row.kind == RowKind::Le {
                values[logical] = activity;
                basis.push(logical);
                art_sign.push(None);
            } else {
                let target = match (&lower[logical], &upper[logical]) {
                    (Some(lo), _) if activity < *lo => lo.clone(),
                    (_, Some(hi)) => hi.clone(),
                    _ => unreachable!("every logical has a finite bound"),
                };
                values[logical] = target.clone();
                // aᵢ·x − rᵢ + σ·art = 0  ⇒  art = (target − activity)/σ ≥ 0
                let sigma = if target >= activity { 1 } else { -1 };
                let art_value = (&target - &activity).abs();
                basis.push(usize::MAX);
                art_sign.push(Some((sigma, art_value)));
            }
            rows.push(row);
        }

        let first_art = n + m;
        for (i, sign) in art_sign.iter().enumerate() {
            if let Some((_, value)) = sign {
                let col = first_art + artificials.len();
                artificials.push(col);
                basis[i] = col;
                lower.push(Some(Q::zero()));
                upper.push(None);
                values.push(value.clone());
            }
        }
        let width = first_art + artificials.len();

        let mut dense = Vec::with_capacity(m);
        for (i, row) in rows.iter().enumerate() {
            let mut line = vec![Q::zero(); width];
            for (j, c) in &row.coefs {
                line[*j] += c;
            }
            line[n + i] = Q::from_integer((-1).into());
            match art_sign[i] {
                None => {
                    // Basic logical has coefficient −1: negate the row.
                    for entry in line.iter_mut() {
                        *entry = -entry.clone();
                    }
                }
                Some((sigma, _)) => {
                    let col = basis[i];
                    line[col] = Q::from_integer(1.into());
                    if sigma < 0 {
                        for (k, entry) in line.iter_mut().enumerate() {
                            if k != col {
                                *entry = -entry.clone();
                            }
                        }
                    }
                }
            }
            dense.push(line);
        }

        let mut is_basic = vec![false; width];
        for &b in &basis {
            is_basic[b] = true;
        }
        Some(Tableau {
            rows: dense,
            basis,
            is_basic,
            values,
            lower,
            upper,
            artificials,
        })
    }

    fn width(&self) -> usize {
        self.values.len()
    }

    /// Runs primal simplex on `cost`; returns `false` when unbounded.
    fn optimize(&mut self, cost: &[Q]) -> bool {
        loop {
            let Some((entering, direction)) = self.entering(cost) else {
                return true;
            };
            match self.ratio_test(entering, direction) {
                None => return false,
                Some((theta, leaving)) => self.step(entering, direction, theta, leaving),
            }
        }
    }

    fn reduced_cost(&self, cost: &[Q], j: usize) -> Q {
        let mut d = cost[j].clone();
        for (i, row) in self.rows.iter().enumerate() {
            let cb = &cost[self.basis[i]];
            if !cb.is_zero() && !row[j].is_zero() {
                d -= cb * &row[j];
            }
        }
        d
    }

    /// Bland: lowest-index improving nonbasic column.
    fn entering(&self, cost: &[Q]) -> Option<(usize, i8)> {
        for j in 0..self.width() {
            if self.is_basic[j] {
                continue;
            }
            let fixed =
                matches!((&self.lower[j], &self.upper[j]), (Some(lo), Some(hi)) if lo == hi);
            if fixed {
                continue;
            }
            let d = self.reduced_cost(cost, j);
            if d.is_negative() && self.upper[j].as_ref().is_none_or(|hi| self.values[j] < *hi) {
                return Some((j, 1));
            }
            if d.is_positive() && self.lower[j].as_ref().is_none_or(|lo| self.values[j] > *lo) {
                return Some((j, -1));
            }
        }
        None
    }

    /// Returns the step length and the leaving row (`None` for a bound flip).
    fn ratio_test(&self, entering: usize, direction: i8) -> Option<(Q, Option<usize>)> {
        let mut best: Option<(Q, usize, Option<usize>)> = None;
        let mut consider = |limit: Q, column: usize, row: Option<usize>| {
            let better = match &best {
                None => true,
                Some((b, col, _)) => limit < *b || (limit == *b && column < *col),
            };
            if better {
                best = Some((limit, column, row));
            }
        };
        let own = if direction > 0 {
            self.upper[entering]
                .as_ref()
                .map(|hi| hi - &self.values[entering])
        } else {
            self.lower[entering]
                .as_ref()
                .map(|lo| &self.values[entering] - lo)
        };
        if let Some(limit) = own {
            consider(limit, entering, None);
        }
        for (i, row) in self.rows.iter().enumerate() {
            let t = &row[entering];
            if t.is_zero() {
                continue;
            }
            let b = self.basis[i];
            // Basic value moves at rate −direction·t per unit step.
            let rate = if direction > 0 { -t.clone() } else { t.clone() };
            if rate.is_positive() {
                if let Some(hi) = &self.upper[b] {
                    consider((hi - &self.values[b]) / &rate, b, Some(i));
                }
            } else if let Some(lo) = &self.lower[b] {
                consider((&self.values[b] - lo) / -rate, b, Some(i));
            }
        }
        best.map(|(limit, _, row)| (limit, row))
    }

    fn step(&mut self, entering: usize, direction: i8, theta: Q, leaving: Option<usize>) {
        let delta = if direction > 0 { theta } else { -theta };
        if !delta.is_zero() {
            self.values[entering] += &delta;
            for i in 0..self.rows.len() {
                let t = &self.rows[i][entering];
                if !t.is_zero() {
                    let change = t * &delta;
                    self.values[self.basis[i]] -= change;
                }
            }
        }
        let Some(r) = leaving else {
            return;
        };
        let old = self.basis[r];
        // Snap the leaving variable onto the bound it reached.
        let snapped = match (&self.lower[old], &self.upper[old]) {
            (Some(lo), _) if self.values[old] <= *lo => Some(lo.clone()),
            (_, Some(hi)) if self.values[old] >= *hi => Some(hi.clone()),
            _ => None,
        };
        if let Some(v) = snapped {
            self.values[old] = v;
        }

        let pivot = self.rows[r][entering].clone();
        for entry in self.rows[r].iter_mut() {
            if !entry.is_zero() {
                *entry /= &pivot;
            }
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[entering].clone();
            if factor.is_zero() {
                continue;
            }
            for (entry, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *entry -= &factor * p;
                }
            }
        }
        self.is_basic[old] = false;
        self.is_basic[entering] = true;
        self.basis[r] = entering;
    }
}

//! Human-readable text for atoms, re-readable by the constraint parser.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};

use super::{LinearAtom, Relation, Var};
use crate::rational::{self, Q};

/// Display order of variables; unknown variables sort after known ones.
#[derive(Debug, Clone, Default)]
pub struct VarOrder {
    rank: HashMap<Var, usize>,
}

impl VarOrder {
    pub fn new(vars: impl IntoIterator<Item = Var>) -> Self {
        let mut rank = HashMap::new();
        for v in vars {
            let next = rank.len();
            rank.entry(v).or_insert(next);
        }
        VarOrder { rank }
    }

    pub fn rank(&self, var: &Var) -> usize {
        self.rank.get(var).copied().unwrap_or(usize::MAX)
    }

    pub fn sorted<'a>(&self, vars: impl IntoIterator<Item = &'a Var>) -> Vec<&'a Var> {
        let mut out: Vec<&Var> = vars.into_iter().collect();
        out.sort_by(|a, b| self.rank(a).cmp(&self.rank(b)).then_with(|| a.cmp(b)));
        out
    }

    /// Leading variable of an atom under this order.
    pub fn leading<'a>(&self, atom: &'a LinearAtom) -> Option<&'a Var> {
        self.sorted(atom.terms().keys()).into_iter().next()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Shown {
    Le,
    Lt,
    Eq,
    Ge,
    Gt,
}

impl Shown {
    fn symbol(self) -> &'static str {
        match self {
            Shown::Le => "<=",
            Shown::Lt => "<",
            Shown::Eq => "=",
            Shown::Ge => ">=",
            Shown::Gt => ">",
        }
    }
}

/// Renders one atom, e.g. `F.age<=19.0`, `CE.capitalgain>5119.0`,
/// `CE.age=F.age` or `CE.race=Black`.
pub fn render_atom(atom: &LinearAtom, order: &VarOrder) -> String {
    if atom.terms().is_empty() {
        let rel = match atom.relation() {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Eq => "=",
        };
        return format!("0.0{rel}{}", rational::format_decimal(atom.rhs()));
    }
    if let Some(text) = categorical_choice(atom) {
        return text;
    }
    let vars = order.sorted(atom.terms().keys());
    let lead = atom.coefficient(vars[0]);
    let (flip, shown) = match (atom.relation(), lead.is_negative()) {
        (Relation::Le, false) => (false, Shown::Le),
        (Relation::Lt, false) => (false, Shown::Lt),
        (Relation::Eq, false) => (false, Shown::Eq),
        (Relation::Le, true) => (true, Shown::Ge),
        (Relation::Lt, true) => (true, Shown::Gt),
        (Relation::Eq, true) => (true, Shown::Eq),
    };
    let sign = if flip { -Q::one() } else { Q::one() };
    let mut coefs: Vec<(&Var, Q)> = vars
        .iter()
        .map(|v| (*v, atom.coefficient(v) * &sign))
        .collect();
    let mut rhs = atom.rhs() * &sign;

    let scale = lead.abs().recip();
    let unit: Vec<Q> = coefs.iter().map(|(_, c)| c * &scale).collect();
    let unit_rhs = &rhs * &scale;
    if unit
        .iter()
        .chain(std::iter::once(&unit_rhs))
        .all(|q| rational::decimal_places(q).is_some())
    {
        for ((_, c), u) in coefs.iter_mut().zip(unit) {
            *c = u;
        }
        rhs = unit_rhs;
    } else {
        let all: Vec<Q> = coefs
            .iter()
            .map(|(_, c)| c.clone())
            .chain(std::iter::once(rhs.clone()))
            .collect();
        let lcm = Q::from_integer(rational::lcm_of_denominators(&all));
        let scaled: Vec<Q> = all.iter().map(|q| q * &lcm).collect();
        let gcd = Q::from_integer(rational::gcd_of_numerators(&scaled));
        for ((_, c), q) in coefs.iter_mut().zip(&scaled) {
            *c = q / &gcd;
        }
        rhs = &scaled[scaled.len() - 1] / &gcd;
    }

    let has_negative = coefs.iter().skip(1).any(|(_, c)| c.is_negative());
    if rhs.is_zero() && has_negative {
        let left: Vec<(&Var, Q)> = coefs
            .iter()
            .filter(|(_, c)| c.is_positive())
            .cloned()
            .collect();
        let right: Vec<(&Var, Q)> = coefs
            .iter()
            .filter(|(_, c)| c.is_negative())
            .map(|(v, c)| (*v, -c.clone()))
            .collect();
        return format!("{}{}{}", sum_text(&left), shown.symbol(), sum_text(&right));
    }
    format!(
        "{}{}{}",
        sum_text(&coefs),
        shown.symbol(),
        rational::format_decimal(&rhs)
    )
}

pub fn render_atoms(atoms: &[LinearAtom], order: &VarOrder) -> Vec<String> {
    atoms.iter().map(|a| render_atom(a, order)).collect()
}

/// `I.f[v] = 1` prints as the categorical choice `I.f=v`.
fn categorical_choice(atom: &LinearAtom) -> Option<String> {
    if atom.relation() != Relation::Eq || atom.terms().len() != 1 || !atom.rhs().is_one() {
        return None;
    }
    let (var, coef) = atom.terms().iter().next()?;
    let r = var.as_feature()?;
    let value = r.coord.as_ref()?;
    coef.is_one()
        .then(|| format!("{}.{}={}", r.instance, r.feature, value))
}

fn sum_text(terms: &[(&Var, Q)]) -> String {
    let mut out = String::new();
    for (i, (var, coef)) in terms.iter().enumerate() {
        let magnitude = coef.abs();
        if coef.is_negative() {
            out.push('-');
        } else if i > 0 {
            out.push('+');
        }
        if !magnitude.is_one() {
            out.push_str(&rational::format_coefficient(&magnitude));
            out.push('*');
        }
        out.push_str(&var.to_string());
    }
    out
}

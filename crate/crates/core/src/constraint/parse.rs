//! Recursive-descent parser for the user constraint language.
//!
//! ```text
//! constraint := expr rel expr
//! rel        := "=" | "<=" | ">=" | "<" | ">"
//! expr       := ["-"] term (("+" | "-") term)*
//! term       := [number "*"] varref | number
//! varref     := NAME "." NAME ["[" VALUE "]"]
//! ```
//!
//! A bare categorical reference may only appear alone on one side of `=`:
//! `CE.race = Black` selects a one-hot coordinate and `CE.race = F.race`
//! equates every coordinate.

use std::fmt;

use num_traits::One;

use super::{Comparison, LinearAtom, LinearExpr, Var, VarRef};
use crate::rational::{self, Q};
use crate::schema::{FeatureKind, FeatureSchema};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownInstance(String),
    UnknownFeature(String),
    UnknownCategory { feature: String, value: String },
    TypeMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    /// Character offset of the offending token.
    pub position: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at position {}: ", self.position)?;
        match &self.kind {
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error: {msg}"),
            ParseErrorKind::UnknownInstance(name) => write!(f, "unknown instance `{name}`"),
            ParseErrorKind::UnknownFeature(name) => write!(f, "unknown feature `{name}`"),
            ParseErrorKind::UnknownCategory { feature, value } => {
                write!(f, "feature `{feature}` has no category `{value}`")
            }
            ParseErrorKind::TypeMismatch(msg) => write!(f, "type mismatch: {msg}"),
        }
    }
}

/// Names the parser may resolve against.
#[derive(Clone, Copy)]
pub struct ParseContext<'a> {
    pub schema: &'a FeatureSchema,
    pub instances: &'a [String],
}

pub fn parse_constraint(text: &str, ctx: ParseContext<'_>) -> Result<Vec<LinearAtom>, ParseError> {
    let mut parser = Parser {
        chars: text.chars().collect(),
        pos: 0,
        ctx,
    };
    let atoms = parser.constraint()?;
    parser.skip_ws();
    if parser.pos < parser.chars.len() {
        return Err(parser.syntax("unexpected trailing input"));
    }
    Ok(atoms)
}

enum Operand {
    Linear(LinearExpr),
    /// Bare categorical reference (no coordinate), with its position.
    Categorical(VarRef, usize),
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    ctx: ParseContext<'a>,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn syntax(&self, msg: &str) -> ParseError {
        ParseError {
            position: self.pos,
            kind: ParseErrorKind::Syntax(msg.to_string()),
        }
    }

    fn error(&self, position: usize, kind: ParseErrorKind) -> ParseError {
        ParseError { position, kind }
    }

    fn constraint(&mut self) -> Result<Vec<LinearAtom>, ParseError> {
        let lhs = self.operand()?;
        let op = self.relation()?;
        match lhs {
            Operand::Categorical(var, pos) => {
                if op != Comparison::Eq {
                    return Err(self.error(
                        pos,
                        ParseErrorKind::TypeMismatch(format!(
                            "categorical `{var}` only supports `=`"
                        )),
                    ));
                }
                self.categorical_rhs(&var)
            }
            Operand::Linear(lhs) => match self.operand()? {
                Operand::Linear(rhs) => Ok(vec![LinearAtom::compare(&lhs, op, &rhs)]),
                Operand::Categorical(var, pos) => Err(self.error(
                    pos,
                    ParseErrorKind::TypeMismatch(format!(
                        "categorical `{var}` compared with a number"
                    )),
                )),
            },
        }
    }

    fn relation(&mut self) -> Result<Comparison, ParseError> {
        self.skip_ws();
        let c0 = self.chars.get(self.pos).copied();
        let c1 = self.chars.get(self.pos + 1).copied();
        let (op, len) = match (c0, c1) {
            (Some('<'), Some('=')) => (Comparison::Le, 2),
            (Some('>'), Some('=')) => (Comparison::Ge, 2),
            (Some('<'), _) => (Comparison::Lt, 1),
            (Some('>'), _) => (Comparison::Gt, 1),
            (Some('='), Some('=')) => (Comparison::Eq, 2),
            (Some('='), _) => (Comparison::Eq, 1),
            (Some('!'), Some('=')) => return Err(self.syntax("`!=` is not supported")),
            _ => return Err(self.syntax("expected one of =, <=, >=, <, >")),
        };
        self.pos += len;
        Ok(op)
    }

    /// Right-hand side of `I.f = ...` for categorical `f`.
    fn categorical_rhs(&mut self, lhs: &VarRef) -> Result<Vec<LinearAtom>, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let save = self.pos;
        if let Some(name) = self.try_name() {
            if self.ctx.instances.contains(&name) && self.chars.get(self.pos) == Some(&'.') {
                self.pos = save;
                return match self.operand()? {
                    Operand::Categorical(rhs, pos) => {
                        let lhs_values = self
                            .ctx
                            .schema
                            .feature(&lhs.feature)
                            .map(|f| f.categories().to_vec());
                        let rhs_values = self
                            .ctx
                            .schema
                            .feature(&rhs.feature)
                            .map(|f| f.categories().to_vec());
                        if lhs_values != rhs_values {
                            return Err(self.error(
                                pos,
                                ParseErrorKind::TypeMismatch(format!(
                                    "`{lhs}` and `{rhs}` have different categories"
                                )),
                            ));
                        }
                        Ok(lhs_values
                            .unwrap_or_default()
                            .iter()
                            .map(|value| {
                                let a = VarRef {
                                    coord: Some(value.clone()),
                                    ..lhs.clone()
                                };
                                let b = VarRef {
                                    coord: Some(value.clone()),
                                    ..rhs.clone()
                                };
                                LinearAtom::compare(
                                    &LinearExpr::var(a),
                                    Comparison::Eq,
                                    &LinearExpr::var(b),
                                )
                            })
                            .collect())
                    }
                    Operand::Linear(_) => Err(self.error(
                        start,
                        ParseErrorKind::TypeMismatch(format!(
                            "categorical `{lhs}` compared with a number"
                        )),
                    )),
                };
            }
        }
        self.pos = self.chars.len();
        let value: String = self.chars[start..]
            .iter()
            .collect::<String>()
            .trim()
            .to_string();
        if value.is_empty() {
            return Err(self.error(start, ParseErrorKind::Syntax("expected a category".into())));
        }
        let spec = self
            .ctx
            .schema
            .feature(&lhs.feature)
            .expect("resolved feature");
        if !spec.categories().contains(&value) {
            return Err(self.error(
                start,
                ParseErrorKind::UnknownCategory {
                    feature: lhs.feature.clone(),
                    value,
                },
            ));
        }
        let coord = VarRef {
            coord: Some(value),
            ..lhs.clone()
        };
        Ok(vec![LinearAtom::var_eq(coord, Q::one())])
    }

    fn operand(&mut self) -> Result<Operand, ParseError> {
        let mut expr = LinearExpr::zero();
        let mut sign = Q::one();
        if self.peek() == Some('-') {
            self.pos += 1;
            sign = -Q::one();
        }
        let mut first = true;
        loop {
            self.skip_ws();
            let term_pos = self.pos;
            match self.term()? {
                Operand::Linear(t) => expr.add(&t, &sign),
                Operand::Categorical(var, pos) => {
                    let alone =
                        first && sign == Q::one() && !matches!(self.peek(), Some('+' | '-' | '*'));
                    if alone {
                        return Ok(Operand::Categorical(var, pos));
                    }
                    return Err(self.error(
                        term_pos,
                        ParseErrorKind::TypeMismatch(format!("arithmetic on categorical `{var}`")),
                    ));
                }
            }
            first = false;
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    sign = Q::one();
                }
                Some('-') => {
                    self.pos += 1;
                    sign = -Q::one();
                }
                _ => return Ok(Operand::Linear(expr)),
            }
        }
    }

    fn term(&mut self) -> Result<Operand, ParseError> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let value = self.number()?;
                if self.peek() == Some('*') {
                    self.pos += 1;
                    self.skip_ws();
                    let var_pos = self.pos;
                    match self.varref()? {
                        Operand::Linear(e) => Ok(Operand::Linear(e.scaled(&value))),
                        Operand::Categorical(var, _) => Err(self.error(
                            var_pos,
                            ParseErrorKind::TypeMismatch(format!(
                                "arithmetic on categorical `{var}`"
                            )),
                        )),
                    }
                } else {
                    Ok(Operand::Linear(LinearExpr::constant(value)))
                }
            }
            Some(c) if c.is_alphabetic() || c == '_' => self.varref(),
            Some(_) => Err(self.syntax("expected a number or a variable")),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Q, ParseError> {
        let start = self.pos;
        while self
            .chars
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_digit() || *c == '.')
        {
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        rational::parse_rational(&text).ok_or_else(|| {
            self.error(
                start,
                ParseErrorKind::Syntax(format!("bad number `{text}`")),
            )
        })
    }

    fn try_name(&mut self) -> Option<String> {
        let start = self.pos;
        match self.chars.get(self.pos) {
            Some(c) if c.is_alphabetic() || *c == '_' => {}
            _ => return None,
        }
        while self
            .chars
            .get(self.pos)
            .is_some_and(|c| c.is_alphanumeric() || *c == '_')
        {
            self.pos += 1;
        }
        Some(self.chars[start..self.pos].iter().collect())
    }

    fn varref(&mut self) -> Result<Operand, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let instance = self
            .try_name()
            .ok_or_else(|| self.syntax("expected an instance name"))?;
        if self.chars.get(self.pos) != Some(&'.') {
            return Err(self.syntax("expected `.` after instance name"));
        }
        self.pos += 1;
        let feature_pos = self.pos;
        let feature = self
            .try_name()
            .ok_or_else(|| self.syntax("expected a feature name"))?;
        if !self.ctx.instances.contains(&instance) {
            return Err(self.error(start, ParseErrorKind::UnknownInstance(instance)));
        }
        let spec = self.ctx.schema.feature(&feature).ok_or_else(|| {
            self.error(feature_pos, ParseErrorKind::UnknownFeature(feature.clone()))
        })?;
        if self.chars.get(self.pos) == Some(&'[') {
            let open = self.pos;
            let close = self.chars[open..]
                .iter()
                .position(|c| *c == ']')
                .map(|off| open + off)
                .ok_or_else(|| self.syntax("unterminated `[`"))?;
            let value: String = self.chars[open + 1..close].iter().collect();
            self.pos = close + 1;
            if !spec.categories().contains(&value) {
                let kind = if spec.is_categorical() {
                    ParseErrorKind::UnknownCategory { feature, value }
                } else {
                    ParseErrorKind::TypeMismatch(format!("`{feature}` is not categorical"))
                };
                return Err(self.error(open, kind));
            }
            return Ok(Operand::Linear(LinearExpr::var(VarRef::coordinate(
                &instance, &feature, &value,
            ))));
        }
        let var = VarRef::new(&instance, &feature);
        match spec.kind {
            FeatureKind::Categorical { .. } => Ok(Operand::Categorical(var, start)),
            _ => Ok(Operand::Linear(LinearExpr::var(Var::Feature(var)))),
        }
    }
}

//! Interactive explanation sessions: instances, background constraints and
//! `solveopt` queries over the paths of a decision tree.

mod query;
mod render;
mod solve;

use std::sync::Arc;

use num_traits::{One, Zero};

use crate::constraint::{parse_constraint, LinearAtom, ParseContext, ParseError, Var, VarRef};
use crate::rational::{self, Q};
use crate::schema::{FeatureSchema, FeatureValue, Row, SchemaError};
use crate::tree::{extract_paths, DecisionTree, PathFact};

pub use query::{DistanceSpec, ProjectItem, Query};
pub use render::{render_result, result_json, solution_json};
pub use solve::{ComboFailure, DistanceResult, QueryResult, Solution};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SessionError {
    #[error("instance `{0}` is already declared")]
    DuplicateInstance(String),
    #[error("unknown instance `{0}`")]
    UnknownInstance(String),
    #[error("invalid instance name `{0}`")]
    InvalidName(String),
    #[error("minconf must lie in [0, 1], got {0}")]
    BadMinconf(String),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("cannot parse `{text}` {error}")]
    Parse { text: String, error: ParseError },
    #[error("no constraint matches `{0}`")]
    ConstraintNotFound(String),
    #[error("bad query: {0}")]
    BadQuery(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub name: String,
    pub fixed_values: Row,
    pub class_requirement: Option<String>,
    pub minconf: Q,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub id: u64,
    pub text: String,
    pub atoms: Vec<LinearAtom>,
}

#[derive(Debug, Clone)]
pub struct Session {
    tree: Arc<DecisionTree>,
    paths: Arc<Vec<PathFact>>,
    instances: Vec<Instance>,
    constraints: Vec<Constraint>,
    next_id: u64,
    node_limit: Option<usize>,
}

impl Session {
    pub fn new(tree: DecisionTree) -> Self {
        let paths = extract_paths(&tree);
        Session {
            tree: Arc::new(tree),
            paths: Arc::new(paths),
            instances: Vec::new(),
            constraints: Vec::new(),
            next_id: 1,
            node_limit: None,
        }
    }

    pub fn tree(&self) -> &DecisionTree {
        &self.tree
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.tree.schema
    }

    pub fn paths(&self) -> &[PathFact] {
        &self.paths
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn instance(&self, name: &str) -> Option<&Instance> {
        self.instances.iter().find(|i| i.name == name)
    }

    /// Branch-and-bound budget per solver call; `None` restores the default
    /// of [`crate::reasoner::NODE_LIMIT`].
    pub fn set_node_limit(&mut self, limit: Option<usize>) {
        self.node_limit = limit;
    }

    pub fn node_limit(&self) -> Option<usize> {
        self.node_limit
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    fn instance_names(&self) -> Vec<String> {
        self.instances.iter().map(|i| i.name.clone()).collect()
    }

    /// Registers an instance. Each fixed value becomes a retractable
    /// equality constraint with canonical text such as `F.age=19.0` or
    /// `F.race=Black`.
    pub fn declare_instance(
        &mut self,
        name: &str,
        fixed_values: Row,
        class_requirement: Option<String>,
        minconf: Option<Q>,
    ) -> Result<(), SessionError> {
        let valid = !name.is_empty()
            && name.chars().all(|c| c.is_alphanumeric() || c == '_')
            && name.chars().any(|c| c.is_alphabetic());
        if !valid {
            return Err(SessionError::InvalidName(name.to_string()));
        }
        if self.instance(name).is_some() {
            return Err(SessionError::DuplicateInstance(name.to_string()));
        }
        let minconf = minconf.unwrap_or_else(Q::zero);
        if minconf < Q::zero() || minconf > Q::one() {
            return Err(SessionError::BadMinconf(rational::to_exact_string(
                &minconf,
            )));
        }
        for (feature, value) in &fixed_values {
            self.schema().check_value(feature, value)?;
        }
        let mut fixed = Vec::new();
        for spec in self.schema().features() {
            let Some(value) = fixed_values.get(&spec.name) else {
                continue;
            };
            let (text, atom) = match value {
                FeatureValue::Number(q) => (
                    format!("{name}.{}={}", spec.name, rational::format_decimal(q)),
                    LinearAtom::var_eq(Var::feature(name, &spec.name), q.clone()),
                ),
                FeatureValue::Category(c) => (
                    format!("{name}.{}={c}", spec.name),
                    LinearAtom::var_eq(VarRef::coordinate(name, &spec.name, c), Q::one()),
                ),
            };
            fixed.push((text, atom));
        }
        self.instances.push(Instance {
            name: name.to_string(),
            fixed_values,
            class_requirement,
            minconf,
        });
        for (text, atom) in fixed {
            self.push_constraint(text, vec![atom]);
        }
        Ok(())
    }

    fn push_constraint(&mut self, text: String, atoms: Vec<LinearAtom>) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        self.constraints.push(Constraint { id, text, atoms });
        id
    }

    /// Parses and stores a background constraint; the session is unchanged on
    /// error.
    pub fn add_constraint(&mut self, text: &str) -> Result<u64, SessionError> {
        let atoms = self.parse(text)?;
        Ok(self.push_constraint(text.trim().to_string(), atoms))
    }

    pub fn parse(&self, text: &str) -> Result<Vec<LinearAtom>, SessionError> {
        let names = self.instance_names();
        parse_constraint(
            text,
            ParseContext {
                schema: self.schema(),
                instances: &names,
            },
        )
        .map_err(|error| SessionError::Parse {
            text: text.trim().to_string(),
            error,
        })
    }

    /// Removes the constraint with this id.
    pub fn retract_id(&mut self, id: u64) -> Result<Constraint, SessionError> {
        let pos = self
            .constraints
            .iter()
            .position(|c| c.id == id)
            .ok_or_else(|| SessionError::ConstraintNotFound(id.to_string()))?;
        Ok(self.constraints.remove(pos))
    }

    /// Removes the earliest constraint whose source text is exactly `text`.
    pub fn retract_text(&mut self, text: &str) -> Result<Constraint, SessionError> {
        let text = text.trim();
        let pos = self
            .constraints
            .iter()
            .position(|c| c.text == text)
            .ok_or_else(|| SessionError::ConstraintNotFound(text.to_string()))?;
        Ok(self.constraints.remove(pos))
    }

    /// Paths an instance may follow: class requirement met and leaf
    /// confidence at least `minconf`.
    pub fn admissible_paths(&self, instance: &Instance) -> Vec<&PathFact> {
        self.paths
            .iter()
            .filter(|p| {
                instance
                    .class_requirement
                    .as_ref()
                    .is_none_or(|c| *c == p.class_label)
            })
            .filter(|p| p.confidence >= instance.minconf)
            .collect()
    }

    pub fn solveopt(&self, query: &Query) -> Result<QueryResult, SessionError> {
        solve::solveopt(self, query)
    }
}

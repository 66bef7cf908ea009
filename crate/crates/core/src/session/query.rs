//! `solveopt` options.

use super::{Session, SessionError};
use crate::constraint::{Var, VarRef};

/// `l1norm(A, B)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceSpec {
    pub from: String,
    pub to: String,
}

impl DistanceSpec {
    pub fn parse(text: &str) -> Result<Self, SessionError> {
        let bad =
            || SessionError::BadQuery(format!("expected `l1norm(A, B)`, got `{}`", text.trim()));
        let inner = text.trim().strip_prefix("l1norm").ok_or_else(bad)?.trim();
        let inner = inner
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(bad)?;
        let (a, b) = inner.split_once(',').ok_or_else(bad)?;
        let (a, b) = (
            a.trim().trim_matches(['\'', '"']),
            b.trim().trim_matches(['\'', '"']),
        );
        if a.is_empty() || b.is_empty() {
            return Err(bad());
        }
        Ok(DistanceSpec {
            from: a.to_string(),
            to: b.to_string(),
        })
    }
}

/// A projection target: a whole instance, one feature of an instance (all
/// one-hot coordinates for a categorical feature), or one coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProjectItem {
    Instance(String),
    Feature { instance: String, feature: String },
    Coordinate(VarRef),
}

impl ProjectItem {
    pub fn parse(text: &str) -> Result<Self, SessionError> {
        let text = text.trim().trim_matches(['\'', '"']);
        let Some((instance, rest)) = text.split_once('.') else {
            return if text.is_empty() {
                Err(SessionError::BadQuery("empty projection item".into()))
            } else {
                Ok(ProjectItem::Instance(text.to_string()))
            };
        };
        match rest.split_once('[') {
            Some((feature, value)) => {
                let value = value.strip_suffix(']').ok_or_else(|| {
                    SessionError::BadQuery(format!("bad projection item `{text}`"))
                })?;
                Ok(ProjectItem::Coordinate(VarRef::coordinate(
                    instance, feature, value,
                )))
            }
            None => Ok(ProjectItem::Feature {
                instance: instance.to_string(),
                feature: rest.to_string(),
            }),
        }
    }

    /// Solver variables named by this item, in layout order.
    pub(crate) fn resolve(&self, session: &Session) -> Result<Vec<Var>, SessionError> {
        let schema = session.schema();
        let known = |name: &str| {
            session
                .instance(name)
                .map(|_| ())
                .ok_or_else(|| SessionError::UnknownInstance(name.to_string()))
        };
        match self {
            ProjectItem::Instance(name) => {
                known(name)?;
                Ok(schema
                    .variables(name)
                    .into_iter()
                    .map(Var::Feature)
                    .collect())
            }
            ProjectItem::Feature { instance, feature } => {
                known(instance)?;
                if schema.feature(feature).is_none() {
                    return Err(SessionError::BadQuery(format!(
                        "unknown feature `{feature}`"
                    )));
                }
                Ok(schema
                    .variables(instance)
                    .into_iter()
                    .filter(|v| v.feature == *feature)
                    .map(Var::Feature)
                    .collect())
            }
            ProjectItem::Coordinate(var) => {
                known(&var.instance)?;
                if schema.layout_position(var).is_none() {
                    return Err(SessionError::BadQuery(format!("unknown variable `{var}`")));
                }
                Ok(vec![Var::Feature(var.clone())])
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Query {
    pub minimize: Option<DistanceSpec>,
    /// `None` projects onto every variable of every declared instance.
    pub project: Option<Vec<ProjectItem>>,
}

impl Query {
    pub fn new(minimize: Option<&str>, project: Option<&[String]>) -> Result<Self, SessionError> {
        Ok(Query {
            minimize: minimize.map(DistanceSpec::parse).transpose()?,
            project: project
                .map(|items| items.iter().map(|i| ProjectItem::parse(i)).collect())
                .transpose()?,
        })
    }
}

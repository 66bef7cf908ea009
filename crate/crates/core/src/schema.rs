//! Typed feature catalogue and the flat solver-variable layout it induces.
//!
//! Continuous and ordinal features map to one solver variable each. A
//! categorical feature with `k` values maps to `k` one-hot coordinates, each a
//! 0/1 integer variable.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constraint::VarRef;
use crate::rational::{self, Q};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SchemaError {
    #[error("feature name must be nonempty")]
    EmptyName,
    #[error("duplicate feature `{0}`")]
    Duplicate(String),
    #[error("feature `{0}`: min exceeds max")]
    EmptyDomain(String),
    #[error("feature `{0}`: categorical features need at least two distinct values")]
    TooFewCategories(String),
    #[error("feature `{0}`: bad number `{1}`")]
    BadNumber(String, String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("missing value for feature `{0}`")]
    MissingValue(String),
    #[error("feature `{feature}`: value `{value}` is outside the domain")]
    OutOfDomain { feature: String, value: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureKind {
    Continuous { min: Q, max: Q },
    Ordinal { min: i64, max: i64 },
    Categorical { values: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
}

impl FeatureSpec {
    pub fn continuous(name: &str, min: Q, max: Q) -> Self {
        FeatureSpec {
            name: name.to_string(),
            kind: FeatureKind::Continuous { min, max },
        }
    }

    pub fn ordinal(name: &str, min: i64, max: i64) -> Self {
        FeatureSpec {
            name: name.to_string(),
            kind: FeatureKind::Ordinal { min, max },
        }
    }

    pub fn categorical(name: &str, values: &[&str]) -> Self {
        FeatureSpec {
            name: name.to_string(),
            kind: FeatureKind::Categorical {
                values: values.iter().map(|v| v.to_string()).collect(),
            },
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, FeatureKind::Categorical { .. })
    }

    /// Numeric interval of a continuous or ordinal feature.
    pub fn interval(&self) -> Option<(Q, Q)> {
        match &self.kind {
            FeatureKind::Continuous { min, max } => Some((min.clone(), max.clone())),
            FeatureKind::Ordinal { min, max } => Some((rational::int(*min), rational::int(*max))),
            FeatureKind::Categorical { .. } => None,
        }
    }

    pub fn categories(&self) -> &[String] {
        match &self.kind {
            FeatureKind::Categorical { values } => values,
            _ => &[],
        }
    }
}

/// One flat coordinate of the encoded feature vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Column {
    pub feature: usize,
    /// Index into the categorical values for a one-hot coordinate.
    pub category: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureValue {
    Number(Q),
    Category(String),
}

impl fmt::Display for FeatureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureValue::Number(q) => f.write_str(&rational::format_decimal(q)),
            FeatureValue::Category(c) => f.write_str(c),
        }
    }
}

/// A (possibly partial) row keyed by feature name.
pub type Row = BTreeMap<String, FeatureValue>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    features: Vec<FeatureSpec>,
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureSpec>) -> Result<Self, SchemaError> {
        let mut seen = HashSet::new();
        for spec in &features {
            if spec.name.is_empty() {
                return Err(SchemaError::EmptyName);
            }
            if !seen.insert(spec.name.as_str()) {
                return Err(SchemaError::Duplicate(spec.name.clone()));
            }
            match &spec.kind {
                FeatureKind::Continuous { min, max } if min > max => {
                    return Err(SchemaError::EmptyDomain(spec.name.clone()))
                }
                FeatureKind::Ordinal { min, max } if min > max => {
                    return Err(SchemaError::EmptyDomain(spec.name.clone()))
                }
                FeatureKind::Categorical { values } => {
                    let distinct: HashSet<_> = values.iter().collect();
                    if distinct.len() < 2 || distinct.len() != values.len() {
                        return Err(SchemaError::TooFewCategories(spec.name.clone()));
                    }
                }
                _ => {}
            }
        }
        Ok(FeatureSchema { features })
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureSpec> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    /// Flat layout in schema order, one-hot coordinates in value order.
    pub fn columns(&self) -> Vec<Column> {
        let mut out = Vec::new();
        for (i, spec) in self.features.iter().enumerate() {
            match &spec.kind {
                FeatureKind::Categorical { values } => {
                    out.extend((0..values.len()).map(|c| Column {
                        feature: i,
                        category: Some(c),
                    }))
                }
                _ => out.push(Column {
                    feature: i,
                    category: None,
                }),
            }
        }
        out
    }

    /// Column name as used in tree documents: `age` or `race[Black]`.
    pub fn column_name(&self, column: &Column) -> String {
        let spec = &self.features[column.feature];
        match column.category {
            Some(c) => format!("{}[{}]", spec.name, spec.categories()[c]),
            None => spec.name.clone(),
        }
    }

    pub fn parse_column(&self, name: &str) -> Option<Column> {
        if let Some((feature, rest)) = name.split_once('[') {
            let value = rest.strip_suffix(']')?;
            let index = self.index_of(feature)?;
            let category = self.features[index]
                .categories()
                .iter()
                .position(|v| v == value)?;
            Some(Column {
                feature: index,
                category: Some(category),
            })
        } else {
            let index = self.index_of(name)?;
            (!self.features[index].is_categorical()).then_some(Column {
                feature: index,
                category: None,
            })
        }
    }

    pub fn var(&self, instance: &str, column: &Column) -> VarRef {
        let spec = &self.features[column.feature];
        VarRef {
            instance: instance.to_string(),
            feature: spec.name.clone(),
            coord: column.category.map(|c| spec.categories()[c].clone()),
        }
    }

    /// Solver variables of one instance, in layout order.
    pub fn variables(&self, instance: &str) -> Vec<VarRef> {
        self.columns()
            .iter()
            .map(|c| self.var(instance, c))
            .collect()
    }

    /// Position of a variable within one instance's layout.
    pub fn layout_position(&self, var: &VarRef) -> Option<usize> {
        let feature = self.index_of(&var.feature)?;
        let column = match &var.coord {
            Some(value) => {
                let category = self.features[feature]
                    .categories()
                    .iter()
                    .position(|v| v == value)?;
                Column {
                    feature,
                    category: Some(category),
                }
            }
            None => Column {
                feature,
                category: None,
            },
        };
        self.columns().iter().position(|c| *c == column)
    }

    /// Range `max - min` of a numeric feature; one when the domain is a point.
    pub fn range(&self, feature: &FeatureSpec) -> Q {
        let (lo, hi) = feature.interval().expect("numeric feature");
        let width = hi - lo;
        if width == rational::int(0) {
            rational::int(1)
        } else {
            width
        }
    }

    pub fn check_value(&self, feature: &str, value: &FeatureValue) -> Result<(), SchemaError> {
        let spec = self
            .feature(feature)
            .ok_or_else(|| SchemaError::UnknownFeature(feature.to_string()))?;
        let out_of_domain = || SchemaError::OutOfDomain {
            feature: feature.to_string(),
            value: value.to_string(),
        };
        match (&spec.kind, value) {
            (FeatureKind::Continuous { min, max }, FeatureValue::Number(q)) => {
                if q < min || q > max {
                    return Err(out_of_domain());
                }
            }
            (FeatureKind::Ordinal { min, max }, FeatureValue::Number(q)) => {
                if !q.is_integer() || *q < rational::int(*min) || *q > rational::int(*max) {
                    return Err(out_of_domain());
                }
            }
            (FeatureKind::Categorical { values }, FeatureValue::Category(c)) => {
                if !values.contains(c) {
                    return Err(out_of_domain());
                }
            }
            _ => return Err(out_of_domain()),
        }
        Ok(())
    }

    /// Reads a textual value (CSV cell, script argument) for a feature.
    pub fn parse_value(&self, feature: &str, text: &str) -> Result<FeatureValue, SchemaError> {
        let spec = self
            .feature(feature)
            .ok_or_else(|| SchemaError::UnknownFeature(feature.to_string()))?;
        let value = if spec.is_categorical() {
            FeatureValue::Category(text.trim().to_string())
        } else {
            FeatureValue::Number(
                rational::parse_rational(text)
                    .ok_or_else(|| SchemaError::BadNumber(feature.to_string(), text.to_string()))?,
            )
        };
        self.check_value(feature, &value)?;
        Ok(value)
    }

    /// Flat numeric encoding of a fully specified row.
    pub fn encode(&self, row: &Row) -> Result<Vec<Q>, SchemaError> {
        let mut out = Vec::new();
        for spec in &self.features {
            let value = row
                .get(&spec.name)
                .ok_or_else(|| SchemaError::MissingValue(spec.name.clone()))?;
            self.check_value(&spec.name, value)?;
            match (value, &spec.kind) {
                (FeatureValue::Number(q), _) => out.push(q.clone()),
                (FeatureValue::Category(c), FeatureKind::Categorical { values }) => {
                    out.extend(values.iter().map(|v| rational::int((v == c) as i64)))
                }
                _ => unreachable!("checked above"),
            }
        }
        Ok(out)
    }

    /// Solver assignment of a fully specified row for one instance.
    pub fn assignment(
        &self,
        instance: &str,
        row: &Row,
    ) -> Result<crate::constraint::Assignment, SchemaError> {
        let values = self.encode(row)?;
        Ok(self
            .variables(instance)
            .into_iter()
            .map(crate::constraint::Var::Feature)
            .zip(values)
            .collect())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum RawKind {
    Continuous { min: String, max: String },
    Ordinal { min: i64, max: i64 },
    Categorical { values: Vec<String> },
}

#[derive(Serialize, Deserialize)]
struct RawFeature {
    name: String,
    #[serde(flatten)]
    kind: RawKind,
}

impl Serialize for FeatureSchema {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let raw: Vec<RawFeature> = self
            .features
            .iter()
            .map(|f| RawFeature {
                name: f.name.clone(),
                kind: match &f.kind {
                    FeatureKind::Continuous { min, max } => RawKind::Continuous {
                        min: rational::to_exact_string(min),
                        max: rational::to_exact_string(max),
                    },
                    FeatureKind::Ordinal { min, max } => RawKind::Ordinal {
                        min: *min,
                        max: *max,
                    },
                    FeatureKind::Categorical { values } => RawKind::Categorical {
                        values: values.clone(),
                    },
                },
            })
            .collect();
        raw.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FeatureSchema {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = Vec::<RawFeature>::deserialize(deserializer)?;
        let mut features = Vec::with_capacity(raw.len());
        for f in raw {
            let kind = match f.kind {
                RawKind::Continuous { min, max } => {
                    let parse = |s: &str| {
                        rational::parse_rational(s).ok_or_else(|| {
                            D::Error::custom(SchemaError::BadNumber(f.name.clone(), s.to_string()))
                        })
                    };
                    FeatureKind::Continuous {
                        min: parse(&min)?,
                        max: parse(&max)?,
                    }
                }
                RawKind::Ordinal { min, max } => FeatureKind::Ordinal { min, max },
                RawKind::Categorical { values } => FeatureKind::Categorical { values },
            };
            features.push(FeatureSpec { name: f.name, kind });
        }
        FeatureSchema::new(features).map_err(D::Error::custom)
    }
}

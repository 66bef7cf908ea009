//! Axis-parallel decision trees: loading, training, prediction and path
//! extraction.

mod cart;
mod paths;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::rational::{self, Q};
use crate::schema::{Column, FeatureSchema, Row, SchemaError};

pub use cart::{train_cart, CartParams, Dataset};
pub use paths::{extract_paths, render_rule, PathFact, Split, TEMPLATE_INSTANCE};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("malformed tree document: {0}")]
    Malformed(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("leaf confidence {0} is outside [0, 1]")]
    BadConfidence(String),
    #[error("split on `{0}` contradicts an earlier split on the same path")]
    InconsistentPath(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("dataset: {0}")]
    Dataset(String),
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeNode {
    /// Rows with `column ≤ threshold` go low, the others high.
    Internal {
        column: Column,
        threshold: Q,
        low: Box<TreeNode>,
        high: Box<TreeNode>,
    },
    Leaf {
        class: String,
        confidence: Q,
        support: u64,
    },
}

impl TreeNode {
    pub fn leaf(class: &str, confidence: Q, support: u64) -> Self {
        TreeNode::Leaf {
            class: class.to_string(),
            confidence,
            support,
        }
    }

    pub fn split(column: Column, threshold: Q, low: TreeNode, high: TreeNode) -> Self {
        TreeNode::Internal {
            column,
            threshold,
            low: Box::new(low),
            high: Box::new(high),
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { low, high, .. } => low.leaves() + high.leaves(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { low, high, .. } => 1 + low.depth().max(high.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionTree {
    pub schema: FeatureSchema,
    pub root: TreeNode,
}

/// A parsed tree plus non-fatal findings such as thresholds outside the
/// feature domain.
#[derive(Debug, Clone)]
pub struct LoadedTree {
    pub tree: DecisionTree,
    pub warnings: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct Document {
    schema: FeatureSchema,
    root: Value,
}

impl DecisionTree {
    pub fn new(schema: FeatureSchema, root: TreeNode) -> Result<Self, TreeError> {
        let tree = DecisionTree { schema, root };
        tree.check_paths()?;
        Ok(tree)
    }

    /// Parses a tree document `{"schema": [...], "root": node}`.
    pub fn from_json(text: &str) -> Result<LoadedTree, TreeError> {
        let doc: Document =
            serde_json::from_str(text).map_err(|e| TreeError::Malformed(e.to_string()))?;
        load_tree(&doc.root, &doc.schema)
    }

    pub fn to_json(&self) -> String {
        let doc = Document {
            schema: self.schema.clone(),
            root: node_to_json(&self.schema, &self.root),
        };
        serde_json::to_string_pretty(&doc).expect("tree document serializes")
    }

    /// Leaf reached by a fully specified row.
    pub fn predict(&self, row: &Row) -> Result<(String, Q), TreeError> {
        let encoded = self.schema.encode(row)?;
        let (class, confidence) = self.predict_encoded(&encoded);
        Ok((class.to_string(), confidence.clone()))
    }

    /// Prediction on a flat encoded row in layout order.
    pub fn predict_encoded(&self, encoded: &[Q]) -> (&str, &Q) {
        let columns = self.schema.columns();
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf {
                    class, confidence, ..
                } => return (class, confidence),
                TreeNode::Internal {
                    column,
                    threshold,
                    low,
                    high,
                } => {
                    let pos = columns
                        .iter()
                        .position(|c| c == column)
                        .expect("column in schema");
                    node = if encoded[pos] <= *threshold {
                        low
                    } else {
                        high
                    };
                }
            }
        }
    }

    /// Every root-to-leaf path must leave each column a nonempty interval
    /// `(lo, hi]`.
    fn check_paths(&self) -> Result<(), TreeError> {
        fn walk(
            schema: &FeatureSchema,
            node: &TreeNode,
            bounds: &mut Vec<(Column, Option<Q>, Option<Q>)>,
        ) -> Result<(), TreeError> {
            let TreeNode::Internal {
                column,
                threshold,
                low,
                high,
            } = node
            else {
                return Ok(());
            };
            let (lo, hi) = bounds
                .iter()
                .rev()
                .find(|(c, _, _)| c == column)
                .map(|(_, lo, hi)| (lo.clone(), hi.clone()))
                .unwrap_or((None, None));
            if lo.as_ref().is_some_and(|l| threshold <= l)
                || hi.as_ref().is_some_and(|h| threshold >= h)
            {
                return Err(TreeError::InconsistentPath(schema.column_name(column)));
            }
            bounds.push((column.clone(), lo.clone(), Some(threshold.clone())));
            walk(schema, low, bounds)?;
            bounds.pop();
            bounds.push((column.clone(), Some(threshold.clone()), hi));
            walk(schema, high, bounds)?;
            bounds.pop();
            Ok(())
        }
        walk(&self.schema, &self.root, &mut Vec::new())
    }
}

/// Builds a tree from a parsed JSON node against `schema`.
pub fn load_tree(root: &Value, schema: &FeatureSchema) -> Result<LoadedTree, TreeError> {
    let mut warnings = Vec::new();
    let root = node_from_json(root, schema, &mut warnings)?;
    Ok(LoadedTree {
        tree: DecisionTree::new(schema.clone(), root)?,
        warnings,
    })
}

fn rational_field(node: &Value, key: &str) -> Result<Q, TreeError> {
    let text = match node.get(key) {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        _ => return Err(TreeError::Malformed(format!("missing `{key}`"))),
    };
    rational::parse_rational(&text)
        .ok_or_else(|| TreeError::Malformed(format!("bad number `{text}` in `{key}`")))
}

fn node_from_json(
    node: &Value,
    schema: &FeatureSchema,
    warnings: &mut Vec<String>,
) -> Result<TreeNode, TreeError> {
    if !node.is_object() {
        return Err(TreeError::Malformed("node must be an object".into()));
    }
    if let Some(class) = node.get("class") {
        let class = class
            .as_str()
            .ok_or_else(|| TreeError::Malformed("`class` must be a string".into()))?;
        let confidence = rational_field(node, "confidence")?;
        if confidence < rational::int(0) || confidence > rational::int(1) {
            return Err(TreeError::BadConfidence(rational::to_exact_string(
                &confidence,
            )));
        }
        let support = match node.get("support") {
            None => 0,
            Some(v) => v.as_u64().ok_or_else(|| {
                TreeError::Malformed("`support` must be a nonnegative integer".into())
            })?,
        };
        return Ok(TreeNode::leaf(class, confidence, support));
    }
    let name = node
        .get("feature")
        .and_then(Value::as_str)
        .ok_or_else(|| TreeError::Malformed("node needs `class` or `feature`".into()))?;
    let column = schema
        .parse_column(name)
        .ok_or_else(|| TreeError::UnknownFeature(name.to_string()))?;
    let threshold = rational_field(node, "threshold")?;
    let spec = &schema.features()[column.feature];
    let (lo, hi) = spec
        .interval()
        .unwrap_or((rational::int(0), rational::int(1)));
    let outside = if column.category.is_some() {
        threshold <= lo || threshold >= hi
    } else {
        threshold < lo || threshold > hi
    };
    if outside {
        warnings.push(format!(
            "threshold {} for `{name}` lies outside the feature domain",
            rational::format_decimal(&threshold)
        ));
    }
    let child = |key: &str, warnings: &mut Vec<String>| {
        node.get(key)
            .ok_or_else(|| TreeError::Malformed(format!("split on `{name}` lacks `{key}`")))
            .and_then(|n| node_from_json(n, schema, warnings))
    };
    let low = child("low", warnings)?;
    let high = child("high", warnings)?;
    Ok(TreeNode::split(column, threshold, low, high))
}

fn node_to_json(schema: &FeatureSchema, node: &TreeNode) -> Value {
    match node {
        TreeNode::Leaf {
            class,
            confidence,
            support,
        } => serde_json::json!({
            "class": class,
            "confidence": rational::to_exact_string(confidence),
            "support": support,
        }),
        TreeNode::Internal {
            column,
            threshold,
            low,
            high,
        } => serde_json::json!({
            "feature": schema.column_name(column),
            "threshold": rational::to_exact_string(threshold),
            "low": node_to_json(schema, low),
            "high": node_to_json(schema, high),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use crate::schema::{FeatureSpec, FeatureValue};

    fn schema() -> FeatureSchema {
        FeatureSchema::new(vec![
            FeatureSpec::categorical("sex", &["Female", "Male"]),
            FeatureSpec::continuous("age", int(17), int(90)),
        ])
        .unwrap()
    }

    const DOC: &str = r#"{
        "schema": [
            {"name": "sex", "type": "categorical", "values": ["Female", "Male"]},
            {"name": "age", "type": "continuous", "min": "17", "max": "90"}
        ],
        "root": {
            "feature": "age", "threshold": "30.5",
            "low": {"class": "A", "confidence": "0.9652", "support": 10},
            "high": {
                "feature": "sex[Male]", "threshold": "0.5",
                "low": {"class": "A", "confidence": "0.7"},
                "high": {"class": "B", "confidence": "1/3", "support": 3}
            }
        }
    }"#;

    #[test]
    fn loads_and_round_trips() {
        let loaded = DecisionTree::from_json(DOC).unwrap();
        assert!(loaded.warnings.is_empty());
        let tree = loaded.tree;
        assert_eq!(tree.schema, schema());
        assert_eq!(tree.root.leaves(), 3);
        let back = DecisionTree::from_json(&tree.to_json()).unwrap().tree;
        assert_eq!(back, tree);
        match &tree.root {
            TreeNode::Internal { threshold, .. } => assert_eq!(threshold, &ratio(61, 2)),
            _ => panic!("expected a split"),
        }
    }

    #[test]
    fn predicts_by_leaf_lookup() {
        let tree = DecisionTree::from_json(DOC).unwrap().tree;
        let mut row = Row::new();
        row.insert("sex".into(), FeatureValue::Category("Male".into()));
        row.insert("age".into(), FeatureValue::Number(int(40)));
        assert_eq!(tree.predict(&row).unwrap(), ("B".to_string(), ratio(1, 3)));
        row.insert("age".into(), FeatureValue::Number(ratio(61, 2)));
        assert_eq!(tree.predict(&row).unwrap().0, "A");
        row.remove("sex");
        assert!(tree.predict(&row).is_err());
    }

    #[test]
    fn single_leaf_document() {
        let doc = r#"{"schema": [{"name": "x", "type": "ordinal", "min": 0, "max": 3}],
                      "root": {"class": "A", "confidence": "1.0"}}"#;
        let tree = DecisionTree::from_json(doc).unwrap().tree;
        assert_eq!(tree.root.leaves(), 1);
        assert_eq!(tree.root.depth(), 0);
    }

    #[test]
    fn rejects_bad_documents() {
        let unknown = DOC.replace("\"feature\": \"age\"", "\"feature\": \"height\"");
        assert_eq!(
            DecisionTree::from_json(&unknown).unwrap_err(),
            TreeError::UnknownFeature("height".into())
        );
        assert!(matches!(
            DecisionTree::from_json("{\"root\": 1}"),
            Err(TreeError::Malformed(_))
        ));
        let conf = DOC.replace("\"0.7\"", "\"1.5\"");
        assert!(matches!(
            DecisionTree::from_json(&conf),
            Err(TreeError::BadConfidence(_))
        ));
    }

    #[test]
    fn out_of_domain_threshold_is_a_warning() {
        let doc = DOC.replace("\"30.5\"", "\"95\"");
        let loaded = DecisionTree::from_json(&doc).unwrap();
        assert_eq!(loaded.warnings.len(), 1);
    }

    #[test]
    fn contradictory_path_is_rejected() {
        let age = schema().parse_column("age").unwrap();
        let inner = TreeNode::split(
            age.clone(),
            int(40),
            TreeNode::leaf("A", int(1), 1),
            TreeNode::leaf("B", int(1), 1),
        );
        let root = TreeNode::split(age, int(30), inner, TreeNode::leaf("B", int(1), 1));
        assert!(matches!(
            DecisionTree::new(schema(), root),
            Err(TreeError::InconsistentPath(_))
        ));
    }
}

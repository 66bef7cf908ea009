//! Root-to-leaf paths as conjunctions of split atoms.

use super::{DecisionTree, TreeNode};
use crate::constraint::{render_atom, LinearAtom, Var, VarOrder};
use crate::rational::{self, Q};
use crate::schema::{Column, FeatureSchema};

/// Instance name used in the stored atoms of a [`PathFact`]; see
/// [`PathFact::instantiate`].
pub const TEMPLATE_INSTANCE: &str = "_";

/// One split condition: `column ≤ threshold`, or `column > threshold` when
/// `high` is set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub column: Column,
    pub threshold: Q,
    pub high: bool,
}

impl Split {
    fn atom(&self, schema: &FeatureSchema, instance: &str) -> LinearAtom {
        let var = Var::Feature(schema.var(instance, &self.column));
        if self.high {
            LinearAtom::var_gt(var, self.threshold.clone())
        } else {
            LinearAtom::var_le(var, self.threshold.clone())
        }
    }

    /// Another split on the same column and side with a tighter threshold.
    fn implied_by(&self, other: &Split) -> bool {
        self.column == other.column
            && self.high == other.high
            && if self.high {
                other.threshold > self.threshold
            } else {
                other.threshold < self.threshold
            }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathFact {
    /// Leaf position in depth-first order, low branches first.
    pub path_id: usize,
    pub splits: Vec<Split>,
    /// Split atoms over [`TEMPLATE_INSTANCE`], root to leaf.
    pub atoms: Vec<LinearAtom>,
    pub class_label: String,
    pub confidence: Q,
    pub support: u64,
}

impl PathFact {
    /// The path's atoms over the variables of `instance`.
    pub fn instantiate(&self, instance: &str) -> Vec<LinearAtom> {
        self.atoms
            .iter()
            .map(|a| a.rename_instance(TEMPLATE_INSTANCE, instance))
            .collect()
    }
}

pub fn extract_paths(tree: &DecisionTree) -> Vec<PathFact> {
    fn walk(
        schema: &FeatureSchema,
        node: &TreeNode,
        splits: &mut Vec<Split>,
        out: &mut Vec<PathFact>,
    ) {
        match node {
            TreeNode::Leaf {
                class,
                confidence,
                support,
            } => out.push(PathFact {
                path_id: out.len(),
                splits: splits.clone(),
                atoms: splits
                    .iter()
                    .map(|s| s.atom(schema, TEMPLATE_INSTANCE))
                    .collect(),
                class_label: class.clone(),
                confidence: confidence.clone(),
                support: *support,
            }),
            TreeNode::Internal {
                column,
                threshold,
                low,
                high,
            } => {
                for (side, child) in [(false, low), (true, high)] {
                    splits.push(Split {
                        column: column.clone(),
                        threshold: threshold.clone(),
                        high: side,
                    });
                    walk(schema, child, splits, out);
                    splits.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    walk(&tree.schema, &tree.root, &mut Vec::new(), &mut out);
    out
}

/// `IF I.a<=1.0,I.b>2.0 THEN class [conf]`. A split implied by a tighter
/// split on the same side of the same feature is left out.
pub fn render_rule(path: &PathFact, schema: &FeatureSchema, instance: &str) -> String {
    let order = VarOrder::default();
    let shown: Vec<String> = path
        .splits
        .iter()
        .filter(|s| !path.splits.iter().any(|o| s.implied_by(o)))
        .map(|s| render_atom(&s.atom(schema, instance), &order))
        .collect();
    let body = if shown.is_empty() {
        "TRUE".to_string()
    } else {
        shown.join(",")
    };
    format!(
        "IF {body} THEN {} [{}]",
        path.class_label,
        rational::format_confidence(&path.confidence)
    )
}

//! Minimal CART: greedy Gini splits at midpoints, no pruning.

use std::io;

use super::{DecisionTree, TreeError, TreeNode};
use crate::rational::{self, Q};
use crate::schema::{FeatureSchema, Row};

/// Encoded rows in schema layout order with their labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub rows: Vec<Vec<Q>>,
    pub labels: Vec<String>,
}

impl Dataset {
    pub fn new(schema: &FeatureSchema, rows: &[(Row, String)]) -> Result<Self, TreeError> {
        let mut encoded = Vec::with_capacity(rows.len());
        let mut labels = Vec::with_capacity(rows.len());
        for (row, label) in rows {
            encoded.push(schema.encode(row)?);
            labels.push(label.clone());
        }
        Ok(Dataset {
            rows: encoded,
            labels,
        })
    }

    /// Reads a CSV file whose header names the schema features and the label
    /// column; extra columns are ignored.
    pub fn from_csv<R: io::Read>(
        reader: R,
        schema: &FeatureSchema,
        label_column: &str,
    ) -> Result<Self, TreeError> {
        let mut csv = csv::Reader::from_reader(reader);
        let header = csv
            .headers()
            .map_err(|e| TreeError::Dataset(e.to_string()))?
            .clone();
        let position = |name: &str| {
            header
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| TreeError::Dataset(format!("missing column `{name}`")))
        };
        let label_at = position(label_column)?;
        let feature_at: Vec<usize> = schema
            .features()
            .iter()
            .map(|f| position(&f.name))
            .collect::<Result<_, _>>()?;
        let mut rows = Vec::new();
        for record in csv.records() {
            let record = record.map_err(|e| TreeError::Dataset(e.to_string()))?;
            let mut row = Row::new();
            for (spec, &at) in schema.features().iter().zip(&feature_at) {
                let cell = record.get(at).unwrap_or("");
                row.insert(spec.name.clone(), schema.parse_value(&spec.name, cell)?);
            }
            rows.push((row, record.get(label_at).unwrap_or("").trim().to_string()));
        }
        Dataset::new(schema, &rows)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CartParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for CartParams {
    fn default() -> Self {
        CartParams {
            max_depth: 5,
            min_leaf: 1,
        }
    }
}

/// Greedy Gini-impurity tree. Ties between equally good splits go to the
/// lowest column, then the lowest threshold.
pub fn train_cart(
    data: &Dataset,
    schema: &FeatureSchema,
    params: CartParams,
) -> Result<DecisionTree, TreeError> {
    if data.is_empty() {
        return Err(TreeError::EmptyDataset);
    }
    let classes: Vec<String> = {
        let mut c: Vec<String> = data.labels.clone();
        c.sort();
        c.dedup();
        c
    };
    let label_ids: Vec<usize> = data
        .labels
        .iter()
        .map(|l| classes.binary_search(l).expect("known label"))
        .collect();
    let trainer = Trainer {
        data,
        classes: &classes,
        label_ids: &label_ids,
        params,
        columns: schema.columns(),
    };
    let indices: Vec<usize> = (0..data.len()).collect();
    let root = trainer.grow(&indices, 0);
    DecisionTree::new(schema.clone(), root)
}

struct Trainer<'a> {
    data: &'a Dataset,
    classes: &'a [String],
    label_ids: &'a [usize],
    params: CartParams,
    columns: Vec<crate::schema::Column>,
}

impl Trainer<'_> {
    fn counts(&self, indices: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for &i in indices {
            counts[self.label_ids[i]] += 1;
        }
        counts
    }

    fn leaf(&self, indices: &[usize]) -> TreeNode {
        let counts = self.counts(indices);
        let (best, &count) = counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("classes");
        TreeNode::leaf(
            &self.classes[best],
            rational::ratio(count as i64, indices.len() as i64),
            indices.len() as u64,
        )
    }

    fn grow(&self, indices: &[usize], depth: usize) -> TreeNode {
        let pure = self.counts(indices).iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.params.max_depth || indices.len() < 2 * self.params.min_leaf.max(1)
        {
            return self.leaf(indices);
        }
        let Some((col, threshold)) = self.best_split(indices) else {
            return self.leaf(indices);
        };
        let (low, high): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| self.data.rows[i][col] <= threshold);
        TreeNode::split(
            self.columns[col].clone(),
            threshold,
            self.grow(&low, depth + 1),
            self.grow(&high, depth + 1),
        )
    }

    /// Split minimizing `Σ_child (n_c − Σ_k cnt_k² / n_c)`, i.e. the
    /// size-weighted Gini impurity.
    fn best_split(&self, indices: &[usize]) -> Option<(usize, Q)> {
        let n = indices.len();
        let total = self.counts(indices);
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<(Q, usize, Q)> = None;
        for col in 0..self.columns.len() {
            let mut order = indices.to_vec();
            order.sort_by(|&a, &b| self.data.rows[a][col].cmp(&self.data.rows[b][col]));
            let mut left = vec![0usize; self.classes.len()];
            for k in 0..n - 1 {
                left[self.label_ids[order[k]]] += 1;
                let here = &self.data.rows[order[k]][col];
                let next = &self.data.rows[order[k + 1]][col];
                if here == next || k + 1 < min_leaf || n - k - 1 < min_leaf {
                    continue;
                }
                let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
                let score = impurity(&left, k + 1) + impurity(&right, n - k - 1);
                let threshold = (here + next) / rational::int(2);
                let better = match &best {
                    None => true,
                    Some((s, _, _)) => score < *s,
                };
                if better {
                    best = Some((score, col, threshold));
                }
            }
        }
        best.map(|(_, col, threshold)| (col, threshold))
    }
}

fn impurity(counts: &[usize], size: usize) -> Q {
    let squares: i64 = counts.iter().map(|&c| (c * c) as i64).sum();
    rational::int(size as i64) - rational::ratio(squares, size as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;
    use crate::schema::{FeatureSpec, FeatureValue};

    fn xy_schema() -> FeatureSchema {
        FeatureSchema::new(vec![
            FeatureSpec::continuous("x", int(0), int(1)),
            FeatureSpec::continuous("y", int(0), int(1)),
        ])
        .unwrap()
    }

    fn row(x: i64, y: i64) -> Row {
        [
            ("x".to_string(), FeatureValue::Number(int(x))),
            ("y".to_string(), FeatureValue::Number(int(y))),
        ]
        .into_iter()
        .collect()
    }

    #[test]
    fn xor_needs_four_leaves() {
        let schema = xy_schema();
        let rows: Vec<(Row, String)> = [(0, 0, "a"), (0, 1, "b"), (1, 0, "b"), (1, 1, "a")]
            .iter()
            .map(|&(x, y, l)| (row(x, y), l.to_string()))
            .collect();
        let data = Dataset::new(&schema, &rows).unwrap();
        let tree = train_cart(
            &data,
            &schema,
            CartParams {
                max_depth: 2,
                min_leaf: 1,
            },
        )
        .unwrap();
        assert_eq!(tree.root.leaves(), 4);
        for (r, label) in &rows {
            assert_eq!(&tree.predict(r).unwrap().0, label);
        }
    }

    #[test]
    fn pure_data_gives_one_leaf() {
        let schema = xy_schema();
        let rows = vec![(row(0, 0), "a".to_string()), (row(1, 1), "a".to_string())];
        let tree = train_cart(
            &Dataset::new(&schema, &rows).unwrap(),
            &schema,
            CartParams::default(),
        )
        .unwrap();
        assert_eq!(tree.root, TreeNode::leaf("a", int(1), 2));
    }

    #[test]
    fn identical_features_give_one_leaf() {
        let schema = xy_schema();
        let rows = vec![
            (row(0, 0), "a".to_string()),
            (row(0, 0), "b".to_string()),
            (row(0, 0), "b".to_string()),
        ];
        let tree = train_cart(
            &Dataset::new(&schema, &rows).unwrap(),
            &schema,
            CartParams::default(),
        )
        .unwrap();
        assert_eq!(tree.root, TreeNode::leaf("b", rational::ratio(2, 3), 3));
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let schema = xy_schema();
        let data = Dataset {
            rows: vec![],
            labels: vec![],
        };
        assert_eq!(
            train_cart(&data, &schema, CartParams::default()).unwrap_err(),
            TreeError::EmptyDataset
        );
    }

    #[test]
    fn reads_csv() {
        let schema = xy_schema();
        let text = "y,label,x\n0,a,1\n0.5,b,0\n";
        let data = Dataset::from_csv(text.as_bytes(), &schema, "label").unwrap();
        assert_eq!(
            data.rows,
            vec![vec![int(1), int(0)], vec![int(0), rational::ratio(1, 2)]]
        );
        assert_eq!(data.labels, ["a", "b"]);
        assert!(Dataset::from_csv("x,y\n0,0\n".as_bytes(), &schema, "label").is_err());
    }
}

use contrafact::constraint::Assignment;
use contrafact::rational::{from_f64, int, ratio, Q};
use contrafact::schema::{FeatureSchema, FeatureSpec, FeatureValue, Row};
use contrafact::tree::{extract_paths, train_cart, CartParams, Dataset, DecisionTree, TreeNode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::Value;

const GRID_TREE: &str = r#"{
    "schema": [
        {"name": "f1", "type": "continuous", "min": "0", "max": "10"},
        {"name": "f2", "type": "continuous", "min": "0", "max": "10"}
    ],
    "root": {
        "feature": "f1", "threshold": "4.25",
        "low": {
            "feature": "f2", "threshold": "6",
            "low": {"class": "a", "confidence": "0.9", "support": 9},
            "high": {"class": "b", "confidence": "0.8", "support": 5}
        },
        "high": {
            "feature": "f2", "threshold": "2.35",
            "low": {"class": "c", "confidence": "1", "support": 4},
            "high": {"class": "a", "confidence": "0.75", "support": 8}
        }
    }
}"#;

/// Parses a plain decimal string into `num / 10^k`.
fn decimal_parts(text: &str) -> (i64, i64) {
    let (whole, frac) = text.split_once('.').unwrap_or((text, ""));
    let den = 10i64.pow(frac.len() as u32);
    (format!("{whole}{frac}").parse::<i64>().unwrap(), den)
}

/// Walks the raw document for the grid point `(i/10, j/10)`.
fn document_class(node: &Value, point: [i64; 2]) -> String {
    if let Some(class) = node.get("class") {
        return class.as_str().unwrap().to_string();
    }
    let axis = if node["feature"] == "f1" { 0 } else { 1 };
    let (num, den) = decimal_parts(node["threshold"].as_str().unwrap());
    let low = point[axis] * den <= num * 10;
    document_class(&node[if low { "low" } else { "high" }], point)
}

fn xy_row(x: Q, y: Q) -> Row {
    [
        ("f1".to_string(), FeatureValue::Number(x)),
        ("f2".to_string(), FeatureValue::Number(y)),
    ]
    .into_iter()
    .collect()
}

#[test]
fn loaded_tree_matches_document_on_grid() {
    let tree = DecisionTree::from_json(GRID_TREE).unwrap().tree;
    assert_eq!(tree.root.leaves(), 4);
    let doc: Value = serde_json::from_str(GRID_TREE).unwrap();
    for i in 0..100 {
        for j in 0..100 {
            let expected = document_class(&doc["root"], [i, j]);
            let (class, _) = tree.predict(&xy_row(ratio(i, 10), ratio(j, 10))).unwrap();
            assert_eq!(class, expected, "at ({i}, {j})");
        }
    }
}

#[test]
fn cart_separates_two_gaussians() {
    let schema = FeatureSchema::new(vec![
        FeatureSpec::continuous("f1", int(0), int(10)),
        FeatureSpec::continuous("f2", int(0), int(10)),
    ])
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::new();
    for (label, center) in [("0", 3.0_f64), ("1", 7.0)] {
        for _ in 0..200 {
            let mut coord =
                || from_f64((center + noise.sample(&mut rng)).clamp(0.0, 10.0)).unwrap();
            let (x, y) = (coord(), coord());
            rows.push((xy_row(x, y), label.to_string()));
        }
    }
    let data = Dataset::new(&schema, &rows).unwrap();
    let tree = train_cart(
        &data,
        &schema,
        CartParams {
            max_depth: 4,
            min_leaf: 2,
        },
    )
    .unwrap();
    let correct = rows
        .iter()
        .filter(|(r, l)| &tree.predict(r).unwrap().0 == l)
        .count();
    let accuracy = correct as f64 / rows.len() as f64;
    assert!(accuracy >= 0.95, "training accuracy {accuracy}");

    let supports: u64 = extract_paths(&tree).iter().map(|p| p.support).sum();
    assert_eq!(supports as usize, rows.len());
    let again = train_cart(
        &data,
        &schema,
        CartParams {
            max_depth: 4,
            min_leaf: 2,
        },
    )
    .unwrap();
    assert_eq!(again, tree);
}

fn mixed_schema() -> FeatureSchema {
    FeatureSchema::new(vec![
        FeatureSpec::categorical("color", &["red", "green", "blue"]),
        FeatureSpec::ordinal("level", 1, 8),
        FeatureSpec::continuous("size", int(0), int(20)),
        FeatureSpec::categorical("flag", &["no", "yes"]),
    ])
    .unwrap()
}

/// Random tree whose paths are consistent: thresholds stay strictly inside
/// the interval left by earlier splits on the same column.
fn random_node(
    rng: &mut ChaCha8Rng,
    schema: &FeatureSchema,
    depth: usize,
    bounds: &mut Vec<(Q, Q)>,
) -> TreeNode {
    let columns = schema.columns();
    if depth == 0 || rng.random_bool(0.15) {
        let class = ["A", "B", "C"][rng.random_range(0..3)];
        return TreeNode::leaf(
            class,
            ratio(rng.random_range(1..=100), 100),
            rng.random_range(1..50),
        );
    }
    for _ in 0..10 {
        let c = rng.random_range(0..columns.len());
        let (lo, hi) = bounds[c].clone();
        // Candidate thresholds on a half-unit grid strictly inside (lo, hi).
        let steps_lo = (lo.clone() * int(2)).floor().to_integer();
        let steps_hi = (hi.clone() * int(2)).ceil().to_integer();
        let candidates: Vec<Q> = num_iter(steps_lo, steps_hi)
            .into_iter()
            .filter(|t| *t > lo && *t < hi)
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let t = candidates[rng.random_range(0..candidates.len())].clone();
        bounds[c] = (lo.clone(), t.clone());
        let low = random_node(rng, schema, depth - 1, bounds);
        bounds[c] = (t.clone(), hi.clone());
        let high = random_node(rng, schema, depth - 1, bounds);
        bounds[c] = (lo, hi);
        return TreeNode::split(columns[c].clone(), t, low, high);
    }
    TreeNode::leaf("A", int(1), 1)
}

fn num_iter(lo: num_bigint::BigInt, hi: num_bigint::BigInt) -> Vec<Q> {
    let lo: i64 = lo.try_into().unwrap();
    let hi: i64 = hi.try_into().unwrap();
    (lo..=hi).map(|k| ratio(k, 2)).collect()
}

fn random_tree(rng: &mut ChaCha8Rng) -> DecisionTree {
    let schema = mixed_schema();
    let mut bounds: Vec<(Q, Q)> = schema
        .columns()
        .iter()
        .map(|c| match schema.features()[c.feature].interval() {
            Some((lo, hi)) => (lo, hi),
            None => (int(0), int(1)),
        })
        .collect();
    let depth = rng.random_range(1..=4);
    let root = random_node(rng, &schema, depth, &mut bounds);
    DecisionTree::new(schema, root).unwrap()
}

fn random_row(rng: &mut ChaCha8Rng) -> Row {
    let mut row = Row::new();
    row.insert(
        "color".into(),
        FeatureValue::Category(["red", "green", "blue"][rng.random_range(0..3)].into()),
    );
    row.insert(
        "level".into(),
        FeatureValue::Number(int(rng.random_range(1..=8))),
    );
    row.insert(
        "size".into(),
        FeatureValue::Number(ratio(rng.random_range(0..=80), 4)),
    );
    row.insert(
        "flag".into(),
        FeatureValue::Category(["no", "yes"][rng.random_range(0..2)].into()),
    );
    row
}

#[test]
fn paths_partition_the_domain() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let tree = random_tree(&mut rng);
        let paths = extract_paths(&tree);
        assert_eq!(paths.len(), tree.root.leaves());
        let instantiated: Vec<_> = paths.iter().map(|p| p.instantiate("R")).collect();
        for _ in 0..1000 {
            let row = random_row(&mut rng);
            let asg: Assignment = tree.schema.assignment("R", &row).unwrap();
            let members: Vec<usize> = instantiated
                .iter()
                .enumerate()
                .filter(|(_, atoms)| atoms.iter().all(|a| a.evaluate(&asg).unwrap()))
                .map(|(i, _)| i)
                .collect();
            assert_eq!(members.len(), 1, "row {row:?}");
            let (class, confidence) = tree.predict(&row).unwrap();
            assert_eq!(class, paths[members[0]].class_label);
            assert_eq!(confidence, paths[members[0]].confidence);
        }
    }
}

#[test]
fn serialization_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let tree = random_tree(&mut rng);
        let loaded = DecisionTree::from_json(&tree.to_json()).unwrap();
        assert_eq!(loaded.tree, tree);
    }
}

#[test]
fn trained_supports_sum_to_dataset_size() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let schema = mixed_schema();
    for _ in 0..10 {
        let rows: Vec<(Row, String)> = (0..120)
            .map(|_| {
                (
                    random_row(&mut rng),
                    ["x", "y"][rng.random_range(0..2)].to_string(),
                )
            })
            .collect();
        let data = Dataset::new(&schema, &rows).unwrap();
        let tree = train_cart(
            &data,
            &schema,
            CartParams {
                max_depth: 3,
                min_leaf: 5,
            },
        )
        .unwrap();
        let paths = extract_paths(&tree);
        assert_eq!(paths.iter().map(|p| p.support).sum::<u64>(), 120);
        assert!(paths.iter().all(|p| p.support >= 5));
        for (row, _) in &rows {
            let asg = schema.assignment("R", row).unwrap();
            let hits = paths
                .iter()
                .filter(|p| p.instantiate("R").iter().all(|a| a.evaluate(&asg).unwrap()))
                .count();
            assert_eq!(hits, 1);
        }
    }
}

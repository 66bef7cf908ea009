//! Acceptance run: one PASS/FAIL line per criterion, with measured runtime.
//!
//! Runs as a plain binary (`harness = false`) so the lines reach the test
//! output uncaptured. Exits nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use contrafact::constraint::{Assignment, ConstraintStore, LinearAtom, LinearExpr, Relation, Var};
use contrafact::rational::{format_decimal, int, ratio, Q};
use contrafact::reasoner::{entails, is_satisfiable, minimize, project_ordered, OptStatus};
use contrafact::schema::{FeatureSchema, FeatureSpec, FeatureValue, Row};
use contrafact::session::{Query, QueryResult, Session};
use contrafact::tree::{extract_paths, DecisionTree, TreeNode};
use contrafact_service::script::{Executor, Outcome};
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

/// Name, runtime limit and check.
type Criterion = (&'static str, Option<Duration>, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn main() {
    let criteria: [Criterion; 5] = [
        (
            "credit dialogue transcript",
            Some(Duration::from_secs(5)),
            credit_dialogue,
        ),
        (
            "synthetic two-feature regions",
            Some(Duration::from_secs(10)),
            synthetic_regions,
        ),
        (
            "reasoner against grid enumeration",
            Some(Duration::from_secs(60)),
            reasoner_oracle,
        ),
        ("strict lower bound infimum", None, strict_boundary),
        ("tree and session properties", None, property_suites),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!(
                "runtime {:.2} s exceeds {} s",
                elapsed.as_secs_f64(),
                limit.as_secs()
            )),
            (o, _) => o,
        };
        let budget = limit
            .map(|l| format!(", limit {} s", l.as_secs()))
            .unwrap_or_default();
        match outcome {
            Ok(detail) => println!(
                "PASS {name} ({:.2} s{budget}): {detail}",
                elapsed.as_secs_f64()
            ),
            Err(why) => {
                failed += 1;
                println!(
                    "FAIL {name} ({:.2} s{budget}): {why}",
                    elapsed.as_secs_f64()
                );
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

// Credit dialogue.

fn credit_dialogue() -> Check {
    let script = std::fs::read_to_string(fixtures().join("credit.rx")).unwrap();
    let golden = std::fs::read_to_string(fixtures().join("credit.golden.txt")).unwrap();
    let mut exec = Executor::new(fixtures());
    let mut answers: Vec<String> = Vec::new();
    for line in script.lines() {
        match exec.run_line(line) {
            Ok(Some(o @ Outcome::Solved { .. })) => answers.push(o.text()),
            Ok(_) => {}
            Err(e) => return Err(format!("`{line}`: {e}")),
        }
    }
    ensure!(
        exec.transcript() == golden,
        "transcript differs from credit.golden.txt"
    );
    ensure!(
        answers.len() == 5,
        "expected 5 query answers, got {}",
        answers.len()
    );

    let factual = "IF F.capitalgain<=5119.0,F.education<=12.5,F.age<=30.5 THEN <=50K [0.9652]";
    ensure!(answers[0].contains(factual), "factual rule missing");
    let ce_rules = |text: &str| -> Vec<String> {
        text.lines()
            .skip_while(|l| *l != "Rule satisfied by CE:")
            .nth(1)
            .into_iter()
            .map(str::to_string)
            .collect::<Vec<_>>()
    };
    let contrastive: Vec<String> = answers[1].split("\n\n").flat_map(ce_rules).collect();
    ensure!(
        contrastive
            == [
                "IF CE.capitalgain>5119.0,CE.capitalgain<=5316.5 THEN >50K [1.0]",
                "IF CE.capitalgain>7055.5,CE.age>20.0 THEN >50K [0.9882]"
            ],
        "contrastive rules: {contrastive:?}"
    );
    let pinned_age = answers[2].split("\n\n").count();
    ensure!(pinned_age == 1, "{pinned_age} rules after equating ages");
    let closest: Vec<&str> = answers[3]
        .lines()
        .skip_while(|l| *l != "Answer constraint:")
        .skip(1)
        .collect();
    let expected = [
        "CE.race=Black,",
        "CE.sex=Male,",
        "CE.workclass=Private,",
        "CE.education=10.0,",
        "CE.age=19.0,",
        "CE.capitalgain=5119.0,",
        "CE.capitalloss=0.0,",
        "CE.hoursperweek=40.0",
    ];
    ensure!(closest == expected, "closest answer: {closest:?}");
    ensure!(
        answers[4].lines().any(|l| l == "CE.age=F.age,"),
        "age equality missing after retraction"
    );
    Ok("golden transcript byte-identical, 5 answers checked".into())
}

// Synthetic two-feature tree.

const SYNTHETIC: &str = include_str!("../fixtures/synthetic_tree.json");

fn num_row(pairs: &[(&str, Q)]) -> Row {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), FeatureValue::Number(v.clone())))
        .collect()
}

fn synthetic(f: &[(&str, Q)]) -> Session {
    let tree = DecisionTree::from_json(SYNTHETIC).unwrap().tree;
    let mut s = Session::new(tree);
    s.declare_instance("F", num_row(f), Some("0".into()), None)
        .unwrap();
    s.declare_instance("CE", Row::new(), Some("1".into()), None)
        .unwrap();
    s
}

/// Leaf index (depth-first, low branch first) of the fixture tree.
fn synthetic_leaf(x: &Q, y: &Q) -> usize {
    if *x <= int(3) {
        0
    } else if *y <= int(4) {
        if *x <= int(5) {
            1
        } else {
            2
        }
    } else if *y <= int(7) {
        3
    } else if *x <= int(6) {
        4
    } else {
        5
    }
}

fn ce_paths(result: &QueryResult) -> Vec<usize> {
    result
        .solutions
        .iter()
        .map(|s| s.path_assignment[1].1)
        .collect()
}

fn distances(result: &QueryResult) -> Vec<Q> {
    result
        .solutions
        .iter()
        .map(|s| s.distance.as_ref().unwrap().value.clone())
        .collect()
}

fn witness_value(sol: &contrafact::session::Solution, var: &Var) -> Q {
    sol.witness
        .iter()
        .find(|(v, _)| v == var)
        .map(|(_, q)| q.clone())
        .unwrap()
}

fn synthetic_regions() -> Check {
    let project_ce = Query::new(None, Some(&["CE".to_string()])).unwrap();
    let closest = Query::new(Some("l1norm(F, CE)"), Some(&["CE".to_string()])).unwrap();
    let fixed = [("f1", int(1)), ("f2", int(2))];

    let s = synthetic(&fixed);
    let all = s.solveopt(&project_ce).unwrap();
    ensure!(
        ce_paths(&all) == [1, 3, 5],
        "contrastive regions {:?}",
        ce_paths(&all)
    );

    let mut s = synthetic(&fixed);
    s.add_constraint("CE.f2 = F.f2").unwrap();
    let r = s.solveopt(&project_ce).unwrap();
    ensure!(ce_paths(&r) == [1], "with CE.f2 = F.f2: {:?}", ce_paths(&r));

    let mut s = synthetic(&fixed);
    s.add_constraint("CE.f1 = F.f1").unwrap();
    let r = s.solveopt(&project_ce).unwrap();
    ensure!(
        r.solutions.is_empty(),
        "with CE.f1 = F.f1: {} solutions",
        r.solutions.len()
    );

    let mut s = synthetic(&fixed);
    s.add_constraint("CE.f1 = CE.f2").unwrap();
    let r = s.solveopt(&closest).unwrap();
    ensure!(
        distances(&r) == [ratio(3, 10), ratio(1, 2), ratio(11, 10)],
        "diagonal optima {:?}",
        distances(&r)
    );
    let (cx, cy) = (Var::feature("CE", "f1"), Var::feature("CE", "f2"));
    for sol in &r.solutions {
        ensure!(
            witness_value(sol, &cx) == witness_value(sol, &cy),
            "witness off the diagonal"
        );
    }

    let mut s = synthetic(&[("f1", int(1))]);
    s.add_constraint("F.f2 >= 1").unwrap();
    s.add_constraint("F.f2 <= 6").unwrap();
    let r = s.solveopt(&closest).unwrap();
    ensure!(
        distances(&r) == [ratio(1, 5), ratio(1, 5), ratio(3, 5)],
        "interval optima {:?}",
        distances(&r)
    );
    let regions = s.solveopt(&project_ce).unwrap();
    ensure!(
        ce_paths(&regions) == [1, 3, 5],
        "interval regions {:?}",
        ce_paths(&regions)
    );

    // 200 x 200 grid with step 0.05 over [0, 10).
    let mut grid_min: Vec<Option<Q>> = vec![None; 6];
    for i in 0..200 {
        for j in 0..200 {
            let (x, y) = (ratio(i, 20), ratio(j, 20));
            let point: Assignment = [(cx.clone(), x.clone()), (cy.clone(), y.clone())]
                .into_iter()
                .collect();
            let leaf = synthetic_leaf(&x, &y);
            let inside: Vec<usize> = regions
                .solutions
                .iter()
                .filter(|sol| sol.answer_atoms.iter().all(|a| a.evaluate(&point).unwrap()))
                .map(|sol| sol.path_assignment[1].1)
                .collect();
            let expected: Vec<usize> = if leaf % 2 == 1 { vec![leaf] } else { vec![] };
            ensure!(
                inside == expected,
                "grid point ({x}, {y}) in {inside:?}, oracle {expected:?}"
            );
            // F = (1, f) with f in [1, 6].
            let gap = if y < int(1) {
                int(1) - &y
            } else if y > int(6) {
                &y - int(6)
            } else {
                Q::zero()
            };
            let d = ((&x - int(1)).abs() + gap) / int(10);
            if grid_min[leaf].as_ref().is_none_or(|m| d < *m) {
                grid_min[leaf] = Some(d);
            }
        }
    }
    for (sol, value) in r.solutions.iter().zip(distances(&r)) {
        let leaf = sol.path_assignment[1].1;
        let brute = grid_min[leaf].clone().unwrap();
        ensure!(
            value <= brute && &brute - &value <= ratio(1, 100),
            "region {leaf}: optimum {value}, grid {brute}"
        );
    }
    Ok("3/1/0 regions, diagonal and interval optima exact, 40000 grid points agree".into())
}

// Reasoner against enumeration on integer boxes [0, 6]^k.

const SIDE: i64 = 7;

fn var(i: usize) -> Var {
    Var::feature("X", &format!("x{i}"))
}

fn boxed_store(k: usize) -> ConstraintStore {
    let mut store = ConstraintStore::new();
    for i in 0..k {
        store.set_bounds(var(i), Some(int(0)), Some(int(SIDE - 1)));
        store.mark_integer(var(i));
    }
    store
}

fn random_atom(rng: &mut ChaCha8Rng, k: usize) -> LinearAtom {
    let mut expr = LinearExpr::zero();
    for i in 0..k {
        if rng.random_bool(0.6) {
            expr.add_term(int(rng.random_range(-3..=3)), var(i));
        }
    }
    let relation = match rng.random_range(0..10) {
        0 => Relation::Eq,
        1..=4 => Relation::Lt,
        _ => Relation::Le,
    };
    LinearAtom::new(expr.terms, relation, int(rng.random_range(-6..=12)))
}

/// Difference constraints keep the integer shadow equal to the integer
/// points of the rational shadow, so projection can be checked on a grid.
fn difference_atom(rng: &mut ChaCha8Rng, k: usize) -> LinearAtom {
    let i = rng.random_range(0..k);
    let mut expr = LinearExpr::term(int(if rng.random_bool(0.5) { 1 } else { -1 }), var(i));
    if k > 1 && rng.random_bool(0.7) {
        let j = (i + rng.random_range(1..k)) % k;
        expr = LinearExpr::var(var(i));
        expr.add_term(int(-1), var(j));
    }
    let relation = if rng.random_bool(0.15) {
        Relation::Eq
    } else {
        Relation::Le
    };
    LinearAtom::new(expr.terms, relation, int(rng.random_range(-3..=5)))
}

fn lattice(k: usize) -> Vec<Assignment> {
    let mut out = vec![Assignment::new()];
    for i in 0..k {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..SIDE).map(move |v| {
                    let mut a = p.clone();
                    a.insert(var(i), int(v));
                    a
                })
            })
            .collect();
    }
    out
}

fn feasible(store: &ConstraintStore, k: usize) -> Vec<Assignment> {
    lattice(k)
        .into_iter()
        .filter(|p| store.satisfied_by(p).unwrap())
        .collect()
}

fn random_store(rng: &mut ChaCha8Rng) -> (ConstraintStore, usize) {
    let k = rng.random_range(1..=4);
    let mut store = boxed_store(k);
    for _ in 0..rng.random_range(1..=4) {
        store.push(random_atom(rng, k));
    }
    (store, k)
}

fn reasoner_oracle() -> Check {
    const STORES: usize = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..STORES {
        let (store, k) = random_store(&mut rng);
        let points = feasible(&store, k);
        let sat = is_satisfiable(&store).unwrap();
        ensure!(
            sat.is_sat() == !points.is_empty(),
            "satisfiability of {store:?}"
        );
        if let Some(w) = &sat.witness {
            ensure!(store.satisfied_by(w).unwrap(), "witness outside {store:?}");
        }

        let candidate = random_atom(&mut rng, k);
        let truth = points.iter().all(|p| candidate.evaluate(p).unwrap());
        ensure!(
            entails(&store, &candidate).unwrap() == truth,
            "entailment of {candidate:?} by {store:?}"
        );

        let mut objective = LinearExpr::constant(int(rng.random_range(-3..=3)));
        for i in 0..k {
            objective.add_term(int(rng.random_range(-4..=4)), var(i));
        }
        let r = minimize(&store, &objective).unwrap();
        match points.iter().map(|p| objective.evaluate(p).unwrap()).min() {
            None => ensure!(r.status == OptStatus::Unsat, "minimum over empty {store:?}"),
            Some(best) => {
                ensure!(
                    r.status == OptStatus::Optimal && r.value.as_ref() == Some(&best) && r.attained,
                    "minimum of {store:?}"
                );
                let w = r.witness.unwrap();
                ensure!(
                    store.satisfied_by(&w).unwrap() && objective.evaluate(&w).unwrap() == best,
                    "minimum witness"
                );
            }
        }
    }
    for _ in 0..STORES {
        let k = rng.random_range(2..=4);
        let mut store = boxed_store(k);
        for _ in 0..rng.random_range(1..=5) {
            store.push(difference_atom(&mut rng, k));
        }
        let keep = [var(0), var(1)];
        let projection = project_ordered(&store, &keep).unwrap();
        ensure!(
            projection
                .atoms
                .iter()
                .all(|a| a.variables().all(|v| keep.contains(v))),
            "projection leaks variables"
        );
        let shadow: BTreeSet<(Q, Q)> = feasible(&store, k)
            .into_iter()
            .map(|p| (p[&var(0)].clone(), p[&var(1)].clone()))
            .collect();
        for a in 0..SIDE {
            for b in 0..SIDE {
                let point: Assignment = [(var(0), int(a)), (var(1), int(b))].into_iter().collect();
                let inside = projection.atoms.iter().all(|atom| {
                    atom.ground_truth()
                        .unwrap_or_else(|| atom.evaluate(&point).unwrap())
                });
                ensure!(
                    inside == shadow.contains(&(int(a), int(b))),
                    "projection of {store:?} at ({a}, {b})"
                );
            }
        }
    }
    Ok(format!(
        "{STORES} stores each for sat/entails/minimize and for projection"
    ))
}

fn strict_boundary() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let x = Var::feature("X", "x");
    for _ in 0..50 {
        let c = ratio(
            rng.random_range(-100_000..100_000),
            rng.random_range(1..1000),
        );
        let store = ConstraintStore::with_atoms([LinearAtom::var_gt(x.clone(), c.clone())]);
        let r = minimize(&store, &LinearExpr::var(x.clone())).unwrap();
        ensure!(
            r.status == OptStatus::Optimal,
            "min x s.t. x > {c}: {:?}",
            r.status
        );
        ensure!(
            r.value.as_ref() == Some(&c) && !r.attained,
            "min x s.t. x > {c}: {:?} attained={}",
            r.value,
            r.attained
        );
    }
    Ok("50 rational bounds, exact infimum, never attained".into())
}

// Tree and session properties.

fn mixed_schema() -> FeatureSchema {
    FeatureSchema::new(vec![
        FeatureSpec::categorical("color", &["red", "green", "blue"]),
        FeatureSpec::ordinal("level", 1, 8),
        FeatureSpec::continuous("size", int(0), int(20)),
        FeatureSpec::categorical("flag", &["no", "yes"]),
    ])
    .unwrap()
}

/// Thresholds on a half-unit grid strictly inside the interval left by
/// earlier splits on the same column.
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
        let candidates: Vec<Q> = (-2..=42)
            .map(|k| ratio(k, 2))
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

fn random_tree(rng: &mut ChaCha8Rng) -> DecisionTree {
    let schema = mixed_schema();
    let mut bounds: Vec<(Q, Q)> = schema
        .columns()
        .iter()
        .map(|c| {
            schema.features()[c.feature]
                .interval()
                .unwrap_or((int(0), int(1)))
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

fn random_constraint(rng: &mut ChaCha8Rng) -> String {
    let vars = ["F.f1", "F.f2", "CE.f1", "CE.f2"];
    let ops = ["<=", "<", ">=", ">", "="];
    let k = ratio(rng.random_range(0..=40), 4);
    let op = ops[rng.random_range(0..ops.len())];
    let a = vars[rng.random_range(0..4)];
    let b = vars[rng.random_range(0..4)];
    match rng.random_range(0..3) {
        0 => format!("{a} {op} {}", format_decimal(&k)),
        1 => format!("{a} - {b} {op} {}", format_decimal(&(k - int(5)))),
        _ => format!("{a} + 2 * {b} {op} {}", format_decimal(&(k * int(2)))),
    }
}

fn loose_session(rng: &mut ChaCha8Rng) -> Session {
    let tree = DecisionTree::from_json(SYNTHETIC).unwrap().tree;
    let mut s = Session::new(tree);
    let row = if rng.random_bool(0.5) {
        num_row(&[("f1", int(1))])
    } else {
        Row::new()
    };
    s.declare_instance("F", row, Some("0".into()), None)
        .unwrap();
    s.declare_instance(
        "CE",
        Row::new(),
        Some("1".into()),
        Some(ratio(rng.random_range(0..=10), 10)),
    )
    .unwrap();
    s
}

fn minimum(result: &QueryResult) -> Option<Q> {
    result
        .solutions
        .first()
        .map(|s| s.distance.as_ref().unwrap().value.clone())
}

fn property_suites() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for t in 0..20 {
        let tree = random_tree(&mut rng);
        let paths = extract_paths(&tree);
        let instantiated: Vec<Vec<LinearAtom>> = paths.iter().map(|p| p.instantiate("R")).collect();
        for _ in 0..1000 {
            let row = random_row(&mut rng);
            let asg = tree.schema.assignment("R", &row).unwrap();
            let members: Vec<usize> = (0..paths.len())
                .filter(|&i| instantiated[i].iter().all(|a| a.evaluate(&asg).unwrap()))
                .collect();
            ensure!(
                members.len() == 1,
                "tree {t}: row {row:?} on paths {members:?}"
            );
            let (class, confidence) = tree.predict(&row).unwrap();
            let path = &paths[members[0]];
            ensure!(
                class == path.class_label && confidence == path.confidence,
                "tree {t}: prediction disagrees with path"
            );
        }
    }

    let query = Query::new(Some("l1norm(F, CE)"), None).unwrap();
    for script in 0..100 {
        let mut s = loose_session(&mut rng);
        for _ in 0..rng.random_range(0..3) {
            s.add_constraint(&random_constraint(&mut rng)).unwrap();
        }
        let before = s.solveopt(&query).unwrap();
        let id = s.add_constraint(&random_constraint(&mut rng)).unwrap();
        s.retract_id(id).unwrap();
        ensure!(
            s.solveopt(&query).unwrap() == before,
            "script {script}: retraction did not restore the answer"
        );
    }

    for script in 0..100 {
        let mut s = loose_session(&mut rng);
        let mut previous = s.solveopt(&query).unwrap();
        for _ in 0..3 {
            let text = random_constraint(&mut rng);
            s.add_constraint(&text).unwrap();
            let next = s.solveopt(&query).unwrap();
            ensure!(
                next.solutions.len() <= previous.solutions.len(),
                "script {script}: `{text}` added solutions"
            );
            match (minimum(&previous), minimum(&next)) {
                (Some(a), Some(b)) => ensure!(
                    b >= a,
                    "script {script}: `{text}` lowered the minimum {a} to {b}"
                ),
                (None, Some(_)) => {
                    return Err(format!("script {script}: `{text}` revived an empty answer"))
                }
                _ => {}
            }
            previous = next;
        }
    }

    let schema = FeatureSchema::new(vec![
        FeatureSpec::categorical("color", &["red", "green", "blue"]),
        FeatureSpec::ordinal("level", 1, 8),
        FeatureSpec::continuous("size", int(0), int(20)),
    ])
    .unwrap();
    let tree = DecisionTree::new(schema, TreeNode::leaf("any", int(1), 1)).unwrap();
    let colors = ["red", "green", "blue"];
    let none: [String; 0] = [];
    let l1 = Query::new(Some("l1norm(A, B)"), Some(&none)).unwrap();
    for pair in 0..1000 {
        let mut draw = || {
            let c = rng.random_range(0..3);
            let level = int(rng.random_range(1..=8));
            let size = ratio(rng.random_range(0..=200), 10);
            let mut row = num_row(&[("level", level.clone()), ("size", size.clone())]);
            row.insert("color".into(), FeatureValue::Category(colors[c].into()));
            (row, c, level, size)
        };
        let (ra, ca, la, sa) = draw();
        let (rb, cb, lb, sb) = draw();
        let expected = (&la - &lb).abs() / int(7)
            + (&sa - &sb).abs() / int(20)
            + if ca == cb { int(0) } else { int(1) };
        let mut s = Session::new(tree.clone());
        s.declare_instance("A", ra, None, None).unwrap();
        s.declare_instance("B", rb, None, None).unwrap();
        let result = s.solveopt(&l1).unwrap();
        let d = result.solutions[0].distance.as_ref().unwrap();
        ensure!(
            d.attained && d.value == expected,
            "pair {pair}: distance {} vs closed form {expected}",
            d.value
        );
    }
    Ok("20000 partition rows, 100 retraction scripts, 100 monotonicity scripts, 1000 distance pairs".into())
}

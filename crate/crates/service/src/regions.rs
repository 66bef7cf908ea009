//! Per-path regions of one instance, with polygon vertices when the schema
//! has exactly two numeric features.

use contrafact::constraint::{domain_atoms, LinearAtom, Var};
use contrafact::rational::{to_exact_string, to_f64, Q};
use contrafact::schema::FeatureKind;
use contrafact::session::{solution_json, ProjectItem, Query, Session, SessionError};
use num_traits::Zero;
use serde_json::{json, Value};

pub fn regions(session: &Session, instance: &str) -> Result<Value, SessionError> {
    let query = Query {
        minimize: None,
        project: Some(vec![ProjectItem::Instance(instance.to_string())]),
    };
    let result = session.solveopt(&query)?;
    let axes = plane_axes(session, instance);
    let position = session
        .instances()
        .iter()
        .position(|i| i.name == instance)
        .expect("validated by solveopt");
    let mut out = Vec::new();
    for sol in &result.solutions {
        let summary = solution_json(sol);
        let mut region = json!({
            "path_id": sol.path_assignment[position].1,
            "rule": sol.rules[position].1,
            "paths": summary["paths"],
            "atoms": summary["projection"],
            "answer": summary["answer"],
        });
        if let Some((x, y)) = &axes {
            let mut atoms = sol.answer_atoms.clone();
            atoms.extend(domain_atoms(instance, session.schema()).atoms);
            let vertices: Vec<Value> = polygon(&atoms, x, y)
                .iter()
                .map(|(px, py)| {
                    json!({"x": to_exact_string(px), "y": to_exact_string(py), "x_approx": to_f64(px), "y_approx": to_f64(py)})
                })
                .collect();
            region["axes"] = json!([x.to_string(), y.to_string()]);
            region["vertices"] = json!(vertices);
        }
        out.push(region);
    }
    Ok(json!({"instance": instance, "regions": out}))
}

fn plane_axes(session: &Session, instance: &str) -> Option<(Var, Var)> {
    let features = session.schema().features();
    if features.len() != 2
        || features
            .iter()
            .any(|f| matches!(f.kind, FeatureKind::Categorical { .. }))
    {
        return None;
    }
    Some((
        Var::feature(instance, &features[0].name),
        Var::feature(instance, &features[1].name),
    ))
}

/// Vertices of the closure of a bounded 2-D region, counter-clockwise.
pub fn polygon(atoms: &[LinearAtom], x: &Var, y: &Var) -> Vec<(Q, Q)> {
    let lines: Vec<(Q, Q, Q)> = atoms
        .iter()
        .map(|a| (a.coefficient(x), a.coefficient(y), a.rhs().clone()))
        .filter(|(a, b, _)| !(a.is_zero() && b.is_zero()))
        .collect();
    let inside = |px: &Q, py: &Q| {
        let asg = [(x.clone(), px.clone()), (y.clone(), py.clone())]
            .into_iter()
            .collect();
        atoms
            .iter()
            .all(|a| a.closure().evaluate(&asg).unwrap_or(false))
    };
    let mut points: Vec<(Q, Q)> = Vec::new();
    for (i, (a1, b1, c1)) in lines.iter().enumerate() {
        for (a2, b2, c2) in &lines[i + 1..] {
            let det = a1 * b2 - a2 * b1;
            if det.is_zero() {
                continue;
            }
            let px = (c1 * b2 - c2 * b1) / &det;
            let py = (a1 * c2 - a2 * c1) / &det;
            if inside(&px, &py) && !points.contains(&(px.clone(), py.clone())) {
                points.push((px, py));
            }
        }
    }
    if points.len() > 2 {
        let n = points.len() as f64;
        let cx = points.iter().map(|p| to_f64(&p.0)).sum::<f64>() / n;
        let cy = points.iter().map(|p| to_f64(&p.1)).sum::<f64>() / n;
        points.sort_by(|p, q| {
            let angle = |p: &(Q, Q)| (to_f64(&p.1) - cy).atan2(to_f64(&p.0) - cx);
            angle(p).total_cmp(&angle(q))
        });
    } else {
        points.sort();
    }
    points
}

//! Text and JSON forms of `solveopt` results.

use serde_json::{json, Value};

use super::{QueryResult, Solution};
use crate::constraint::{LinearAtom, Relation};
use crate::rational::{self, Q};

/// Text form at `verbose` 1 or 2; `verbose` 0 gives pretty JSON.
///
/// Level 1 prints the answer constraints (and distance) of each solution,
/// level 2 also the rule followed by each instance.
pub fn render_result(result: &QueryResult, verbose: u8) -> String {
    if verbose == 0 {
        return serde_json::to_string_pretty(&result_json(result)).expect("serializable");
    }
    let mut blocks: Vec<String> = result
        .solutions
        .iter()
        .map(|s| render_solution(s, verbose))
        .collect();
    for f in &result.failures {
        let paths: Vec<String> = f
            .path_assignment
            .iter()
            .map(|(n, p)| format!("{n}:{p}"))
            .collect();
        blocks.push(format!(
            "Undecided for paths {}: {}",
            paths.join(", "),
            f.message
        ));
    }
    if result.solutions.is_empty() {
        blocks.insert(0, "No solution.".to_string());
    }
    blocks.join("\n\n")
}

fn render_solution(solution: &Solution, verbose: u8) -> String {
    let mut lines = Vec::new();
    if verbose >= 2 {
        for (instance, rule) in &solution.rules {
            lines.push(format!("Rule satisfied by {instance}:"));
            lines.push(rule.clone());
        }
    }
    if let Some(d) = &solution.distance {
        lines.push(distance_line(&d.value, d.attained, solution.global_optimum));
    }
    lines.push("Answer constraint:".to_string());
    if solution.answer_text.is_empty() {
        lines.push("TRUE".to_string());
    } else {
        lines.push(solution.answer_text.join(",\n"));
    }
    lines.join("\n")
}

fn distance_line(value: &Q, attained: bool, global: bool) -> String {
    let mut notes = Vec::new();
    if rational::decimal_places(value).is_none() {
        notes.push(format!("≈{:.6}", rational::to_f64(value)));
    }
    if !attained {
        notes.push("not attained".to_string());
    }
    if global {
        notes.push("global optimum".to_string());
    }
    let mut line = format!("Distance: {}", rational::format_decimal(value));
    if !notes.is_empty() {
        line.push_str(&format!(" ({})", notes.join(", ")));
    }
    line
}

fn atom_json(atom: &LinearAtom, text: Option<&str>) -> Value {
    let terms: Vec<Value> = atom
        .terms()
        .iter()
        .map(|(v, c)| json!({"var": v.to_string(), "coef": rational::to_exact_string(c)}))
        .collect();
    let relation = match atom.relation() {
        Relation::Le => "<=",
        Relation::Lt => "<",
        Relation::Eq => "=",
    };
    let mut value =
        json!({"terms": terms, "relation": relation, "rhs": rational::to_exact_string(atom.rhs())});
    if let Some(text) = text {
        value["text"] = json!(text);
    }
    value
}

pub fn solution_json(solution: &Solution) -> Value {
    let rules: Vec<Value> = solution
        .path_assignment
        .iter()
        .zip(&solution.rules)
        .map(|((instance, path), (_, text))| json!({"instance": instance, "path_id": path, "rule": text}))
        .collect();
    let answer: Vec<Value> = solution
        .display_atoms
        .iter()
        .zip(&solution.answer_text)
        .map(|(a, t)| atom_json(a, Some(t)))
        .collect();
    let witness: Vec<Value> = solution
        .witness
        .iter()
        .map(|(v, q)| json!({"var": v.to_string(), "value": rational::to_exact_string(q), "approx": rational::to_f64(q)}))
        .collect();
    let mut value = json!({
        "paths": rules,
        "answer": answer,
        "projection": solution.answer_atoms.iter().map(|a| atom_json(a, None)).collect::<Vec<_>>(),
        "lp_relaxation": solution.lp_relaxation,
        "witness": witness,
    });
    if let Some(d) = &solution.distance {
        value["distance"] = json!(rational::to_exact_string(&d.value));
        value["distance_approx"] = json!(rational::to_f64(&d.value));
        value["attained"] = json!(d.attained);
        value["global_optimum"] = json!(solution.global_optimum);
    }
    value
}

pub fn result_json(result: &QueryResult) -> Value {
    let failures: Vec<Value> = result
        .failures
        .iter()
        .map(|f| {
            let paths: Vec<Value> = f
                .path_assignment
                .iter()
                .map(|(n, p)| json!({"instance": n, "path_id": p}))
                .collect();
            json!({"paths": paths, "message": f.message})
        })
        .collect();
    json!({
        "minimized": result.minimized,
        "solutions": result.solutions.iter().map(solution_json).collect::<Vec<_>>(),
        "failures": failures,
    })
}

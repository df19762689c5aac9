//! Exact re-check of a report against its instance.

use std::collections::BTreeSet;

use bbspan::instance::{cost_breakdown, is_theta_feasible};
use bbspan::{ExactInstance, Rational, Scalar};

use crate::doc::{margins, CostDoc, ReportDocument};

/// Every mismatch between the report and the recomputed values; empty on success.
pub fn verify(inst: &ExactInstance, report: &ReportDocument) -> Vec<String> {
    let mut diffs = Vec::new();
    if let Err(e) = report.check_header() {
        diffs.push(e.to_string());
        return diffs;
    }
    let sol = match report.solution.to_solution() {
        Ok(s) => s,
        Err(e) => {
            diffs.push(e.to_string());
            return diffs;
        }
    };
    if sol.theta > report.solver.theta.0 {
        diffs.push(format!("solution θ {} is looser than the requested θ {}", report.solution.theta, report.solver.theta));
    }
    let k = inst.demands.len();
    for pair in 0..k {
        let d = &inst.demands[pair];
        match sol.routes.get(&pair) {
            None => diffs.push(format!("pair {pair}: no route")),
            Some(route) => {
                if route.iter().any(|&e| e >= inst.edges.len()) {
                    diffs.push(format!("pair {pair}: route uses an unknown edge"));
                } else if !inst.is_walk(d.source, d.sink, route) {
                    diffs.push(format!("pair {pair}: route is not a path from {} to {}", d.source, d.sink));
                } else if !is_theta_feasible(inst, pair, route, &sol.theta) {
                    diffs.push(format!(
                        "pair {pair}: length {} exceeds the relaxed budget {}",
                        inst.path_length(route),
                        inst.relaxed_bound(pair, &sol.theta)
                    ));
                }
            }
        }
    }
    if let Some(&extra) = sol.routes.keys().find(|&&p| p >= k) {
        diffs.push(format!("pair {extra}: not a pair of the instance"));
    }
    if !diffs.is_empty() {
        return diffs;
    }
    let cost = cost_breakdown(inst, &sol).expect("routes checked");
    let recomputed = CostDoc::new(&cost);
    for (name, got, want) in [
        ("σ cost", &report.cost.sigma, &recomputed.sigma),
        ("δ cost", &report.cost.delta, &recomputed.delta),
        ("total cost", &report.cost.total, &recomputed.total),
    ] {
        if got != want {
            diffs.push(format!("{name}: report says {got}, recomputed {want}"));
        }
    }
    if report.margins != margins(inst, &sol) {
        diffs.push("per-pair margins differ from the recomputed ones".into());
    }
    let records = &report.stages.records;
    if !records.is_empty() {
        let mut seen = BTreeSet::new();
        let mut sum = Rational::int(0);
        for (i, r) in records.iter().enumerate() {
            for &p in &r.pairs {
                if !seen.insert(p) {
                    diffs.push(format!("stage record {i}: pair {p} appears twice"));
                }
            }
            if r.density.0.clone() * Rational::int(r.pairs.len() as i64) != r.cost.0 {
                diffs.push(format!("stage record {i}: density {} times {} pairs is not its cost {}", r.density, r.pairs.len(), r.cost));
            }
            sum += r.cost.0.clone();
        }
        if seen.len() != k || seen.iter().any(|&p| p >= k) {
            diffs.push(format!("stage records cover {} of {k} pairs", seen.len()));
        }
        if sum != cost.total {
            diffs.push(format!("stage costs sum to {}, recomputed total {}", crate::doc::Q(sum), recomputed.total));
        }
    }
    diffs
}

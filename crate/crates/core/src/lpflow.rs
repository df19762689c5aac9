//! Thin-pair path-flow LP: column generation, pruning and randomized rounding.
//!
//! The restricted master is
//!
//! ```text
//! min Σ σ(e)·x_e
//!     Σ_i y_i ≥ k_b/4
//!     x_e − Σ_{p ∈ Π_i, e ∈ p} f_p ≥ 0      for every pair i and edge e
//!     Σ_{p ∈ Π_i} f_p − y_i ≥ 0
//!     (L₂/2)·y_i − Σ_{p ∈ Π_i} δ(p)·f_p ≥ 0
//!     0 ≤ x, y ≤ 1,  f ≥ 0
//! ```
//!
//! where Π_i holds paths with σ ≤ L₁ = τ/n^{4/5} and length within the pair's
//! budget, and L₂ = n^{4/5}·τ/k.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::Rng;

use crate::error::{Error, Result};
use crate::instance::{simplify_walk, Instance};
use crate::rcsp::{self, DimSpec, PatternTable, RcspOptions, RcspQuery, ResourceGraph};
use crate::scalar::{max_of, min_of, power, Scalar};
use crate::simplex::{self, LinearProgram, LpOutcome, Relation, SimplexOptions};

/// The two stage thresholds derived from the guess τ.
#[derive(Clone, Debug, PartialEq)]
pub struct Thresholds<S> {
    pub tau: S,
    /// L₁ = τ/n^{4/5}, the upfront-cost cap of a cheap path.
    pub l1: S,
    /// L₂ = n^{4/5}·τ/k, the pay-per-use cap of a cheap path.
    pub l2: S,
}

impl<S: Scalar> Thresholds<S> {
    pub fn new(n: usize, k: usize, tau: &S) -> Self {
        let n45: S = power(n, 0.8);
        let l1 = tau.div_ref(&n45);
        let l2 = n45.mul_ref(tau).div_ref(&S::int(k.max(1) as i64));
        Thresholds { tau: tau.clone(), l1, l2 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathColumn<S> {
    /// Index into `LpSolution::pairs`.
    pub slot: usize,
    pub edges: Vec<usize>,
    pub sigma: S,
    pub delta: S,
    pub length: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution<S> {
    /// Original pair index of each slot.
    pub pairs: Vec<usize>,
    pub columns: Vec<PathColumn<S>>,
    pub x: Vec<S>,
    pub y: Vec<S>,
    pub f: Vec<S>,
    pub objective: S,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpFlowOptions {
    pub zeta: f64,
    pub max_iterations: usize,
    /// Homogeneous tightening of the float master so the rationalized
    /// solution satisfies every row exactly.
    pub margin: f64,
    /// Tolerance on the σ dimension when it has no usable exact lattice.
    pub sigma_eps: f64,
    pub rcsp: RcspOptions,
    pub simplex: SimplexOptions,
}

impl Default for LpFlowOptions {
    fn default() -> Self {
        LpFlowOptions {
            zeta: 0.1,
            max_iterations: 300,
            margin: 1e-9,
            sigma_eps: 0.1,
            rcsp: RcspOptions::default(),
            simplex: SimplexOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpReport {
    pub iterations: usize,
    pub columns: usize,
    pub converged: bool,
    /// Lagrangian lower bound on the full master at the last iteration.
    pub lower_bound: f64,
}

const SIGMA_WIDTH: i64 = 4096;

/// Cheapest path in Π for one pair under arc costs `cost`.
fn price<S: Scalar>(
    inst: &Instance<S>,
    pair: usize,
    cost: Vec<S>,
    l1: &S,
    sigma_eps: &S,
    opts: &RcspOptions,
) -> Result<Option<Vec<usize>>> {
    let d = &inst.demands[pair];
    let lengths = inst.lengths();
    let sigmas: Vec<S> = inst.edges.iter().map(|e| e.sigma.clone()).collect();
    let graph = ResourceGraph::new(inst.n, inst.arcs(), cost, vec![lengths.clone(), sigmas.clone()]);
    if *l1 < S::zero() {
        return Ok(None);
    }
    let len_dim = DimSpec::exact(&lengths, inst.n, &d.dist_budget)?;
    let sigma_budget = if l1.is_zero() { S::tolerance().add_ref(&S::ratio(1, 1_000_000)) } else { l1.clone() };
    let sig_dim = DimSpec::budgeted(&sigmas, inst.n, &sigma_budget, sigma_eps, SIGMA_WIDTH)?;
    let answer = vec![
        len_dim.pattern_for(&d.dist_budget).ok_or_else(|| Error::CapExceeded("budget out of range".into()))?,
        sig_dim.pattern_for(l1).ok_or_else(|| Error::CapExceeded("σ cap out of range".into()))?,
    ];
    let table = PatternTable::build(&graph, d.source, &[len_dim, sig_dim], inst.n, opts)?;
    Ok(table.walk(d.sink, &answer, inst.n).map(|w| simplify_walk(&graph.arcs, d.source, &w)))
}

fn column_for<S: Scalar>(inst: &Instance<S>, slot: usize, edges: Vec<usize>) -> PathColumn<S> {
    PathColumn { slot, sigma: inst.path_sigma(&edges), delta: inst.path_delta(&edges), length: inst.path_length(&edges), edges }
}

/// Column generation over Π. Errors with `Infeasible` when no flow can reach
/// Σy ≥ k_b/4 with the paths Π contains.
pub fn solve_thin_lp<S: Scalar>(
    inst: &Instance<S>,
    pairs: &[usize],
    th: &Thresholds<S>,
    opts: &LpFlowOptions,
) -> Result<(LpSolution<S>, LpReport)> {
    if !inst.has_integral_lengths() {
        return Err(Error::Invalid("the thin-pair LP needs integral lengths".into()));
    }
    let kb = pairs.len();
    let sigma_eps = S::from_float(opts.sigma_eps);
    let mut columns: Vec<PathColumn<S>> = Vec::new();
    let mut seen: HashSet<(usize, Vec<usize>)> = HashSet::new();
    for (slot, &p) in pairs.iter().enumerate() {
        let cost = inst.edges.iter().map(|e| e.delta.clone()).collect();
        if let Some(path) = price(inst, p, cost, &th.l1, &sigma_eps, &opts.rcsp)? {
            seen.insert((slot, path.clone()));
            columns.push(column_for(inst, slot, path));
        }
    }
    let l2_half = th.l2.approx() / 2.0;
    let mut report = LpReport { iterations: 0, columns: 0, converged: false, lower_bound: 0.0 };
    let mut last: Option<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<usize>)> = None;
    for iter in 0..opts.max_iterations {
        report.iterations = iter + 1;
        let master = Master::build(inst, kb, &columns, l2_half, opts.margin);
        let outcome = simplex::solve(&master.lp, &opts.simplex)?;
        let (duals, objective, feasible) = match &outcome {
            LpOutcome::Optimal(o) => (o.duals.clone(), o.objective, true),
            LpOutcome::Infeasible { farkas } => (farkas.clone(), 0.0, false),
            LpOutcome::Unbounded => return Err(Error::Internal("thin-pair master is unbounded".into())),
        };
        let threshold = if feasible && objective > 0.0 { opts.zeta * objective / (kb + inst.edges.len()) as f64 } else { 1e-9 };
        let mut added = 0;
        let mut most_negative = vec![0.0f64; kb];
        for (slot, &p) in pairs.iter().enumerate() {
            let beta = duals[master.flow_row[slot]].max(0.0);
            let gamma = duals[master.delta_row[slot]].max(0.0);
            let cost: Vec<S> = (0..inst.edges.len())
                .map(|e| {
                    let alpha = master.cap_row.get(&(slot, e)).map_or(0.0, |&r| duals[r].max(0.0));
                    S::from_float(alpha).add_ref(&S::from_float(gamma).mul_ref(&inst.edges[e].delta))
                })
                .collect();
            let Some(path) = price(inst, p, cost.clone(), &th.l1, &sigma_eps, &opts.rcsp)? else { continue };
            let value: f64 = path.iter().map(|&e| cost[e].approx()).sum::<f64>() - beta;
            most_negative[slot] = value.min(0.0);
            if value < -threshold && seen.insert((slot, path.clone())) {
                columns.push(column_for(inst, slot, path));
                added += 1;
            }
        }
        if let LpOutcome::Optimal(o) = outcome {
            report.lower_bound = objective + most_negative.iter().sum::<f64>().min(0.0);
            last = Some((o.x, Vec::new(), Vec::new(), Vec::new()));
            if added == 0 {
                report.converged = true;
                break;
            }
        } else if added == 0 {
            return Err(Error::Infeasible(format!("no flow over cheap paths reaches {kb}/4 pairs")));
        }
    }
    report.columns = columns.len();
    let Some((xs, _, _, _)) = last else {
        return Err(Error::Infeasible("thin-pair master never became feasible".into()));
    };
    let master = Master::build(inst, kb, &columns, l2_half, opts.margin);
    let x_master = if report.converged {
        xs
    } else {
        match simplex::solve(&master.lp, &opts.simplex)? {
            LpOutcome::Optimal(o) => o.x,
            _ => return Err(Error::Infeasible("thin-pair master became infeasible".into())),
        }
    };
    Ok((master.extract(inst, pairs, columns, &x_master), report))
}

struct Master {
    lp: LinearProgram<f64>,
    x_var: BTreeMap<usize, usize>,
    y_var: Vec<usize>,
    f_var: Vec<usize>,
    cap_row: HashMap<(usize, usize), usize>,
    flow_row: Vec<usize>,
    delta_row: Vec<usize>,
}

impl Master {
    fn build<S: Scalar>(inst: &Instance<S>, kb: usize, columns: &[PathColumn<S>], l2_half: f64, margin: f64) -> Master {
        let mut lp = LinearProgram::new(0);
        let mut x_var = BTreeMap::new();
        for c in columns {
            for &e in &c.edges {
                x_var.entry(e).or_insert(0usize);
            }
        }
        for (e, var) in x_var.iter_mut() {
            *var = lp.add_var(inst.edges[*e].sigma.approx());
        }
        let y_var: Vec<usize> = (0..kb).map(|_| lp.add_var(0.0)).collect();
        let f_var: Vec<usize> = columns.iter().map(|_| lp.add_var(0.0)).collect();
        lp.add(y_var.iter().map(|&v| (v, 1.0)).collect(), Relation::Ge, kb as f64 / 4.0 * (1.0 + margin));
        let mut cap: BTreeMap<(usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
        for (c, col) in columns.iter().enumerate() {
            for &e in &col.edges {
                cap.entry((col.slot, e)).or_insert_with(|| vec![(x_var[&e], 1.0)]).push((f_var[c], -1.0));
            }
        }
        let mut cap_row = HashMap::new();
        for (key, coeffs) in cap {
            cap_row.insert(key, lp.add(coeffs, Relation::Ge, 0.0));
        }
        let mut flow_row = Vec::with_capacity(kb);
        let mut delta_row = Vec::with_capacity(kb);
        for slot in 0..kb {
            let mine: Vec<usize> = (0..columns.len()).filter(|&c| columns[c].slot == slot).collect();
            let mut flow: Vec<(usize, f64)> = mine.iter().map(|&c| (f_var[c], 1.0)).collect();
            flow.push((y_var[slot], -(1.0 + margin)));
            flow_row.push(lp.add(flow, Relation::Ge, 0.0));
            let mut budget: Vec<(usize, f64)> = mine.iter().map(|&c| (f_var[c], -columns[c].delta.approx())).collect();
            budget.push((y_var[slot], l2_half * (1.0 - margin)));
            delta_row.push(lp.add(budget, Relation::Ge, 0.0));
        }
        for &v in x_var.values().chain(&y_var) {
            lp.add(vec![(v, 1.0)], Relation::Le, 1.0);
        }
        Master { lp, x_var, y_var, f_var, cap_row, flow_row, delta_row }
    }

    fn extract<S: Scalar>(&self, inst: &Instance<S>, pairs: &[usize], columns: Vec<PathColumn<S>>, x: &[f64]) -> LpSolution<S> {
        let unit = |v: f64| min_of(&S::from_float(v.max(0.0)), &S::one());
        let y: Vec<S> = self.y_var.iter().map(|&v| unit(x[v])).collect();
        let f: Vec<S> = self.f_var.iter().map(|&v| S::from_float(x[v].max(0.0))).collect();
        let mut xe = vec![S::zero(); inst.edges.len()];
        for (&e, &v) in &self.x_var {
            xe[e] = unit(x[v]);
        }
        for (e, load) in flow_through(inst.edges.len(), pairs.len(), &columns, &f).into_iter().enumerate() {
            xe[e] = max_of(&xe[e], &load);
        }
        let objective = objective_of(inst, &xe);
        LpSolution { pairs: pairs.to_vec(), columns, x: xe, y, f, objective }
    }
}

fn objective_of<S: Scalar>(inst: &Instance<S>, x: &[S]) -> S {
    inst.edges.iter().zip(x).fold(S::zero(), |acc, (e, v)| acc.add_ref(&e.sigma.mul_ref(v)))
}

/// max over pairs of the flow through each edge.
fn flow_through<S: Scalar>(edges: usize, slots: usize, columns: &[PathColumn<S>], f: &[S]) -> Vec<S> {
    let mut per = vec![vec![S::zero(); edges]; slots];
    for (c, col) in columns.iter().enumerate() {
        for &e in &col.edges {
            per[col.slot][e] = per[col.slot][e].add_ref(&f[c]);
        }
    }
    (0..edges).map(|e| per.iter().fold(S::zero(), |m, row| max_of(&m, &row[e]))).collect()
}

/// (2x, y, 2f), drop columns with δ > L₂, rescale each pair's flow to y and
/// shrink x to the largest per-pair flow through each edge.
pub fn prune<S: Scalar>(inst: &Instance<S>, sol: &LpSolution<S>, th: &Thresholds<S>) -> Result<LpSolution<S>> {
    let two = S::int(2);
    let mut f: Vec<S> = sol.f.iter().map(|v| v.mul_ref(&two)).collect();
    for (c, col) in sol.columns.iter().enumerate() {
        if col.delta > th.l2 {
            f[c] = S::zero();
        }
    }
    for slot in 0..sol.pairs.len() {
        let mine: Vec<usize> = (0..sol.columns.len()).filter(|&c| sol.columns[c].slot == slot).collect();
        let total = mine.iter().fold(S::zero(), |acc, &c| acc.add_ref(&f[c]));
        if sol.y[slot].is_zero() {
            for &c in &mine {
                f[c] = S::zero();
            }
            continue;
        }
        if total.is_zero() {
            return Err(Error::Internal(format!("pair {} lost all flow while y > 0", sol.pairs[slot])));
        }
        let scale = sol.y[slot].div_ref(&total);
        for &c in &mine {
            f[c] = f[c].mul_ref(&scale);
        }
    }
    let x = flow_through(inst.edges.len(), sol.pairs.len(), &sol.columns, &f);
    let objective = objective_of(inst, &x);
    Ok(LpSolution { pairs: sol.pairs.clone(), columns: sol.columns.clone(), x, y: sol.y.clone(), f, objective })
}

/// Exact re-check of every master row, the variable bounds and Π membership.
pub fn check_lp_constraints<S: Scalar>(inst: &Instance<S>, sol: &LpSolution<S>, th: &Thresholds<S>) -> Vec<String> {
    let mut bad = Vec::new();
    let kb = sol.pairs.len();
    let ysum = sol.y.iter().fold(S::zero(), |a, v| a.add_ref(v));
    if ysum < S::ratio(kb as i64, 4) {
        bad.push(format!("Σy = {ysum} below k_b/4"));
    }
    let zero = S::zero();
    let one = S::one();
    for (name, vals) in [("x", &sol.x), ("y", &sol.y), ("f", &sol.f)] {
        for (i, v) in vals.iter().enumerate() {
            if *v < zero || (name != "f" && *v > one) {
                bad.push(format!("{name}[{i}] = {v} outside [0, 1]"));
            }
        }
    }
    let mut per: HashMap<(usize, usize), S> = HashMap::new();
    let half = th.l2.div_ref(&S::int(2));
    for slot in 0..kb {
        let pair = sol.pairs[slot];
        let d = &inst.demands[pair];
        let mut flow = S::zero();
        let mut dflow = S::zero();
        for (c, col) in sol.columns.iter().enumerate().filter(|(_, col)| col.slot == slot) {
            if !inst.is_walk(d.source, d.sink, &col.edges) || col.sigma > th.l1 || col.length > d.dist_budget {
                bad.push(format!("column {c} of pair {pair} is not in Π"));
            }
            flow = flow.add_ref(&sol.f[c]);
            dflow = dflow.add_ref(&col.delta.mul_ref(&sol.f[c]));
            for &e in &col.edges {
                let entry = per.entry((slot, e)).or_insert_with(S::zero);
                *entry = entry.add_ref(&sol.f[c]);
            }
        }
        if flow < sol.y[slot] {
            bad.push(format!("pair {pair}: flow {flow} below y"));
        }
        if dflow > half.mul_ref(&sol.y[slot]) {
            bad.push(format!("pair {pair}: δ-weighted flow {dflow} above (L₂/2)·y"));
        }
    }
    for ((slot, e), load) in per {
        if load > sol.x[e] {
            bad.push(format!("edge {e}, pair {}: flow {load} above x", sol.pairs[slot]));
        }
    }
    bad
}

/// The sampling multiplier n^{4/5}·ln n.
pub fn sampling_factor<S: Scalar>(n: usize) -> S {
    S::from_float((n as f64).powf(0.8) * (n as f64).ln())
}

pub fn keep_probability<S: Scalar>(n: usize, x: &S) -> S {
    min_of(&sampling_factor::<S>(n).mul_ref(x), &S::one())
}

/// Closed-form expected upfront cost of the sampled subgraph.
pub fn expected_sampling_cost<S: Scalar>(inst: &Instance<S>, sol: &LpSolution<S>) -> S {
    inst.edges.iter().zip(&sol.x).fold(S::zero(), |acc, (e, x)| acc.add_ref(&e.sigma.mul_ref(&keep_probability(inst.n, x))))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rounding {
    pub kept: Vec<bool>,
    /// Original pair index → route inside the sampled subgraph.
    pub paths: BTreeMap<usize, Vec<usize>>,
}

/// Samples each edge with probability min(n^{4/5}·ln n·x_e, 1) and routes every
/// pair of the solution along its min-δ budget-feasible path in the sample,
/// keeping it when δ ≤ L₂.
pub fn round<S: Scalar, R: Rng>(
    inst: &Instance<S>,
    sol: &LpSolution<S>,
    th: &Thresholds<S>,
    rng: &mut R,
    opts: &RcspOptions,
) -> Result<Rounding> {
    let kept: Vec<bool> = sol
        .x
        .iter()
        .map(|x| {
            let p = keep_probability(inst.n, x);
            if p >= S::one() {
                true
            } else if p > S::zero() {
                rng.gen::<f64>() < p.approx()
            } else {
                false
            }
        })
        .collect();
    let ids: Vec<usize> = (0..inst.edges.len()).filter(|&e| kept[e]).collect();
    let graph = ResourceGraph::new(
        inst.n,
        ids.iter().map(|&e| (inst.edges[e].tail, inst.edges[e].head)).collect(),
        ids.iter().map(|&e| inst.edges[e].delta.clone()).collect(),
        vec![ids.iter().map(|&e| inst.edges[e].length.clone()).collect()],
    );
    let mut paths = BTreeMap::new();
    for &pair in &sol.pairs {
        let d = &inst.demands[pair];
        let q =
            RcspQuery { graph: &graph, source: d.source, sink: d.sink, budgets: vec![d.dist_budget.clone()], tolerances: vec![S::one()] };
        match rcsp::solve_exact_integer(&q, opts) {
            Ok(res) if res.cost <= th.l2 => {
                paths.insert(pair, res.path.iter().map(|&i| ids[i]).collect());
            }
            Ok(_) | Err(Error::Infeasible(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(Rounding { kept, paths })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{rat, ExactInstance, Rational, Seed};

    fn r(x: i64) -> Rational {
        rat(x, 1)
    }

    fn two_disjoint() -> ExactInstance {
        let mut inst = ExactInstance::new(4);
        inst.add_edge(0, 1, r(1), r(1), r(0));
        inst.add_edge(2, 3, r(1), r(1), r(0));
        inst.add_demand(0, 1, 1, r(1));
        inst.add_demand(2, 3, 1, r(1));
        inst
    }

    #[test]
    fn disjoint_pairs_are_integral() {
        let inst = two_disjoint();
        let th = Thresholds { tau: r(100), l1: r(10), l2: r(10) };
        let (sol, report) = solve_thin_lp(&inst, &[0, 1], &th, &LpFlowOptions::default()).unwrap();
        assert!(report.converged);
        assert!(sol.objective <= rat(1, 2) + rat(1, 1000));
        assert!(check_lp_constraints(&inst, &sol, &th).is_empty());
        let pruned = prune(&inst, &sol, &th).unwrap();
        assert!(check_lp_constraints(&inst, &pruned, &th).is_empty());
    }

    #[test]
    fn too_few_connectable_pairs_is_infeasible() {
        let mut inst = ExactInstance::new(10);
        inst.add_edge(0, 1, r(1), r(1), r(0));
        inst.add_demand(0, 1, 1, r(1));
        for i in 1..8 {
            inst.add_demand(2, 3 + (i % 7), 1, r(1));
        }
        let th = Thresholds { tau: r(100), l1: r(10), l2: r(10) };
        let pairs: Vec<usize> = (0..8).collect();
        assert!(matches!(solve_thin_lp(&inst, &pairs, &th, &LpFlowOptions::default()), Err(Error::Infeasible(_))));
    }

    #[test]
    fn prune_rescales_survivor() {
        let mut inst = ExactInstance::new(3);
        inst.add_edge(0, 2, r(1), r(1), r(1));
        inst.add_edge(0, 1, r(1), r(1), r(9));
        inst.add_edge(1, 2, r(1), r(1), r(0));
        inst.add_demand(0, 2, 1, r(5));
        let th = Thresholds { tau: r(10), l1: r(5), l2: r(10) };
        let cheap = column_for(&inst, 0, vec![0]);
        let costly = PathColumn { delta: r(11), ..column_for(&inst, 0, vec![1, 2]) };
        let sol = LpSolution {
            pairs: vec![0],
            columns: vec![cheap, costly],
            x: vec![rat(1, 2), rat(1, 2), rat(1, 2)],
            y: vec![rat(1, 2)],
            f: vec![rat(1, 4), rat(1, 4)],
            objective: rat(3, 2),
        };
        let pruned = prune(&inst, &sol, &th).unwrap();
        assert_eq!(pruned.f, vec![rat(1, 2), r(0)]);
        assert_eq!(pruned.x, vec![rat(1, 2), r(0), r(0)]);
    }

    #[test]
    fn rounding_extremes() {
        let inst = two_disjoint();
        let th = Thresholds { tau: r(100), l1: r(10), l2: r(10) };
        let mut sol =
            LpSolution { pairs: vec![0, 1], columns: vec![], x: vec![r(0), r(0)], y: vec![r(0), r(0)], f: vec![], objective: r(0) };
        let mut rng = Seed(3).stream("round");
        let out = round(&inst, &sol, &th, &mut rng, &RcspOptions::default()).unwrap();
        assert!(out.paths.is_empty() && out.kept.iter().all(|k| !k));
        let threshold = r(1) / sampling_factor::<Rational>(4);
        sol.x = vec![threshold.clone(), threshold];
        let out = round(&inst, &sol, &th, &mut rng, &RcspOptions::default()).unwrap();
        assert!(out.kept.iter().all(|k| *k));
        assert_eq!(out.paths.len(), 2);
    }
}

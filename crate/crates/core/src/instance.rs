//! Instance model, validation, cost and feasibility evaluation.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{max_of, min_of, sign, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct Edge<S> {
    pub tail: usize,
    pub head: usize,
    pub length: S,
    pub sigma: S,
    pub delta: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Demand<S> {
    pub source: usize,
    pub sink: usize,
    pub demand: u64,
    pub dist_budget: S,
}

/// Directed graph with two-metric edge costs and distance-budgeted terminal pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance<S> {
    pub n: usize,
    pub edges: Vec<Edge<S>>,
    pub demands: Vec<Demand<S>>,
}

impl<S: Scalar> Instance<S> {
    pub fn new(n: usize) -> Self {
        Instance { n, edges: Vec::new(), demands: Vec::new() }
    }

    pub fn add_edge(&mut self, tail: usize, head: usize, length: S, sigma: S, delta: S) -> usize {
        self.edges.push(Edge { tail, head, length, sigma, delta });
        self.edges.len() - 1
    }

    pub fn add_demand(&mut self, source: usize, sink: usize, demand: u64, dist_budget: S) -> usize {
        self.demands.push(Demand { source, sink, demand, dist_budget });
        self.demands.len() - 1
    }

    pub fn arcs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.tail, e.head)).collect()
    }

    pub fn lengths(&self) -> Vec<S> {
        self.edges.iter().map(|e| e.length.clone()).collect()
    }

    pub fn out_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for (id, e) in self.edges.iter().enumerate() {
            adj[e.tail].push(id);
        }
        adj
    }

    pub fn in_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for (id, e) in self.edges.iter().enumerate() {
            adj[e.head].push(id);
        }
        adj
    }

    pub fn min_length(&self) -> S {
        self.edges.iter().fold(S::zero(), |m, e| min_of(&m, &e.length))
    }

    pub fn max_length(&self) -> S {
        self.edges.iter().fold(S::zero(), |m, e| max_of(&m, &e.length))
    }

    pub fn has_integral_lengths(&self) -> bool {
        self.edges.iter().all(|e| e.length.is_integral()) && self.demands.iter().all(|d| d.dist_budget.is_integral())
    }

    pub fn has_unit_demands(&self) -> bool {
        self.demands.iter().all(|d| d.demand == 1)
    }

    /// `(1 + θ·sign(Dis))·Dis` for the given pair.
    pub fn relaxed_bound(&self, pair: usize, theta: &S) -> S {
        let dis = &self.demands[pair].dist_budget;
        let factor = S::one() + theta.mul_ref(&S::int(sign(dis) as i64));
        factor.mul_ref(dis)
    }

    pub fn path_length(&self, path: &[usize]) -> S {
        path.iter().fold(S::zero(), |acc, &e| acc.add_ref(&self.edges[e].length))
    }

    pub fn path_sigma(&self, path: &[usize]) -> S {
        path.iter().fold(S::zero(), |acc, &e| acc.add_ref(&self.edges[e].sigma))
    }

    pub fn path_delta(&self, path: &[usize]) -> S {
        path.iter().fold(S::zero(), |acc, &e| acc.add_ref(&self.edges[e].delta))
    }

    /// True if `path` is a walk of existing edges from `from` to `to`.
    pub fn is_walk(&self, from: usize, to: usize, path: &[usize]) -> bool {
        let mut at = from;
        for &e in path {
            match self.edges.get(e) {
                Some(edge) if edge.tail == at => at = edge.head,
                _ => return false,
            }
        }
        at == to
    }

    /// Copy with the upfront cost of the given edges set to zero.
    pub fn with_free_edges(&self, free: &HashSet<usize>) -> Instance<S> {
        let mut out = self.clone();
        for &e in free {
            out.edges[e].sigma = S::zero();
        }
        out
    }

    pub fn demand_scalar(&self, pair: usize) -> S {
        S::from_u64(self.demands[pair].demand).expect("demand fits scalar")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation<S> {
    VertexOutOfRange { edge: usize },
    SelfLoop { edge: usize },
    DuplicateEdge { first: usize, second: usize },
    NegativeSigma { edge: usize },
    NegativeDelta { edge: usize },
    TerminalOutOfRange { pair: usize },
    DegeneratePair { pair: usize },
    ZeroDemand { pair: usize },
    ZeroBudget { pair: usize },
    NegativeCycle { cycle: Vec<usize> },
    InfeasiblePair { pair: usize, shortest: Option<S> },
}

impl<S: Scalar> fmt::Display for Violation<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::VertexOutOfRange { edge } => write!(f, "edge {edge} references a missing vertex"),
            Violation::SelfLoop { edge } => write!(f, "edge {edge} is a self-loop"),
            Violation::DuplicateEdge { first, second } => {
                write!(f, "edges {first} and {second} share tail and head")
            }
            Violation::NegativeSigma { edge } => write!(f, "edge {edge} has negative upfront cost"),
            Violation::NegativeDelta { edge } => write!(f, "edge {edge} has negative pay-per-use cost"),
            Violation::TerminalOutOfRange { pair } => write!(f, "pair {pair} references a missing vertex"),
            Violation::DegeneratePair { pair } => write!(f, "pair {pair} has equal source and sink"),
            Violation::ZeroDemand { pair } => write!(f, "pair {pair} has zero demand"),
            Violation::ZeroBudget { pair } => write!(f, "pair {pair} has a zero distance budget"),
            Violation::NegativeCycle { cycle } => write!(f, "negative-length cycle through edges {cycle:?}"),
            Violation::InfeasiblePair { pair, shortest: Some(d) } => {
                write!(f, "pair {pair}: shortest path length {d} exceeds its budget")
            }
            Violation::InfeasiblePair { pair, shortest: None } => {
                write!(f, "pair {pair}: sink unreachable from source")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport<S> {
    pub violations: Vec<Violation<S>>,
}

impl<S: Scalar> ValidationReport<S> {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            return Ok(());
        }
        let msg: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        Err(Error::Validation(msg.join("; ")))
    }
}

pub fn validate_instance<S: Scalar>(inst: &Instance<S>) -> ValidationReport<S> {
    let mut violations = Vec::new();
    let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut structural_ok = true;
    for (id, e) in inst.edges.iter().enumerate() {
        if e.tail >= inst.n || e.head >= inst.n {
            violations.push(Violation::VertexOutOfRange { edge: id });
            structural_ok = false;
            continue;
        }
        if e.tail == e.head {
            violations.push(Violation::SelfLoop { edge: id });
        }
        if let Some(&first) = seen.get(&(e.tail, e.head)) {
            violations.push(Violation::DuplicateEdge { first, second: id });
        } else {
            seen.insert((e.tail, e.head), id);
        }
        if e.sigma < S::zero() {
            violations.push(Violation::NegativeSigma { edge: id });
        }
        if e.delta < S::zero() {
            violations.push(Violation::NegativeDelta { edge: id });
        }
    }
    for (p, d) in inst.demands.iter().enumerate() {
        if d.source >= inst.n || d.sink >= inst.n {
            violations.push(Violation::TerminalOutOfRange { pair: p });
            structural_ok = false;
            continue;
        }
        if d.source == d.sink {
            violations.push(Violation::DegeneratePair { pair: p });
        }
        if d.demand == 0 {
            violations.push(Violation::ZeroDemand { pair: p });
        }
        if d.dist_budget.is_zero() {
            violations.push(Violation::ZeroBudget { pair: p });
        }
    }
    if !structural_ok {
        return ValidationReport { violations };
    }
    let arcs = inst.arcs();
    let lengths = inst.lengths();
    if let Some(cycle) = find_negative_cycle(inst.n, &arcs, &lengths) {
        violations.push(Violation::NegativeCycle { cycle });
        return ValidationReport { violations };
    }
    let mut by_source: BTreeMap<usize, Vec<Option<S>>> = BTreeMap::new();
    for (p, d) in inst.demands.iter().enumerate() {
        let dist = by_source.entry(d.source).or_insert_with(|| shortest_distances(inst.n, &arcs, &lengths, d.source));
        match &dist[d.sink] {
            Some(len) if *len <= d.dist_budget => {}
            other => violations.push(Violation::InfeasiblePair { pair: p, shortest: other.clone() }),
        }
    }
    ValidationReport { violations }
}

/// Detects a negative cycle with `n` rounds of relaxation from a virtual source.
/// A relaxation in round `n` certifies a cycle, which is returned as edge ids.
pub fn find_negative_cycle<S: Scalar>(n: usize, arcs: &[(usize, usize)], weight: &[S]) -> Option<Vec<usize>> {
    let mut dist = vec![S::zero(); n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut last = None;
    for _round in 0..n {
        last = None;
        for (id, &(u, v)) in arcs.iter().enumerate() {
            let cand = dist[u].add_ref(&weight[id]);
            if cand < dist[v] {
                dist[v] = cand;
                pred[v] = Some(id);
                last = Some(v);
            }
        }
        last?;
    }
    let mut v = last?;
    for _ in 0..n {
        v = arcs[pred[v]?].0;
    }
    let start = v;
    let mut cycle = Vec::new();
    loop {
        let e = pred[v]?;
        cycle.push(e);
        v = arcs[e].0;
        if v == start {
            break;
        }
    }
    cycle.reverse();
    Some(cycle)
}

/// Bellman-Ford distances from `source`; assumes no negative cycle is reachable.
pub fn shortest_distances<S: Scalar>(n: usize, arcs: &[(usize, usize)], weight: &[S], source: usize) -> Vec<Option<S>> {
    let mut dist: Vec<Option<S>> = vec![None; n];
    dist[source] = Some(S::zero());
    for _ in 1..n.max(2) {
        let mut changed = false;
        for (id, &(u, v)) in arcs.iter().enumerate() {
            if let Some(du) = &dist[u] {
                let cand = du.add_ref(&weight[id]);
                if dist[v].as_ref().is_none_or(|dv| cand < *dv) {
                    dist[v] = Some(cand);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

/// Removes closed sub-walks, keeping the first visit of every vertex.
pub fn simplify_walk(arcs: &[(usize, usize)], start: usize, walk: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(walk.len());
    let mut position = BTreeMap::new();
    position.insert(start, 0usize);
    for &e in walk {
        let head = arcs[e].1;
        if let Some(&k) = position.get(&head) {
            for removed in out.drain(k..) {
                position.remove(&arcs[removed].1);
            }
            position.insert(head, k);
        } else {
            out.push(e);
            position.insert(head, out.len());
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct RouteSolution<S> {
    pub routes: BTreeMap<usize, Vec<usize>>,
    pub theta: S,
}

impl<S: Scalar> RouteSolution<S> {
    pub fn new(theta: S) -> Self {
        RouteSolution { routes: BTreeMap::new(), theta }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CostBreakdown<S> {
    pub sigma: S,
    pub delta: S,
    pub total: S,
}

pub fn cost_breakdown<S: Scalar>(inst: &Instance<S>, sol: &RouteSolution<S>) -> Result<CostBreakdown<S>> {
    let mut used = HashSet::new();
    let mut sigma = S::zero();
    let mut delta = S::zero();
    for (&pair, route) in &sol.routes {
        if pair >= inst.demands.len() {
            return Err(Error::Invalid(format!("route for unknown pair {pair}")));
        }
        let dem = inst.demand_scalar(pair);
        for &e in route {
            let edge = inst.edges.get(e).ok_or_else(|| Error::Invalid(format!("unknown edge id {e}")))?;
            if used.insert(e) {
                sigma = sigma.add_ref(&edge.sigma);
            }
            delta = delta.add_ref(&edge.delta.mul_ref(&dem));
        }
    }
    let total = sigma.add_ref(&delta);
    Ok(CostBreakdown { sigma, delta, total })
}

/// Upfront cost of the union of routes plus demand-weighted pay-per-use cost.
pub fn solution_cost<S: Scalar>(inst: &Instance<S>, sol: &RouteSolution<S>) -> Result<S> {
    Ok(cost_breakdown(inst, sol)?.total)
}

/// Per-edge sum of demands over the routes using it.
pub fn edge_loads<S: Scalar>(inst: &Instance<S>, sol: &RouteSolution<S>) -> Vec<u64> {
    let mut load = vec![0u64; inst.edges.len()];
    for (&pair, route) in &sol.routes {
        for &e in route {
            load[e] += inst.demands[pair].demand;
        }
    }
    load
}

pub fn is_theta_feasible<S: Scalar>(inst: &Instance<S>, pair: usize, path: &[usize], theta: &S) -> bool {
    inst.path_length(path) <= inst.relaxed_bound(pair, theta)
}

/// Checks that every pair has a walk meeting its relaxed budget.
pub fn check_solution<S: Scalar>(inst: &Instance<S>, sol: &RouteSolution<S>) -> Result<()> {
    for (p, d) in inst.demands.iter().enumerate() {
        let route = sol.routes.get(&p).ok_or_else(|| Error::Infeasible(format!("pair {p} has no route")))?;
        if !inst.is_walk(d.source, d.sink, route) {
            return Err(Error::Infeasible(format!("route of pair {p} is not a source-to-sink walk")));
        }
        if !is_theta_feasible(inst, p, route, &sol.theta) {
            return Err(Error::Infeasible(format!("route of pair {p} exceeds its relaxed budget")));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionNumbers<S> {
    pub eta: S,
    pub xi: S,
}

pub fn condition_numbers<S: Scalar>(inst: &Instance<S>) -> Result<ConditionNumbers<S>> {
    let budgets: Vec<S> = inst.demands.iter().map(|d| d.dist_budget.abs()).collect();
    let first = budgets.first().ok_or_else(|| Error::Invalid("empty demand set".into()))?;
    let lo = budgets.iter().fold(first.clone(), |m, b| min_of(&m, b));
    let hi = budgets.iter().fold(first.clone(), |m, b| max_of(&m, b));
    if lo.is_zero() {
        return Err(Error::Invalid("zero distance budget".into()));
    }
    let eta = inst.min_length().abs().div_ref(&lo);
    let xi = hi.div_ref(&lo);
    Ok(ConditionNumbers { eta, xi })
}

/// One power-of-two slice of the demands.
///
/// The part is a unit-demand instance whose pay-per-use costs are
/// pre-multiplied by `weight`, so a unit-demand solver prices it correctly.
#[derive(Clone, Debug, PartialEq)]
pub struct DemandPart<S> {
    pub weight: u64,
    pub instance: Instance<S>,
    /// Original pair index of each pair in `instance`.
    pub pairs: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemandSplit<S> {
    pub parts: Vec<DemandPart<S>>,
}

pub fn split_demands<S: Scalar>(inst: &Instance<S>) -> DemandSplit<S> {
    let max_dem = inst.demands.iter().map(|d| d.demand).max().unwrap_or(0);
    let mut parts = Vec::new();
    let mut bit = 0u32;
    while bit < 64 && (1u64 << bit) <= max_dem {
        let weight = 1u64 << bit;
        let pairs: Vec<usize> = (0..inst.demands.len()).filter(|&p| inst.demands[p].demand & weight != 0).collect();
        if !pairs.is_empty() {
            let mut sub = Instance::new(inst.n);
            let w = S::from_u64(weight).expect("weight fits scalar");
            for e in &inst.edges {
                sub.add_edge(e.tail, e.head, e.length.clone(), e.sigma.clone(), e.delta.mul_ref(&w));
            }
            for &p in &pairs {
                let d = &inst.demands[p];
                sub.add_demand(d.source, d.sink, 1, d.dist_budget.clone());
            }
            parts.push(DemandPart { weight, instance: sub, pairs });
        }
        bit += 1;
    }
    DemandSplit { parts }
}

impl<S: Scalar> DemandSplit<S> {
    /// Merges per-part solutions; a pair present in several parts keeps the
    /// route chosen by its heaviest part.
    pub fn merge(&self, solutions: &[RouteSolution<S>]) -> Result<RouteSolution<S>> {
        if solutions.len() != self.parts.len() {
            return Err(Error::Invalid("one solution per part expected".into()));
        }
        let mut theta = S::zero();
        let mut routes = BTreeMap::new();
        for (part, sol) in self.parts.iter().zip(solutions) {
            theta = max_of(&theta, &sol.theta);
            for (&sub_pair, route) in &sol.routes {
                let original = *part.pairs.get(sub_pair).ok_or_else(|| Error::Invalid(format!("unknown sub-pair {sub_pair}")))?;
                routes.insert(original, route.clone());
            }
        }
        Ok(RouteSolution { routes, theta })
    }
}

/// Junction-tree cost: upfront cost of the union of all s⇝r⇝t routes plus
/// demand-weighted pay-per-use cost along each route.
pub fn junction_cost<S: Scalar>(inst: &Instance<S>, routes: &BTreeMap<usize, (Vec<usize>, Vec<usize>)>) -> S {
    let mut used = HashSet::new();
    let mut total = S::zero();
    for (&pair, (into, out)) in routes {
        let dem = inst.demand_scalar(pair);
        for &e in into.iter().chain(out) {
            if used.insert(e) {
                total = total.add_ref(&inst.edges[e].sigma);
            }
            total = total.add_ref(&inst.edges[e].delta.mul_ref(&dem));
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn r(n: i64) -> Rational {
        Rational::int(n)
    }

    #[test]
    fn negative_two_cycle_is_reported() {
        let mut inst = Instance::new(2);
        inst.add_edge(0, 1, r(-1), r(0), r(0));
        inst.add_edge(1, 0, r(0), r(0), r(0));
        let report = validate_instance(&inst);
        assert!(matches!(report.violations[..], [Violation::NegativeCycle { .. }]));
    }

    #[test]
    fn single_edge_budgets() {
        let mut inst = Instance::new(2);
        inst.add_edge(0, 1, r(3), r(1), r(1));
        inst.add_demand(0, 1, 1, r(5));
        assert!(validate_instance(&inst).is_valid());
        inst.demands[0].dist_budget = r(2);
        let report = validate_instance(&inst);
        assert_eq!(report.violations, vec![Violation::InfeasiblePair { pair: 0, shortest: Some(r(3)) }]);
    }

    #[test]
    fn structural_violations() {
        let mut inst = Instance::new(3);
        inst.add_edge(0, 0, r(1), r(0), r(0));
        inst.add_edge(0, 1, r(1), r(0), r(0));
        inst.add_edge(0, 1, r(2), r(-1), r(0));
        inst.add_demand(0, 1, 1, r(0));
        let v = validate_instance(&inst).violations;
        assert!(v.contains(&Violation::SelfLoop { edge: 0 }));
        assert!(v.contains(&Violation::DuplicateEdge { first: 1, second: 2 }));
        assert!(v.contains(&Violation::NegativeSigma { edge: 2 }));
        assert!(v.contains(&Violation::ZeroBudget { pair: 0 }));
    }

    #[test]
    fn shared_edge_cost() {
        let mut inst = Instance::new(2);
        inst.add_edge(0, 1, r(1), r(5), r(1));
        inst.add_demand(0, 1, 2, r(1));
        inst.add_demand(0, 1, 3, r(1));
        let mut sol = RouteSolution::new(r(0));
        sol.routes.insert(0, vec![0]);
        sol.routes.insert(1, vec![0]);
        assert_eq!(solution_cost(&inst, &sol).unwrap(), r(10));
        let empty = Instance::<Rational>::new(1);
        assert_eq!(solution_cost(&empty, &RouteSolution::new(r(0))).unwrap(), r(0));
    }

    #[test]
    fn disjoint_routes_cost() {
        let mut inst = Instance::new(4);
        inst.add_edge(0, 1, r(1), r(3), r(1));
        inst.add_edge(2, 3, r(1), r(4), r(3));
        inst.add_demand(0, 1, 1, r(1));
        inst.add_demand(2, 3, 1, r(1));
        let mut sol = RouteSolution::new(r(0));
        sol.routes.insert(0, vec![0]);
        sol.routes.insert(1, vec![1]);
        assert_eq!(solution_cost(&inst, &sol).unwrap(), r(11));
        sol.routes.insert(1, vec![9]);
        assert!(solution_cost(&inst, &sol).is_err());
    }

    #[test]
    fn theta_feasibility_with_negative_budget() {
        let mut inst = Instance::new(2);
        inst.add_edge(0, 1, r(10), r(0), r(0));
        inst.add_demand(0, 1, 1, r(10));
        let theta = Rational::ratio(1, 10);
        assert!(is_theta_feasible(&inst, 0, &[0], &theta));
        inst.edges[0].length = r(-9);
        inst.demands[0].dist_budget = r(-10);
        assert!(is_theta_feasible(&inst, 0, &[0], &theta));
        inst.edges[0].length = Rational::ratio(-89, 10);
        assert!(!is_theta_feasible(&inst, 0, &[0], &theta));
    }

    #[test]
    fn condition_number_examples() {
        let mut inst = Instance::new(3);
        inst.add_edge(0, 1, r(-2), r(0), r(0));
        inst.add_edge(1, 2, r(3), r(0), r(0));
        inst.add_demand(0, 1, 1, r(4));
        inst.add_demand(0, 2, 1, r(8));
        let c = condition_numbers(&inst).unwrap();
        assert_eq!(c.eta, Rational::ratio(1, 2));
        assert_eq!(c.xi, r(2));
        inst.edges[0].length = r(2);
        inst.demands[0].dist_budget = r(-4);
        inst.demands[1].dist_budget = r(4);
        let c = condition_numbers(&inst).unwrap();
        assert_eq!(c.eta, r(0));
        assert_eq!(c.xi, r(1));
        assert!(condition_numbers(&Instance::<Rational>::new(2)).is_err());
    }

    #[test]
    fn split_binary_expansion() {
        let mut inst = Instance::new(3);
        inst.add_edge(0, 1, r(1), r(1), r(1));
        inst.add_demand(0, 1, 5, r(1));
        let split = split_demands(&inst);
        let weights: Vec<u64> = split.parts.iter().map(|p| p.weight).collect();
        assert_eq!(weights, vec![1, 4]);

        inst.demands[0].demand = 3;
        inst.add_demand(0, 1, 2, r(1));
        let split = split_demands(&inst);
        assert_eq!(split.parts[0].weight, 1);
        assert_eq!(split.parts[0].pairs, vec![0]);
        assert_eq!(split.parts[1].weight, 2);
        assert_eq!(split.parts[1].pairs, vec![0, 1]);

        inst.demands[0].demand = 1;
        inst.demands[1].demand = 1;
        let split = split_demands(&inst);
        assert_eq!(split.parts.len(), 1);
        assert_eq!(split.parts[0].instance, inst);
        assert_eq!(split.parts[0].pairs, vec![0, 1]);
    }

    #[test]
    fn walk_simplification() {
        let arcs = vec![(0, 1), (1, 2), (2, 1), (1, 3)];
        assert_eq!(simplify_walk(&arcs, 0, &[0, 1, 2, 3]), vec![0, 3]);
        let arcs = vec![(0, 1), (1, 0), (0, 2)];
        assert_eq!(simplify_walk(&arcs, 0, &[0, 1, 2]), vec![2]);
    }
}

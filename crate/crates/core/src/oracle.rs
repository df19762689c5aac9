//! Exhaustive reference solvers for small instances.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::instance::{Instance, RouteSolution};
use crate::rcsp::RcspQuery;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleOptions {
    /// Maximum number of simple paths listed per endpoint pair.
    pub max_paths: usize,
    /// Maximum number of search nodes in a product search.
    pub max_nodes: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { max_paths: 200_000, max_nodes: 200_000_000 }
    }
}

/// All simple paths from `from` to `to` by depth-first search, in arc-id order.
/// `from == to` yields the single empty path.
pub fn simple_paths(n: usize, arcs: &[(usize, usize)], from: usize, to: usize, cap: usize) -> Result<Vec<Vec<usize>>> {
    let mut out_adj = vec![Vec::new(); n];
    for (e, &(u, _)) in arcs.iter().enumerate() {
        out_adj[u].push(e);
    }
    let mut paths = Vec::new();
    if from == to {
        paths.push(Vec::new());
        return Ok(paths);
    }
    let mut on_path = vec![false; n];
    let mut stack: Vec<(usize, usize)> = vec![(from, 0)];
    let mut path: Vec<usize> = Vec::new();
    on_path[from] = true;
    while let Some(&mut (v, ref mut next)) = stack.last_mut() {
        if *next >= out_adj[v].len() {
            stack.pop();
            on_path[v] = false;
            path.pop();
            continue;
        }
        let e = out_adj[v][*next];
        *next += 1;
        let w = arcs[e].1;
        if on_path[w] {
            continue;
        }
        if w == to {
            path.push(e);
            paths.push(path.clone());
            path.pop();
            if paths.len() > cap {
                return Err(Error::CapExceeded(format!("more than {cap} simple paths")));
            }
            continue;
        }
        on_path[w] = true;
        path.push(e);
        stack.push((w, 0));
    }
    Ok(paths)
}

/// Simple source-to-sink paths of `pair` meeting the θ-relaxed budget.
pub fn enumerate_feasible_paths<S: Scalar>(inst: &Instance<S>, pair: usize, theta: &S, cap: usize) -> Result<Vec<Vec<usize>>> {
    let d = &inst.demands[pair];
    let bound = inst.relaxed_bound(pair, theta);
    let all = simple_paths(inst.n, &inst.arcs(), d.source, d.sink, cap)?;
    Ok(all.into_iter().filter(|p| inst.path_length(p) <= bound).collect())
}

/// Minimum cost over simple paths with every consumption within its strict budget.
pub fn brute_force_rcsp<S: Scalar>(q: &RcspQuery<'_, S>, cap: usize) -> Result<Option<(Vec<usize>, S)>> {
    let g = q.graph;
    let mut best: Option<(Vec<usize>, S)> = None;
    for p in simple_paths(g.n, &g.arcs, q.source, q.sink, cap)? {
        let within = (0..g.dims()).all(|i| {
            let w = p.iter().fold(S::zero(), |acc, &e| acc.add_ref(&g.weights[i][e]));
            w <= q.budgets[i]
        });
        if !within {
            continue;
        }
        let c = p.iter().fold(S::zero(), |acc, &e| acc.add_ref(&g.cost[e]));
        if best.as_ref().is_none_or(|(_, b)| c < *b) {
            best = Some((p, c));
        }
    }
    Ok(best)
}

/// One candidate route for a group: edge set (for σ) and its pay-per-use charge.
#[derive(Clone, Debug)]
struct Choice<S> {
    id: usize,
    edges: Vec<usize>,
    delta: S,
    standalone: S,
}

fn make_choice<S: Scalar>(inst: &Instance<S>, id: usize, walk: &[usize], dem: &S) -> Choice<S> {
    let mut edges = walk.to_vec();
    edges.sort_unstable();
    edges.dedup();
    let delta = inst.path_delta(walk).mul_ref(dem);
    let standalone = edges.iter().fold(delta.clone(), |acc, &e| acc.add_ref(&inst.edges[e].sigma));
    Choice { id, edges, delta, standalone }
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j == b.len() || b[j] != x {
            return false;
        }
    }
    true
}

/// Drops choices dominated by another with fewer edges and no more δ.
fn prune_dominated<S: Scalar>(mut choices: Vec<Choice<S>>) -> Vec<Choice<S>> {
    choices.sort_by(|a, b| a.standalone.partial_cmp(&b.standalone).expect("comparable").then(a.id.cmp(&b.id)));
    if choices.len() > 4000 {
        return choices;
    }
    let mut kept: Vec<Choice<S>> = Vec::new();
    for c in choices {
        if !kept.iter().any(|k| k.delta <= c.delta && is_subset(&k.edges, &c.edges)) {
            kept.push(c);
        }
    }
    kept
}

struct Search<'a, S> {
    sigma: &'a [S],
    groups: Vec<Vec<Choice<S>>>,
    suffix_delta: Vec<S>,
    usage: Vec<u32>,
    picks: Vec<usize>,
    best: Option<(Vec<usize>, S)>,
    nodes: u64,
    max_nodes: u64,
}

impl<'a, S: Scalar> Search<'a, S> {
    fn run(&mut self, depth: usize, cost: S) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Err(Error::CapExceeded(format!("product search exceeded {} nodes", self.max_nodes)));
        }
        if depth == self.groups.len() {
            if self.best.as_ref().is_none_or(|(_, b)| cost < *b) {
                self.best = Some((self.picks.clone(), cost));
            }
            return Ok(());
        }
        for i in 0..self.groups[depth].len() {
            let mut next = cost.add_ref(&self.groups[depth][i].delta);
            for &e in &self.groups[depth][i].edges {
                if self.usage[e] == 0 {
                    next = next.add_ref(&self.sigma[e]);
                }
            }
            let bound = next.add_ref(&self.suffix_delta[depth + 1]);
            if self.best.as_ref().is_some_and(|(_, b)| bound >= *b) {
                continue;
            }
            for k in 0..self.groups[depth][i].edges.len() {
                let e = self.groups[depth][i].edges[k];
                self.usage[e] += 1;
            }
            self.picks.push(self.groups[depth][i].id);
            let res = self.run(depth + 1, next);
            self.picks.pop();
            for k in 0..self.groups[depth][i].edges.len() {
                let e = self.groups[depth][i].edges[k];
                self.usage[e] -= 1;
            }
            res?;
        }
        Ok(())
    }
}

/// Minimum of σ(union) + Σ δ-charges over one choice per group.
/// Returns the chosen ids in the original group order.
fn min_union_cost<S: Scalar>(
    sigma: &[S],
    groups: Vec<Vec<Choice<S>>>,
    incumbent: Option<S>,
    max_nodes: u64,
) -> Result<Option<(Vec<usize>, S)>> {
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by_key(|&g| groups[g].len());
    let mut sorted: Vec<Vec<Choice<S>>> = Vec::with_capacity(groups.len());
    let mut slots: Vec<Option<Vec<Choice<S>>>> = groups.into_iter().map(Some).collect();
    for &g in &order {
        sorted.push(slots[g].take().expect("each group once"));
    }
    if sorted.iter().any(|g| g.is_empty()) {
        return Ok(None);
    }
    let mut suffix_delta = vec![S::zero(); sorted.len() + 1];
    for i in (0..sorted.len()).rev() {
        let m = sorted[i].iter().map(|c| c.delta.clone()).fold(None, |acc: Option<S>, d| match acc {
            Some(a) if a <= d => Some(a),
            _ => Some(d),
        });
        suffix_delta[i] = suffix_delta[i + 1].add_ref(&m.expect("non-empty group"));
    }
    let mut search = Search {
        sigma,
        groups: sorted,
        suffix_delta,
        usage: vec![0; sigma.len()],
        picks: Vec::new(),
        best: incumbent.map(|c| (Vec::new(), c)),
        nodes: 0,
        max_nodes,
    };
    search.run(0, S::zero())?;
    match search.best {
        Some((picks, cost)) if picks.len() == order.len() => {
            let mut ids = vec![0; order.len()];
            for (slot, &g) in order.iter().enumerate() {
                ids[g] = picks[slot];
            }
            Ok(Some((ids, cost)))
        }
        _ => Ok(None),
    }
}

/// Exact minimum-cost routing with one θ-feasible simple path per pair.
pub fn brute_force_optimum<S: Scalar>(inst: &Instance<S>, theta: &S, opts: &OracleOptions) -> Result<(RouteSolution<S>, S)> {
    let mut catalog = Vec::with_capacity(inst.demands.len());
    let mut groups = Vec::with_capacity(inst.demands.len());
    for p in 0..inst.demands.len() {
        let paths = enumerate_feasible_paths(inst, p, theta, opts.max_paths)?;
        if paths.is_empty() {
            return Err(Error::Infeasible(format!("pair {p} has no θ-feasible path")));
        }
        let dem = inst.demand_scalar(p);
        let choices = paths.iter().enumerate().map(|(i, w)| make_choice(inst, i, w, &dem)).collect();
        groups.push(prune_dominated(choices));
        catalog.push(paths);
    }
    let sigma: Vec<S> = inst.edges.iter().map(|e| e.sigma.clone()).collect();
    let (ids, cost) = min_union_cost(&sigma, groups, None, opts.max_nodes)?.unwrap_or((Vec::new(), S::zero()));
    let mut sol = RouteSolution::new(theta.clone());
    for (p, id) in ids.into_iter().enumerate() {
        sol.routes.insert(p, catalog[p][id].clone());
    }
    Ok((sol, cost))
}

#[derive(Clone, Debug, PartialEq)]
pub struct JunctionOptimum<S> {
    pub root: usize,
    /// Pair → (s⇝r path, r⇝t path).
    pub routes: BTreeMap<usize, (Vec<usize>, Vec<usize>)>,
    pub cost: S,
    pub density: S,
}

/// Exact minimum density over roots, pair subsets and per-pair s⇝r⇝t choices.
///
/// The in- and out-paths are not required to form arborescences, so the value
/// is a lower bound on the optimum over proper junction trees.
pub fn brute_force_min_density_junction_tree<S: Scalar>(
    inst: &Instance<S>,
    theta: &S,
    opts: &OracleOptions,
) -> Result<Option<JunctionOptimum<S>>> {
    let arcs = inst.arcs();
    let k = inst.demands.len();
    if k > 16 {
        return Err(Error::CapExceeded("junction oracle supports at most 16 pairs".into()));
    }
    let sigma: Vec<S> = inst.edges.iter().map(|e| e.sigma.clone()).collect();
    let mut best: Option<JunctionOptimum<S>> = None;
    for r in 0..inst.n {
        let mut options: Vec<Vec<(Vec<usize>, Vec<usize>)>> = Vec::with_capacity(k);
        let mut groups: Vec<Vec<Choice<S>>> = Vec::with_capacity(k);
        for p in 0..k {
            let d = &inst.demands[p];
            let bound = inst.relaxed_bound(p, theta);
            let ins = simple_paths(inst.n, &arcs, d.source, r, opts.max_paths)?;
            let outs = simple_paths(inst.n, &arcs, r, d.sink, opts.max_paths)?;
            let out_len: Vec<S> = outs.iter().map(|o| inst.path_length(o)).collect();
            let dem = inst.demand_scalar(p);
            let mut opts_p = Vec::new();
            let mut choices = Vec::new();
            for a in &ins {
                let la = inst.path_length(a);
                for (b, lb) in outs.iter().zip(&out_len) {
                    if la.add_ref(lb) <= bound {
                        let walk: Vec<usize> = a.iter().chain(b).copied().collect();
                        choices.push(make_choice(inst, opts_p.len(), &walk, &dem));
                        opts_p.push((a.clone(), b.clone()));
                        if opts_p.len() > opts.max_paths {
                            return Err(Error::CapExceeded("too many junction route options".into()));
                        }
                    }
                }
            }
            options.push(opts_p);
            groups.push(prune_dominated(choices));
        }
        for mask in 1u32..(1u32 << k) {
            let members: Vec<usize> = (0..k).filter(|&p| mask & (1 << p) != 0).collect();
            if members.iter().any(|&p| groups[p].is_empty()) {
                continue;
            }
            let count = S::int(members.len() as i64);
            let incumbent = best.as_ref().map(|b| b.density.mul_ref(&count));
            let sub: Vec<Vec<Choice<S>>> = members.iter().map(|&p| groups[p].clone()).collect();
            if let Some((ids, cost)) = min_union_cost(&sigma, sub, incumbent, opts.max_nodes)? {
                let density = cost.div_ref(&count);
                if best.as_ref().is_none_or(|b| density < b.density) {
                    let routes = members.iter().zip(&ids).map(|(&p, &id)| (p, options[p][id].clone())).collect();
                    best = Some(JunctionOptimum { root: r, routes, cost, density });
                }
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{junction_cost, solution_cost};
    use crate::{rat, ExactInstance, Rational};

    fn r(x: i64) -> Rational {
        rat(x, 1)
    }

    #[test]
    fn triangle_paths() {
        let mut inst = ExactInstance::new(3);
        inst.add_edge(0, 1, r(1), r(1), r(0));
        inst.add_edge(1, 2, r(1), r(1), r(0));
        inst.add_edge(0, 2, r(5), r(1), r(0));
        inst.add_demand(0, 2, 1, r(3));
        let feasible = enumerate_feasible_paths(&inst, 0, &r(0), 100).unwrap();
        assert_eq!(feasible, vec![vec![0, 1]]);
        let loose = enumerate_feasible_paths(&inst, 0, &r(1), 100).unwrap();
        assert_eq!(loose.len(), 2);
    }

    #[test]
    fn no_path() {
        let mut inst = ExactInstance::new(3);
        inst.add_edge(0, 1, r(1), r(1), r(0));
        inst.add_demand(0, 2, 1, r(3));
        assert!(enumerate_feasible_paths(&inst, 0, &r(0), 100).unwrap().is_empty());
    }

    #[test]
    fn shared_backbone_wins() {
        // 0,1 sources; 2→3 backbone; 4 sink for both.
        let mut inst = ExactInstance::new(5);
        inst.add_edge(0, 2, r(1), r(1), r(0));
        inst.add_edge(1, 2, r(1), r(1), r(0));
        inst.add_edge(2, 4, r(1), r(10), r(0));
        inst.add_edge(0, 4, r(2), r(8), r(0));
        inst.add_edge(1, 4, r(2), r(8), r(0));
        inst.add_demand(0, 4, 1, r(2));
        inst.add_demand(1, 4, 1, r(2));
        let (sol, cost) = brute_force_optimum(&inst, &r(0), &OracleOptions::default()).unwrap();
        assert_eq!(cost, r(12));
        assert_eq!(solution_cost(&inst, &sol).unwrap(), cost);
        assert_eq!(sol.routes[&0], vec![0, 2]);
    }

    #[test]
    fn empty_demands_cost_nothing() {
        let inst = ExactInstance::new(2);
        let (sol, cost) = brute_force_optimum(&inst, &r(0), &OracleOptions::default()).unwrap();
        assert!(sol.routes.is_empty());
        assert_eq!(cost, r(0));
    }

    #[test]
    fn single_pair_junction_is_cheapest_route() {
        let mut inst = ExactInstance::new(3);
        inst.add_edge(0, 1, r(1), r(2), r(1));
        inst.add_edge(1, 2, r(1), r(2), r(1));
        inst.add_edge(0, 2, r(1), r(7), r(0));
        inst.add_demand(0, 2, 2, r(3));
        let best = brute_force_min_density_junction_tree(&inst, &r(0), &OracleOptions::default()).unwrap().unwrap();
        assert_eq!(best.cost, r(7));
        assert_eq!(junction_cost(&inst, &best.routes), best.cost);
    }
}

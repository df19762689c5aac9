//! Minimum-density Steiner label cover on the reduced tree.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::Rng;

use super::tuple::ReducedTree;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::simplex::{self, LinearProgram, LpOutcome, Relation, SimplexOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LcVertex {
    Up(usize),
    Down(usize),
    /// Index into the up tree's terminal list.
    Source(usize),
    /// Index into the down tree's terminal list.
    Sink(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LcArc<S> {
    pub tail: usize,
    pub head: usize,
    pub cost: S,
}

/// Label cover instance on a graph whose underlying undirected shape is a tree
/// rooted at vertex 0 (the up copy of r). Vertices are numbered so that every
/// parent precedes its children.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelCoverInstance<S> {
    pub arcs: Vec<LcArc<S>>,
    pub origin: Vec<LcVertex>,
    pub parent: Vec<Option<usize>>,
    pub parent_arc: Vec<Option<usize>>,
    /// Original pair id per slot.
    pub pairs: Vec<usize>,
    /// Per slot: the terminal vertices of S and of T.
    pub sources: Vec<Vec<usize>>,
    pub sinks: Vec<Vec<usize>>,
    /// Layer label of each terminal vertex (0 elsewhere).
    pub label: Vec<i64>,
    pub caps: Vec<i64>,
}

impl<S: Scalar> LabelCoverInstance<S> {
    pub fn vertices(&self) -> usize {
        self.origin.len()
    }

    /// (s, t) ∈ R(S, T) for the slot.
    pub fn related(&self, slot: usize, s: usize, t: usize) -> bool {
        self.label[s] + self.label[t] <= self.caps[slot]
    }

    /// Arcs on the unique path from `v` to vertex 0.
    pub fn path_to_root(&self, mut v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        while let Some(a) = self.parent_arc[v] {
            out.push(a);
            v = self.parent[v].expect("arc implies parent");
        }
        out
    }

    pub fn column_arcs(&self, s: usize, t: usize) -> BTreeSet<usize> {
        self.path_to_root(s).into_iter().chain(self.path_to_root(t)).collect()
    }

    pub fn cost_of(&self, arcs: &BTreeSet<usize>) -> S {
        arcs.iter().fold(S::zero(), |acc, &a| acc.add_ref(&self.arcs[a].cost))
    }

    /// Slots connected by `arcs` with their cheapest related terminal pair.
    pub fn satisfied(&self, arcs: &BTreeSet<usize>) -> BTreeMap<usize, (usize, usize)> {
        let w: Vec<Option<S>> = (0..self.arcs.len()).map(|a| arcs.contains(&a).then(|| self.arcs[a].cost.clone())).collect();
        let dist = self.root_distances(&w);
        (0..self.pairs.len()).filter_map(|slot| self.best_column(&dist, slot).map(|(s, t, _)| (slot, (s, t)))).collect()
    }

    fn root_distances<T: Scalar>(&self, w: &[Option<T>]) -> Vec<Option<T>> {
        let mut dist: Vec<Option<T>> = vec![None; self.vertices()];
        dist[0] = Some(T::zero());
        for v in 1..self.vertices() {
            let (p, a) = (self.parent[v].expect("non-root"), self.parent_arc[v].expect("non-root"));
            dist[v] = match (&dist[p], &w[a]) {
                (Some(d), Some(c)) => Some(d.add_ref(c)),
                _ => None,
            };
        }
        dist
    }

    /// Cheapest related (s, t) for the slot under per-vertex root distances.
    fn best_column<T: Scalar>(&self, dist: &[Option<T>], slot: usize) -> Option<(usize, usize, T)> {
        let mut sinks: Vec<(i64, usize)> = self.sinks[slot].iter().filter(|&&t| dist[t].is_some()).map(|&t| (self.label[t], t)).collect();
        sinks.sort_unstable();
        let mut prefix: Vec<usize> = Vec::with_capacity(sinks.len());
        for &(_, t) in &sinks {
            let keep = match prefix.last() {
                Some(&b) if dist[b] <= dist[t] => b,
                _ => t,
            };
            prefix.push(keep);
        }
        let mut best: Option<(usize, usize, T)> = None;
        for &s in &self.sources[slot] {
            let Some(ds) = &dist[s] else { continue };
            let limit = self.caps[slot] - self.label[s];
            let count = sinks.partition_point(|&(l, _)| l <= limit);
            if count == 0 {
                continue;
            }
            let t = prefix[count - 1];
            let total = ds.add_ref(dist[t].as_ref().expect("filtered"));
            if best.as_ref().is_none_or(|b| total < b.2) {
                best = Some((s, t, total));
            }
        }
        best
    }
}

pub fn to_label_cover<S: Scalar>(tree: &ReducedTree<S>) -> LabelCoverInstance<S> {
    let u = tree.up.nodes.len();
    let d = tree.down.nodes.len();
    let mut lc = LabelCoverInstance {
        arcs: Vec::new(),
        origin: Vec::new(),
        parent: Vec::new(),
        parent_arc: Vec::new(),
        pairs: tree.caps.keys().copied().collect(),
        sources: Vec::new(),
        sinks: Vec::new(),
        label: Vec::new(),
        caps: tree.caps.values().copied().collect(),
    };
    let slot: HashMap<usize, usize> = lc.pairs.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    lc.sources = vec![Vec::new(); lc.pairs.len()];
    lc.sinks = vec![Vec::new(); lc.pairs.len()];
    let push = |lc: &mut LabelCoverInstance<S>, origin: LcVertex, link: Option<(usize, usize, usize, S)>, label: i64| {
        let v = lc.origin.len();
        lc.origin.push(origin);
        lc.label.push(label);
        match link {
            Some((parent, tail, head, cost)) => {
                lc.parent.push(Some(parent));
                lc.parent_arc.push(Some(lc.arcs.len()));
                let (tail, head) = if tail == usize::MAX { (v, head) } else { (tail, v) };
                lc.arcs.push(LcArc { tail, head, cost });
            }
            None => {
                lc.parent.push(None);
                lc.parent_arc.push(None);
            }
        }
        v
    };
    // Up nodes point toward the root: arc child → parent.
    for (i, node) in tree.up.nodes.iter().enumerate() {
        let link = node.parent.map(|p| (p, usize::MAX, p, node.weight.clone()));
        push(&mut lc, LcVertex::Up(i), link, 0);
    }
    for (j, node) in tree.down.nodes.iter().enumerate() {
        let parent = match node.parent {
            Some(p) => u + p,
            None => 0,
        };
        push(&mut lc, LcVertex::Down(j), Some((parent, parent, 0, node.weight.clone())), 0);
    }
    for (i, t) in tree.up.terminals.iter().enumerate() {
        let v = push(&mut lc, LcVertex::Source(i), Some((t.node, usize::MAX, t.node, t.cost.clone())), t.label);
        lc.sources[slot[&t.pair]].push(v);
    }
    for (i, t) in tree.down.terminals.iter().enumerate() {
        let v = push(&mut lc, LcVertex::Sink(i), Some((u + t.node, u + t.node, 0, t.cost.clone())), t.label);
        lc.sinks[slot[&t.pair]].push(v);
    }
    debug_assert_eq!(lc.origin.len(), u + d + tree.up.terminals.len() + tree.down.terminals.len());
    lc
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabelCoverOptions {
    /// Rounding trials; `None` uses ⌈log₂ N⌉² for N tree vertices.
    pub trials: Option<usize>,
    pub max_trials: usize,
    pub lp_iterations: usize,
    /// Column generation stops after this many rounds without objective progress.
    pub lp_stall: usize,
    pub simplex: SimplexOptions,
}

impl Default for LabelCoverOptions {
    fn default() -> Self {
        LabelCoverOptions { trials: None, max_trials: 256, lp_iterations: 60, lp_stall: 6, simplex: SimplexOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabelCoverSolution<S> {
    pub arcs: BTreeSet<usize>,
    /// Slot → chosen related (source terminal, sink terminal).
    pub chosen: BTreeMap<usize, (usize, usize)>,
    pub cost: S,
    pub density: S,
    /// Optimal value of the density LP over the generated columns.
    pub lp_bound: Option<f64>,
}

impl<S: Scalar> LabelCoverSolution<S> {
    fn from_choice(lc: &LabelCoverInstance<S>, chosen: BTreeMap<usize, (usize, usize)>) -> Option<Self> {
        if chosen.is_empty() {
            return None;
        }
        let arcs: BTreeSet<usize> = chosen.values().flat_map(|&(s, t)| lc.column_arcs(s, t)).collect();
        let cost = lc.cost_of(&arcs);
        let density = cost.div_ref(&S::int(chosen.len() as i64));
        Some(LabelCoverSolution { arcs, chosen, cost, density, lp_bound: None })
    }

    fn better_than(&self, other: &Self) -> bool {
        self.density < other.density || (self.density == other.density && self.chosen.len() > other.chosen.len())
    }
}

/// Adds the slot with the cheapest marginal column until every satisfiable
/// slot is in; returns the best-density prefix.
fn marginal_greedy<S: Scalar>(lc: &LabelCoverInstance<S>) -> Option<LabelCoverSolution<S>> {
    let mut bought: HashSet<usize> = HashSet::new();
    let mut chosen = BTreeMap::new();
    let mut best: Option<LabelCoverSolution<S>> = None;
    loop {
        let w: Vec<Option<S>> =
            (0..lc.arcs.len()).map(|a| Some(if bought.contains(&a) { S::zero() } else { lc.arcs[a].cost.clone() })).collect();
        let dist = lc.root_distances(&w);
        let mut pick: Option<(usize, usize, usize, S)> = None;
        for slot in (0..lc.pairs.len()).filter(|s| !chosen.contains_key(s)) {
            if let Some((s, t, c)) = lc.best_column(&dist, slot) {
                if pick.as_ref().is_none_or(|p| c < p.3) {
                    pick = Some((slot, s, t, c));
                }
            }
        }
        let Some((slot, s, t, _)) = pick else { break };
        bought.extend(lc.column_arcs(s, t));
        chosen.insert(slot, (s, t));
        let cand = LabelCoverSolution::from_choice(lc, chosen.clone()).expect("non-empty");
        if best.as_ref().is_none_or(|b| cand.better_than(b)) {
            best = Some(cand);
        }
    }
    best
}

type Column = (usize, usize, usize);

/// Density LP: min Σ c_a x_a with Σ z = 1, Σ_col f ≥ z per slot and
/// x_a ≥ Σ f over the slot's columns through a, by column generation.
fn density_lp<S: Scalar>(lc: &LabelCoverInstance<S>, opts: &LabelCoverOptions) -> Result<Option<(Vec<f64>, f64)>> {
    let costs: Vec<Option<f64>> = lc.arcs.iter().map(|a| Some(a.cost.approx())).collect();
    let dist = lc.root_distances(&costs);
    let mut columns: Vec<Column> = Vec::new();
    let mut seen: HashSet<Column> = HashSet::new();
    for slot in 0..lc.pairs.len() {
        if let Some((s, t, _)) = lc.best_column(&dist, slot) {
            columns.push((slot, s, t));
            seen.insert((slot, s, t));
        }
    }
    if columns.is_empty() {
        return Ok(None);
    }
    let mut last: Option<(Vec<f64>, f64)> = None;
    let (mut best_obj, mut stalled) = (f64::INFINITY, 0);
    for _ in 0..opts.lp_iterations {
        let mut lp = LinearProgram::new(0);
        let mut x_var: BTreeMap<usize, usize> = BTreeMap::new();
        let col_arcs: Vec<BTreeSet<usize>> = columns.iter().map(|&(_, s, t)| lc.column_arcs(s, t)).collect();
        for arcs in &col_arcs {
            for &a in arcs {
                x_var.entry(a).or_insert(usize::MAX);
            }
        }
        for (a, v) in x_var.iter_mut() {
            *v = lp.add_var(lc.arcs[*a].cost.approx());
        }
        let slots: BTreeSet<usize> = columns.iter().map(|c| c.0).collect();
        let z_var: BTreeMap<usize, usize> = slots.iter().map(|&s| (s, lp.add_var(0.0))).collect();
        let f_var: Vec<usize> = columns.iter().map(|_| lp.add_var(0.0)).collect();
        lp.add(z_var.values().map(|&v| (v, 1.0)).collect(), Relation::Ge, 1.0);
        let mut cap: BTreeMap<(usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
        for (c, arcs) in col_arcs.iter().enumerate() {
            for &a in arcs {
                cap.entry((columns[c].0, a)).or_insert_with(|| vec![(x_var[&a], 1.0)]).push((f_var[c], -1.0));
            }
        }
        let cap_rows: HashMap<(usize, usize), usize> = cap.into_iter().map(|(key, row)| (key, lp.add(row, Relation::Ge, 0.0))).collect();
        let mut flow_rows = BTreeMap::new();
        for (&slot, &z) in &z_var {
            let mut row: Vec<(usize, f64)> = (0..columns.len()).filter(|&c| columns[c].0 == slot).map(|c| (f_var[c], 1.0)).collect();
            row.push((z, -1.0));
            flow_rows.insert(slot, lp.add(row, Relation::Ge, 0.0));
        }
        let solved = simplex::solve(&lp, &opts.simplex)?;
        let opt = match solved {
            LpOutcome::Optimal(o) => o,
            LpOutcome::Infeasible { .. } => return Err(Error::Internal("density LP infeasible".into())),
            LpOutcome::Unbounded => return Err(Error::Internal("density LP unbounded".into())),
        };
        let mut x = vec![0.0; lc.arcs.len()];
        for (&a, &v) in &x_var {
            x[a] = opt.x[v].max(0.0);
        }
        last = Some((x, opt.objective));
        if opt.objective < best_obj - 1e-7 * (1.0 + best_obj.abs().min(1e12)) {
            best_obj = opt.objective;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= opts.lp_stall {
                break;
            }
        }
        let mut added = false;
        for slot in 0..lc.pairs.len() {
            let beta = flow_rows.get(&slot).map_or(0.0, |&r| opt.duals[r].max(0.0));
            let w: Vec<Option<f64>> =
                (0..lc.arcs.len()).map(|a| Some(cap_rows.get(&(slot, a)).map_or(0.0, |&r| opt.duals[r].max(0.0)))).collect();
            let dist = lc.root_distances(&w);
            if let Some((s, t, v)) = lc.best_column(&dist, slot) {
                if v - beta < -1e-9 * (1.0 + opt.objective.abs()) && seen.insert((slot, s, t)) {
                    columns.push((slot, s, t));
                    added = true;
                }
            }
        }
        if !added {
            break;
        }
    }
    Ok(last)
}

/// Conditional rounding down the tree: an arc survives with probability
/// min(1, λx_a)/min(1, λx_parent) given that its parent arc survived.
fn round_tree<S: Scalar, R: Rng>(lc: &LabelCoverInstance<S>, x: &[f64], lambda: f64, rng: &mut R) -> BTreeSet<usize> {
    let mut kept = vec![false; lc.vertices()];
    kept[0] = true;
    let mut arcs = BTreeSet::new();
    for v in 1..lc.vertices() {
        let p = lc.parent[v].expect("non-root");
        if !kept[p] {
            continue;
        }
        let a = lc.parent_arc[v].expect("non-root");
        let mine = (lambda * x[a]).min(1.0);
        let above = lc.parent_arc[p].map_or(1.0, |b| (lambda * x[b]).min(1.0));
        let prob = if above <= 0.0 { 0.0 } else { (mine / above).min(1.0) };
        if prob >= 1.0 || (prob > 0.0 && rng.gen::<f64>() < prob) {
            kept[v] = true;
            arcs.insert(a);
        }
    }
    arcs
}

/// Best density over the marginal greedy and rounded LP trials.
/// Returns `None` when no slot has a related terminal pair.
pub fn solve_label_cover<S: Scalar, R: Rng>(
    lc: &LabelCoverInstance<S>,
    rng: &mut R,
    opts: &LabelCoverOptions,
) -> Result<Option<LabelCoverSolution<S>>> {
    let Some(mut best) = marginal_greedy(lc) else { return Ok(None) };
    let Some((x, bound)) = density_lp(lc, opts)? else { return Ok(Some(best)) };
    let log = (lc.vertices().max(2) as f64).log2().ceil() as usize;
    let trials = opts.trials.unwrap_or(log * log).min(opts.max_trials);
    let scales = (lc.pairs.len().max(1) as f64).log2().ceil() as usize + 2;
    for trial in 0..trials {
        let lambda = (1u64 << (trial % scales)) as f64;
        let arcs = round_tree(lc, &x, lambda, rng);
        let chosen = lc.satisfied(&arcs);
        if let Some(cand) = LabelCoverSolution::from_choice(lc, chosen) {
            if cand.better_than(&best) {
                best = cand;
            }
        }
    }
    best.lp_bound = Some(bound);
    Ok(Some(best))
}

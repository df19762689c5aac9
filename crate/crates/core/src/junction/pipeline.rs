use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;

use super::labelcover::{solve_label_cover, to_label_cover, LabelCoverOptions, LabelCoverSolution, LcVertex};
use super::leveled::{height_reduce, LeveledGraph, ReductionOptions};
use super::scaled::{scale_graph, scale_graph_coarse, ScaledGraph};
use super::tuple::{build_tuple_trees, ReducedTree};
use crate::error::{Error, Result};
use crate::instance::{junction_cost, simplify_walk, Instance};
use crate::rng::Seed;
use crate::scalar::Scalar;

/// Pair → (s⇝r path, r⇝t path).
pub type JunctionRoutes = BTreeMap<usize, (Vec<usize>, Vec<usize>)>;

#[derive(Clone, Debug, PartialEq)]
pub struct JunctionOptions {
    pub h: usize,
    pub reduction: ReductionOptions,
    pub label_cover: LabelCoverOptions,
    pub max_tree_nodes: usize,
    pub max_layers: i64,
    /// Restrict the search to these roots.
    pub roots: Option<Vec<usize>>,
    /// Scale by the common length lattice when it is at least as coarse as Δ.
    pub coarse: bool,
}

impl Default for JunctionOptions {
    fn default() -> Self {
        JunctionOptions {
            h: 2,
            reduction: ReductionOptions::default(),
            label_cover: LabelCoverOptions::default(),
            max_tree_nodes: 200_000,
            max_layers: 4096,
            roots: None,
            coarse: true,
        }
    }
}

/// h = max(2, ⌈1/ε⌉).
pub fn default_height(eps: f64) -> usize {
    if eps <= 0.0 || !eps.is_finite() {
        return 2;
    }
    ((1.0 / eps).ceil() as usize).max(2)
}

#[derive(Clone, Debug, PartialEq)]
pub struct JunctionTree<S> {
    pub root: usize,
    pub routes: JunctionRoutes,
    /// Junction-tree cost of `routes`.
    pub cost: S,
    pub density: S,
    /// Cost of the label cover solution the routes were extracted from.
    pub tree_cost: S,
    pub lp_bound: Option<f64>,
}

/// Root-independent part of the pipeline.
pub struct JunctionContext<S> {
    pub theta: S,
    pub scaled: ScaledGraph<S>,
    pub leveled: LeveledGraph<S>,
}

pub fn prepare<S: Scalar>(inst: &Instance<S>, theta: &S, opts: &JunctionOptions) -> Result<JunctionContext<S>> {
    let scaled = if opts.coarse { scale_graph_coarse(inst, theta)? } else { scale_graph(inst, theta)? };
    if scaled.layer_count() > opts.max_layers {
        return Err(Error::CapExceeded(format!("{} layer labels exceed the cap of {}", scaled.layer_count(), opts.max_layers)));
    }
    let leveled = height_reduce(inst, &scaled, opts.h, &opts.reduction)?;
    Ok(JunctionContext { theta: theta.clone(), scaled, leveled })
}

/// Paths in G for every slot the label cover solution satisfies.
pub fn extract_paths<S: Scalar>(
    inst: &Instance<S>,
    leveled: &LeveledGraph<S>,
    tree: &ReducedTree<S>,
    lc: &super::labelcover::LabelCoverInstance<S>,
    sol: &LabelCoverSolution<S>,
) -> Result<JunctionRoutes> {
    let arcs = inst.arcs();
    let mut routes = BTreeMap::new();
    for (&slot, &(s, t)) in &sol.chosen {
        let (LcVertex::Source(i), LcVertex::Sink(j)) = (lc.origin[s], lc.origin[t]) else {
            return Err(Error::Internal("label cover chose a non-terminal".into()));
        };
        let pair = lc.pairs[slot];
        let d = &inst.demands[pair];
        let into = simplify_walk(&arcs, d.source, &tree.in_walk(leveled, i));
        let out = simplify_walk(&arcs, tree.root, &tree.out_walk(leveled, j));
        if !inst.is_walk(d.source, tree.root, &into) || !inst.is_walk(tree.root, d.sink, &out) {
            return Err(Error::Internal(format!("broken reduction chain for pair {pair}")));
        }
        routes.insert(pair, (into, out));
    }
    Ok(routes)
}

fn lex_less<S: Scalar>(a: &(S, S), b: &(S, S)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Shortest-path tree inside `edges` under lexicographic keys. Toward the root
/// when `inward`, otherwise away from it. Returns the tree edge of each vertex.
fn spt<S: Scalar>(
    inst: &Instance<S>,
    root: usize,
    edges: &BTreeSet<usize>,
    inward: bool,
    key: &dyn Fn(usize) -> (S, S),
) -> Vec<Option<usize>> {
    let mut dist: Vec<Option<(S, S)>> = vec![None; inst.n];
    let mut link = vec![None; inst.n];
    dist[root] = Some((S::zero(), S::zero()));
    for _ in 0..inst.n {
        let mut changed = false;
        for &e in edges {
            let (near, far) = if inward { (inst.edges[e].head, inst.edges[e].tail) } else { (inst.edges[e].tail, inst.edges[e].head) };
            let Some(d) = &dist[near] else { continue };
            let k = key(e);
            let cand = (d.0.add_ref(&k.0), d.1.add_ref(&k.1));
            if far != root && dist[far].as_ref().is_none_or(|cur| lex_less(&cand, cur)) {
                dist[far] = Some(cand);
                link[far] = Some(e);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    link
}

fn follow_in<S: Scalar>(inst: &Instance<S>, root: usize, link: &[Option<usize>], from: usize) -> Option<Vec<usize>> {
    let mut path = Vec::new();
    let mut at = from;
    while at != root {
        let e = link[at]?;
        path.push(e);
        at = inst.edges[e].head;
        if path.len() > inst.n {
            return None;
        }
    }
    Some(path)
}

fn follow_out<S: Scalar>(inst: &Instance<S>, root: usize, link: &[Option<usize>], to: usize) -> Option<Vec<usize>> {
    let mut path = Vec::new();
    let mut at = to;
    while at != root {
        let e = link[at]?;
        path.push(e);
        at = inst.edges[e].tail;
        if path.len() > inst.n {
            return None;
        }
    }
    path.reverse();
    Some(path)
}

/// Each vertex leaves through at most one in-path edge and is entered through
/// at most one out-path edge.
pub fn is_arborescence<S: Scalar>(inst: &Instance<S>, routes: &JunctionRoutes) -> bool {
    let mut leave: HashMap<usize, usize> = HashMap::new();
    let mut enter: HashMap<usize, usize> = HashMap::new();
    for (into, out) in routes.values() {
        for &e in into {
            if *leave.entry(inst.edges[e].tail).or_insert(e) != e {
                return false;
            }
        }
        for &e in out {
            if *enter.entry(inst.edges[e].head).or_insert(e) != e {
                return false;
            }
        }
    }
    true
}

/// Rewrites the routes onto one in-arborescence and one out-arborescence inside
/// their union, choosing the cheapest θ-feasible combination of shortest-path
/// trees under (δ, length) and (length, δ) keys.
pub fn normalize_arborescence<S: Scalar>(inst: &Instance<S>, root: usize, routes: &JunctionRoutes, theta: &S) -> JunctionRoutes {
    let in_edges: BTreeSet<usize> = routes.values().flat_map(|r| r.0.iter().copied()).collect();
    let out_edges: BTreeSet<usize> = routes.values().flat_map(|r| r.1.iter().copied()).collect();
    let by_delta = |e: usize| (inst.edges[e].delta.clone(), inst.edges[e].length.clone());
    let by_length = |e: usize| (inst.edges[e].length.clone(), inst.edges[e].delta.clone());
    let keys: [&dyn Fn(usize) -> (S, S); 2] = [&by_delta, &by_length];
    let mut best: Option<(S, JunctionRoutes)> = None;
    if is_arborescence(inst, routes) {
        best = Some((junction_cost(inst, routes), routes.clone()));
    }
    for ki in keys {
        let in_link = spt(inst, root, &in_edges, true, ki);
        for ko in keys {
            let out_link = spt(inst, root, &out_edges, false, ko);
            let mut cand = BTreeMap::new();
            let mut ok = true;
            for &pair in routes.keys() {
                let d = &inst.demands[pair];
                match (follow_in(inst, root, &in_link, d.source), follow_out(inst, root, &out_link, d.sink)) {
                    (Some(a), Some(b)) if inst.path_length(&a).add_ref(&inst.path_length(&b)) <= inst.relaxed_bound(pair, theta) => {
                        cand.insert(pair, (a, b));
                    }
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                let c = junction_cost(inst, &cand);
                if best.as_ref().is_none_or(|b| c < b.0) {
                    best = Some((c, cand));
                }
            }
        }
    }
    best.map(|b| b.1).unwrap_or_else(|| routes.clone())
}

/// Structural and feasibility problems of a θ-relaxed junction tree.
pub fn check_junction_tree<S: Scalar>(inst: &Instance<S>, theta: &S, root: usize, routes: &JunctionRoutes) -> Vec<String> {
    let mut bad = Vec::new();
    for (&pair, (into, out)) in routes {
        let Some(d) = inst.demands.get(pair) else {
            bad.push(format!("pair {pair} does not exist"));
            continue;
        };
        if !inst.is_walk(d.source, root, into) {
            bad.push(format!("pair {pair}: in-path does not lead from {} to {root}", d.source));
        }
        if !inst.is_walk(root, d.sink, out) {
            bad.push(format!("pair {pair}: out-path does not lead from {root} to {}", d.sink));
        }
        let len = inst.path_length(into).add_ref(&inst.path_length(out));
        let bound = inst.relaxed_bound(pair, theta);
        if len > bound {
            bad.push(format!("pair {pair}: length {len} exceeds {bound}"));
        }
    }
    if !is_arborescence(inst, routes) {
        bad.push("routes do not form an in- and out-arborescence".into());
    }
    bad
}

/// Full pipeline at one root. `Ok(None)` when no pair is resolvable there.
pub fn junction_at_root<S: Scalar>(
    inst: &Instance<S>,
    ctx: &JunctionContext<S>,
    root: usize,
    pairs: &[usize],
    seed: Seed,
    opts: &JunctionOptions,
) -> Result<Option<JunctionTree<S>>> {
    let tree = build_tuple_trees(inst, &ctx.scaled, &ctx.leveled, root, pairs, opts.max_tree_nodes)?;
    let lc = to_label_cover(&tree);
    let mut rng = seed.child(&format!("root-{root}")).stream("label-cover");
    let Some(sol) = solve_label_cover(&lc, &mut rng, &opts.label_cover)? else { return Ok(None) };
    let raw = extract_paths(inst, &ctx.leveled, &tree, &lc, &sol)?;
    let routes = normalize_arborescence(inst, root, &raw, &ctx.theta);
    let cost = junction_cost(inst, &routes);
    let density = cost.div_ref(&S::int(routes.len() as i64));
    Ok(Some(JunctionTree { root, routes, cost, density, tree_cost: sol.cost, lp_bound: sol.lp_bound }))
}

/// Minimum density over all roots (or `opts.roots`); roots whose pipeline
/// exceeds a size cap are skipped.
pub fn min_density_junction_tree<S: Scalar>(
    inst: &Instance<S>,
    pairs: &[usize],
    theta: &S,
    seed: Seed,
    opts: &JunctionOptions,
) -> Result<JunctionTree<S>> {
    if pairs.is_empty() {
        return Err(Error::Invalid("no pairs to connect".into()));
    }
    let ctx = prepare(inst, theta, opts)?;
    min_density_with(inst, &ctx, pairs, seed, opts)
}

pub fn min_density_with<S: Scalar>(
    inst: &Instance<S>,
    ctx: &JunctionContext<S>,
    pairs: &[usize],
    seed: Seed,
    opts: &JunctionOptions,
) -> Result<JunctionTree<S>> {
    let roots: Vec<usize> = opts.roots.clone().unwrap_or_else(|| (0..inst.n).collect());
    if let Some(&r) = roots.iter().find(|&&r| r >= inst.n) {
        return Err(Error::Invalid(format!("root {r} is not a vertex")));
    }
    let results: Vec<Result<Option<JunctionTree<S>>>> =
        roots.par_iter().map(|&r| junction_at_root(inst, ctx, r, pairs, seed, opts)).collect();
    let mut best: Option<JunctionTree<S>> = None;
    for res in results {
        let tree = match res {
            Ok(Some(t)) => t,
            Ok(None) | Err(Error::CapExceeded(_)) => continue,
            Err(e) => return Err(e),
        };
        let better =
            best.as_ref().is_none_or(|b| tree.density < b.density || (tree.density == b.density && tree.routes.len() > b.routes.len()));
        if better {
            best = Some(tree);
        }
    }
    best.ok_or_else(|| Error::Infeasible("no pair is resolvable at any root".into()))
}

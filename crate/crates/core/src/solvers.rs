//! Top-level drivers: the n^{4/5} unit-demand algorithm, the greedy junction
//! tree loop for general and single-source instances, and the τ guess.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::{
    check_solution, is_theta_feasible, simplify_walk, solution_cost, split_demands, validate_instance, Instance, RouteSolution,
};
use crate::junction::{default_height, min_density_junction_tree, JunctionOptions};
use crate::lpflow::{self, LpFlowOptions, Thresholds};
use crate::rcsp::{self, DimSpec, PatternTable, RcspOptions, RcspQuery, ResourceGraph};
use crate::rng::Seed;
use crate::scalar::{ln, max_of, min_of, power, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    N45,
    K,
    SingleSource,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::N45 => "n45",
            Algorithm::K => "k",
            Algorithm::SingleSource => "single-source",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "n45" => Some(Algorithm::N45),
            "k" => Some(Algorithm::K),
            "single-source" => Some(Algorithm::SingleSource),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Thick,
    Junction,
    LpRound,
    Fallback,
}

impl Stage {
    pub fn tag(&self) -> &'static str {
        match self {
            Stage::Thick => "thick",
            Stage::Junction => "junction",
            Stage::LpRound => "lp-round",
            Stage::Fallback => "fallback-k",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        [Stage::Thick, Stage::Junction, Stage::LpRound, Stage::Fallback].into_iter().find(|s| s.tag() == text)
    }
}

/// One committed batch of routes.
#[derive(Clone, Debug, PartialEq)]
pub struct StageRecord<S> {
    pub stage: Stage,
    pub pairs: Vec<usize>,
    pub remaining_before: usize,
    /// Increase of the solution cost caused by this batch.
    pub cost: S,
    pub density: S,
    pub root: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageReport<S> {
    pub records: Vec<StageRecord<S>>,
    /// Accepted τ of every unit-demand part (one entry for unit demands).
    pub taus: Vec<S>,
    pub tau_attempts: usize,
}

impl<S: Scalar> StageReport<S> {
    pub fn resolved(&self) -> usize {
        self.records.iter().map(|r| r.pairs.len()).sum()
    }

    pub fn total_cost(&self) -> S {
        self.records.iter().fold(S::zero(), |a, r| a.add_ref(&r.cost))
    }

    pub fn uses(&self, stage: Stage) -> bool {
        self.records.iter().any(|r| r.stage == stage)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Branches {
    pub thick: bool,
    pub junction: bool,
    pub lp: bool,
}

impl Default for Branches {
    fn default() -> Self {
        Branches { thick: true, junction: true, lp: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig<S> {
    pub algorithm: Algorithm,
    pub theta: S,
    pub epsilon: S,
    /// Fixed τ; `None` runs the doubling search.
    pub tau: Option<S>,
    pub seed: Seed,
    /// Overrides the height derived from ε.
    pub height: Option<usize>,
    pub junction: JunctionOptions,
    pub lpflow: LpFlowOptions,
    pub rcsp: RcspOptions,
    pub max_doublings: usize,
    /// Accept a complete run at τ only when its cost is at most `slack·τ`.
    pub tau_slack: Option<f64>,
    /// Remaining-pair count at or below which the bad-pair loop hands over to
    /// the greedy; defaults to 4n^{6/5}.
    pub fallback_cutoff: Option<f64>,
    pub branches: Branches,
    pub thick_samples: Option<usize>,
}

impl<S: Scalar> SolverConfig<S> {
    pub fn new(algorithm: Algorithm, theta: S, epsilon: S, seed: Seed) -> Self {
        SolverConfig {
            algorithm,
            theta,
            epsilon,
            tau: None,
            seed,
            height: None,
            junction: JunctionOptions::default(),
            lpflow: LpFlowOptions::default(),
            rcsp: RcspOptions::default(),
            max_doublings: 40,
            tau_slack: Some(1.0),
            fallback_cutoff: None,
            branches: Branches::default(),
            thick_samples: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta <= S::zero() {
            return Err(Error::Invalid("θ must be positive".into()));
        }
        if self.epsilon <= S::zero() {
            return Err(Error::Invalid("ε must be positive".into()));
        }
        if self.tau.as_ref().is_some_and(|t| *t <= S::zero()) {
            return Err(Error::Invalid("τ must be positive".into()));
        }
        Ok(())
    }

    pub fn junction_options(&self) -> JunctionOptions {
        JunctionOptions { h: self.height.unwrap_or_else(|| default_height(self.epsilon.approx())), ..self.junction.clone() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOutcome<S> {
    pub solution: RouteSolution<S>,
    pub report: StageReport<S>,
}

struct Progress<S> {
    solution: RouteSolution<S>,
    bought: HashSet<usize>,
    remaining: BTreeSet<usize>,
    records: Vec<StageRecord<S>>,
    cost: S,
}

impl<S: Scalar> Progress<S> {
    fn new(pairs: impl IntoIterator<Item = usize>, theta: S) -> Self {
        Progress {
            solution: RouteSolution::new(theta),
            bought: HashSet::new(),
            remaining: pairs.into_iter().collect(),
            records: Vec::new(),
            cost: S::zero(),
        }
    }

    fn pending(&self) -> Vec<usize> {
        self.remaining.iter().copied().collect()
    }

    fn free_instance(&self, inst: &Instance<S>) -> Instance<S> {
        inst.with_free_edges(&self.bought)
    }

    fn extra_cost(&self, inst: &Instance<S>, routes: &BTreeMap<usize, Vec<usize>>) -> Result<S> {
        let mut sol = self.solution.clone();
        sol.routes.extend(routes.iter().map(|(&p, r)| (p, r.clone())));
        Ok(solution_cost(inst, &sol)?.sub_ref(&self.cost))
    }

    fn commit(&mut self, inst: &Instance<S>, stage: Stage, routes: BTreeMap<usize, Vec<usize>>, root: Option<usize>) -> Result<()> {
        if routes.is_empty() {
            return Err(Error::Internal(format!("{} stage resolved no pair", stage.tag())));
        }
        let remaining_before = self.remaining.len();
        let pairs: Vec<usize> = routes.keys().copied().collect();
        for (pair, route) in routes {
            if !self.remaining.remove(&pair) {
                return Err(Error::Internal(format!("pair {pair} resolved twice")));
            }
            self.bought.extend(route.iter().copied());
            self.solution.routes.insert(pair, route);
        }
        let total = solution_cost(inst, &self.solution)?;
        let cost = total.sub_ref(&self.cost);
        self.cost = total;
        let density = cost.div_ref(&S::int(pairs.len() as i64));
        self.records.push(StageRecord { stage, pairs, remaining_before, cost, density, root });
        Ok(())
    }
}

/// Concatenates each s⇝r and r⇝t path into a simple route.
fn joined_routes<S: Scalar>(inst: &Instance<S>, routes: &BTreeMap<usize, (Vec<usize>, Vec<usize>)>) -> BTreeMap<usize, Vec<usize>> {
    let arcs = inst.arcs();
    routes
        .iter()
        .map(|(&p, (a, b))| {
            let walk: Vec<usize> = a.iter().chain(b).copied().collect();
            (p, simplify_walk(&arcs, inst.demands[p].source, &walk))
        })
        .collect()
}

/// Greedy minimum-density junction trees until no pair remains.
fn greedy<S: Scalar>(
    inst: &Instance<S>,
    progress: &mut Progress<S>,
    theta: &S,
    roots: Option<Vec<usize>>,
    stage: Stage,
    seed: Seed,
    cfg: &SolverConfig<S>,
) -> Result<()> {
    let mut opts = cfg.junction_options();
    opts.roots = roots;
    let mut round = 0usize;
    while !progress.remaining.is_empty() {
        let free = progress.free_instance(inst);
        let pending = progress.pending();
        let tree = match min_density_junction_tree(&free, &pending, theta, seed.child(&format!("greedy-{round}")), &opts) {
            Ok(t) => t,
            Err(Error::Infeasible(why)) => {
                return Err(Error::Infeasible(format!("greedy round {round} resolved no pair; pending {pending:?}: {why}")))
            }
            Err(e) => return Err(e),
        };
        let routes = joined_routes(inst, &tree.routes);
        if let Some((&p, _)) = routes.iter().find(|(&p, r)| !is_theta_feasible(inst, p, r, theta)) {
            return Err(Error::Internal(format!("junction route of pair {p} violates its relaxed budget")));
        }
        progress.commit(inst, stage, routes, Some(tree.root))?;
        round += 1;
    }
    Ok(())
}

fn prepare_input<S: Scalar>(inst: &Instance<S>, cfg: &SolverConfig<S>) -> Result<()> {
    cfg.validate()?;
    validate_instance(inst).into_result()
}

/// Greedy over all roots.
pub fn solve_k<S: Scalar>(inst: &Instance<S>, cfg: &SolverConfig<S>) -> Result<SolveOutcome<S>> {
    prepare_input(inst, cfg)?;
    let mut progress = Progress::new(0..inst.demands.len(), cfg.theta.clone());
    greedy(inst, &mut progress, &cfg.theta, None, Stage::Fallback, cfg.seed.child("k"), cfg)?;
    check_solution(inst, &progress.solution)?;
    Ok(SolveOutcome { solution: progress.solution, report: StageReport { records: progress.records, taus: Vec::new(), tau_attempts: 0 } })
}

/// Greedy with the root fixed at the shared source.
pub fn solve_single_source<S: Scalar>(inst: &Instance<S>, cfg: &SolverConfig<S>) -> Result<SolveOutcome<S>> {
    prepare_input(inst, cfg)?;
    let sources: BTreeSet<usize> = inst.demands.iter().map(|d| d.source).collect();
    if sources.len() > 1 {
        return Err(Error::Invalid(format!("pairs have {} distinct sources", sources.len())));
    }
    let mut progress = Progress::new(0..inst.demands.len(), cfg.theta.clone());
    let roots = sources.into_iter().next().map(|s| vec![s]);
    greedy(inst, &mut progress, &cfg.theta, roots, Stage::Fallback, cfg.seed.child("single-source"), cfg)?;
    check_solution(inst, &progress.solution)?;
    Ok(SolveOutcome { solution: progress.solution, report: StageReport { records: progress.records, taus: Vec::new(), tau_attempts: 0 } })
}

pub fn solve<S: Scalar>(inst: &Instance<S>, cfg: &SolverConfig<S>) -> Result<SolveOutcome<S>> {
    match cfg.algorithm {
        Algorithm::N45 => solve_n45(inst, cfg),
        Algorithm::K => solve_k(inst, cfg),
        Algorithm::SingleSource => solve_single_source(inst, cfg),
    }
}

/// Largest θ for which θ-relaxed and strict feasibility coincide on an
/// instance with integral lengths, halved.
pub fn strict_theta<S: Scalar>(inst: &Instance<S>) -> S {
    let mut theta = S::one();
    for d in &inst.demands {
        if d.dist_budget.is_zero() {
            continue;
        }
        let floor = S::int(d.dist_budget.floor_i64().unwrap_or(0));
        let gap = floor.add_ref(&S::one()).sub_ref(&d.dist_budget);
        let t = gap.div_ref(&S::int(2).mul_ref(&d.dist_budget.abs()));
        theta = min_of(&theta, &t);
    }
    theta
}

/// Max over pairs of the cheapest strictly feasible single-pair route, priced
/// at σ + δ·Dem. Zero costs fall back to the smallest positive edge cost.
pub fn initial_tau<S: Scalar>(inst: &Instance<S>, opts: &RcspOptions) -> Result<S> {
    let cost: Vec<S> = inst.edges.iter().map(|e| e.sigma.add_ref(&e.delta)).collect();
    let mut tau = S::zero();
    for (p, d) in inst.demands.iter().enumerate() {
        let dem = inst.demand_scalar(p);
        let priced: Vec<S> = inst.edges.iter().map(|e| e.sigma.add_ref(&e.delta.mul_ref(&dem))).collect();
        let graph = ResourceGraph::new(inst.n, inst.arcs(), priced, vec![inst.lengths()]);
        let q =
            RcspQuery { graph: &graph, source: d.source, sink: d.sink, budgets: vec![d.dist_budget.clone()], tolerances: vec![S::one()] };
        let res = rcsp::solve_exact_integer(&q, opts).map_err(|e| match e {
            Error::Infeasible(_) => Error::Infeasible(format!("pair {p} has no strictly feasible route")),
            e => e,
        })?;
        tau = max_of(&tau, &res.cost);
    }
    if tau.is_zero() {
        tau = cost.iter().chain(inst.edges.iter().map(|e| &e.sigma)).filter(|c| !c.is_zero()).fold(S::one(), |a, c| min_of(&a, c));
    }
    Ok(tau)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TauOutcome<S> {
    pub tau: S,
    pub attempts: usize,
    pub solution: RouteSolution<S>,
    pub records: Vec<StageRecord<S>>,
}

type Attempt<S> = Result<(RouteSolution<S>, Vec<StageRecord<S>>)>;

/// τ = τ₀·2^i until a run resolves every pair (within `tau_slack·τ` when set).
pub fn guess_tau<S: Scalar>(
    inst: &Instance<S>,
    cfg: &SolverConfig<S>,
    mut attempt: impl FnMut(&S, Seed) -> Attempt<S>,
) -> Result<TauOutcome<S>> {
    if let Some(tau) = &cfg.tau {
        let (solution, records) = attempt(tau, cfg.seed.child("tau-0"))?;
        return Ok(TauOutcome { tau: tau.clone(), attempts: 1, solution, records });
    }
    let tau0 = initial_tau(inst, &cfg.rcsp)?;
    let mut tau = tau0;
    let mut last = None;
    for i in 0..=cfg.max_doublings {
        match attempt(&tau, cfg.seed.child(&format!("tau-{i}"))) {
            Ok((solution, records)) => {
                let cost = solution_cost(inst, &solution)?;
                let within = cfg.tau_slack.is_none_or(|s| cost <= tau.mul_ref(&S::from_float(s)));
                if solution.routes.len() == inst.demands.len() && within {
                    return Ok(TauOutcome { tau, attempts: i + 1, solution, records });
                }
            }
            Err(e @ (Error::Infeasible(_) | Error::CapExceeded(_))) => last = Some(e),
            Err(e) => return Err(e),
        }
        tau = tau.mul_ref(&S::int(2));
    }
    Err(Error::CapExceeded(format!(
        "τ doubling cap of {} reached{}",
        cfg.max_doublings,
        last.map(|e| format!("; last failure: {e}")).unwrap_or_default()
    )))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThickResult {
    pub samples: Vec<usize>,
    pub routes: BTreeMap<usize, Vec<usize>>,
}

/// Shortest s⇝u (`inward`) or u⇝t path with σ ≤ L₁ and δ ≤ (1+ζ)L₂, ζ = 1,
/// found by binary search on the length pattern.
fn shortest_cheap<S: Scalar>(table: &PatternTable<S>, v: usize, lens: (i64, i64), delta_pat: i64, l1: &S, n: usize) -> Option<Vec<usize>> {
    let ok = |len: i64| table.cost(v, &[len, delta_pat], n).is_some_and(|c| c <= *l1);
    let (lo, hi) = lens;
    if lo > hi || !ok(hi) {
        return None;
    }
    let range: Vec<i64> = (lo..=hi).collect();
    let first = range[range.partition_point(|&len| !ok(len))];
    table.walk(v, &[first, delta_pat], n)
}

/// Samples ⌈3β ln n⌉ vertices with replacement and joins shortest cheap
/// paths through them.
pub fn resolve_thick<S: Scalar>(
    inst: &Instance<S>,
    pairs: &[usize],
    th: &Thresholds<S>,
    seed: Seed,
    cfg: &SolverConfig<S>,
) -> Result<ThickResult> {
    let n = inst.n;
    if !inst.has_integral_lengths() {
        return Err(Error::Invalid("thick-pair resolution needs integral lengths".into()));
    }
    let beta: f64 = power(n, 0.6);
    let count = cfg.thick_samples.unwrap_or_else(|| (3.0 * beta * ln::<f64>(n)).ceil().max(1.0) as usize);
    let mut rng = seed.stream("sampling");
    let samples: Vec<usize> = (0..count).map(|_| rng.gen_range(0..n)).collect();
    if pairs.is_empty() || th.l2 <= S::zero() || th.l1 < S::zero() {
        return Ok(ThickResult { samples, routes: BTreeMap::new() });
    }
    let arcs = inst.arcs();
    let lengths = inst.lengths();
    let deltas: Vec<S> = inst.edges.iter().map(|e| e.delta.clone()).collect();
    let sigmas: Vec<S> = inst.edges.iter().map(|e| e.sigma.clone()).collect();
    let graph = ResourceGraph::new(n, arcs.clone(), sigmas, vec![lengths.clone(), deltas.clone()]);
    let reverse = graph.reversed();
    let n_i = n as i64;
    let min_len = inst.min_length().floor_i64().unwrap_or(0).min(0) * n_i;
    // A half longer than max Dis + N·(n−1) cannot be joined into a feasible route.
    let most_negative = -inst.min_length().floor_i64().unwrap_or(0).min(0);
    let max_dis = pairs.iter().filter_map(|&p| inst.demands[p].dist_budget.floor_i64()).max().unwrap_or(0);
    let max_len = (inst.max_length().ceil_i64().unwrap_or(0).max(0) * n_i).min(max_dis + most_negative * (n_i - 1));
    let dims = vec![DimSpec::lattice(&lengths, n, S::one(), &S::int(max_len))?, DimSpec::approximate(&deltas, n, &th.l2, &S::one())?];
    let delta_pat = dims[1].pattern_for(&th.l2.mul_ref(&S::int(2))).ok_or_else(|| Error::CapExceeded("δ pattern out of range".into()))?;
    let lens = (min_len.max(dims[0].lo), max_len.min(dims[0].hi));
    let sources: BTreeSet<usize> = pairs.iter().map(|&p| inst.demands[p].source).collect();
    let sinks: BTreeSet<usize> = pairs.iter().map(|&p| inst.demands[p].sink).collect();
    let distinct: Vec<usize> = samples.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    type Halves = (usize, HashMap<usize, Vec<usize>>, HashMap<usize, Vec<usize>>);
    let halves: Vec<Halves> = distinct
        .par_iter()
        .map(|&u| -> Result<Halves> {
            let into = PatternTable::build(&reverse, u, &dims, n, &cfg.rcsp)?;
            let out = PatternTable::build(&graph, u, &dims, n, &cfg.rcsp)?;
            let mut ins = HashMap::new();
            for &s in &sources {
                if let Some(mut w) = shortest_cheap(&into, s, lens, delta_pat, &th.l1, n) {
                    w.reverse();
                    ins.insert(s, w);
                }
            }
            let mut outs = HashMap::new();
            for &t in &sinks {
                if let Some(w) = shortest_cheap(&out, t, lens, delta_pat, &th.l1, n) {
                    outs.insert(t, w);
                }
            }
            Ok((u, ins, outs))
        })
        .collect::<Result<_>>()?;
    let sigma_cap = th.l1.mul_ref(&S::int(2));
    let delta_cap = th.l2.mul_ref(&S::int(4));
    let mut routes = BTreeMap::new();
    for &p in pairs {
        let d = &inst.demands[p];
        let mut best: Option<(S, Vec<usize>)> = None;
        for (_, ins, outs) in &halves {
            let (Some(a), Some(b)) = (ins.get(&d.source), outs.get(&d.sink)) else { continue };
            let walk: Vec<usize> = a.iter().chain(b).copied().collect();
            let route = simplify_walk(&arcs, d.source, &walk);
            let sigma = inst.path_sigma(&route);
            let delta = inst.path_delta(&route);
            if inst.path_length(&route) > d.dist_budget || sigma > sigma_cap || delta > delta_cap {
                continue;
            }
            let c = sigma.add_ref(&delta);
            if best.as_ref().is_none_or(|b| c < b.0) {
                best = Some((c, route));
            }
        }
        if let Some((_, route)) = best {
            routes.insert(p, route);
        }
    }
    Ok(ThickResult { samples, routes })
}

/// Solve, prune and round the thin-pair LP; `None` when it yields no route.
fn lp_stage<S: Scalar>(
    inst: &Instance<S>,
    pairs: &[usize],
    th: &Thresholds<S>,
    seed: Seed,
    cfg: &SolverConfig<S>,
) -> Result<Option<BTreeMap<usize, Vec<usize>>>> {
    let sol = match lpflow::solve_thin_lp(inst, pairs, th, &cfg.lpflow) {
        Ok((sol, _)) => sol,
        Err(Error::Infeasible(_) | Error::CapExceeded(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let pruned = lpflow::prune(inst, &sol, th)?;
    let rounding = lpflow::round(inst, &pruned, th, &mut seed.stream("rounding"), &cfg.rcsp)?;
    Ok((!rounding.paths.is_empty()).then_some(rounding.paths))
}

/// One run of the unit-demand driver at a fixed τ.
pub fn solve_n45_at<S: Scalar>(inst: &Instance<S>, tau: &S, seed: Seed, cfg: &SolverConfig<S>) -> Attempt<S> {
    let n = inst.n;
    let k = inst.demands.len();
    let th = Thresholds::new(n, k, tau);
    let strict = strict_theta(inst);
    let mut progress = Progress::new(0..k, S::zero());
    if cfg.branches.thick {
        let thick = resolve_thick(inst, &progress.pending(), &th, seed.child("thick"), cfg)?;
        if !thick.routes.is_empty() {
            progress.commit(inst, Stage::Thick, thick.routes, None)?;
        }
    }
    let cutoff = cfg.fallback_cutoff.unwrap_or_else(|| 4.0 * (n as f64).powf(1.2));
    let mut jopts = cfg.junction_options();
    jopts.roots = None;
    let mut round = 0usize;
    while !progress.remaining.is_empty() {
        let pending = progress.pending();
        if pending.len() as f64 <= cutoff {
            greedy(inst, &mut progress, &strict, None, Stage::Fallback, seed.child("fallback"), cfg)?;
            break;
        }
        let free = progress.free_instance(inst);
        let mut options: Vec<(Stage, BTreeMap<usize, Vec<usize>>, Option<usize>)> = Vec::new();
        if cfg.branches.junction {
            match min_density_junction_tree(&free, &pending, &strict, seed.child(&format!("junction-{round}")), &jopts) {
                Ok(t) => options.push((Stage::Junction, joined_routes(inst, &t.routes), Some(t.root))),
                Err(Error::Infeasible(_) | Error::CapExceeded(_)) => {}
                Err(e) => return Err(e),
            }
        }
        if cfg.branches.lp {
            if let Some(paths) = lp_stage(&free, &pending, &th, seed.child(&format!("lp-{round}")), cfg)? {
                options.push((Stage::LpRound, paths, None));
            }
        }
        let mut best: Option<(S, usize)> = None;
        for (i, (_, routes, _)) in options.iter().enumerate() {
            let density = progress.extra_cost(inst, routes)?.div_ref(&S::int(routes.len() as i64));
            if best.as_ref().is_none_or(|b| density < b.0) {
                best = Some((density, i));
            }
        }
        let Some((_, i)) = best else {
            return Err(Error::Infeasible(format!("no stage made progress at τ = {tau} with {} pairs left", pending.len())));
        };
        let (stage, routes, root) = options.swap_remove(i);
        progress.commit(inst, stage, routes, root)?;
        round += 1;
    }
    if let Some((&p, _)) = progress.solution.routes.iter().find(|(&p, r)| !is_theta_feasible(inst, p, r, &S::zero())) {
        return Err(Error::Internal(format!("route of pair {p} is not strictly feasible")));
    }
    Ok((progress.solution, progress.records))
}

/// The unit-demand algorithm with integral lengths; general demands are split
/// into power-of-two unit-demand parts first.
pub fn solve_n45<S: Scalar>(inst: &Instance<S>, cfg: &SolverConfig<S>) -> Result<SolveOutcome<S>> {
    prepare_input(inst, cfg)?;
    if !inst.has_integral_lengths() {
        return Err(Error::Invalid("the n45 solver needs integral lengths".into()));
    }
    if inst.has_unit_demands() {
        let out = guess_tau(inst, cfg, |tau, seed| solve_n45_at(inst, tau, seed, cfg))?;
        check_solution(inst, &out.solution)?;
        let report = StageReport { records: out.records, taus: vec![out.tau], tau_attempts: out.attempts };
        return Ok(SolveOutcome { solution: out.solution, report });
    }
    let split = split_demands(inst);
    let mut solutions = Vec::new();
    let mut taus = Vec::new();
    let mut attempts = 0;
    let mut owner: BTreeMap<usize, (usize, Stage, Option<usize>)> = BTreeMap::new();
    let mut batches: Vec<(Stage, Option<usize>)> = Vec::new();
    for (i, part) in split.parts.iter().enumerate() {
        let seed = cfg.seed.child(&format!("part-{i}"));
        let part_cfg = SolverConfig { seed, ..cfg.clone() };
        let out = guess_tau(&part.instance, &part_cfg, |tau, s| solve_n45_at(&part.instance, tau, s, &part_cfg))?;
        for rec in &out.records {
            batches.push((rec.stage, rec.root));
            for &p in &rec.pairs {
                owner.insert(part.pairs[p], (batches.len() - 1, rec.stage, rec.root));
            }
        }
        solutions.push(out.solution);
        taus.push(out.tau);
        attempts += out.attempts;
    }
    let mut solution = split.merge(&solutions)?;
    solution.theta = S::zero();
    check_solution(inst, &solution)?;
    let mut progress = Progress::new(0..inst.demands.len(), S::zero());
    for (b, &(stage, root)) in batches.iter().enumerate() {
        let routes: BTreeMap<usize, Vec<usize>> =
            owner.iter().filter(|(_, o)| o.0 == b).map(|(&p, _)| (p, solution.routes[&p].clone())).collect();
        if !routes.is_empty() {
            progress.commit(inst, stage, routes, root)?;
        }
    }
    Ok(SolveOutcome { solution, report: StageReport { records: progress.records, taus, tau_attempts: attempts } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{rat, ExactInstance, Rational};

    fn cfg(algorithm: Algorithm) -> SolverConfig<Rational> {
        SolverConfig::new(algorithm, rat(1, 10), rat(1, 2), Seed(3))
    }

    fn two_clusters() -> ExactInstance {
        let mut inst = ExactInstance::new(8);
        for (hub, base) in [(2, 0), (5, 3)] {
            let (s, t) = (base, base + 1);
            let t2 = if base == 0 { 6 } else { 7 };
            inst.add_edge(s, hub, rat(1, 1), rat(4, 1), rat(1, 1));
            inst.add_edge(hub, t, rat(1, 1), rat(4, 1), rat(1, 1));
            inst.add_edge(hub, t2, rat(1, 1), rat(4, 1), rat(1, 1));
            inst.add_edge(s, t, rat(2, 1), rat(20, 1), rat(1, 1));
            inst.add_demand(s, t, 1, rat(2, 1));
            inst.add_demand(s, t2, 1, rat(2, 1));
        }
        inst
    }

    #[test]
    fn greedy_takes_one_round_per_cluster() {
        let inst = two_clusters();
        let out = solve_k(&inst, &cfg(Algorithm::K)).unwrap();
        assert_eq!(out.report.records.len(), 2);
        let roots: BTreeSet<usize> = out.report.records.iter().filter_map(|r| r.root).collect();
        assert!(roots.is_subset(&[0, 2, 3, 5].into_iter().collect()));
        assert_eq!(out.report.total_cost(), solution_cost(&inst, &out.solution).unwrap());
        assert_eq!(out.report.resolved(), 4);
        let mut before = usize::MAX;
        for r in &out.report.records {
            assert!(r.remaining_before < before);
            before = r.remaining_before;
        }
    }

    #[test]
    fn single_pair_single_source() {
        let mut inst = ExactInstance::new(3);
        inst.add_edge(0, 2, rat(3, 1), rat(5, 1), rat(0, 1));
        inst.add_edge(0, 1, rat(1, 1), rat(1, 1), rat(0, 1));
        inst.add_edge(1, 2, rat(1, 1), rat(1, 1), rat(0, 1));
        inst.add_demand(0, 2, 1, rat(3, 1));
        let out = solve_single_source(&inst, &cfg(Algorithm::SingleSource)).unwrap();
        assert_eq!(out.solution.routes[&0], vec![1, 2]);
        let mut two = inst.clone();
        two.add_demand(1, 2, 1, rat(3, 1));
        assert!(matches!(solve_single_source(&two, &cfg(Algorithm::SingleSource)), Err(Error::Invalid(_))));
    }

    #[test]
    fn strict_theta_keeps_integral_routes_strict() {
        let mut inst = ExactInstance::new(2);
        inst.add_edge(0, 1, rat(1, 1), rat(1, 1), rat(1, 1));
        inst.add_demand(0, 1, 1, rat(7, 2));
        inst.add_demand(0, 1, 1, rat(-3, 1));
        let t = strict_theta(&inst);
        assert_eq!(t, rat(1, 14));
        assert!(rat(7, 2) * (rat(1, 1) + t.clone()) < rat(4, 1));
        assert!(rat(-3, 1) * (rat(1, 1) - t) < rat(-2, 1));
    }

    #[test]
    fn first_tau_succeeds_at_optimum() {
        let mut inst = ExactInstance::new(3);
        inst.add_edge(0, 1, rat(1, 1), rat(2, 1), rat(1, 1));
        inst.add_edge(1, 2, rat(1, 1), rat(2, 1), rat(1, 1));
        inst.add_demand(0, 2, 1, rat(2, 1));
        let out = solve_n45(&inst, &cfg(Algorithm::N45)).unwrap();
        assert_eq!(out.report.taus, vec![rat(6, 1)]);
        assert_eq!(out.report.tau_attempts, 1);
        assert_eq!(solution_cost(&inst, &out.solution).unwrap(), rat(6, 1));
    }

    #[test]
    fn general_demands_are_split_and_merged() {
        let mut inst = ExactInstance::new(3);
        inst.add_edge(0, 1, rat(1, 1), rat(2, 1), rat(1, 1));
        inst.add_edge(1, 2, rat(1, 1), rat(2, 1), rat(1, 1));
        inst.add_demand(0, 2, 3, rat(2, 1));
        inst.add_demand(1, 2, 2, rat(1, 1));
        let out = solve_n45(&inst, &cfg(Algorithm::N45)).unwrap();
        assert_eq!(out.solution.routes.len(), 2);
        assert_eq!(out.report.total_cost(), solution_cost(&inst, &out.solution).unwrap());
        assert_eq!(out.report.resolved(), 2);
    }
}

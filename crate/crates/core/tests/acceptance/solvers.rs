use bbspan::generate::{generate, GenParams, Kind};
use bbspan::instance::{check_solution, solution_cost};
use bbspan::lpflow::{self, check_lp_constraints, expected_sampling_cost, LpFlowOptions, Thresholds};
use bbspan::oracle::{brute_force_optimum, simple_paths, OracleOptions};
use bbspan::scalar::{ln, power};
use bbspan::solvers::{resolve_thick, solve, Algorithm, Branches, SolverConfig, Stage};
use bbspan::{rat, ExactInstance, Rational, Scalar, Seed};
use num_traits::Zero;
use rand::Rng;

use super::{log_budget, Outcome, SEED};

struct GreedyStats {
    made: usize,
    infeasible: usize,
    within: usize,
    telescoping: usize,
    identity_breaks: usize,
    worst: f64,
    errors: Vec<String>,
}

fn greedy_suite(algorithm: Algorithm, kind_for: impl Fn(usize) -> Kind, factor: impl Fn(usize) -> f64, stream: &str) -> GreedyStats {
    let mut rng = SEED.stream(stream);
    let theta = rat(1, 4);
    let mut s = GreedyStats { made: 0, infeasible: 0, within: 0, telescoping: 0, identity_breaks: 0, worst: 0.0, errors: Vec::new() };
    let mut attempt = 0;
    while s.made < 200 {
        attempt += 1;
        let n = rng.gen_range(4..=10);
        let k = rng.gen_range(1..=5);
        let p = GenParams { n, k, max_length: 4, max_sigma: 8, max_delta: 3, edge_probability: 0.3, ..GenParams::default() };
        let Ok(g) = generate::<Rational>(kind_for(s.made), &p, SEED.child(&format!("{stream}-{attempt}"))) else { continue };
        let inst = g.instance;
        let idx = s.made;
        s.made += 1;
        let cfg = SolverConfig::new(algorithm, theta.clone(), rat(1, 2), SEED.child(&format!("{stream}-run-{idx}")));
        let out = match solve(&inst, &cfg) {
            Ok(o) => o,
            Err(e) => {
                s.infeasible += 1;
                s.errors.push(format!("#{idx}: {e}"));
                continue;
            }
        };
        if check_solution(&inst, &out.solution).is_err() || out.solution.theta != theta {
            s.infeasible += 1;
            continue;
        }
        let cost = solution_cost(&inst, &out.solution).unwrap();
        let (_, opt) = brute_force_optimum(&inst, &theta, &OracleOptions::default()).expect("oracle");
        let ratio = if opt.is_zero() {
            if cost.is_zero() {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            (cost.clone() / opt.clone()).approx()
        };
        s.worst = s.worst.max(ratio);
        if ratio <= factor(k) * (1.0 + 1e-12) {
            s.within += 1;
        }
        let mut sum = Rational::int(0);
        for r in &out.report.records {
            sum += r.density.clone() * Rational::int(r.pairs.len() as i64);
        }
        if sum != cost || out.report.total_cost() != cost {
            s.identity_breaks += 1;
        }
        let rho = log_budget(16.0, k);
        let per_round = out
            .report
            .records
            .iter()
            .all(|r| r.density.approx() <= rho * opt.approx() / (r.remaining_before as f64).sqrt() * (1.0 + 1e-12));
        let total_bound = 2.0 * rho * opt.approx() * (((k + 1) as f64).sqrt() - 1.0);
        if per_round && cost.approx() <= total_bound * (1.0 + 1e-12) {
            s.telescoping += 1;
        }
    }
    s
}

fn greedy_outcome(id: usize, title: &'static str, s: GreedyStats, budget: &str) -> Outcome {
    let share = s.within as f64 / s.made as f64;
    let tele = s.telescoping as f64 / s.made as f64;
    Outcome::new(
        id,
        title,
        s.infeasible == 0 && share >= 0.95 && s.identity_breaks == 0 && tele >= 0.95,
        format!(
            "{} failed or infeasible, {}/{} within {budget}× oracle (worst {:.3}), telescoping bound on {}/{}, {} record-sum mismatches{}",
            s.infeasible,
            s.within,
            s.made,
            s.worst,
            s.telescoping,
            s.made,
            s.identity_breaks,
            s.errors.first().map(|e| format!(", first error {e}")).unwrap_or_default()
        ),
    )
}

pub fn criterion_7() -> Outcome {
    let kind = |i: usize| if i.is_multiple_of(2) { Kind::Random } else { Kind::NegativeLength };
    let s = greedy_suite(Algorithm::K, kind, |k| 8.0 * (k as f64).sqrt() * log_budget(1.0, k), "solve-k");
    greedy_outcome(7, "End-to-end solve_k", s, "8√k(⌈log₂(k+1)⌉+1)")
}

pub fn criterion_8() -> Outcome {
    let s = greedy_suite(Algorithm::SingleSource, |_| Kind::SingleSource, |k| log_budget(8.0, k), "single-source");
    greedy_outcome(8, "Single-source", s, "8(⌈log₂(k+1)⌉+1)")
}

pub fn criterion_9() -> Outcome {
    let p = GenParams { n: 30, k: 10, hubs: 4, edge_probability: 0.1, ..GenParams::default() };
    let (mut full, mut bad_routes, mut routes) = (0usize, 0usize, 0usize);
    for seed in 0..100u64 {
        let g = generate::<Rational>(Kind::HubPlanted, &p, SEED.child(&format!("hub-{seed}"))).expect("hub instance");
        let inst = g.instance;
        let tau = solution_cost(&inst, g.planted.as_ref().unwrap()).unwrap();
        let th = Thresholds::new(inst.n, inst.demands.len(), &tau);
        let cfg = SolverConfig::new(Algorithm::N45, rat(1, 10), rat(1, 2), Seed(seed));
        let pairs: Vec<usize> = (0..inst.demands.len()).collect();
        let res = resolve_thick(&inst, &pairs, &th, SEED.child(&format!("thick-{seed}")), &cfg).expect("thick stage");
        if res.routes.len() == pairs.len() {
            full += 1;
        }
        for (&pair, route) in &res.routes {
            routes += 1;
            let d = &inst.demands[pair];
            let ok = inst.is_walk(d.source, d.sink, route)
                && inst.path_length(route) <= d.dist_budget
                && inst.path_sigma(route) <= th.l1.clone() * Rational::int(2)
                && inst.path_delta(route) <= th.l2.clone() * Rational::int(4);
            if !ok {
                bad_routes += 1;
            }
        }
    }
    Outcome::new(
        9,
        "Thick-pair resolution",
        full >= 95 && bad_routes == 0,
        format!("all pairs resolved in {full}/100 seeds, {bad_routes} of {routes} routes break σ ≤ 2L₁, δ ≤ 4L₂ or strict feasibility"),
    )
}

/// Cheapest σ-union choosing one Π path for at least `need` pairs.
fn integral_optimum(inst: &ExactInstance, th: &Thresholds<Rational>, need: usize) -> Option<Rational> {
    let half = th.l2.clone() / Rational::int(2);
    let options: Vec<Vec<Vec<usize>>> = inst
        .demands
        .iter()
        .map(|d| {
            simple_paths(inst.n, &inst.arcs(), d.source, d.sink, 1_000_000)
                .expect("small")
                .into_iter()
                .filter(|p| inst.path_length(p) <= d.dist_budget && inst.path_sigma(p) <= th.l1 && inst.path_delta(p) <= half)
                .collect()
        })
        .collect();
    fn go(
        inst: &ExactInstance,
        options: &[Vec<Vec<usize>>],
        i: usize,
        chosen: usize,
        need: usize,
        used: &mut Vec<u32>,
        cost: Rational,
        best: &mut Option<Rational>,
    ) {
        if best.as_ref().is_some_and(|b| cost >= *b) {
            return;
        }
        if chosen + (options.len() - i) < need {
            return;
        }
        if i == options.len() {
            *best = Some(cost);
            return;
        }
        go(inst, options, i + 1, chosen, need, used, cost.clone(), best);
        for path in &options[i] {
            let mut extra = Rational::int(0);
            for &e in path {
                if used[e] == 0 {
                    extra += inst.edges[e].sigma.clone();
                }
                used[e] += 1;
            }
            go(inst, options, i + 1, chosen + 1, need, used, cost.clone() + extra, best);
            for &e in path {
                used[e] -= 1;
            }
        }
    }
    let mut best = None;
    let mut used = vec![0u32; inst.edges.len()];
    go(inst, &options, 0, 0, need, &mut used, Rational::int(0), &mut best);
    best
}

pub fn criterion_10() -> Outcome {
    let mut rng = SEED.stream("lp-pipeline");
    let opts = LpFlowOptions::default();
    let zeta = <Rational as Scalar>::from_float(opts.zeta);
    let (mut instances, mut lp_bad, mut prune_bad, mut sampling_bad) = (0usize, 0usize, 0usize, 0usize);
    let (mut watched, mut watched_ok) = (0usize, 0usize);
    let mut notes = Vec::new();
    let mut attempt = 0;
    while instances < 20 {
        attempt += 1;
        let n = rng.gen_range(7..=10);
        let k = rng.gen_range(2..=4);
        let p = GenParams { n, k, hubs: 3, edge_probability: 0.15, ..GenParams::default() };
        let Ok(g) = generate::<Rational>(Kind::BackbonePlanted, &p, SEED.child(&format!("backbone-{attempt}"))) else { continue };
        instances += 1;
        let inst = g.instance;
        let k = inst.demands.len();
        let tau = solution_cost(&inst, g.planted.as_ref().unwrap()).unwrap();
        let th = Thresholds::new(n, k, &tau);
        let pairs: Vec<usize> = (0..k).collect();
        let ip = integral_optimum(&inst, &th, k.div_ceil(4));
        let sol = match lpflow::solve_thin_lp(&inst, &pairs, &th, &opts) {
            Ok((sol, _)) => sol,
            Err(e) => {
                if ip.is_some() {
                    lp_bad += 1;
                    notes.push(format!("instance {attempt}: {e}"));
                }
                continue;
            }
        };
        match &ip {
            Some(ip) if sol.objective <= ip.clone() * (Rational::int(1) + zeta.clone()) => {}
            _ => lp_bad += 1,
        }
        let pruned = lpflow::prune(&inst, &sol, &th).expect("prunable");
        if !check_lp_constraints(&inst, &pruned, &th).is_empty() {
            prune_bad += 1;
        }
        let factor: Rational = power::<Rational>(n, 0.8) * ln::<Rational>(n);
        if expected_sampling_cost(&inst, &pruned) > factor * pruned.objective.clone() {
            sampling_bad += 1;
        }
        let tenth = rat(1, 10);
        let targets: Vec<usize> = (0..pruned.pairs.len()).filter(|&s| pruned.y[s] >= tenth).map(|s| pruned.pairs[s]).collect();
        let mut hits = vec![0usize; targets.len()];
        for seed in 0..200u64 {
            let mut r = SEED.child(&format!("round-{attempt}-{seed}")).stream("rounding");
            let out = lpflow::round(&inst, &pruned, &th, &mut r, &Default::default()).expect("rounding");
            for (i, t) in targets.iter().enumerate() {
                if out.paths.contains_key(t) {
                    hits[i] += 1;
                }
            }
        }
        watched += targets.len();
        watched_ok += hits.iter().filter(|&&h| h >= 180).count();
    }
    Outcome::new(
        10,
        "LP pipeline",
        lp_bad == 0 && prune_bad == 0 && sampling_bad == 0 && watched_ok == watched && watched > 0,
        format!(
            "{lp_bad} objective or feasibility mismatches, {prune_bad} pruned re-check failures, {sampling_bad} sampling-cost violations over {instances} instances; {watched_ok}/{watched} pairs with y ≥ 1/10 resolved in ≥ 90% of 200 seeds{}",
            notes.first().map(|n| format!(", first note {n}")).unwrap_or_default()
        ),
    )
}

pub fn criterion_11() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    let mut worst = 0.0f64;
    let branches = [("thick", Stage::Thick), ("junction", Stage::Junction), ("lp-round", Stage::LpRound), ("fallback", Stage::Fallback)];
    for (name, stage) in branches {
        let (mut runs, mut exercised, mut ok) = (0usize, 0usize, 0usize);
        for seed in 0..5u64 {
            let (kind, p) = match stage {
                Stage::Thick => (Kind::HubPlanted, GenParams { n: 12, k: 4, hubs: 3, edge_probability: 0.08, ..GenParams::default() }),
                Stage::LpRound => {
                    (Kind::BackbonePlanted, GenParams { n: 9, k: 4, hubs: 3, edge_probability: 0.12, ..GenParams::default() })
                }
                _ => (Kind::Random, GenParams { n: 8, k: 4, max_length: 4, edge_probability: 0.3, ..GenParams::default() }),
            };
            let g = generate::<Rational>(kind, &p, SEED.child(&format!("branch-{name}-{seed}"))).expect("instance");
            let inst = g.instance;
            let mut cfg = SolverConfig::new(Algorithm::N45, rat(1, 10), rat(1, 2), SEED.child(&format!("branch-run-{name}-{seed}")));
            match stage {
                Stage::Thick => cfg.tau = Some(solution_cost(&inst, g.planted.as_ref().unwrap()).unwrap()),
                Stage::Junction => {
                    cfg.fallback_cutoff = Some(0.0);
                    cfg.branches = Branches { thick: false, junction: true, lp: false };
                }
                Stage::LpRound => {
                    cfg.fallback_cutoff = Some(0.0);
                    cfg.branches = Branches { thick: false, junction: false, lp: true };
                }
                Stage::Fallback => cfg.branches.thick = false,
            }
            runs += 1;
            let out = match solve(&inst, &cfg) {
                Ok(o) => o,
                Err(e) => {
                    lines.push(format!("{name} seed {seed}: {e}"));
                    continue;
                }
            };
            if out.report.uses(stage) {
                exercised += 1;
            }
            let strict = out.solution.theta.is_zero() && check_solution(&inst, &out.solution).is_ok();
            let cost = solution_cost(&inst, &out.solution).unwrap();
            let (_, opt) = brute_force_optimum(&inst, &Rational::int(0), &OracleOptions::default()).expect("oracle");
            let ratio = if opt.is_zero() {
                if cost.is_zero() {
                    1.0
                } else {
                    f64::INFINITY
                }
            } else {
                (cost / opt).approx()
            };
            worst = worst.max(ratio);
            if strict && ratio <= 10.0 && out.report.resolved() == inst.demands.len() {
                ok += 1;
            }
        }
        if exercised != runs || ok != runs {
            pass = false;
        }
        lines.push(format!("{name}: {ok}/{runs} ok, exercised {exercised}/{runs}"));
    }
    Outcome::new(11, "solve_n45 end-to-end", pass, format!("{}; worst ratio {worst:.3}", lines.join("; ")))
}

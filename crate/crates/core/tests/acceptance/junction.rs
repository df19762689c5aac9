use std::collections::HashMap;

use bbspan::generate::{generate, GenParams, Kind};
use bbspan::junction::{
    build_layered, check_junction_tree, min_density_junction_tree, scale_graph, JunctionOptions, LayerVertex, LayeredGraph, ScaledGraph,
};
use bbspan::oracle::{brute_force_min_density_junction_tree, simple_paths, OracleOptions};
use bbspan::{rat, ExactInstance, Rational, Scalar, Seed};
use rand::Rng;

use super::{log_budget, Outcome, SEED};

fn instance(seed: Seed, n: usize, k: usize, negative: bool, denominator: i64) -> Option<ExactInstance> {
    let kind = if negative { Kind::NegativeLength } else { Kind::Random };
    let p = GenParams { n, k, max_length: 4, max_sigma: 8, max_delta: 3, denominator, ..GenParams::default() };
    generate::<Rational>(kind, &p, seed).ok().map(|g| g.instance)
}

pub fn criterion_4() -> Outcome {
    let mut rng = SEED.stream("scaling-transfer");
    let (mut checked, mut bad) = (0usize, 0usize);
    let mut made = 0;
    while made < 200 {
        let n = rng.gen_range(3..=7);
        let k = rng.gen_range(1..=3);
        let Some(inst) = instance(SEED.child(&format!("c4-{made}-{n}")), n, k, made % 2 == 1, 3) else { continue };
        made += 1;
        let theta = if made % 2 == 0 { rat(1, 10) } else { rat(1, 2) };
        let scaled = scale_graph(&inst, &theta).expect("scalable");
        for (p, d) in inst.demands.iter().enumerate() {
            let bound = inst.relaxed_bound(p, &theta);
            for path in simple_paths(inst.n, &inst.arcs(), d.source, d.sink, 1_000_000).expect("small") {
                checked += 1;
                let len = inst.path_length(&path);
                let scaled_len = Rational::int(scaled.units(&path)) * &scaled.delta;
                if len <= d.dist_budget && scaled_len > bound {
                    bad += 1;
                }
                if scaled_len <= bound && len > bound {
                    bad += 1;
                }
            }
        }
    }
    Outcome::new(4, "Scaling transfer", bad == 0 && checked > 0, format!("{bad} violations over {checked} paths on 200 instances"))
}

/// Layered paths from `from` to `to` whose projection onto G is simple.
fn layered_count(g: &LayeredGraph, adj: &[Vec<usize>], from: usize, to: usize, n: usize) -> u64 {
    fn vertex(g: &LayeredGraph, id: usize) -> Option<usize> {
        match g.vertices[id] {
            LayerVertex::Root => Some(g.root),
            LayerVertex::Copy { v, .. } => Some(v),
            _ => None,
        }
    }
    fn go(g: &LayeredGraph, adj: &[Vec<usize>], at: usize, to: usize, seen: &mut Vec<bool>) -> u64 {
        if at == to {
            return 1;
        }
        let mut total = 0;
        for &a in &adj[at] {
            let head = g.arcs[a].head;
            let v = vertex(g, head);
            if let Some(v) = v {
                if seen[v] {
                    continue;
                }
                seen[v] = true;
            }
            total += go(g, adj, head, to, seen);
            if let Some(v) = v {
                seen[v] = false;
            }
        }
        total
    }
    let mut seen = vec![false; n];
    if let Some(v) = vertex(g, from) {
        seen[v] = true;
    }
    go(g, adj, from, to, &mut seen)
}

/// G paths whose running scaled distances to (or from) the root stay in range,
/// counted by total scaled length.
fn graph_counts(inst: &ExactInstance, sc: &ScaledGraph<Rational>, from: usize, to: usize, inward: bool) -> HashMap<i64, u64> {
    let mut out = HashMap::new();
    for path in simple_paths(inst.n, &inst.arcs(), from, to, 1_000_000).expect("small") {
        let units: Vec<i64> = path.iter().map(|&e| sc.mult[e]).collect();
        let partial: Vec<i64> = if inward {
            (0..=units.len()).map(|i| units[i..].iter().sum()).collect()
        } else {
            (0..=units.len()).map(|i| units[..i].iter().sum()).collect()
        };
        if partial.iter().all(|x| (sc.t_minus..=sc.t_plus).contains(x)) {
            *out.entry(sc.units(&path)).or_insert(0) += 1;
        }
    }
    out
}

pub fn criterion_5() -> Outcome {
    let mut rng = SEED.stream("layered-bijection");
    let (mut compared, mut mismatches) = (0u64, 0u64);
    let mut made = 0;
    while made < 100 {
        let n = rng.gen_range(3..=6);
        let k = rng.gen_range(1..=2);
        let Some(inst) = instance(SEED.child(&format!("c5-{made}-{n}")), n, k, made % 2 == 0, 2) else { continue };
        made += 1;
        let theta = if made % 2 == 0 { rat(1, 4) } else { rat(1, 2) };
        let sc = scale_graph(&inst, &theta).expect("scalable");
        for r in 0..n {
            let g = build_layered(&inst, &sc, r, 1_000_000).expect("within cap");
            let adj = g.out_adjacency();
            for (p, d) in inst.demands.iter().enumerate() {
                let ins = graph_counts(&inst, &sc, d.source, r, true);
                let outs = graph_counts(&inst, &sc, r, d.sink, false);
                for label in g.labels() {
                    let src = g.id(&LayerVertex::Source { pair: p, label }).expect("terminal copy");
                    let snk = g.id(&LayerVertex::Sink { pair: p, label }).expect("terminal copy");
                    let a = layered_count(&g, &adj, src, 0, n);
                    let b = layered_count(&g, &adj, 0, snk, n);
                    compared += 2;
                    if a != ins.get(&label).copied().unwrap_or(0) {
                        mismatches += 1;
                    }
                    if b != outs.get(&label).copied().unwrap_or(0) {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    Outcome::new(
        5,
        "Layered-graph bijection",
        mismatches == 0 && compared > 0,
        format!("{mismatches} mismatched counts over {compared} (terminal, label, side) cells"),
    )
}

pub fn criterion_6() -> Outcome {
    let mut rng = SEED.stream("junction-density");
    let opts = JunctionOptions::default();
    let theta = rat(1, 4);
    let (mut made, mut invalid, mut within, mut errors) = (0usize, 0usize, 0usize, Vec::new());
    let mut worst = 0.0f64;
    while made < 200 {
        let n = rng.gen_range(4..=8);
        let k = rng.gen_range(1..=4);
        let Some(inst) = instance(SEED.child(&format!("c6-{made}-{n}")), n, k, made % 3 == 2, 1) else { continue };
        let idx = made;
        made += 1;
        let pairs: Vec<usize> = (0..k).collect();
        let tree = match min_density_junction_tree(&inst, &pairs, &theta, SEED.child(&format!("c6-run-{idx}")), &opts) {
            Ok(t) => t,
            Err(e) => {
                invalid += 1;
                errors.push(format!("#{idx}: {e}"));
                continue;
            }
        };
        if !check_junction_tree(&inst, &theta, tree.root, &tree.routes).is_empty() {
            invalid += 1;
            continue;
        }
        let best = brute_force_min_density_junction_tree(&inst, &theta, &OracleOptions::default()).expect("oracle").expect("feasible");
        if best.density > Rational::int(0) {
            worst = worst.max((tree.density.clone() / best.density.clone()).approx());
        }
        if tree.density <= best.density * <Rational as Scalar>::from_float(log_budget(16.0, k)) {
            within += 1;
        }
    }
    let share = within as f64 / made as f64;
    Outcome::new(
        6,
        "Junction-tree validity and density",
        invalid == 0 && share >= 0.95,
        format!(
            "{invalid} invalid, {within}/{made} within 16(⌈log₂(k+1)⌉+1)× oracle, worst ratio {worst:.3}{}",
            errors.first().map(|e| format!(", first error {e}")).unwrap_or_default()
        ),
    )
}

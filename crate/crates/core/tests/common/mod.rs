#![allow(dead_code)]

use bbspan::instance::{find_negative_cycle, shortest_distances};
use bbspan::rcsp::ResourceGraph;
use bbspan::{rat, Rational, Scalar};
use num_traits::{Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct RcspCase {
    pub graph: ResourceGraph<Rational>,
    pub source: usize,
    pub sink: usize,
    pub budgets: Vec<Rational>,
}

/// Random digraph with per-dimension negative cycles repaired by re-rolling
/// the offending arcs to non-negative weights.
pub fn rcsp_case(rng: &mut ChaCha8Rng, n: usize, m: usize, integer: bool, most_negative: i64) -> RcspCase {
    let mut arcs = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.gen_bool(0.35) {
                arcs.push((u, v));
            }
        }
    }
    let value = |rng: &mut ChaCha8Rng, lo: i64, hi: i64| -> Rational {
        if integer {
            rat(rng.gen_range(lo..=hi), 1)
        } else {
            let d = rng.gen_range(1..=4);
            rat(rng.gen_range(lo * d..=hi * d), d)
        }
    };
    let cost = (0..arcs.len()).map(|_| value(rng, 0, 9)).collect();
    let mut weights: Vec<Vec<Rational>> = (0..m).map(|_| (0..arcs.len()).map(|_| value(rng, -most_negative, 5)).collect()).collect();
    for w in weights.iter_mut() {
        while let Some(cycle) = find_negative_cycle(n, &arcs, w) {
            for e in cycle {
                w[e] = value(rng, 0, 5);
            }
        }
    }
    let source = rng.gen_range(0..n);
    let mut sink = rng.gen_range(0..n - 1);
    if sink >= source {
        sink += 1;
    }
    let budgets = weights
        .iter()
        .map(|w| {
            let base = shortest_distances(n, &arcs, w, source)[sink].clone().unwrap_or_else(|| rat(3, 1));
            let mut b = base + value(rng, -2, 6);
            if !integer && b.abs() < rat(2, 1) {
                b = if b < Rational::int(0) { rat(-2, 1) } else { rat(2, 1) };
            }
            if b.is_zero() {
                b = rat(1, 1);
            }
            b
        })
        .collect();
    RcspCase { graph: ResourceGraph::new(n, arcs, cost, weights), source, sink, budgets }
}

/// Random simple path of at most n−1 arcs, as a prefix of a random DFS walk.
pub fn random_simple_path(rng: &mut ChaCha8Rng, g: &ResourceGraph<Rational>) -> Vec<usize> {
    let mut at = rng.gen_range(0..g.n);
    let mut seen = vec![false; g.n];
    seen[at] = true;
    let mut path = Vec::new();
    loop {
        let next: Vec<usize> = (0..g.arcs.len()).filter(|&e| g.arcs[e].0 == at && !seen[g.arcs[e].1]).collect();
        if next.is_empty() || rng.gen_bool(0.15) {
            return path;
        }
        let e = next[rng.gen_range(0..next.len())];
        path.push(e);
        at = g.arcs[e].1;
        seen[at] = true;
    }
}

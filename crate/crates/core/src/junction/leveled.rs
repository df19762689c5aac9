//! Height reduction through a catalog of shortcut edges.
//!
//! Level i+1 → level i edges of the leveled graph summarize paths of the
//! layered graph. A path between (u, I) and (v, J) on one side is a u⇝v path
//! of scaled length |I − J|, so every shortcut is stored once per vertex pair
//! with its scaled length and reused at every level and for every root.

use std::collections::HashSet;

use super::scaled::ScaledGraph;
use crate::error::Result;
use crate::instance::{simplify_walk, Instance};
use crate::rcsp::{DimSpec, PatternTable, RcspOptions, ResourceGraph};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Shortcut<S> {
    /// Scaled length in units of Δ.
    pub len: i64,
    pub sigma: S,
    pub delta: S,
    pub path: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReductionOptions {
    /// Shortcuts kept per vertex pair.
    pub max_options: usize,
    /// Widest exact σ lattice before falling back to approximate σ scaling.
    pub sigma_width: i64,
    pub sigma_eps: f64,
    pub rcsp: RcspOptions,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        ReductionOptions { max_options: 4, sigma_width: 512, sigma_eps: 1.0, rcsp: RcspOptions::default() }
    }
}

/// The (h+1)-level graph: every level holds all vertices, and consecutive
/// levels are joined by the catalog shortcuts plus zero-cost stays.
#[derive(Clone, Debug, PartialEq)]
pub struct LeveledGraph<S> {
    pub h: usize,
    pub n: usize,
    /// `options[u][v]`: shortcuts for u⇝v; `options[v][v][0]` is the stay.
    options: Vec<Vec<Vec<Shortcut<S>>>>,
}

impl<S: Scalar> LeveledGraph<S> {
    pub fn shortcuts(&self, from: usize, to: usize) -> &[Shortcut<S>] {
        &self.options[from][to]
    }

    pub fn levels(&self) -> usize {
        self.h + 1
    }

    pub fn edge_count(&self) -> usize {
        self.options.iter().flatten().map(|o| o.len()).sum::<usize>() * self.h
    }
}

fn is_dominated<S: Scalar>(a: &Shortcut<S>, b: &Shortcut<S>) -> bool {
    b.len <= a.len && b.sigma <= a.sigma && b.delta <= a.delta && (b.len < a.len || b.sigma < a.sigma || b.delta < a.delta)
}

/// Pareto filter on (len, σ, δ), then at most `k` picks: shortest, cheapest in
/// δ, cheapest in σ, cheapest in σ+δ, then evenly spaced by length.
fn select<S: Scalar>(mut cands: Vec<Shortcut<S>>, k: usize) -> Vec<Shortcut<S>> {
    let mut seen = HashSet::new();
    cands.retain(|c| seen.insert(c.path.clone()));
    let front: Vec<Shortcut<S>> = cands.iter().filter(|a| !cands.iter().any(|b| is_dominated(a, b))).cloned().collect();
    let mut front = front;
    front.sort_by(|a, b| a.len.cmp(&b.len).then(a.sigma.partial_cmp(&b.sigma).expect("ordered")));
    if front.len() <= k {
        return front;
    }
    let argmin =
        |key: &dyn Fn(&Shortcut<S>) -> S| (0..front.len()).fold(0, |best, i| if key(&front[i]) < key(&front[best]) { i } else { best });
    let mut pick = vec![0];
    for i in [
        argmin(&|s: &Shortcut<S>| s.delta.clone()),
        argmin(&|s: &Shortcut<S>| s.sigma.clone()),
        argmin(&|s: &Shortcut<S>| s.sigma.add_ref(&s.delta)),
    ] {
        if !pick.contains(&i) && pick.len() < k {
            pick.push(i);
        }
    }
    let mut step = 1;
    while pick.len() < k {
        let i = (step * front.len()) / k;
        if !pick.contains(&i) {
            pick.push(i);
        }
        step += 1;
        if step > 4 * k {
            break;
        }
    }
    pick.sort_unstable();
    pick.into_iter().map(|i| front[i].clone()).collect()
}

fn pattern_budgets(lo: i64, hi: i64) -> Vec<i64> {
    let mut out = vec![lo.max(0)];
    let mut b = 1i64;
    while b < hi {
        if b > lo {
            out.push(b);
        }
        b = b.saturating_mul(2);
    }
    out.push(hi);
    out.dedup();
    out
}

/// Builds the shortcut catalog with one (length, σ)-indexed table per start
/// vertex; the cost minimized is δ.
pub fn height_reduce<S: Scalar>(inst: &Instance<S>, scaled: &ScaledGraph<S>, h: usize, opts: &ReductionOptions) -> Result<LeveledGraph<S>> {
    let n = inst.n;
    let arcs = inst.arcs();
    let lens: Vec<S> = scaled.mult.iter().map(|&d| S::int(d)).collect();
    let sigmas: Vec<S> = inst.edges.iter().map(|e| e.sigma.clone()).collect();
    let deltas: Vec<S> = inst.edges.iter().map(|e| e.delta.clone()).collect();
    let sigma_max = sigmas.iter().fold(S::zero(), |a, b| if *b > a { b.clone() } else { a });
    let with_sigma = !sigma_max.is_zero();
    let mut weights = vec![lens.clone()];
    if with_sigma {
        weights.push(sigmas.clone());
    }
    let graph = ResourceGraph::new(n, arcs.clone(), deltas, weights);
    let mut dims = vec![DimSpec::lattice(&lens, n, S::one(), &S::int(scaled.t_plus))?];
    if with_sigma {
        let budget = sigma_max.mul_ref(&S::int((n.max(2) - 1) as i64));
        dims.push(DimSpec::budgeted(&sigmas, n, &budget, &S::from_float(opts.sigma_eps), opts.sigma_width)?);
    }
    let len_lo = dims[0].lo.max(scaled.t_minus);
    let len_hi = dims[0].hi.min(scaled.t_plus);
    let budgets = if with_sigma { pattern_budgets(dims[1].lo, dims[1].hi) } else { vec![0] };
    let mut options = vec![vec![Vec::new(); n]; n];
    for u in 0..n {
        let table = PatternTable::build(&graph, u, &dims, n, &opts.rcsp)?;
        for v in 0..n {
            let mut cands = Vec::new();
            for &b in &budgets {
                let mut last: Option<S> = None;
                for len in len_lo..=len_hi {
                    let eta: Vec<i64> = if with_sigma { vec![len, b] } else { vec![len] };
                    let Some(c) = table.cost(v, &eta, n) else { continue };
                    if last.as_ref().is_some_and(|l| c >= *l) {
                        continue;
                    }
                    last = Some(c);
                    if let Some(walk) = table.walk(v, &eta, n) {
                        let path = simplify_walk(&arcs, u, &walk);
                        if u == v && !path.is_empty() {
                            continue;
                        }
                        cands.push(Shortcut {
                            len: scaled.units(&path),
                            sigma: inst.path_sigma(&path),
                            delta: inst.path_delta(&path),
                            path,
                        });
                    }
                }
            }
            let mut picked = select(cands, opts.max_options.max(1));
            if u == v {
                picked.retain(|s| !s.path.is_empty());
                picked.insert(0, Shortcut { len: 0, sigma: S::zero(), delta: S::zero(), path: Vec::new() });
            }
            options[u][v] = picked;
        }
    }
    Ok(LeveledGraph { h: h.max(1), n, options })
}

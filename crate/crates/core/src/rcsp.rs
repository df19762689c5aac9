//! Resource-constrained shortest paths over integer consumption patterns.
//!
//! Resources are rounded up to multiples of a per-dimension step Δ, after which
//! a hop-indexed dynamic program over the box of valid patterns finds the
//! cheapest walk for every (vertex, pattern, hop count) triple.

use num_bigint::BigInt;

use crate::cost::{decode_exact, encode, DpCost, Encoded};
use crate::error::{Error, Result};
use crate::instance::{find_negative_cycle, simplify_walk};
use crate::scalar::{lattice_step, min_of, Scalar};

/// Graph with a non-negative cost and `m` resource consumptions per arc.
#[derive(Clone, Debug, PartialEq)]
pub struct ResourceGraph<S> {
    pub n: usize,
    pub arcs: Vec<(usize, usize)>,
    pub cost: Vec<S>,
    /// `weights[i][e]` is the consumption of resource `i` on arc `e`.
    pub weights: Vec<Vec<S>>,
}

impl<S: Scalar> ResourceGraph<S> {
    pub fn new(n: usize, arcs: Vec<(usize, usize)>, cost: Vec<S>, weights: Vec<Vec<S>>) -> Self {
        ResourceGraph { n, arcs, cost, weights }
    }

    pub fn dims(&self) -> usize {
        self.weights.len()
    }

    /// Same arcs with tails and heads swapped; arc ids are preserved.
    pub fn reversed(&self) -> Self {
        let mut g = self.clone();
        for a in &mut g.arcs {
            *a = (a.1, a.0);
        }
        g
    }

    fn check(&self) -> Result<()> {
        if self.cost.len() != self.arcs.len() || self.weights.iter().any(|w| w.len() != self.arcs.len()) {
            return Err(Error::Invalid("arc attribute lengths differ".into()));
        }
        if self.arcs.iter().any(|&(u, v)| u >= self.n || v >= self.n) {
            return Err(Error::Invalid("arc references a missing vertex".into()));
        }
        if self.cost.iter().any(|c| *c < S::zero()) {
            return Err(Error::Invalid("negative arc cost".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RcspQuery<'g, S> {
    pub graph: &'g ResourceGraph<S>,
    pub source: usize,
    pub sink: usize,
    pub budgets: Vec<S>,
    pub tolerances: Vec<S>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RcspResult<S> {
    pub path: Vec<usize>,
    pub cost: S,
    pub consumption: Vec<S>,
    pub patterns: usize,
    pub relaxations: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RcspOptions {
    pub max_patterns: usize,
    /// Upper bound on vertices × patterns × hop layers.
    pub max_cells: usize,
    /// Keep every hop layer so `cost` and `walk` answer for any hop count;
    /// otherwise only the settled layer is kept.
    pub keep_layers: bool,
}

impl Default for RcspOptions {
    fn default() -> Self {
        RcspOptions { max_patterns: 2_000_000, max_cells: 40_000_000, keep_layers: false }
    }
}

/// One scaled resource dimension: step, rounded arc multiples and valid range.
#[derive(Clone, Debug, PartialEq)]
pub struct DimSpec<S> {
    pub delta: S,
    pub steps: Vec<i64>,
    pub lo: i64,
    pub hi: i64,
}

fn most_negative<S: Scalar>(weights: &[S]) -> S {
    weights.iter().fold(S::zero(), |m, w| min_of(&m, w)).abs()
}

fn ceil_div<S: Scalar>(w: &S, delta: &S) -> Result<i64> {
    w.div_ref(delta).ceil_i64().ok_or_else(|| Error::CapExceeded("scaled weight out of range".into()))
}

impl<S: Scalar> DimSpec<S> {
    /// Scaling with Δ = εL/(n−1) and the valid range
    /// [−N·n, |(1+ε)·L| + N·n] in units of Δ.
    pub fn approximate(weights: &[S], n: usize, budget: &S, eps: &S) -> Result<Self> {
        if n < 2 {
            return Err(Error::Invalid("scaling needs at least two vertices".into()));
        }
        if eps.mul_ref(budget) <= S::zero() {
            return Err(Error::Invalid("tolerance times budget must be positive".into()));
        }
        let delta = eps.mul_ref(budget).div_ref(&S::int(n as i64 - 1));
        let neg = most_negative(weights).mul_ref(&S::int(n as i64));
        let upper = (S::one() + eps.clone()).mul_ref(budget).abs().add_ref(&neg);
        Self::with_range(weights, delta, &neg.neg(), &upper)
    }

    /// Exact scaling for integral weights: Δ = 1, so rounding never changes a weight.
    pub fn exact(weights: &[S], n: usize, budget: &S) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !w.is_integral()) {
            return Err(Error::Invalid(format!("weight {w} is not integral")));
        }
        if budget.is_zero() {
            return Err(Error::Invalid("zero budget".into()));
        }
        let eps = S::int(n as i64 - 1).div_ref(budget);
        Self::approximate(weights, n, budget, &eps)
    }

    /// Scaling onto a caller-chosen step with range [−N·n, budget + N·n].
    pub fn lattice(weights: &[S], n: usize, step: S, budget: &S) -> Result<Self> {
        if step <= S::zero() {
            return Err(Error::Invalid("lattice step must be positive".into()));
        }
        let neg = most_negative(weights).mul_ref(&S::int(n as i64));
        let upper = budget.add_ref(&neg);
        Self::with_range(weights, step, &neg.neg(), &upper)
    }

    fn with_range(weights: &[S], delta: S, lower: &S, upper: &S) -> Result<Self> {
        let steps = weights.iter().map(|w| ceil_div(w, &delta)).collect::<Result<Vec<_>>>()?;
        let range = |x: Option<i64>| x.ok_or_else(|| Error::CapExceeded("pattern range out of bounds".into()));
        let lo = range(lower.div_ref(&delta).ceil_i64())?;
        let hi = range(upper.div_ref(&delta).floor_i64())?;
        Ok(DimSpec { delta, steps, lo, hi })
    }

    /// Exact lattice scaling when the weights share a step that keeps the
    /// range within `max_width` units, otherwise approximate scaling with `eps`.
    pub fn budgeted(weights: &[S], n: usize, budget: &S, eps: &S, max_width: i64) -> Result<Self> {
        if let Some(step) = lattice_step(weights) {
            let spec = Self::lattice(weights, n, step, budget)?;
            if spec.hi - spec.lo <= max_width {
                return Ok(spec);
            }
        }
        Self::approximate(weights, n, budget, eps)
    }

    /// Largest pattern whose scaled consumption stays within `amount`.
    pub fn pattern_for(&self, amount: &S) -> Option<i64> {
        amount.div_ref(&self.delta).floor_i64()
    }
}

/// Dense row-major box of integer patterns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternBox {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
    stride: Vec<usize>,
    size: usize,
}

impl PatternBox {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>, cap: usize) -> Result<Self> {
        let m = lo.len();
        let mut stride = vec![0; m];
        let mut size: usize = 1;
        for i in (0..m).rev() {
            stride[i] = size;
            if hi[i] < lo[i] {
                size = 0;
                continue;
            }
            let width = usize::try_from(hi[i] - lo[i] + 1).map_err(|_| Error::CapExceeded("pattern width overflow".into()))?;
            size =
                size.checked_mul(width).filter(|s| *s <= cap).ok_or_else(|| Error::CapExceeded(format!("pattern space exceeds {cap}")))?;
        }
        Ok(PatternBox { lo, hi, stride, size })
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn index(&self, eta: &[i64]) -> Option<usize> {
        if self.size == 0 {
            return None;
        }
        let mut idx = 0;
        for i in 0..eta.len() {
            if eta[i] < self.lo[i] || eta[i] > self.hi[i] {
                return None;
            }
            idx += (eta[i] - self.lo[i]) as usize * self.stride[i];
        }
        Some(idx)
    }

    pub fn pattern(&self, mut idx: usize) -> Vec<i64> {
        let mut eta = vec![0; self.lo.len()];
        for i in 0..eta.len() {
            eta[i] = self.lo[i] + (idx / self.stride[i]) as i64;
            idx %= self.stride[i];
        }
        eta
    }

    /// All patterns in an order compatible with the component-wise partial order.
    pub fn patterns(&self) -> Vec<Vec<i64>> {
        (0..self.size).map(|i| self.pattern(i)).collect()
    }
}

/// Lists the valid patterns of scaled dimensions in topological order.
pub fn enumerate_valid_patterns<S: Scalar>(dims: &[DimSpec<S>], cap: usize) -> Result<Vec<Vec<i64>>> {
    let bx = PatternBox::new(dims.iter().map(|d| d.lo).collect(), dims.iter().map(|d| d.hi).collect(), cap)?;
    Ok(bx.patterns())
}

/// Scales every resource of the query: Δ_i = ε_i·L_i/(n−1) and w̄ = ⌈w/Δ⌉·Δ.
pub fn scale_weights<S: Scalar>(q: &RcspQuery<'_, S>) -> Result<Vec<DimSpec<S>>> {
    check_query(q)?;
    (0..q.graph.dims()).map(|i| DimSpec::approximate(&q.graph.weights[i], q.graph.n, &q.budgets[i], &q.tolerances[i])).collect()
}

/// γ_i = |min(min_e w_i(e), 0)| / |L_i|.
pub fn resource_condition<S: Scalar>(q: &RcspQuery<'_, S>) -> Vec<S> {
    (0..q.graph.dims()).map(|i| most_negative(&q.graph.weights[i]).div_ref(&q.budgets[i].abs())).collect()
}

fn check_query<S: Scalar>(q: &RcspQuery<'_, S>) -> Result<()> {
    q.graph.check()?;
    let m = q.graph.dims();
    if m == 0 || q.budgets.len() != m || q.tolerances.len() != m {
        return Err(Error::Invalid("budgets and tolerances must match the resource count".into()));
    }
    if q.source >= q.graph.n || q.sink >= q.graph.n {
        return Err(Error::Invalid("query endpoint out of range".into()));
    }
    if q.graph.n < 2 {
        return Err(Error::Invalid("at least two vertices required".into()));
    }
    for i in 0..m {
        if q.tolerances[i].mul_ref(&q.budgets[i]) <= S::zero() {
            return Err(Error::Invalid(format!("resource {i}: tolerance times budget must be positive")));
        }
        if find_negative_cycle(q.graph.n, &q.graph.arcs, &q.graph.weights[i]).is_some() {
            return Err(Error::Invalid(format!("resource {i} has a negative cycle")));
        }
    }
    Ok(())
}

const NO_ARC: u32 = u32::MAX;

enum Layers {
    Exact { scale: BigInt, layers: Vec<Vec<Option<i64>>> },
    Float(Vec<Vec<Option<f64>>>),
}

/// Hop-indexed DP table DP(v, η, h) with predecessor arcs.
///
/// Filling stops once a layer equals its predecessor; every later layer would
/// be identical, so lookups past that point read the settled one.
pub struct PatternTable<S> {
    n: usize,
    source: usize,
    arcs: Vec<(usize, usize)>,
    arc_offset: Vec<Option<isize>>,
    bx: PatternBox,
    deltas: Vec<S>,
    steps: Vec<Vec<i64>>,
    layers: Layers,
    pred: Vec<Vec<u32>>,
    hops: usize,
    keep_layers: bool,
    relaxations: u64,
}

impl<S: Scalar> PatternTable<S> {
    pub fn build(graph: &ResourceGraph<S>, source: usize, dims: &[DimSpec<S>], hops: usize, opts: &RcspOptions) -> Result<Self> {
        graph.check()?;
        if dims.len() != graph.dims() {
            return Err(Error::Invalid("one scaled dimension per resource expected".into()));
        }
        let bx = PatternBox::new(dims.iter().map(|d| d.lo).collect(), dims.iter().map(|d| d.hi).collect(), opts.max_patterns)?;
        let cells = bx.len().saturating_mul(graph.n).saturating_mul(hops + 1);
        if cells > opts.max_cells {
            return Err(Error::CapExceeded(format!("pattern table needs {cells} cells")));
        }
        let steps: Vec<Vec<i64>> = dims.iter().map(|d| d.steps.clone()).collect();
        let arc_offset = (0..graph.arcs.len()).map(|e| offset_of(&bx, &steps, e)).collect();
        let mut table = PatternTable {
            n: graph.n,
            source,
            arcs: graph.arcs.clone(),
            arc_offset,
            bx,
            deltas: dims.iter().map(|d| d.delta.clone()).collect(),
            steps,
            layers: Layers::Float(Vec::new()),
            pred: Vec::new(),
            hops,
            keep_layers: opts.keep_layers,
            relaxations: 0,
        };
        match encode(&graph.cost, hops.max(1)) {
            Encoded::Exact { values, scale } => {
                let layers = table.fill(&values);
                table.layers = Layers::Exact { scale, layers };
            }
            Encoded::Float(values) => {
                let layers = table.fill(&values);
                table.layers = Layers::Float(layers);
            }
        }
        Ok(table)
    }

    fn fill<C: DpCost>(&mut self, cost: &[C]) -> Vec<Vec<Option<C>>> {
        let p = self.bx.len();
        let n = self.n;
        let m = self.bx.lo.len();
        let origin: Vec<usize> = (0..p).filter(|&i| self.bx.pattern(i).iter().all(|&x| x >= 0)).collect();
        let init = |n: usize| {
            let mut layer = vec![None; n * p];
            for &i in &origin {
                layer[self.source * p + i] = Some(C::zero());
            }
            layer
        };
        let mut kept = Vec::new();
        let mut prev = init(n);
        if p == 0 {
            return vec![prev];
        }
        for _hop in 1..=self.hops {
            let mut cur = init(n);
            let mut pred = vec![NO_ARC; n * p];
            for (e, &(u, v)) in self.arcs.iter().enumerate() {
                let Some(offset) = self.arc_offset[e] else { continue };
                let mut ranges = Vec::with_capacity(m);
                let mut empty = false;
                for i in 0..m {
                    let d = self.steps[i][e];
                    let a = self.bx.lo[i].max(self.bx.lo[i] + d);
                    let b = self.bx.hi[i].min(self.bx.hi[i] + d);
                    if a > b {
                        empty = true;
                        break;
                    }
                    ranges.push((a, b));
                }
                if empty {
                    continue;
                }
                let c = cost[e];
                let (run_lo, run_hi) = ranges[m - 1];
                let run = (run_hi - run_lo + 1) as usize;
                let mut outer: Vec<i64> = ranges[..m - 1].iter().map(|r| r.0).collect();
                loop {
                    let mut start = vec![0i64; m];
                    start[..m - 1].copy_from_slice(&outer);
                    start[m - 1] = run_lo;
                    let base = self.bx.index(&start).expect("inside box");
                    let src = u * p;
                    let dst = v * p;
                    for idx in base..base + run {
                        let from = (idx as isize - offset) as usize;
                        if let Some(pc) = prev[src + from] {
                            let cand = pc.plus(c);
                            let slot = &mut cur[dst + idx];
                            if slot.is_none_or(|cv| cand.improves(cv)) {
                                *slot = Some(cand);
                                pred[dst + idx] = e as u32;
                            }
                        }
                    }
                    self.relaxations += run as u64;
                    let mut k = m - 1;
                    loop {
                        if k == 0 {
                            break;
                        }
                        k -= 1;
                        if outer[k] < ranges[k].1 {
                            outer[k] += 1;
                            for j in k + 1..m - 1 {
                                outer[j] = ranges[j].0;
                            }
                            k = usize::MAX;
                            break;
                        }
                    }
                    if k != usize::MAX {
                        break;
                    }
                }
            }
            if cur == prev {
                break;
            }
            if self.keep_layers {
                kept.push(prev);
            }
            prev = cur;
            self.pred.push(pred);
        }
        kept.push(prev);
        kept
    }

    pub fn patterns(&self) -> usize {
        self.bx.len()
    }

    pub fn pattern_box(&self) -> &PatternBox {
        &self.bx
    }

    pub fn relaxations(&self) -> u64 {
        self.relaxations
    }

    pub fn hop_limit(&self) -> usize {
        self.hops
    }

    pub fn deltas(&self) -> &[S] {
        &self.deltas
    }

    /// Number of hop layers actually computed before the table settled.
    pub fn settled_hops(&self) -> usize {
        self.pred.len()
    }

    fn layer_index(&self, h: usize) -> usize {
        let h = h.min(self.pred.len());
        if self.keep_layers {
            h
        } else {
            assert!(h == self.pred.len(), "hop layer {h} was not kept");
            0
        }
    }

    fn finite(&self, h: usize, cell: usize) -> bool {
        match &self.layers {
            Layers::Exact { layers, .. } => layers[h][cell].is_some(),
            Layers::Float(layers) => layers[h][cell].is_some(),
        }
    }

    fn cell(&self, v: usize, eta: &[i64]) -> Option<usize> {
        let idx = self.bx.index(eta)?;
        Some(v * self.bx.len() + idx)
    }

    /// DP(v, η, h), or `None` for infinity and for patterns outside the box.
    pub fn cost(&self, v: usize, eta: &[i64], h: usize) -> Option<S> {
        let cell = self.cell(v, eta)?;
        let h = self.layer_index(h);
        match &self.layers {
            Layers::Exact { scale, layers } => layers.get(h)?.get(cell)?.map(|x| decode_exact(x, scale)),
            Layers::Float(layers) => layers.get(h)?.get(cell)?.map(S::from_float),
        }
    }

    /// Arc sequence witnessing DP(v, η, h), reconstructed from predecessor links.
    pub fn walk(&self, v: usize, eta: &[i64], h: usize) -> Option<Vec<usize>> {
        let p = self.bx.len();
        let mut cell = self.cell(v, eta)?;
        if !self.finite(self.layer_index(h), cell) {
            return None;
        }
        let mut h = h.min(self.pred.len());
        let mut at = v;
        let mut walk = Vec::new();
        while h > 0 {
            let e = self.pred[h - 1][cell];
            if e == NO_ARC {
                break;
            }
            let e = e as usize;
            walk.push(e);
            at = self.arcs[e].0;
            let idx = (cell % p) as isize - self.arc_offset[e].expect("used arc has an offset");
            cell = at * p + idx as usize;
            h -= 1;
        }
        if at != self.source {
            return None;
        }
        walk.reverse();
        Some(walk)
    }

    /// Scaled consumption of a walk in units of each Δ.
    pub fn walk_pattern(&self, walk: &[usize]) -> Vec<i64> {
        (0..self.steps.len()).map(|i| walk.iter().map(|&e| self.steps[i][e]).sum()).collect()
    }
}

fn offset_of(bx: &PatternBox, steps: &[Vec<i64>], e: usize) -> Option<isize> {
    if bx.is_empty() {
        return None;
    }
    let m = bx.lo.len();
    let mut off: isize = 0;
    let mut stride: isize = 1;
    for i in (0..m).rev() {
        off += steps[i][e] as isize * stride;
        stride *= (bx.hi[i] - bx.lo[i] + 1).max(1) as isize;
    }
    Some(off)
}

fn finish<S: Scalar>(q: &RcspQuery<'_, S>, table: &PatternTable<S>, answer: &[i64]) -> Result<RcspResult<S>> {
    let walk = table.walk(q.sink, answer, q.graph.n).ok_or_else(|| Error::Infeasible("no path within the budgets".into()))?;
    let path = simplify_walk(&q.graph.arcs, q.source, &walk);
    let cost = path.iter().fold(S::zero(), |acc, &e| acc.add_ref(&q.graph.cost[e]));
    let consumption = (0..q.graph.dims()).map(|i| path.iter().fold(S::zero(), |acc, &e| acc.add_ref(&q.graph.weights[i][e]))).collect();
    Ok(RcspResult { path, cost, consumption, patterns: table.patterns(), relaxations: table.relaxations() })
}

fn run<S: Scalar>(q: &RcspQuery<'_, S>, dims: &[DimSpec<S>], answer: &[i64], opts: &RcspOptions) -> Result<RcspResult<S>> {
    let table = PatternTable::build(q.graph, q.source, dims, q.graph.n, opts)?;
    finish(q, &table, answer)
}

/// (1; 1+ε₁, …, 1+ε_m)-approximation: cost at most the strict optimum and
/// consumption at most (1+ε_i)·L_i.
pub fn solve<S: Scalar>(q: &RcspQuery<'_, S>, opts: &RcspOptions) -> Result<RcspResult<S>> {
    let dims = scale_weights(q)?;
    let answer = answer_pattern(q, &dims)?;
    run(q, &dims, &answer, opts)
}

fn answer_pattern<S: Scalar>(q: &RcspQuery<'_, S>, dims: &[DimSpec<S>]) -> Result<Vec<i64>> {
    (0..dims.len())
        .map(|i| {
            let relaxed = (S::one() + q.tolerances[i].clone()).mul_ref(&q.budgets[i]);
            dims[i].pattern_for(&relaxed).ok_or_else(|| Error::CapExceeded("answer pattern out of range".into()))
        })
        .collect()
}

/// Exact optimum under strict budgets for integral consumptions.
///
/// Each dimension is scaled with Δ = 1, so rounding is the identity and the
/// table is read at the strict budget ⌊L_i⌋ instead of the relaxed one.
pub fn solve_exact_integer<S: Scalar>(q: &RcspQuery<'_, S>, opts: &RcspOptions) -> Result<RcspResult<S>> {
    let mut q = q.clone();
    if q.budgets.iter().any(|b| b.is_zero()) {
        return Err(Error::Invalid("zero budget".into()));
    }
    q.tolerances = q.budgets.iter().map(|b| S::int(q.graph.n as i64 - 1).div_ref(b)).collect();
    let q = &q;
    check_query(q)?;
    let dims = (0..q.graph.dims()).map(|i| DimSpec::exact(&q.graph.weights[i], q.graph.n, &q.budgets[i])).collect::<Result<Vec<_>>>()?;
    let answer = strict_answer(q, &dims, q.graph.dims())?;
    run(q, &dims, &answer, opts)
}

fn strict_answer<S: Scalar>(q: &RcspQuery<'_, S>, dims: &[DimSpec<S>], count: usize) -> Result<Vec<i64>> {
    (0..count).map(|i| dims[i].pattern_for(&q.budgets[i]).ok_or_else(|| Error::CapExceeded("budget out of range".into()))).collect()
}

/// Resources 1..m−1 integral and met exactly; resource m rational, non-negative,
/// met within factor (1+ζ); cost at most the strict optimum.
pub fn solve_one_rational<S: Scalar>(q: &RcspQuery<'_, S>, zeta: &S, opts: &RcspOptions) -> Result<RcspResult<S>> {
    let m = q.graph.dims();
    let mut q = q.clone();
    if m == 0 {
        return Err(Error::Invalid("at least one resource required".into()));
    }
    if *zeta <= S::zero() {
        return Err(Error::Invalid("ζ must be positive".into()));
    }
    if q.budgets[m - 1] <= S::zero() || q.graph.weights[m - 1].iter().any(|w| *w < S::zero()) {
        return Err(Error::Invalid("the rational resource needs non-negative weights and a positive budget".into()));
    }
    q.tolerances[m - 1] = zeta.clone();
    for i in 0..m - 1 {
        q.tolerances[i] = S::int(q.graph.n as i64 - 1).div_ref(&q.budgets[i]);
    }
    check_query(&q)?;
    let mut dims = (0..m - 1).map(|i| DimSpec::exact(&q.graph.weights[i], q.graph.n, &q.budgets[i])).collect::<Result<Vec<_>>>()?;
    dims.push(DimSpec::approximate(&q.graph.weights[m - 1], q.graph.n, &q.budgets[m - 1], zeta)?);
    let mut answer = strict_answer(&q, &dims, m - 1)?;
    let relaxed = (S::one() + zeta.clone()).mul_ref(&q.budgets[m - 1]);
    answer.push(dims[m - 1].pattern_for(&relaxed).ok_or_else(|| Error::CapExceeded("answer pattern out of range".into()))?);
    run(&q, &dims, &answer, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn r(x: i64) -> Rational {
        Rational::int(x)
    }

    fn q(x: i64, y: i64) -> Rational {
        Rational::ratio(x, y)
    }

    #[test]
    fn scaling_examples() {
        let d = DimSpec::approximate(&[q(23, 10), q(-3, 2), r(2)], 3, &r(4), &q(1, 2)).unwrap();
        assert_eq!(d.delta, r(1));
        assert_eq!(d.steps, vec![3, -1, 2]);
    }

    #[test]
    fn pattern_ranges() {
        let d = DimSpec::approximate(&[r(1), r(2)], 3, &r(4), &r(1)).unwrap();
        assert_eq!(d.delta, r(2));
        assert_eq!(enumerate_valid_patterns(&[d], 100).unwrap(), (0..=4).map(|x| vec![x]).collect::<Vec<_>>());
        let d = DimSpec::approximate(&[r(-1), r(2)], 2, &r(2), &r(1)).unwrap();
        assert_eq!(d.delta, r(2));
        assert_eq!(enumerate_valid_patterns(&[d], 100).unwrap(), (-1..=3).map(|x| vec![x]).collect::<Vec<_>>());
    }

    #[test]
    fn pattern_cap_is_enforced() {
        let d = DimSpec::approximate(&[r(1)], 3, &r(4), &q(1, 1000)).unwrap();
        assert!(matches!(enumerate_valid_patterns(&[d], 100), Err(Error::CapExceeded(_))));
    }

    #[test]
    fn single_edge() {
        let g = ResourceGraph::new(2, vec![(0, 1)], vec![r(5)], vec![vec![r(3)]]);
        let query = RcspQuery { graph: &g, source: 0, sink: 1, budgets: vec![r(4)], tolerances: vec![q(1, 2)] };
        let res = solve(&query, &RcspOptions::default()).unwrap();
        assert_eq!(res.path, vec![0]);
        assert_eq!(res.cost, r(5));

        let g = ResourceGraph::new(2, vec![(0, 1)], vec![r(5)], vec![vec![r(10)]]);
        let query = RcspQuery { graph: &g, source: 0, sink: 1, budgets: vec![r(4)], tolerances: vec![q(1, 10)] };
        assert!(matches!(solve(&query, &RcspOptions::default()), Err(Error::Infeasible(_))));
    }

    #[test]
    fn negative_consumption_detour() {
        // s=0, a=1, t=2
        let g = ResourceGraph::new(3, vec![(0, 1), (1, 2), (0, 2)], vec![r(1), r(1), r(9)], vec![vec![r(5), r(-4), r(2)]]);
        let query = RcspQuery { graph: &g, source: 0, sink: 2, budgets: vec![r(2)], tolerances: vec![q(1, 4)] };
        let res = solve(&query, &RcspOptions::default()).unwrap();
        assert!(res.cost <= r(2));
        assert!(res.consumption[0] <= q(5, 2));
        assert_eq!(res.path, vec![0, 1]);
        assert_eq!(res.consumption, vec![r(1)]);
    }

    #[test]
    fn exact_integer_variants() {
        let g = ResourceGraph::new(3, vec![(0, 1), (1, 2), (0, 2)], vec![r(1), r(1), r(5)], vec![vec![r(0), r(0), r(0)]]);
        let query = RcspQuery { graph: &g, source: 0, sink: 2, budgets: vec![r(1)], tolerances: vec![r(1)] };
        let res = solve_exact_integer(&query, &RcspOptions::default()).unwrap();
        assert_eq!(res.cost, r(2));

        let g = ResourceGraph::new(2, vec![(0, 1)], vec![r(1)], vec![vec![r(0)]]);
        let query = RcspQuery { graph: &g, source: 0, sink: 1, budgets: vec![r(-1)], tolerances: vec![r(-1)] };
        assert!(matches!(solve_exact_integer(&query, &RcspOptions::default()), Err(Error::Infeasible(_))));
    }

    #[test]
    fn exact_integer_is_strict() {
        // Path 0-1-2 uses 3 units, the direct arc 4 units; budget 3 must reject the direct arc.
        let g = ResourceGraph::new(3, vec![(0, 1), (1, 2), (0, 2)], vec![r(5), r(5), r(1)], vec![vec![r(1), r(2), r(4)]]);
        let query = RcspQuery { graph: &g, source: 0, sink: 2, budgets: vec![r(3)], tolerances: vec![r(1)] };
        let res = solve_exact_integer(&query, &RcspOptions::default()).unwrap();
        assert_eq!(res.path, vec![0, 1]);
        assert_eq!(res.cost, r(10));
    }

    #[test]
    fn one_rational_without_rational_load() {
        let g = ResourceGraph::new(
            3,
            vec![(0, 1), (1, 2), (0, 2)],
            vec![r(1), r(1), r(5)],
            vec![vec![r(1), r(1), r(1)], vec![r(0), r(0), r(0)]],
        );
        let query = RcspQuery { graph: &g, source: 0, sink: 2, budgets: vec![r(2), r(1)], tolerances: vec![r(1), r(1)] };
        let a = solve_one_rational(&query, &r(1), &RcspOptions::default()).unwrap();
        let single = ResourceGraph::new(3, g.arcs.clone(), g.cost.clone(), vec![g.weights[0].clone()]);
        let q1 = RcspQuery { graph: &single, source: 0, sink: 2, budgets: vec![r(2)], tolerances: vec![r(1)] };
        let b = solve_exact_integer(&q1, &RcspOptions::default()).unwrap();
        assert_eq!(a.cost, b.cost);
    }

    #[test]
    fn condition_vector() {
        let g = ResourceGraph::new(2, vec![(0, 1)], vec![r(1)], vec![vec![r(-3)], vec![r(-3)], vec![r(2)]]);
        let query = RcspQuery { graph: &g, source: 0, sink: 1, budgets: vec![r(6), r(-2), r(1)], tolerances: vec![r(1), r(-1), r(1)] };
        assert_eq!(resource_condition(&query), vec![q(1, 2), q(3, 2), r(0)]);
    }

    #[test]
    fn relaxation_counter_bound() {
        let g = ResourceGraph::new(
            4,
            vec![(0, 1), (1, 2), (2, 3), (0, 2), (1, 3)],
            vec![r(1), r(2), r(3), r(4), r(5)],
            vec![vec![r(1), r(-1), r(2), r(3), r(1)], vec![r(2), r(2), r(0), r(1), r(1)]],
        );
        let query = RcspQuery { graph: &g, source: 0, sink: 3, budgets: vec![r(3), r(4)], tolerances: vec![q(1, 2), q(1, 2)] };
        let res = solve(&query, &RcspOptions::default()).unwrap();
        assert!(res.relaxations <= (g.arcs.len() * g.n * res.patterns) as u64);
    }
}

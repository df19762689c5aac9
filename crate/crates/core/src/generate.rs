//! Seeded instance generators.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::{find_negative_cycle, shortest_distances, validate_instance, Instance, RouteSolution};
use crate::rng::Seed;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Random,
    HubPlanted,
    BackbonePlanted,
    NegativeLength,
    SingleSource,
}

impl Kind {
    pub const ALL: [Kind; 5] = [Kind::Random, Kind::HubPlanted, Kind::BackbonePlanted, Kind::NegativeLength, Kind::SingleSource];

    pub fn name(&self) -> &'static str {
        match self {
            Kind::Random => "random",
            Kind::HubPlanted => "hub-planted",
            Kind::BackbonePlanted => "backbone-planted",
            Kind::NegativeLength => "negative-length",
            Kind::SingleSource => "single-source",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        Kind::ALL.into_iter().find(|k| k.name() == text)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenParams {
    pub n: usize,
    pub k: usize,
    pub edge_probability: f64,
    pub max_length: i64,
    pub max_sigma: i64,
    pub max_delta: i64,
    pub max_demand: u64,
    /// Denominator of random weights; 1 keeps everything integral.
    pub denominator: i64,
    /// Budget = shortest distance + slack·|shortest distance|.
    pub slack: f64,
    /// Hub count (hub-planted) or backbone length (backbone-planted).
    pub hubs: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n: 8,
            k: 3,
            edge_probability: 0.35,
            max_length: 5,
            max_sigma: 10,
            max_delta: 3,
            max_demand: 1,
            denominator: 1,
            slack: 0.5,
            hubs: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generated<S> {
    pub instance: Instance<S>,
    /// Known feasible solution for planted kinds.
    pub planted: Option<RouteSolution<S>>,
}

fn value<S: Scalar>(rng: &mut ChaCha8Rng, lo: i64, hi: i64, den: i64) -> S {
    S::ratio(rng.gen_range(lo * den..=hi * den), den)
}

fn check(p: &GenParams, min_n: usize) -> Result<()> {
    if p.n < min_n {
        return Err(Error::Invalid(format!("need n ≥ {min_n}")));
    }
    if p.max_length < 1 || p.max_sigma < 0 || p.max_delta < 0 || p.denominator < 1 || p.max_demand < 1 {
        return Err(Error::Invalid("weight ranges must be non-empty".into()));
    }
    if !(0.0..=1.0).contains(&p.edge_probability) || p.slack < 0.0 {
        return Err(Error::Invalid("edge probability must lie in [0, 1] and slack be non-negative".into()));
    }
    Ok(())
}

/// Random digraph containing a random Hamiltonian cycle.
fn random_edges<S: Scalar>(rng: &mut ChaCha8Rng, p: &GenParams, min_length: i64) -> Instance<S> {
    let mut inst = Instance::new(p.n);
    let mut order: Vec<usize> = (0..p.n).collect();
    order.shuffle(rng);
    let mut pairs = BTreeSet::new();
    for i in 0..p.n {
        pairs.insert((order[i], order[(i + 1) % p.n]));
    }
    for u in 0..p.n {
        for v in 0..p.n {
            if u != v && rng.gen_bool(p.edge_probability) {
                pairs.insert((u, v));
            }
        }
    }
    for (u, v) in pairs {
        let len = value(rng, min_length, p.max_length, p.denominator);
        let sigma = value(rng, 0, p.max_sigma, p.denominator);
        let delta = value(rng, 0, p.max_delta, p.denominator);
        inst.add_edge(u, v, len, sigma, delta);
    }
    inst
}

/// Budget at least the shortest distance, never zero.
fn budget<S: Scalar>(dist: &S, slack: f64, den: i64) -> S {
    let extra = (dist.approx().abs() * slack * den as f64).floor() as i64;
    let b = dist.add_ref(&S::ratio(extra, den));
    if b.is_zero() {
        S::ratio(1, den)
    } else {
        b
    }
}

fn add_random_demands<S: Scalar>(rng: &mut ChaCha8Rng, inst: &mut Instance<S>, p: &GenParams, source: Option<usize>) -> Result<()> {
    let arcs = inst.arcs();
    let lengths = inst.lengths();
    let mut candidates = Vec::new();
    for s in 0..p.n {
        if source.is_some_and(|x| x != s) {
            continue;
        }
        let dist = shortest_distances(p.n, &arcs, &lengths, s);
        for (t, d) in dist.into_iter().enumerate() {
            if t != s {
                if let Some(d) = d {
                    candidates.push((s, t, d));
                }
            }
        }
    }
    if candidates.len() < p.k {
        return Err(Error::Invalid(format!("only {} distinct reachable pairs for k = {}", candidates.len(), p.k)));
    }
    candidates.shuffle(rng);
    for (s, t, d) in candidates.into_iter().take(p.k) {
        let dem = rng.gen_range(1..=p.max_demand);
        inst.add_demand(s, t, dem, budget(&d, p.slack, p.denominator));
    }
    Ok(())
}

/// Re-rolls lengths on negative cycles until none is left, keeping at least
/// one negative edge.
fn repair_cycles<S: Scalar>(rng: &mut ChaCha8Rng, inst: &mut Instance<S>, p: &GenParams) {
    loop {
        let Some(cycle) = find_negative_cycle(inst.n, &inst.arcs(), &inst.lengths()) else { break };
        let e = cycle[rng.gen_range(0..cycle.len())];
        inst.edges[e].length = value(rng, 0, p.max_length, p.denominator);
    }
    if inst.edges.iter().any(|e| e.length < S::zero()) {
        return;
    }
    let mut ids: Vec<usize> = (0..inst.edges.len()).collect();
    ids.shuffle(rng);
    for e in ids {
        let old = std::mem::replace(&mut inst.edges[e].length, S::int(-1));
        if find_negative_cycle(inst.n, &inst.arcs(), &inst.lengths()).is_none() {
            return;
        }
        inst.edges[e].length = old;
    }
}

/// Hubs 0..h connect every source and sink with unit-cost edges, so each
/// pair's cheap feasible paths cover every hub. Planted routes use hub 0.
fn hub_planted<S: Scalar>(rng: &mut ChaCha8Rng, p: &GenParams) -> Result<Generated<S>> {
    let h = p.hubs.max(1);
    if p.n < h + 2 {
        return Err(Error::Invalid("hub-planted needs n ≥ hubs + 2".into()));
    }
    let mut others: Vec<usize> = (h..p.n).collect();
    others.shuffle(rng);
    let half = others.len() / 2;
    let (srcs, snks) = (others[..half].to_vec(), others[half..].to_vec());
    let mut pairs = Vec::new();
    for i in 0..p.k {
        pairs.push((srcs[i % srcs.len()], snks[(i / srcs.len() + i) % snks.len()]));
    }
    let mut inst = Instance::new(p.n);
    let mut index = BTreeMap::new();
    let terminals: BTreeSet<usize> = pairs.iter().flat_map(|&(s, t)| [s, t]).collect();
    for hub in 0..h {
        for &(s, t) in &pairs {
            for (u, v) in [(s, hub), (hub, t)] {
                index.entry((u, v)).or_insert_with(|| inst.add_edge(u, v, S::one(), S::one(), S::one()));
            }
        }
    }
    let expensive = S::int(20 * p.max_sigma.max(1));
    for u in 0..p.n {
        for v in 0..p.n {
            if u != v && !index.contains_key(&(u, v)) && !(u < h && terminals.contains(&v)) && rng.gen_bool(p.edge_probability) {
                let len = value(rng, 1, p.max_length, p.denominator);
                let delta = value(rng, 0, p.max_delta, p.denominator);
                index.insert((u, v), inst.add_edge(u, v, len, expensive.clone(), delta));
            }
        }
    }
    let mut planted = RouteSolution::new(S::zero());
    for (i, &(s, t)) in pairs.iter().enumerate() {
        inst.add_demand(s, t, 1, S::int(2));
        planted.routes.insert(i, vec![index[&(s, 0)], index[&(0, t)]]);
    }
    Ok(Generated { instance: inst, planted: Some(planted) })
}

/// Every pair can share a backbone path of expensive upfront cost; each pair
/// also has a private detour that is cheap to buy but costly to use.
fn backbone_planted<S: Scalar>(rng: &mut ChaCha8Rng, p: &GenParams) -> Result<Generated<S>> {
    let m = p.hubs.max(1);
    if p.n < m + 2 {
        return Err(Error::Invalid("backbone-planted needs n ≥ backbone + 2".into()));
    }
    let mut others: Vec<usize> = (m..p.n).collect();
    others.shuffle(rng);
    let half = others.len() / 2;
    let (srcs, snks) = (others[..half].to_vec(), others[half..].to_vec());
    let mut inst = Instance::new(p.n);
    let mut index = BTreeMap::new();
    let backbone_sigma = S::int(p.max_sigma.max(1));
    let mut spine = Vec::new();
    for b in 0..m - 1 {
        let e = inst.add_edge(b, b + 1, S::one(), backbone_sigma.clone(), S::zero());
        index.insert((b, b + 1), e);
        spine.push(e);
    }
    let mut pairs = Vec::new();
    let mut used = BTreeSet::new();
    for i in 0..p.k {
        let pair = (srcs[i % srcs.len()], snks[(i / srcs.len() + i) % snks.len()]);
        if used.insert(pair) {
            pairs.push(pair);
        }
    }
    let mut planted = RouteSolution::new(S::zero());
    for (i, &(s, t)) in pairs.iter().enumerate() {
        let a = *index.entry((s, 0)).or_insert_with(|| inst.add_edge(s, 0, S::one(), S::one(), S::zero()));
        let b = *index.entry((m - 1, t)).or_insert_with(|| inst.add_edge(m - 1, t, S::one(), S::one(), S::zero()));
        let detour_len = S::int(m as i64 + 1);
        index.entry((s, t)).or_insert_with(|| {
            let delta = value::<S>(rng, 1, p.max_delta.max(1), p.denominator).mul_ref(&S::int(m as i64));
            inst.add_edge(s, t, detour_len.clone(), S::int(2), delta)
        });
        let slack = S::int((p.slack * (m + 1) as f64).floor() as i64);
        inst.add_demand(s, t, 1, detour_len.add_ref(&slack));
        let mut route = vec![a];
        route.extend(&spine);
        route.push(b);
        planted.routes.insert(i, route);
    }
    for u in 0..p.n {
        for v in 0..p.n {
            if u != v && !index.contains_key(&(u, v)) && rng.gen_bool(p.edge_probability) {
                let len = value(rng, 1, p.max_length, p.denominator);
                let sigma = S::int(3 * p.max_sigma.max(1));
                let delta = value(rng, 0, p.max_delta, p.denominator);
                index.insert((u, v), inst.add_edge(u, v, len, sigma, delta));
            }
        }
    }
    Ok(Generated { instance: inst, planted: Some(planted) })
}

pub fn generate<S: Scalar>(kind: Kind, params: &GenParams, seed: Seed) -> Result<Generated<S>> {
    check(params, 2)?;
    let mut rng = seed.stream("generate");
    let out = match kind {
        Kind::Random => {
            let mut inst = random_edges(&mut rng, params, 1);
            add_random_demands(&mut rng, &mut inst, params, None)?;
            Generated { instance: inst, planted: None }
        }
        Kind::NegativeLength => {
            let mut inst = random_edges(&mut rng, params, -params.max_length);
            repair_cycles(&mut rng, &mut inst, params);
            add_random_demands(&mut rng, &mut inst, params, None)?;
            Generated { instance: inst, planted: None }
        }
        Kind::SingleSource => {
            let mut inst = random_edges(&mut rng, params, 1);
            let s = rng.gen_range(0..params.n);
            add_random_demands(&mut rng, &mut inst, params, Some(s))?;
            Generated { instance: inst, planted: None }
        }
        Kind::HubPlanted => hub_planted(&mut rng, params)?,
        Kind::BackbonePlanted => backbone_planted(&mut rng, params)?,
    };
    validate_instance(&out.instance).into_result()?;
    if let Some(planted) = &out.planted {
        crate::instance::check_solution(&out.instance, planted)?;
    }
    Ok(out)
}

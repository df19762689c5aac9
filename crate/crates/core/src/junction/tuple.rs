//! Tuple trees over the leveled graph, with pay-per-use folded into terminal edges.

use std::collections::BTreeMap;

use super::leveled::LeveledGraph;
use super::scaled::ScaledGraph;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::scalar::Scalar;

/// One tuple (r, v₁, …, v_i). Its arc to the parent is the shortcut
/// `(from, to, option)` of the leveled graph.
#[derive(Clone, Debug, PartialEq)]
pub struct TupleNode<S> {
    pub parent: Option<usize>,
    pub level: usize,
    pub vertex: usize,
    pub shortcut: Option<(usize, usize, usize)>,
    /// Upfront cost of the arc to the parent.
    pub weight: S,
    /// Σδ along the unique path to the root.
    pub eta: S,
    /// Scaled length of that path in units of Δ.
    pub label: i64,
}

/// Terminal edge joining a pair's terminal copy to a leaf, with upfront cost η·Dem.
#[derive(Clone, Debug, PartialEq)]
pub struct TerminalEdge<S> {
    pub pair: usize,
    pub node: usize,
    pub label: i64,
    pub cost: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HalfTree<S> {
    pub nodes: Vec<TupleNode<S>>,
    pub terminals: Vec<TerminalEdge<S>>,
}

impl<S: Scalar> HalfTree<S> {
    /// Node ids from `node` up to (excluding) the root.
    pub fn chain(&self, mut node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        while let Some(p) = self.nodes[node].parent {
            out.push(node);
            node = p;
        }
        out
    }
}

/// T̄_r: the up tree (terminals toward r) and the down tree (r toward terminals).
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedTree<S> {
    pub root: usize,
    pub h: usize,
    pub up: HalfTree<S>,
    pub down: HalfTree<S>,
    /// Pair → largest admissible I + J.
    pub caps: BTreeMap<usize, i64>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Dir {
    Up,
    Down,
}

fn grow<S: Scalar>(
    leveled: &LeveledGraph<S>,
    scaled: &ScaledGraph<S>,
    root: usize,
    dir: Dir,
    leaves: &[usize],
    max_nodes: usize,
) -> Result<Vec<TupleNode<S>>> {
    let mut nodes = vec![TupleNode { parent: None, level: 0, vertex: root, shortcut: None, weight: S::zero(), eta: S::zero(), label: 0 }];
    let mut frontier = vec![0usize];
    for level in 1..=leveled.h {
        let targets: Vec<usize> = if level == leveled.h { leaves.to_vec() } else { (0..leveled.n).collect() };
        let mut next = Vec::new();
        for &at in &frontier {
            let w = nodes[at].vertex;
            for &v in &targets {
                let (from, to) = if dir == Dir::Up { (v, w) } else { (w, v) };
                for (k, s) in leveled.shortcuts(from, to).iter().enumerate() {
                    let label = nodes[at].label + s.len;
                    if !scaled.is_valid_label(label) {
                        continue;
                    }
                    if nodes.len() >= max_nodes {
                        return Err(Error::CapExceeded(format!("tuple tree exceeds {max_nodes} nodes")));
                    }
                    next.push(nodes.len());
                    nodes.push(TupleNode {
                        parent: Some(at),
                        level,
                        vertex: v,
                        shortcut: Some((from, to, k)),
                        weight: s.sigma.clone(),
                        eta: nodes[at].eta.add_ref(&s.delta),
                        label,
                    });
                }
            }
        }
        frontier = next;
    }
    Ok(nodes)
}

/// Keeps nodes with a terminal below them and renumbers so parents precede children.
fn prune<S: Scalar>(half: HalfTree<S>) -> HalfTree<S> {
    let mut live = vec![false; half.nodes.len()];
    live[0] = true;
    for t in &half.terminals {
        let mut v = t.node;
        while !live[v] {
            live[v] = true;
            v = half.nodes[v].parent.expect("non-root has a parent");
        }
    }
    let mut map = vec![usize::MAX; half.nodes.len()];
    let mut nodes = Vec::new();
    for (i, mut node) in half.nodes.into_iter().enumerate() {
        if live[i] {
            node.parent = node.parent.map(|p| map[p]);
            map[i] = nodes.len();
            nodes.push(node);
        }
    }
    let terminals = half.terminals.into_iter().map(|t| TerminalEdge { node: map[t.node], ..t }).collect();
    HalfTree { nodes, terminals }
}

pub fn build_tuple_trees<S: Scalar>(
    inst: &Instance<S>,
    scaled: &ScaledGraph<S>,
    leveled: &LeveledGraph<S>,
    root: usize,
    pairs: &[usize],
    max_nodes: usize,
) -> Result<ReducedTree<S>> {
    let mut caps = BTreeMap::new();
    for &p in pairs {
        caps.insert(p, scaled.label_cap(inst, p)?);
    }
    let mut sources: Vec<usize> = pairs.iter().map(|&p| inst.demands[p].source).collect();
    let mut sinks: Vec<usize> = pairs.iter().map(|&p| inst.demands[p].sink).collect();
    sources.sort_unstable();
    sources.dedup();
    sinks.sort_unstable();
    sinks.dedup();
    let up_nodes = grow(leveled, scaled, root, Dir::Up, &sources, max_nodes)?;
    let down_nodes = grow(leveled, scaled, root, Dir::Down, &sinks, max_nodes)?;
    let attach = |nodes: &[TupleNode<S>], end: fn(&crate::instance::Demand<S>) -> usize| {
        let mut out = Vec::new();
        for (i, node) in nodes.iter().enumerate().filter(|(_, n)| n.level == leveled.h) {
            for &p in pairs {
                if end(&inst.demands[p]) == node.vertex {
                    let cost = node.eta.mul_ref(&inst.demand_scalar(p));
                    out.push(TerminalEdge { pair: p, node: i, label: node.label, cost });
                }
            }
        }
        out
    };
    let mut up_terms = attach(&up_nodes, |d| d.source);
    let mut down_terms = attach(&down_nodes, |d| d.sink);
    let min_label = |terms: &[TerminalEdge<S>], p: usize| terms.iter().filter(|t| t.pair == p).map(|t| t.label).min();
    let up_min: BTreeMap<usize, Option<i64>> = pairs.iter().map(|&p| (p, min_label(&up_terms, p))).collect();
    let down_min: BTreeMap<usize, Option<i64>> = pairs.iter().map(|&p| (p, min_label(&down_terms, p))).collect();
    up_terms.retain(|t| down_min[&t.pair].is_some_and(|j| t.label + j <= caps[&t.pair]));
    down_terms.retain(|t| up_min[&t.pair].is_some_and(|i| t.label + i <= caps[&t.pair]));
    Ok(ReducedTree {
        root,
        h: leveled.h,
        up: prune(HalfTree { nodes: up_nodes, terminals: up_terms }),
        down: prune(HalfTree { nodes: down_nodes, terminals: down_terms }),
        caps,
    })
}

impl<S: Scalar> ReducedTree<S> {
    /// Original-graph walk from the pair's source to r through an up terminal.
    pub fn in_walk(&self, leveled: &LeveledGraph<S>, terminal: usize) -> Vec<usize> {
        let t = &self.up.terminals[terminal];
        let mut walk = Vec::new();
        for node in self.up.chain(t.node) {
            let (from, to, k) = self.up.nodes[node].shortcut.expect("non-root");
            walk.extend_from_slice(&leveled.shortcuts(from, to)[k].path);
        }
        walk
    }

    /// Original-graph walk from r to the pair's sink through a down terminal.
    pub fn out_walk(&self, leveled: &LeveledGraph<S>, terminal: usize) -> Vec<usize> {
        let t = &self.down.terminals[terminal];
        let mut walk = Vec::new();
        for node in self.down.chain(t.node).into_iter().rev() {
            let (from, to, k) = self.down.nodes[node].shortcut.expect("non-root");
            walk.extend_from_slice(&leveled.shortcuts(from, to)[k].path);
        }
        walk
    }

    pub fn size(&self) -> usize {
        self.up.nodes.len() + self.down.nodes.len() + self.up.terminals.len() + self.down.terminals.len()
    }
}

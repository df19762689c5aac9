use std::collections::HashMap;

use super::scaled::ScaledGraph;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    /// Copies on the way into the root; the label is the remaining scaled distance to r.
    In,
    /// Copies on the way out of the root; the label is the scaled distance from r.
    Out,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LayerVertex {
    Root,
    Copy {
        v: usize,
        label: i64,
        side: Side,
    },
    /// (s^t, I·Δ) for pair `pair`.
    Source {
        pair: usize,
        label: i64,
    },
    /// (t^s, J·Δ) for pair `pair`.
    Sink {
        pair: usize,
        label: i64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerArc {
    pub tail: usize,
    pub head: usize,
    /// Original edge, or `None` for a zero-cost terminal attachment.
    pub edge: Option<usize>,
}

/// Distance-indexed layered graph for a fixed root.
#[derive(Clone, Debug, PartialEq)]
pub struct LayeredGraph {
    pub root: usize,
    pub t_minus: i64,
    pub t_plus: i64,
    pub vertices: Vec<LayerVertex>,
    pub arcs: Vec<LayerArc>,
    /// Largest admissible I + J per pair.
    pub caps: Vec<i64>,
    index: HashMap<LayerVertex, usize>,
}

impl LayeredGraph {
    pub fn id(&self, v: &LayerVertex) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn out_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (i, a) in self.arcs.iter().enumerate() {
            adj[a.tail].push(i);
        }
        adj
    }

    pub fn labels(&self) -> std::ops::RangeInclusive<i64> {
        self.t_minus..=self.t_plus
    }

    /// Membership in R_{s,t}.
    pub fn related(&self, pair: usize, i: i64, j: i64) -> bool {
        i + j <= self.caps[pair]
    }

    /// Projection of a layered path onto original edges.
    pub fn project(&self, path: &[usize]) -> Vec<usize> {
        path.iter().filter_map(|&a| self.arcs[a].edge).collect()
    }
}

pub fn build_layered<S: Scalar>(inst: &Instance<S>, scaled: &ScaledGraph<S>, root: usize, max_vertices: usize) -> Result<LayeredGraph> {
    if root >= inst.n {
        return Err(Error::Invalid(format!("root {root} is not a vertex")));
    }
    let width = scaled.layer_count() as u128;
    let needed = width * (2 * inst.n as u128 + 2 * inst.demands.len() as u128);
    if needed > max_vertices as u128 {
        return Err(Error::CapExceeded(format!("layered graph needs {needed} vertices")));
    }
    let mut g = LayeredGraph {
        root,
        t_minus: scaled.t_minus,
        t_plus: scaled.t_plus,
        vertices: Vec::new(),
        arcs: Vec::new(),
        caps: (0..inst.demands.len()).map(|p| scaled.label_cap(inst, p)).collect::<Result<_>>()?,
        index: HashMap::new(),
    };
    let add = |g: &mut LayeredGraph, v: LayerVertex| {
        let id = g.vertices.len();
        g.vertices.push(v);
        g.index.insert(v, id);
    };
    add(&mut g, LayerVertex::Root);
    for side in [Side::In, Side::Out] {
        for v in (0..inst.n).filter(|&v| v != root) {
            for label in g.labels() {
                add(&mut g, LayerVertex::Copy { v, label, side });
            }
        }
    }
    let copy = |g: &LayeredGraph, v: usize, label: i64, side: Side| {
        if v == root {
            (label == 0).then_some(0)
        } else {
            g.id(&LayerVertex::Copy { v, label, side })
        }
    };
    for (e, edge) in inst.edges.iter().enumerate() {
        let d = scaled.mult[e];
        for i in g.labels() {
            if let (Some(a), Some(b)) = (copy(&g, edge.tail, i, Side::In), copy(&g, edge.head, i - d, Side::In)) {
                g.arcs.push(LayerArc { tail: a, head: b, edge: Some(e) });
            }
            if let (Some(a), Some(b)) = (copy(&g, edge.tail, i, Side::Out), copy(&g, edge.head, i + d, Side::Out)) {
                g.arcs.push(LayerArc { tail: a, head: b, edge: Some(e) });
            }
        }
    }
    for (pair, d) in inst.demands.iter().enumerate() {
        for label in g.labels() {
            add(&mut g, LayerVertex::Source { pair, label });
            add(&mut g, LayerVertex::Sink { pair, label });
            let s = g.id(&LayerVertex::Source { pair, label }).expect("just added");
            let t = g.id(&LayerVertex::Sink { pair, label }).expect("just added");
            if let Some(a) = copy(&g, d.source, label, Side::In) {
                g.arcs.push(LayerArc { tail: s, head: a, edge: None });
            }
            if let Some(b) = copy(&g, d.sink, label, Side::Out) {
                g.arcs.push(LayerArc { tail: b, head: t, edge: None });
            }
        }
    }
    Ok(g)
}

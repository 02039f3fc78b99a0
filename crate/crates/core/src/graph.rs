//! Directed IC-model networks.
//!
//! Nodes are dense indices `0..N`. Edges are stored in compressed sparse row
//! order sorted by `(tail, head)`, so an [`EdgeId`] is stable for the lifetime
//! of the network and can index per-edge side tables (removal masks, coin
//! streams). The original identifiers from the input file are kept for I/O.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::state::NodeSet;

pub type NodeId = usize;
pub type EdgeId = usize;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeRef {
    pub id: EdgeId,
    pub tail: NodeId,
    pub head: NodeId,
    pub prob: f64,
}

/// How propagation probabilities are assigned to the edges of a network.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProbabilityModel {
    /// Every edge gets the same probability.
    Uniform(f64),
    /// Edge `(u, v)` gets `1 / indeg(v)`.
    WeightedCascade,
    /// Keep the probabilities read from the input.
    Explicit,
}

impl FromStr for ProbabilityModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "wc" | "weighted-cascade" => Ok(ProbabilityModel::WeightedCascade),
            "explicit" => Ok(ProbabilityModel::Explicit),
            _ => {
                let p = s
                    .strip_prefix("uniform:")
                    .ok_or_else(|| Error::invalid(format!("unknown probability model `{s}`")))?;
                let p: f64 = p
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad uniform probability `{p}`")))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::invalid(format!("uniform probability {p} outside [0, 1]")));
                }
                Ok(ProbabilityModel::Uniform(p))
            }
        }
    }
}

impl fmt::Display for ProbabilityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbabilityModel::Uniform(p) => write!(f, "uniform:{p}"),
            ProbabilityModel::WeightedCascade => f.write_str("wc"),
            ProbabilityModel::Explicit => f.write_str("explicit"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IcNetwork {
    ids: Vec<String>,
    index: HashMap<String, NodeId>,
    out_start: Vec<usize>,
    tail: Vec<NodeId>,
    head: Vec<NodeId>,
    prob: Vec<f64>,
    in_start: Vec<usize>,
    in_edges: Vec<EdgeId>,
    has_probabilities: bool,
}

impl IcNetwork {
    /// Builds a network over `n` nodes named `"0".."n-1"`.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId, f64)>) -> Result<Self> {
        let ids = (0..n).map(|i| i.to_string()).collect();
        Self::with_ids(ids, edges)
    }

    /// Builds a network with explicit node identifiers. Duplicate `(u, v)`
    /// pairs keep the first probability seen.
    pub fn with_ids(ids: Vec<String>, edges: impl IntoIterator<Item = (NodeId, NodeId, f64)>) -> Result<Self> {
        let mut net = Self::build(ids, edges)?;
        net.has_probabilities = true;
        Ok(net)
    }

    pub(crate) fn build(ids: Vec<String>, edges: impl IntoIterator<Item = (NodeId, NodeId, f64)>) -> Result<Self> {
        let n = ids.len();
        if n == 0 {
            return Err(Error::invalid("network needs at least one node"));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate node identifier `{id}`")));
            }
        }

        let mut list: Vec<(NodeId, NodeId, f64)> = Vec::new();
        for (u, v, p) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!("edge ({u}, {v}) out of range for {n} nodes")));
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop on node {u}")));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!(
                    "probability {p} on edge ({u}, {v}) outside [0, 1]"
                )));
            }
            list.push((u, v, p));
        }
        // stable: the first occurrence of a duplicate pair survives dedup
        list.sort_by_key(|&(u, v, _)| (u, v));
        list.dedup_by_key(|e| (e.0, e.1));

        let m = list.len();
        let mut out_start = vec![0usize; n + 1];
        let mut tail = Vec::with_capacity(m);
        let mut head = Vec::with_capacity(m);
        let mut prob = Vec::with_capacity(m);
        for &(u, v, p) in &list {
            out_start[u + 1] += 1;
            tail.push(u);
            head.push(v);
            prob.push(p);
        }
        for i in 0..n {
            out_start[i + 1] += out_start[i];
        }

        let mut in_start = vec![0usize; n + 1];
        for &v in &head {
            in_start[v + 1] += 1;
        }
        for i in 0..n {
            in_start[i + 1] += in_start[i];
        }
        let mut fill = in_start.clone();
        let mut in_edges = vec![0; m];
        for (e, &v) in head.iter().enumerate() {
            in_edges[fill[v]] = e;
            fill[v] += 1;
        }

        Ok(IcNetwork {
            ids,
            index,
            out_start,
            tail,
            head,
            prob,
            in_start,
            in_edges,
            has_probabilities: false,
        })
    }

    pub(crate) fn set_has_probabilities(&mut self, value: bool) {
        self.has_probabilities = value;
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.head.len()
    }

    /// Whether every edge carries a probability supplied by the caller or
    /// the input file.
    pub fn has_probabilities(&self) -> bool {
        self.has_probabilities
    }

    pub fn id(&self, u: NodeId) -> &str {
        &self.ids[u]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn node_index(&self, id: &str) -> Option<NodeId> {
        self.index.get(id).copied()
    }

    pub fn resolve(&self, id: &str) -> Result<NodeId> {
        self.node_index(id).ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    #[inline]
    pub fn edge(&self, e: EdgeId) -> EdgeRef {
        EdgeRef {
            id: e,
            tail: self.tail[e],
            head: self.head[e],
            prob: self.prob[e],
        }
    }

    #[inline]
    pub fn head(&self, e: EdgeId) -> NodeId {
        self.head[e]
    }

    #[inline]
    pub fn tail(&self, e: EdgeId) -> NodeId {
        self.tail[e]
    }

    #[inline]
    pub fn prob(&self, e: EdgeId) -> f64 {
        self.prob[e]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.prob
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeRef> + '_ {
        (0..self.edge_count()).map(move |e| self.edge(e))
    }

    /// Edge ids leaving `u`, sorted by head.
    #[inline]
    pub fn out_edge_ids(&self, u: NodeId) -> std::ops::Range<EdgeId> {
        self.out_start[u]..self.out_start[u + 1]
    }

    pub fn out_edges(&self, u: NodeId) -> impl Iterator<Item = EdgeRef> + '_ {
        self.out_edge_ids(u).map(move |e| self.edge(e))
    }

    /// Edge ids entering `v`, sorted by tail.
    #[inline]
    pub fn in_edge_ids(&self, v: NodeId) -> &[EdgeId] {
        &self.in_edges[self.in_start[v]..self.in_start[v + 1]]
    }

    pub fn in_edges(&self, v: NodeId) -> impl Iterator<Item = EdgeRef> + '_ {
        self.in_edge_ids(v).iter().map(move |&e| self.edge(e))
    }

    pub fn out_degree(&self, u: NodeId) -> usize {
        self.out_start[u + 1] - self.out_start[u]
    }

    pub fn in_degree(&self, v: NodeId) -> usize {
        self.in_start[v + 1] - self.in_start[v]
    }

    pub fn find_edge(&self, u: NodeId, v: NodeId) -> Option<EdgeId> {
        let range = self.out_edge_ids(u);
        let start = range.start;
        self.head[range].binary_search(&v).ok().map(|i| start + i)
    }

    /// Returns a copy of the network with every edge probability replaced.
    pub fn with_probabilities(&self, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != self.edge_count() {
            return Err(Error::invalid(format!(
                "expected {} probabilities, got {}",
                self.edge_count(),
                probs.len()
            )));
        }
        if let Some((e, p)) = probs.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
            return Err(Error::invalid(format!("probability {p} on edge {e} outside [0, 1]")));
        }
        let mut net = self.clone();
        net.prob = probs;
        net.has_probabilities = true;
        Ok(net)
    }

    pub fn assign_probabilities(&self, model: ProbabilityModel) -> Result<Self> {
        match model {
            ProbabilityModel::Uniform(p) => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::invalid(format!("uniform probability {p} outside [0, 1]")));
                }
                self.with_probabilities(vec![p; self.edge_count()])
            }
            ProbabilityModel::WeightedCascade => {
                // in-degree counts distinct in-neighbours; edges are already deduplicated
                let probs = self.head.iter().map(|&v| 1.0 / self.in_degree(v) as f64).collect();
                self.with_probabilities(probs)
            }
            ProbabilityModel::Explicit => {
                if !self.has_probabilities {
                    return Err(Error::invalid(
                        "explicit probability model requested but the edge list carries none",
                    ));
                }
                Ok(self.clone())
            }
        }
    }

    /// The parents of `u` that lie inside `restrict`.
    pub fn parents_within(&self, u: NodeId, restrict: &NodeSet) -> Result<Vec<NodeId>> {
        if !restrict.contains(u) {
            return Err(Error::invalid(format!("node {u} is not in the restriction set")));
        }
        Ok(self
            .in_edges(u)
            .map(|e| e.tail)
            .filter(|&t| restrict.contains(t))
            .collect())
    }

    /// Nodes reached by a breadth-first search from `root` that ignores edge
    /// direction, truncated to `size` nodes.
    pub fn undirected_ball(&self, root: NodeId, size: usize) -> Vec<NodeId> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(size.min(n));
        let mut queue = VecDeque::new();
        seen[root] = true;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            if order.len() == size {
                break;
            }
            order.push(u);
            let neighbours = self
                .out_edges(u)
                .map(|e| e.head)
                .chain(self.in_edges(u).map(|e| e.tail));
            for w in neighbours {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        order
    }

    /// The subgraph induced by `nodes`, re-indexed in the given order and
    /// keeping original identifiers and probabilities.
    pub fn induced_subgraph(&self, nodes: &[NodeId]) -> Result<Self> {
        let mut local = vec![usize::MAX; self.node_count()];
        for (i, &u) in nodes.iter().enumerate() {
            local[u] = i;
        }
        let ids = nodes.iter().map(|&u| self.ids[u].clone()).collect();
        let edges = nodes.iter().flat_map(|&u| {
            let local = &local;
            self.out_edges(u)
                .filter(move |e| local[e.head] != usize::MAX)
                .map(move |e| (local[u], local[e.head], e.prob))
        });
        let mut sub = Self::build(ids, edges.collect::<Vec<_>>())?;
        sub.has_probabilities = self.has_probabilities;
        Ok(sub)
    }
}

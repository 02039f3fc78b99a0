//! Maximum-likelihood effector detection.
//!
//! On a DAG the likelihood of the observed state factorises over nodes, so
//! the most likely seed set is the `B` nodes least likely to be activated by
//! their parents. General activation sets are first reduced to DAGs per weak
//! component by permutation-based extraction, which keeps at least half of
//! the best achievable edge entropy.

use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, IcNetwork, NodeId};
use crate::result::{check_budget, Algorithm, EffectorResult};
use crate::state::ActivationState;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayeredPartition {
    /// `layers[0]` holds the parentless nodes; every later layer has all of
    /// its parents in earlier layers and at least one in the previous one.
    pub layers: Vec<Vec<NodeId>>,
}

impl LayeredPartition {
    pub fn node_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtractedDag {
    pub nodes: Vec<NodeId>,
    /// Edge ids of the network, ascending.
    pub kept_edges: Vec<EdgeId>,
    pub entropy: f64,
}

fn sorted_unique(nodes: &[NodeId], n: usize) -> Result<Vec<NodeId>> {
    let mut v = nodes.to_vec();
    v.sort_unstable();
    v.dedup();
    if v.len() != nodes.len() {
        return Err(Error::invalid("node set contains duplicates"));
    }
    if let Some(&u) = v.iter().find(|&&u| u >= n) {
        return Err(Error::invalid(format!("node {u} is out of range")));
    }
    Ok(v)
}

fn induced_edges(net: &IcNetwork, nodes: &[NodeId], inside: &[bool]) -> Vec<EdgeId> {
    nodes
        .iter()
        .flat_map(|&u| net.out_edge_ids(u))
        .filter(|&e| inside[net.head(e)])
        .collect()
}

fn membership(n: usize, nodes: &[NodeId]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &u in nodes {
        m[u] = true;
    }
    m
}

/// Layers the nodes of a DAG given by `edges` (all inside `nodes`).
fn layer_dag(net: &IcNetwork, nodes: &[NodeId], edges: &[EdgeId]) -> Result<LayeredPartition> {
    let n = net.node_count();
    let mut pending = vec![0usize; n];
    let mut children: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for &e in edges {
        pending[net.head(e)] += 1;
        children[net.tail(e)].push(net.head(e));
    }
    let mut layer: Vec<NodeId> = nodes.iter().copied().filter(|&u| pending[u] == 0).collect();
    let mut layers = Vec::new();
    let mut placed = 0;
    while !layer.is_empty() {
        placed += layer.len();
        let mut next = Vec::new();
        for &u in &layer {
            for &v in &children[u] {
                pending[v] -= 1;
                if pending[v] == 0 {
                    next.push(v);
                }
            }
        }
        next.sort_unstable();
        layers.push(std::mem::replace(&mut layer, next));
    }
    if placed != nodes.len() {
        return Err(Error::NotADag);
    }
    Ok(LayeredPartition { layers })
}

/// Layers `component` by parent availability over its induced edges.
pub fn hierarchical_partition(net: &IcNetwork, component: &[NodeId]) -> Result<LayeredPartition> {
    let nodes = sorted_unique(component, net.node_count())?;
    let inside = membership(net.node_count(), &nodes);
    layer_dag(net, &nodes, &induced_edges(net, &nodes, &inside))
}

/// `ln(1 - e^x)` for `x <= 0`.
fn ln_one_minus_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

fn check_dag_edges(net: &IcNetwork, state: &ActivationState, dag_edges: &[EdgeId]) -> Result<()> {
    for &e in dag_edges {
        if e >= net.edge_count() {
            return Err(Error::invalid(format!("edge {e} is out of range")));
        }
        if !state.is_active(net.tail(e)) || !state.is_active(net.head(e)) {
            return Err(Error::invalid(format!("edge {e} is not inside the active set")));
        }
    }
    layer_dag(net, state.active().members(), dag_edges).map(|_| ())
}

/// `ln Π_{v ∈ Par(u)} (1 - p(v, u))` per node, with a flag for having parents.
fn log_miss(net: &IcNetwork, dag_edges: &[EdgeId]) -> (Vec<f64>, Vec<bool>) {
    let n = net.node_count();
    let mut miss = vec![0.0; n];
    let mut has_parent = vec![false; n];
    for &e in dag_edges {
        let v = net.head(e);
        miss[v] += (-net.prob(e)).ln_1p();
        has_parent[v] = true;
    }
    (miss, has_parent)
}

/// `ln Pr(state | S)` when diffusion inside the active set follows
/// `dag_edges` and no edge from an active to an inactive node fires.
pub fn log_likelihood(net: &IcNetwork, state: &ActivationState, dag_edges: &[EdgeId], seeds: &[NodeId]) -> Result<f64> {
    if state.len() != net.node_count() {
        return Err(Error::invalid("state size does not match the network"));
    }
    if let Some(&u) = seeds.iter().find(|&&u| u >= state.len() || !state.is_active(u)) {
        return Err(Error::invalid(format!("seed {u} is not an active node")));
    }
    check_dag_edges(net, state, dag_edges)?;

    let mut total = 0.0;
    for u in state.active().iter() {
        for e in net.out_edges(u) {
            if !state.is_active(e.head) {
                total += (-e.prob).ln_1p();
            }
        }
    }
    let (miss, has_parent) = log_miss(net, dag_edges);
    let is_seed = membership(net.node_count(), seeds);
    for u in state.active().iter().filter(|&u| !is_seed[u]) {
        if !has_parent[u] {
            return Ok(f64::NEG_INFINITY);
        }
        total += ln_one_minus_exp(miss[u]);
    }
    Ok(total)
}

fn select_by_q(candidates: &[NodeId], miss: &[f64], has_parent: &[bool], budget: usize) -> Vec<NodeId> {
    // smallest q = 1 - exp(miss) first; q = 0 when parentless or miss = 0
    let q = |u: NodeId| if has_parent[u] { -miss[u].exp_m1() } else { 0.0 };
    let mut ranked: Vec<(f64, NodeId)> = candidates.iter().map(|&u| (q(u), u)).collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ranked.truncate(budget);
    ranked.into_iter().map(|(_, u)| u).collect()
}

fn finish(
    net: &IcNetwork,
    state: &ActivationState,
    dag_edges: &[EdgeId],
    members: Vec<NodeId>,
) -> Result<EffectorResult> {
    let score = log_likelihood(net, state, dag_edges, &members)?;
    let mut result = EffectorResult::new(members, Algorithm::Mlbed, score);
    if score == f64::NEG_INFINITY {
        result.zero_likelihood = true;
        result = result.with_note("no seed set of this size explains the state");
    }
    Ok(result)
}

/// Exact maximum-likelihood seed set of size `budget` for a DAG on the
/// active nodes.
pub fn mle_select_on_dag(
    net: &IcNetwork,
    state: &ActivationState,
    dag_edges: &[EdgeId],
    budget: usize,
) -> Result<EffectorResult> {
    check_budget(state, budget)?;
    check_dag_edges(net, state, dag_edges)?;
    let (miss, has_parent) = log_miss(net, dag_edges);
    let members = select_by_q(state.active().members(), &miss, &has_parent, budget);
    finish(net, state, dag_edges, members)
}

/// `-p ln p`, zero at both ends.
pub fn edge_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("probability {p} is outside [0, 1]")));
    }
    Ok(if p == 0.0 { 0.0 } else { -p * p.ln() })
}

fn entropy_of(net: &IcNetwork, e: EdgeId) -> f64 {
    edge_entropy(net.prob(e)).expect("network probabilities are validated")
}

fn reaches(adj: &[Vec<usize>], from: usize, to: usize, seen: &mut [bool], stack: &mut Vec<usize>) -> bool {
    seen.fill(false);
    stack.clear();
    stack.push(from);
    seen[from] = true;
    while let Some(x) = stack.pop() {
        if x == to {
            return true;
        }
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    false
}

/// Splits the induced edges of `component` into those going backwards and
/// forwards in `order`, keeps the side with more entropy, then re-inserts
/// the other side's edges by decreasing entropy whenever no cycle results.
pub fn pbde_extract(net: &IcNetwork, component: &[NodeId], order: &[NodeId]) -> Result<ExtractedDag> {
    let nodes = sorted_unique(component, net.node_count())?;
    let mut check = order.to_vec();
    check.sort_unstable();
    if check != nodes {
        return Err(Error::invalid("order is not a permutation of the component"));
    }
    let local = |u: NodeId| nodes.binary_search(&u).expect("inside component");
    let mut rank = vec![0usize; nodes.len()];
    for (r, &u) in order.iter().enumerate() {
        rank[local(u)] = r;
    }
    let inside = membership(net.node_count(), &nodes);
    let (backward, forward): (Vec<EdgeId>, Vec<EdgeId>) = induced_edges(net, &nodes, &inside)
        .into_iter()
        .partition(|&e| rank[local(net.tail(e))] > rank[local(net.head(e))]);
    let h_back: f64 = backward.iter().map(|&e| entropy_of(net, e)).sum();
    let h_fwd: f64 = forward.iter().map(|&e| entropy_of(net, e)).sum();
    let (mut kept, mut rest) = if h_back >= h_fwd {
        (backward, forward)
    } else {
        (forward, backward)
    };

    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for &e in &kept {
        adj[local(net.tail(e))].push(local(net.head(e)));
    }
    rest.sort_by(|&a, &b| entropy_of(net, b).total_cmp(&entropy_of(net, a)).then(a.cmp(&b)));
    let mut seen = vec![false; nodes.len()];
    let mut stack = Vec::new();
    for e in rest {
        let (u, v) = (local(net.tail(e)), local(net.head(e)));
        if !reaches(&adj, v, u, &mut seen, &mut stack) {
            adj[u].push(v);
            kept.push(e);
        }
    }
    kept.sort_unstable();
    let entropy = kept.iter().map(|&e| entropy_of(net, e)).sum();
    Ok(ExtractedDag {
        nodes,
        kept_edges: kept,
        entropy,
    })
}

/// Weakly connected components of the subgraph induced on `nodes`, each
/// sorted, ordered by smallest member.
pub fn weak_components(net: &IcNetwork, nodes: &[NodeId]) -> Vec<Vec<NodeId>> {
    let n = net.node_count();
    let inside = membership(n, nodes);
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    let mut sorted = nodes.to_vec();
    sorted.sort_unstable();
    for &root in &sorted {
        if comp[root] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![root];
        comp[root] = id;
        let mut i = 0;
        while i < members.len() {
            let x = members[i];
            i += 1;
            let nbrs = net.out_edges(x).map(|e| e.head).chain(net.in_edges(x).map(|e| e.tail));
            for y in nbrs.collect::<Vec<_>>() {
                if inside[y] && comp[y] == usize::MAX {
                    comp[y] = id;
                    members.push(y);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlbedOutcome {
    pub result: EffectorResult,
    pub dags: Vec<ExtractedDag>,
}

/// MLBED. Without `order_seed` each component is ordered by node index;
/// with a seed each component gets its own seeded shuffle.
pub fn mlbed(
    net: &IcNetwork,
    state: &ActivationState,
    budget: usize,
    order_seed: Option<u64>,
) -> Result<EffectorResult> {
    mlbed_detailed(net, state, budget, order_seed).map(|o| o.result)
}

pub fn mlbed_detailed(
    net: &IcNetwork,
    state: &ActivationState,
    budget: usize,
    order_seed: Option<u64>,
) -> Result<MlbedOutcome> {
    if state.len() != net.node_count() {
        return Err(Error::invalid("state size does not match the network"));
    }
    check_budget(state, budget)?;
    let components = weak_components(net, state.active().members());
    let dags = components
        .par_iter()
        .enumerate()
        .map(|(i, comp)| {
            let mut order = comp.clone();
            if let Some(seed) = order_seed {
                order.shuffle(&mut crate::rng::stream(seed, i as u64));
            }
            pbde_extract(net, comp, &order)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut edges: Vec<EdgeId> = dags.iter().flat_map(|d| d.kept_edges.iter().copied()).collect();
    edges.sort_unstable();
    let (miss, has_parent) = log_miss(net, &edges);
    let members = select_by_q(state.active().members(), &miss, &has_parent, budget);
    let result = finish(net, state, &edges, members)?;
    Ok(MlbedOutcome { result, dags })
}

/// Writes the kept edges as `tail head probability` lines.
pub fn write_dags<W: Write>(net: &IcNetwork, dags: &[ExtractedDag], mut out: W) -> Result<()> {
    for dag in dags {
        for &e in &dag.kept_edges {
            let r = net.edge(e);
            writeln!(out, "{} {} {}", net.id(r.tail), net.id(r.head), r.prob)?;
        }
    }
    Ok(())
}

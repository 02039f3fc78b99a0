//! Maximum diffusion paths and k-th influence distances.
//!
//! A maximum diffusion path maximises the product of edge probabilities,
//! i.e. it is a shortest path under edge length `-ln p`. The k-max path set
//! greedily collects up to `k` edge-disjoint maximum diffusion paths,
//! removing each found path's edges before searching again. The k-th
//! influence distance is `-ln(1 - Π(1 - Pr[path]))` over that set.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, IcNetwork, NodeId};

const NO_EDGE: usize = usize::MAX;
const ABSENT: u32 = u32::MAX;

/// A simple directed path and its propagation probability.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
    pub prob: f64,
}

impl Path {
    fn trivial(u: NodeId) -> Self {
        Path {
            nodes: vec![u],
            edges: Vec::new(),
            prob: 1.0,
        }
    }
}

/// Up to `k` pairwise edge-disjoint paths from `source` to `target`, in the
/// order they were found (non-increasing probability).
#[derive(Clone, Debug, PartialEq)]
pub struct PathSet {
    pub source: NodeId,
    pub target: NodeId,
    pub paths: Vec<Path>,
}

impl PathSet {
    pub fn distance(&self) -> f64 {
        influence_distance(self)
    }

    pub fn is_edge_disjoint(&self) -> bool {
        let mut all: Vec<EdgeId> = self.paths.iter().flat_map(|p| p.edges.iter().copied()).collect();
        let total = all.len();
        all.sort_unstable();
        all.dedup();
        all.len() == total
    }
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    dist: f64,
    hops: u32,
    node: NodeId,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // reversed: BinaryHeap is a max-heap and we want the smallest key first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.hops.cmp(&self.hops))
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Dijkstra state reused across searches on one network. Node and edge
/// arrays are reset lazily through epoch stamps.
pub(crate) struct PathSearch<'a> {
    net: &'a IcNetwork,
    lengths: &'a [f64],
    dist: Vec<f64>,
    hops: Vec<u32>,
    pred: Vec<EdgeId>,
    seen: Vec<u32>,
    epoch: u32,
    removed: Vec<u32>,
    removal_epoch: u32,
    heap: BinaryHeap<Entry>,
}

/// `-ln p` per edge; `+inf` for edges that can never fire.
pub(crate) fn edge_lengths(net: &IcNetwork) -> Vec<f64> {
    net.probabilities()
        .iter()
        .map(|&p| if p > 0.0 { -p.ln() } else { f64::INFINITY })
        .collect()
}

impl<'a> PathSearch<'a> {
    pub(crate) fn new(net: &'a IcNetwork, lengths: &'a [f64]) -> Self {
        let n = net.node_count();
        PathSearch {
            net,
            lengths,
            dist: vec![f64::INFINITY; n],
            hops: vec![0; n],
            pred: vec![NO_EDGE; n],
            seen: vec![0; n],
            epoch: 0,
            removed: vec![0; net.edge_count()],
            removal_epoch: 1,
            heap: BinaryHeap::new(),
        }
    }

    /// Starts a fresh removal set: all edges become available again.
    fn reset_removed(&mut self) {
        self.removal_epoch = self.removal_epoch.wrapping_add(1);
        if self.removal_epoch == 0 {
            self.removed.fill(0);
            self.removal_epoch = 1;
        }
    }

    fn remove_edges(&mut self, edges: &[EdgeId]) {
        for &e in edges {
            self.removed[e] = self.removal_epoch;
        }
    }

    #[inline]
    fn reached(&self, v: NodeId) -> bool {
        self.seen[v] == self.epoch
    }

    /// Runs Dijkstra from `source`, stopping once `target` is settled.
    /// Ties on length prefer fewer hops, then lower node index.
    fn run(&mut self, source: NodeId, target: Option<NodeId>) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.seen.fill(0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        self.heap.clear();
        self.seen[source] = epoch;
        self.dist[source] = 0.0;
        self.hops[source] = 0;
        self.pred[source] = NO_EDGE;
        self.heap.push(Entry {
            dist: 0.0,
            hops: 0,
            node: source,
        });
        while let Some(Entry { dist, hops, node }) = self.heap.pop() {
            if dist != self.dist[node] || hops != self.hops[node] {
                continue;
            }
            if Some(node) == target {
                break;
            }
            for e in self.net.out_edge_ids(node) {
                let len = self.lengths[e];
                if len == f64::INFINITY || self.removed[e] == self.removal_epoch {
                    continue;
                }
                let v = self.net.head(e);
                let nd = dist + len;
                let nh = hops + 1;
                let better = !self.reached(v) || nd < self.dist[v] || (nd == self.dist[v] && nh < self.hops[v]);
                if better {
                    self.seen[v] = epoch;
                    self.dist[v] = nd;
                    self.hops[v] = nh;
                    self.pred[v] = e;
                    self.heap.push(Entry {
                        dist: nd,
                        hops: nh,
                        node: v,
                    });
                }
            }
        }
    }

    fn path_to(&self, source: NodeId, target: NodeId) -> Option<Path> {
        if target == source {
            return Some(Path::trivial(source));
        }
        if !self.reached(target) {
            return None;
        }
        let mut edges = Vec::new();
        let mut v = target;
        while v != source {
            let e = self.pred[v];
            edges.push(e);
            v = self.net.tail(e);
        }
        edges.reverse();
        let mut nodes = Vec::with_capacity(edges.len() + 1);
        nodes.push(source);
        nodes.extend(edges.iter().map(|&e| self.net.head(e)));
        let prob = edges.iter().map(|&e| self.net.prob(e)).product();
        Some(Path { nodes, edges, prob })
    }

    /// Greedy k-max path set, given the first path already found in the
    /// unmodified graph.
    fn extend_path_set(&mut self, source: NodeId, target: NodeId, first: Path, k: usize) -> Vec<Path> {
        let mut paths = vec![first];
        if source == target {
            return paths;
        }
        self.reset_removed();
        while paths.len() < k {
            self.remove_edges(&paths.last().expect("non-empty").edges);
            self.run(source, Some(target));
            match self.path_to(source, target) {
                Some(p) => paths.push(p),
                None => break,
            }
        }
        self.reset_removed();
        paths
    }
}

/// The path from `u` to `v` with maximum propagation probability, or `None`
/// when no path of positive probability exists. `u == v` gives the empty
/// path with probability 1.
pub fn max_diffusion_path(net: &IcNetwork, u: NodeId, v: NodeId) -> Option<Path> {
    let lengths = edge_lengths(net);
    let mut search = PathSearch::new(net, &lengths);
    search.run(u, Some(v));
    search.path_to(u, v)
}

pub fn k_max_path_set(net: &IcNetwork, u: NodeId, v: NodeId, k: usize) -> Result<PathSet> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let lengths = edge_lengths(net);
    let mut search = PathSearch::new(net, &lengths);
    search.run(u, Some(v));
    let paths = match search.path_to(u, v) {
        Some(first) => search.extend_path_set(u, v, first, k),
        None => Vec::new(),
    };
    Ok(PathSet {
        source: u,
        target: v,
        paths,
    })
}

/// `-ln(1 - Π(1 - p))` over the given path probabilities: `+inf` for no
/// paths, `0` as soon as one path is certain.
pub fn distance_from_probs(probs: impl IntoIterator<Item = f64>) -> f64 {
    let log_fail: f64 = probs.into_iter().map(|p| (-p).ln_1p()).sum();
    let success = -log_fail.exp_m1();
    if success >= 1.0 {
        0.0
    } else {
        -success.ln()
    }
}

pub fn influence_distance(paths: &PathSet) -> f64 {
    distance_from_probs(paths.paths.iter().map(|p| p.prob))
}

/// k-th influence distances from every source to every target.
#[derive(Clone, Debug)]
pub struct DistanceTable {
    k: usize,
    sources: Vec<NodeId>,
    targets: Vec<NodeId>,
    source_pos: Vec<u32>,
    target_pos: Vec<u32>,
    values: Vec<f64>,
}

impl DistanceTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sources(&self) -> &[NodeId] {
        &self.sources
    }

    pub fn targets(&self) -> &[NodeId] {
        &self.targets
    }

    pub fn covers(&self, u: NodeId, v: NodeId) -> bool {
        self.source_pos.get(u).is_some_and(|&p| p != ABSENT) && self.target_pos.get(v).is_some_and(|&p| p != ABSENT)
    }

    pub fn get(&self, u: NodeId, v: NodeId) -> Option<f64> {
        let su = *self.source_pos.get(u)?;
        let tv = *self.target_pos.get(v)?;
        if su == ABSENT || tv == ABSENT {
            return None;
        }
        Some(self.values[su as usize * self.targets.len() + tv as usize])
    }

    /// `d^k(u, v)`. Panics if the pair is not in the table.
    #[inline]
    pub fn d(&self, u: NodeId, v: NodeId) -> f64 {
        let su = self.source_pos[u];
        let tv = self.target_pos[v];
        assert!(su != ABSENT && tv != ABSENT, "pair ({u}, {v}) not in distance table");
        self.values[su as usize * self.targets.len() + tv as usize]
    }

    /// `d^k(V', u) = Σ_{v ∈ V'} d^k(v, u)`.
    pub fn set_to_node(&self, from: &[NodeId], u: NodeId) -> f64 {
        from.iter().map(|&v| self.d(v, u)).sum()
    }

    /// `Σ_{v ∈ to} d^k(u, v)`.
    pub fn node_to_set(&self, u: NodeId, to: &[NodeId]) -> f64 {
        to.iter().map(|&v| self.d(u, v)).sum()
    }

    /// `d^k(V1, V2) = Σ_{u ∈ V1} Σ_{v ∈ V2} d^k(u, v)`.
    pub fn set_to_set(&self, from: &[NodeId], to: &[NodeId]) -> f64 {
        from.iter().map(|&u| self.node_to_set(u, to)).sum()
    }

    /// Writes `u,v,k,distance` rows using the network's identifiers; `+inf`
    /// is written as `inf`.
    pub fn write_csv<W: Write>(&self, net: &IcNetwork, mut out: W) -> Result<()> {
        writeln!(out, "u,v,k,distance")?;
        for &u in &self.sources {
            for &v in &self.targets {
                writeln!(out, "{},{},{},{}", net.id(u), net.id(v), self.k, self.d(u, v))?;
            }
        }
        Ok(())
    }
}

fn positions(n: usize, nodes: &[NodeId]) -> Result<Vec<u32>> {
    let mut pos = vec![ABSENT; n];
    for (i, &u) in nodes.iter().enumerate() {
        if u >= n {
            return Err(Error::invalid(format!("node {u} out of range")));
        }
        if pos[u] != ABSENT {
            return Err(Error::invalid(format!("node {u} listed twice")));
        }
        pos[u] = i as u32;
    }
    Ok(pos)
}

/// Fills `d^k(u, v)` for all `u ∈ sources`, `v ∈ targets`. Rows are
/// computed independently in parallel.
pub fn distance_table(net: &IcNetwork, sources: &[NodeId], targets: &[NodeId], k: usize) -> Result<DistanceTable> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let n = net.node_count();
    let source_pos = positions(n, sources)?;
    let target_pos = positions(n, targets)?;
    let lengths = edge_lengths(net);

    let rows: Vec<Vec<f64>> = sources
        .par_iter()
        .map_init(
            || PathSearch::new(net, &lengths),
            |search, &u| {
                search.run(u, None);
                if k == 1 {
                    return targets
                        .iter()
                        .map(|&v| {
                            if v == u {
                                0.0
                            } else if search.reached(v) {
                                search.dist[v]
                            } else {
                                f64::INFINITY
                            }
                        })
                        .collect();
                }
                // first paths all come from the same shortest-path tree
                let firsts: Vec<Option<Path>> = targets.iter().map(|&v| search.path_to(u, v)).collect();
                targets
                    .iter()
                    .zip(firsts)
                    .map(|(&v, first)| match first {
                        None => f64::INFINITY,
                        Some(_) if v == u => 0.0,
                        Some(p) if p.prob >= 1.0 => 0.0,
                        Some(p) => {
                            let paths = search.extend_path_set(u, v, p, k);
                            distance_from_probs(paths.iter().map(|p| p.prob))
                        }
                    })
                    .collect()
            },
        )
        .collect();

    Ok(DistanceTable {
        k,
        sources: sources.to_vec(),
        targets: targets.to_vec(),
        source_pos,
        target_pos,
        values: rows.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-12;

    fn triangle() -> IcNetwork {
        // a -> b (0.5), b -> c (0.4), a -> c (0.1)
        IcNetwork::new(3, [(0, 1, 0.5), (1, 2, 0.4), (0, 2, 0.1)]).unwrap()
    }

    fn diamond() -> IcNetwork {
        IcNetwork::new(4, [(0, 1, 0.5), (1, 3, 0.5), (0, 2, 0.5), (2, 3, 0.5)]).unwrap()
    }

    #[test]
    fn max_path_prefers_higher_product() {
        let p = max_diffusion_path(&triangle(), 0, 2).unwrap();
        assert_eq!(p.nodes, vec![0, 1, 2]);
        assert!((p.prob - 0.2).abs() < TOL);
    }

    #[test]
    fn certain_edges_use_fewest_hops() {
        let net = IcNetwork::new(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)]).unwrap();
        let p = max_diffusion_path(&net, 0, 3).unwrap();
        assert_eq!(p.nodes, vec![0, 3]);
        assert_eq!(p.prob, 1.0);
    }

    #[test]
    fn unreachable_and_zero_probability() {
        let net = IcNetwork::new(3, [(0, 1, 0.0), (1, 2, 1.0)]).unwrap();
        assert!(max_diffusion_path(&net, 0, 2).is_none());
        assert!(max_diffusion_path(&net, 2, 0).is_none());
        let own = max_diffusion_path(&net, 1, 1).unwrap();
        assert!(own.edges.is_empty());
        assert_eq!(own.prob, 1.0);
    }

    #[test]
    fn diamond_two_disjoint_paths() {
        let ps = k_max_path_set(&diamond(), 0, 3, 2).unwrap();
        assert_eq!(ps.paths.len(), 2);
        assert!((ps.paths[0].prob - 0.25).abs() < TOL);
        assert!((ps.paths[1].prob - 0.25).abs() < TOL);
        assert!(ps.is_edge_disjoint());
        assert!((ps.distance() - 0.826_678_573_184_467_9).abs() < 1e-9);
    }

    #[test]
    fn path_set_exhausts_before_k() {
        let net = IcNetwork::new(3, [(0, 1, 0.5), (1, 2, 0.5)]).unwrap();
        assert_eq!(k_max_path_set(&net, 0, 2, 3).unwrap().paths.len(), 1);
        let none = k_max_path_set(&net, 2, 0, 3).unwrap();
        assert!(none.paths.is_empty());
        assert_eq!(none.distance(), f64::INFINITY);
        assert!(k_max_path_set(&net, 0, 2, 0).is_err());
    }

    #[test]
    fn distance_formula() {
        assert!((distance_from_probs([0.25]) - 1.386_294_361_119_890_6).abs() < 1e-9);
        assert!((distance_from_probs([0.25, 0.25]) - 0.826_678_573_184_467_9).abs() < 1e-9);
        assert_eq!(distance_from_probs([1.0]), 0.0);
        assert_eq!(distance_from_probs([0.3, 1.0]), 0.0);
        assert_eq!(distance_from_probs([]), f64::INFINITY);
    }

    #[test]
    fn table_aggregates() {
        let net = IcNetwork::new(3, [(0, 2, (-1.0f64).exp()), (1, 2, (-1.0f64).exp())]).unwrap();
        let t = distance_table(&net, &[0, 1, 2], &[0, 1, 2], 1).unwrap();
        assert_eq!(t.d(2, 2), 0.0);
        assert!((t.set_to_node(&[0, 1], 2) - 2.0).abs() < TOL);
        assert_eq!(t.set_to_set(&[0], &[1, 2]), f64::INFINITY);
        assert_eq!(t.get(0, 5), None);
    }

    #[test]
    fn csv_dump_uses_inf_literal() {
        let net = IcNetwork::new(2, [(0, 1, 0.5)]).unwrap();
        let t = distance_table(&net, &[1], &[0], 1).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&net, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "u,v,k,distance\n1,0,1,inf\n");
    }

    /// Floyd–Warshall on `-ln p`, independent of the Dijkstra code.
    fn floyd(net: &IcNetwork) -> Vec<Vec<f64>> {
        let n = net.node_count();
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for e in net.edges() {
            if e.prob > 0.0 {
                d[e.tail][e.head] = d[e.tail][e.head].min(-e.prob.ln());
            }
        }
        for m in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i][m] + d[m][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        d
    }

    fn arb_net() -> impl Strategy<Value = IcNetwork> {
        proptest::collection::vec((0usize..9, 0usize..9, 0.01f64..=1.0), 0..30)
            .prop_map(|raw| IcNetwork::new(9, raw.into_iter().filter(|(u, v, _)| u != v)).unwrap())
    }

    proptest! {
        #[test]
        fn first_distance_matches_floyd(net in arb_net()) {
            let all: Vec<_> = (0..9).collect();
            let t = distance_table(&net, &all, &all, 1).unwrap();
            let f = floyd(&net);
            for (u, row) in f.iter().enumerate() {
                for (v, &b) in row.iter().enumerate() {
                    let a = t.d(u, v);
                    prop_assert!(a == b || (a - b).abs() < 1e-9, "{} {} {} {}", u, v, a, b);
                }
            }
        }

        #[test]
        fn table_agrees_with_pairwise_path_sets(net in arb_net(), k in 1usize..4) {
            let all: Vec<_> = (0..9).collect();
            let t = distance_table(&net, &all, &all, k).unwrap();
            for u in 0..9 {
                for v in 0..9 {
                    let ps = k_max_path_set(&net, u, v, k).unwrap();
                    prop_assert!(ps.is_edge_disjoint());
                    prop_assert!(ps.paths.len() <= k);
                    for w in ps.paths.windows(2) {
                        prop_assert!(w[0].prob >= w[1].prob - 1e-12);
                    }
                    let (a, b) = (t.d(u, v), ps.distance());
                    prop_assert!(a == b || (a - b).abs() < 1e-9, "{} {} {} {}", u, v, a, b);
                }
            }
        }
    }
}

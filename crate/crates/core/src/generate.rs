//! Random graph generators for tests, benchmarks and experiments.

use std::collections::HashSet;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::IcNetwork;

/// Directed graph where each ordered pair is an edge with probability
/// `density`; edge probabilities are uniform in `(0, 1]`.
pub fn random_digraph<R: Rng + ?Sized>(n: usize, density: f64, rng: &mut R) -> Result<IcNetwork> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::invalid(format!("density {density} is outside [0, 1]")));
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.gen_bool(density) {
                edges.push((u, v, 1.0 - rng.gen::<f64>()));
            }
        }
    }
    IcNetwork::new(n, edges)
}

/// Parameters of the community-structured undirected surrogate graph.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SocialParams {
    pub nodes: usize,
    pub undirected_edges: usize,
    pub communities: usize,
    /// Share of edges drawn between arbitrary nodes instead of inside a
    /// community.
    pub bridge_share: f64,
    /// Mean size of the friend circles that split each community.
    pub circle_size: usize,
    /// Share of edges drawn inside a circle.
    pub circle_share: f64,
    /// Pareto tail index of the per-node activity weights.
    pub tail_index: f64,
}

impl Default for SocialParams {
    /// Same size as the public Facebook ego-network graph.
    fn default() -> Self {
        SocialParams {
            nodes: 4039,
            undirected_edges: 88234,
            communities: 10,
            bridge_share: 0.03,
            circle_size: 100,
            circle_share: 0.9,
            tail_index: 1.3,
        }
    }
}

/// Undirected social-like graph with dense circles nested in communities
/// and heavy-tailed degrees, returned with both edge directions and no
/// probabilities.
pub fn social_surrogate<R: Rng + ?Sized>(params: SocialParams, rng: &mut R) -> Result<IcNetwork> {
    let SocialParams {
        nodes: n,
        undirected_edges: m,
        communities: c,
        bridge_share,
        circle_size,
        circle_share,
        tail_index,
    } = params;
    if n < 2 || c == 0 || c > n {
        return Err(Error::invalid("surrogate graph needs n >= 2 and 1 <= communities <= n"));
    }
    let share_ok = |x: f64| (0.0..=1.0).contains(&x);
    if !share_ok(bridge_share) || !share_ok(circle_share) || bridge_share + circle_share > 1.0 {
        return Err(Error::invalid("edge shares must lie in [0, 1] and sum to at most 1"));
    }
    if tail_index <= 0.0 || circle_size < 2 {
        return Err(Error::invalid(
            "tail index must be positive and circles hold at least two nodes",
        ));
    }
    let blocks = split_blocks(0, n, c, rng);
    let circles: Vec<(usize, usize)> = blocks
        .iter()
        .flat_map(|&(a, b)| {
            let parts = ((b - a) / circle_size).max(1);
            split_blocks(a, b, parts, rng)
        })
        .collect();

    let capacity: usize = blocks.iter().map(|b| (b.1 - b.0) * (b.1 - b.0 - 1) / 2).sum();
    if m > capacity / 2 {
        return Err(Error::invalid("too many edges for the requested community layout"));
    }

    let activity: Vec<f64> = (0..n)
        .map(|_| (1.0 - rng.gen::<f64>()).powf(-1.0 / tail_index))
        .collect();
    let global = WeightedIndex::new(&activity).expect("positive weights");
    let within = |parts: &[(usize, usize)]| -> (Vec<WeightedIndex<f64>>, WeightedIndex<f64>) {
        let local = parts
            .iter()
            .map(|&(a, b)| WeightedIndex::new(&activity[a..b]).expect("positive weights"))
            .collect();
        let pick = WeightedIndex::new(parts.iter().map(|b| ((b.1 - b.0) * (b.1 - b.0)) as f64)).expect("non-empty");
        (local, pick)
    };
    let (block_local, block_pick) = within(&blocks);
    let (circle_local, circle_pick) = within(&circles);

    let mut seen = HashSet::with_capacity(m);
    let mut edges = Vec::with_capacity(2 * m);
    while seen.len() < m {
        let roll: f64 = rng.gen();
        let (u, v) = if roll < bridge_share {
            (global.sample(rng), global.sample(rng))
        } else {
            let (parts, local, pick) = if roll < bridge_share + circle_share {
                (&circles, &circle_local, &circle_pick)
            } else {
                (&blocks, &block_local, &block_pick)
            };
            let i = pick.sample(rng);
            let base = parts[i].0;
            (base + local[i].sample(rng), base + local[i].sample(rng))
        };
        if u == v || !seen.insert((u.min(v), u.max(v))) {
            continue;
        }
        edges.push((u, v, 1.0));
        edges.push((v, u, 1.0));
    }
    let mut net = IcNetwork::new(n, edges)?;
    net.set_has_probabilities(false);
    Ok(net)
}

/// Splits `a..b` into `parts` contiguous blocks of uneven size, dropping
/// blocks with fewer than two nodes.
fn split_blocks<R: Rng + ?Sized>(a: usize, b: usize, parts: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let shares: Vec<f64> = (0..parts).map(|_| rng.gen_range(0.4..1.6)).collect();
    let total: f64 = shares.iter().sum();
    let mut bounds = vec![a];
    for s in &shares[..parts - 1] {
        let next = bounds.last().unwrap() + ((s / total) * (b - a) as f64).round().max(2.0) as usize;
        bounds.push(next.min(b));
    }
    bounds.push(b);
    bounds
        .windows(2)
        .map(|w| (w[0], w[1]))
        .filter(|w| w.1 - w.0 >= 2)
        .collect()
}

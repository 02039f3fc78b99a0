//! Flow-based effector detection on k-th influence distances.
//!
//! The active nodes form a complete directed graph with
//! `w(u, v) = λ·d(u, v) + (1-λ)·d(v, X0) / B`; for any `|S| = B` the weight
//! of the edges leaving `S` equals `g_k(S)`. The pipeline takes an
//! unconstrained minimum cut, greedily moves single nodes until the source
//! side has exactly `B` members, then runs rounds of locked pair exchanges,
//! committing the best positive prefix of each round.

use crate::distance::DistanceTable;
use crate::error::{Error, Result};
use crate::flow::min_st_cut;
use crate::graph::NodeId;
use crate::matching::LexCost;
use crate::mbed::{check_lambda, check_table, scaled};
use crate::result::{check_budget, Algorithm, EffectorResult};
use crate::state::ActivationState;

/// Influence-distance order used when none is given.
pub const DEFAULT_K: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct CutGraph {
    /// The active nodes, ascending; local index `i` refers to `nodes[i]`.
    pub nodes: Vec<NodeId>,
    /// Row-major `w(u, v)` over local indices, zero on the diagonal.
    pub weights: Vec<f64>,
}

impl CutGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn w(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.len() + j]
    }

    #[inline]
    fn lw(&self, i: usize, j: usize) -> LexCost {
        LexCost::from_f64(self.w(i, j))
    }

    fn local(&self, u: NodeId) -> Option<usize> {
        self.nodes.binary_search(&u).ok()
    }

    fn mask_of(&self, p: &Partition) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.len()];
        let mut seen = vec![false; self.len()];
        for (side, nodes) in [(true, &p.s1), (false, &p.s2)] {
            for &u in nodes {
                let i = self
                    .local(u)
                    .ok_or_else(|| Error::invalid(format!("node {u} is not in the cut graph")))?;
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::invalid(format!("node {u} appears twice in the partition")));
                }
                mask[i] = side;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::invalid("partition does not cover the cut graph"));
        }
        Ok(mask)
    }

    fn partition_of(&self, mask: &[bool]) -> Partition {
        let (mut s1, mut s2) = (Vec::new(), Vec::new());
        for (i, &side) in mask.iter().enumerate() {
            if side {
                s1.push(self.nodes[i]);
            } else {
                s2.push(self.nodes[i]);
            }
        }
        Partition { s1, s2 }
    }

    fn cut_lex(&self, mask: &[bool]) -> LexCost {
        let n = self.len();
        let mut total = LexCost::ZERO;
        for i in (0..n).filter(|&i| mask[i]) {
            for j in (0..n).filter(|&j| !mask[j]) {
                total = total + self.lw(i, j);
            }
        }
        total
    }

    /// `W(cut(S1, S2))`: total weight of edges from `S1` to `S2`.
    pub fn cut_weight(&self, p: &Partition) -> Result<f64> {
        Ok(self.cut_lex(&self.mask_of(p)?).to_f64())
    }

    /// Change of the cut weight when `a` moves from `S1` to `S2`.
    fn delta_to_s2(&self, mask: &[bool], a: usize) -> LexCost {
        let mut d = LexCost::ZERO;
        for (x, &in_s1) in mask.iter().enumerate() {
            if x == a {
                continue;
            }
            if in_s1 {
                d = d + self.lw(x, a);
            } else {
                d = d - self.lw(a, x);
            }
        }
        d
    }

    /// Change of the cut weight when `b` moves from `S2` to `S1`.
    fn delta_to_s1(&self, mask: &[bool], b: usize) -> LexCost {
        let mut d = LexCost::ZERO;
        for (x, &in_s1) in mask.iter().enumerate() {
            if x == b {
                continue;
            }
            if in_s1 {
                d = d - self.lw(x, b);
            } else {
                d = d + self.lw(b, x);
            }
        }
        d
    }
}

/// A split of the active nodes into a source side `S1` and the rest `S2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub s1: Vec<NodeId>,
    pub s2: Vec<NodeId>,
}

pub fn build_cut_graph(state: &ActivationState, budget: usize, lambda: f64, table: &DistanceTable) -> Result<CutGraph> {
    check_lambda(lambda)?;
    let n1 = state.active_count();
    if budget == 0 || budget >= n1 {
        return Err(Error::invalid(format!(
            "cut graph needs 1 <= B < N1, got B = {budget}, N1 = {n1}"
        )));
    }
    check_table(state, table)?;
    let nodes = state.active().members().to_vec();
    let inactive = state.inactive().members();
    let leak: Vec<f64> = nodes.iter().map(|&v| table.node_to_set(v, inactive)).collect();
    let n = nodes.len();
    let mut weights = vec![0.0; n * n];
    for (i, &u) in nodes.iter().enumerate() {
        for (j, &v) in nodes.iter().enumerate() {
            if i != j {
                weights[i * n + j] = scaled(lambda, table.d(u, v)) + scaled((1.0 - lambda) / budget as f64, leak[j]);
            }
        }
    }
    Ok(CutGraph { nodes, weights })
}

/// Minimum one-directional cut `(S1, S2)` with both sides non-empty: pin the
/// first node and take the best of its `s → t` and `t → s` minimum cuts over
/// every other node `t`.
pub fn global_min_cut(g: &CutGraph) -> Result<Partition> {
    let n = g.len();
    if n < 2 {
        return Err(Error::invalid("global minimum cut needs at least two nodes"));
    }
    let finite_total: f64 = g.weights.iter().filter(|w| w.is_finite()).sum();
    let sentinel = finite_total + 1.0;
    let cap: Vec<f64> = g
        .weights
        .iter()
        .map(|&w| if w.is_finite() { w } else { sentinel })
        .collect();

    let mut best: Option<(LexCost, Vec<bool>)> = None;
    for t in 1..n {
        for (s, t) in [(0, t), (t, 0)] {
            let (_, side) = min_st_cut(n, &cap, s, t);
            let value = g.cut_lex(&side);
            if best.as_ref().is_none_or(|(b, _)| value < *b) {
                best = Some((value, side));
            }
        }
    }
    let (_, mask) = best.expect("n >= 2");
    Ok(g.partition_of(&mask))
}

/// Moves single nodes between the sides, each time picking the move with the
/// smallest resulting cut (ties by node order), until `|S1| = budget`.
pub fn repair_size(g: &CutGraph, p: &Partition, budget: usize) -> Result<Partition> {
    if budget > g.len() {
        return Err(Error::invalid("budget exceeds the number of nodes"));
    }
    let mut mask = g.mask_of(p)?;
    let mut size = mask.iter().filter(|&&b| b).count();
    while size != budget {
        let shrink = size > budget;
        let candidates = (0..g.len()).filter(|&i| mask[i] == shrink);
        let (_, pick) = candidates
            .map(|i| {
                let d = if shrink {
                    g.delta_to_s2(&mask, i)
                } else {
                    g.delta_to_s1(&mask, i)
                };
                (d, i)
            })
            .fold(None, |best: Option<(LexCost, usize)>, (d, i)| match best {
                Some((bd, _)) if bd <= d => best,
                _ => Some((d, i)),
            })
            .expect("a side with the wrong size is non-empty");
        mask[pick] = !shrink;
        size = if shrink { size - 1 } else { size + 1 };
    }
    Ok(g.partition_of(&mask))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExchangeStats {
    /// Committed rounds (each strictly lowers the cut).
    pub rounds: usize,
    pub hit_round_cap: bool,
    pub initial_cut: f64,
    pub final_cut: f64,
}

fn is_improvement(gain: LexCost, scale: f64) -> bool {
    gain.inf > 0 || (gain.inf == 0 && gain.fin > 1e-12 * scale.max(1.0))
}

/// Pair-exchange improvement with a fixed side size. Each round builds a
/// sequence of `min(|S1|, |S2|)` greedy swaps among unlocked nodes, then
/// commits the prefix with the largest positive cumulative gain.
pub fn exchange_improve(g: &CutGraph, p: &Partition) -> Result<(Partition, ExchangeStats)> {
    let mut mask = g.mask_of(p)?;
    let n = g.len();
    let size = mask.iter().filter(|&&b| b).count();
    let steps = size.min(n - size);
    let initial = g.cut_lex(&mask);
    let mut current = initial;
    let cap = (n * n).max(1);
    let mut rounds = 0;
    let mut hit_round_cap = false;

    loop {
        if rounds == cap {
            hit_round_cap = true;
            log::warn!("pair exchange stopped at the round cap of {cap}");
            break;
        }
        let mut work = mask.clone();
        let mut locked = vec![false; n];
        let mut swaps: Vec<(usize, usize)> = Vec::with_capacity(steps);
        let mut cumulative = LexCost::ZERO;
        let mut best_gain = LexCost::ZERO;
        let mut best_len = 0;

        for _ in 0..steps {
            let to_s2: Vec<LexCost> = (0..n)
                .map(|i| {
                    if work[i] && !locked[i] {
                        g.delta_to_s2(&work, i)
                    } else {
                        LexCost::ZERO
                    }
                })
                .collect();
            let to_s1: Vec<LexCost> = (0..n)
                .map(|i| {
                    if !work[i] && !locked[i] {
                        g.delta_to_s1(&work, i)
                    } else {
                        LexCost::ZERO
                    }
                })
                .collect();
            let mut pick: Option<(LexCost, usize, usize)> = None;
            for a in (0..n).filter(|&a| work[a] && !locked[a]) {
                for b in (0..n).filter(|&b| !work[b] && !locked[b]) {
                    let delta = to_s2[a] + to_s1[b] + g.lw(a, b) + g.lw(b, a);
                    let gain = LexCost::ZERO - delta;
                    if pick.as_ref().is_none_or(|(pg, _, _)| gain > *pg) {
                        pick = Some((gain, a, b));
                    }
                }
            }
            let Some((gain, a, b)) = pick else { break };
            work[a] = false;
            work[b] = true;
            locked[a] = true;
            locked[b] = true;
            swaps.push((a, b));
            cumulative = cumulative + gain;
            if cumulative > best_gain {
                best_gain = cumulative;
                best_len = swaps.len();
            }
        }

        if best_len == 0 || !is_improvement(best_gain, current.fin.abs()) {
            break;
        }
        for &(a, b) in &swaps[..best_len] {
            mask[a] = false;
            mask[b] = true;
        }
        current = g.cut_lex(&mask);
        rounds += 1;
    }

    Ok((
        g.partition_of(&mask),
        ExchangeStats {
            rounds,
            hit_round_cap,
            initial_cut: initial.to_f64(),
            final_cut: current.to_f64(),
        },
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FbedOutcome {
    pub result: EffectorResult,
    pub min_cut: Option<Partition>,
    pub cut_after_min_cut: f64,
    pub cut_after_repair: f64,
    pub cut_after_exchange: f64,
    pub exchange: Option<ExchangeStats>,
}

/// FBED with the score set to the final cut weight, which equals `g_k(S)`.
pub fn fbed(state: &ActivationState, budget: usize, lambda: f64, table: &DistanceTable) -> Result<EffectorResult> {
    fbed_detailed(state, budget, lambda, table).map(|o| o.result)
}

pub fn fbed_detailed(
    state: &ActivationState,
    budget: usize,
    lambda: f64,
    table: &DistanceTable,
) -> Result<FbedOutcome> {
    check_budget(state, budget)?;
    check_lambda(lambda)?;
    if budget == state.active_count() {
        return Ok(FbedOutcome {
            result: EffectorResult::new(state.active().members().to_vec(), Algorithm::Fbed, 0.0),
            min_cut: None,
            cut_after_min_cut: 0.0,
            cut_after_repair: 0.0,
            cut_after_exchange: 0.0,
            exchange: None,
        });
    }
    let g = build_cut_graph(state, budget, lambda, table)?;
    let cut = global_min_cut(&g)?;
    let cut_after_min_cut = g.cut_weight(&cut)?;
    let repaired = repair_size(&g, &cut, budget)?;
    let cut_after_repair = g.cut_weight(&repaired)?;
    let (improved, stats) = exchange_improve(&g, &repaired)?;
    let cut_after_exchange = g.cut_weight(&improved)?;
    Ok(FbedOutcome {
        result: EffectorResult::new(improved.s1.clone(), Algorithm::Fbed, cut_after_exchange),
        min_cut: Some(cut),
        cut_after_min_cut,
        cut_after_repair,
        cut_after_exchange,
        exchange: Some(stats),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::distance_table;
    use crate::graph::IcNetwork;
    use crate::mbed::objective;

    fn graph(n: usize, weights: &[f64]) -> CutGraph {
        CutGraph {
            nodes: (0..n).collect(),
            weights: weights.to_vec(),
        }
    }

    fn masks(n: usize) -> impl Iterator<Item = Vec<bool>> {
        (1u32..(1 << n) - 1).map(move |m| (0..n).map(|i| m >> i & 1 == 1).collect())
    }

    fn lcg_weights(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..n * n)
            .map(|i| {
                s = crate::rng::splitmix64(s);
                if i / n == i % n {
                    0.0
                } else {
                    crate::rng::unit(s) * 5.0
                }
            })
            .collect()
    }

    #[test]
    fn two_node_directed_cut() {
        let g = graph(2, &[0.0, 3.0, 1.0, 0.0]);
        let p = global_min_cut(&g).unwrap();
        assert_eq!(p.s1, vec![1]);
        assert_eq!(p.s2, vec![0]);
        assert_eq!(g.cut_weight(&p).unwrap(), 1.0);
    }

    #[test]
    fn zero_outgoing_node_is_isolated() {
        let mut w = vec![1.0; 16];
        for i in 0..4 {
            w[i * 4 + i] = 0.0;
            w[2 * 4 + i] = 0.0;
        }
        let g = graph(4, &w);
        let p = global_min_cut(&g).unwrap();
        assert_eq!(g.cut_weight(&p).unwrap(), 0.0);
        assert_eq!(p.s1, vec![2]);
    }

    #[test]
    fn min_cut_matches_exhaustive_bipartitions() {
        for seed in 0..40 {
            let n = 3 + (seed as usize % 6);
            let g = graph(n, &lcg_weights(n, seed));
            let p = global_min_cut(&g).unwrap();
            assert!(!p.s1.is_empty() && !p.s2.is_empty());
            let best = masks(n).map(|m| g.cut_lex(&m).fin).fold(f64::INFINITY, f64::min);
            assert!((g.cut_weight(&p).unwrap() - best).abs() < 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn repair_steps_follow_one_step_oracle() {
        for seed in 0..30 {
            let n = 7;
            let g = graph(n, &lcg_weights(n, 100 + seed));
            let start = Partition {
                s1: vec![0, 1, 2, 3],
                s2: vec![4, 5, 6],
            };
            // one move down to |S1| = 3, checked against every candidate
            let one = repair_size(&g, &start, 3).unwrap();
            let best = start
                .s1
                .iter()
                .map(|&u| {
                    let s1: Vec<_> = start.s1.iter().copied().filter(|&x| x != u).collect();
                    let mut s2 = start.s2.clone();
                    s2.push(u);
                    s2.sort();
                    g.cut_weight(&Partition { s1, s2 }).unwrap()
                })
                .fold(f64::INFINITY, f64::min);
            assert!((g.cut_weight(&one).unwrap() - best).abs() < 1e-9);

            // two greedy moves down to B = 1, each verified the same way
            let mut cur = one.clone();
            let two = repair_size(&g, &one, 2).unwrap();
            let three = repair_size(&g, &two, 1).unwrap();
            for next in [&two, &three] {
                let best = cur
                    .s1
                    .iter()
                    .map(|&u| {
                        let s1: Vec<_> = cur.s1.iter().copied().filter(|&x| x != u).collect();
                        let mut s2 = cur.s2.clone();
                        s2.push(u);
                        s2.sort();
                        g.cut_weight(&Partition { s1, s2 }).unwrap()
                    })
                    .fold(f64::INFINITY, f64::min);
                assert!((g.cut_weight(next).unwrap() - best).abs() < 1e-9);
                cur = next.clone();
            }
            assert_eq!(repair_size(&g, &three, 1).unwrap(), three);
            // growing works too
            assert_eq!(repair_size(&g, &three, 5).unwrap().s1.len(), 5);
        }
    }

    #[test]
    fn exchange_reaches_pair_swap_local_optimum() {
        for seed in 0..40 {
            let n = 4 + (seed as usize % 7);
            let g = graph(n, &lcg_weights(n, 500 + seed));
            let b = 1 + (seed as usize % (n - 1));
            let start = Partition {
                s1: (0..b).collect(),
                s2: (b..n).collect(),
            };
            let before = g.cut_weight(&start).unwrap();
            let (p, stats) = exchange_improve(&g, &start).unwrap();
            assert!(!stats.hit_round_cap);
            assert_eq!(p.s1.len(), b);
            let after = g.cut_weight(&p).unwrap();
            assert!(after <= before + 1e-12);
            assert!((after - stats.final_cut).abs() < 1e-9);
            for &a in &p.s1 {
                for &c in &p.s2 {
                    let s1: Vec<_> = p.s1.iter().map(|&x| if x == a { c } else { x }).collect();
                    let s2: Vec<_> = p.s2.iter().map(|&x| if x == c { a } else { x }).collect();
                    let swapped = g.cut_weight(&Partition { s1, s2 }).unwrap();
                    assert!(swapped >= after - 1e-9, "seed {seed}: swap {a}<->{c} improves");
                }
            }
        }
    }

    #[test]
    fn locally_optimal_partition_is_unchanged() {
        // S1 = {0} already has the only zero-weight outgoing edges
        let mut w = vec![1.0; 9];
        for i in 0..3 {
            w[i * 3 + i] = 0.0;
        }
        w[1] = 0.0;
        w[2] = 0.0;
        let g = graph(3, &w);
        let start = Partition {
            s1: vec![0],
            s2: vec![1, 2],
        };
        let (p, stats) = exchange_improve(&g, &start).unwrap();
        assert_eq!(p, start);
        assert_eq!(stats.rounds, 0);
    }

    #[test]
    fn single_improving_swap_is_committed() {
        // 4 nodes: node 3 is the only cheap source, start from S1 = {0}
        let mut w = vec![2.0; 16];
        for i in 0..4 {
            w[i * 4 + i] = 0.0;
            w[3 * 4 + i] = if i == 3 { 0.0 } else { 0.1 };
        }
        let g = graph(4, &w);
        let start = Partition {
            s1: vec![0],
            s2: vec![1, 2, 3],
        };
        let (p, stats) = exchange_improve(&g, &start).unwrap();
        assert_eq!(p.s1, vec![3]);
        assert_eq!(stats.rounds, 1);
        assert!(stats.final_cut < stats.initial_cut);
    }

    fn detached_instance() -> (IcNetwork, ActivationState) {
        // 0..4 strongly tied, 4 only reachable weakly and leaking heavily
        let mut edges = Vec::new();
        for u in 0..4 {
            for v in 0..4 {
                if u != v {
                    edges.push((u, v, 0.9));
                }
            }
            edges.push((u, 4, 0.01));
        }
        edges.push((4, 5, 0.99));
        edges.push((4, 6, 0.99));
        let net = IcNetwork::new(7, edges).unwrap();
        let state = ActivationState::from_active(7, 0..5).unwrap();
        (net, state)
    }

    #[test]
    fn cut_weight_equals_objective() {
        let (net, state) = detached_instance();
        let all: Vec<_> = (0..7).collect();
        for k in [1, 3] {
            let t = distance_table(&net, state.active().members(), &all, k).unwrap();
            for lambda in [0.0, 0.3, 1.0] {
                let g = build_cut_graph(&state, 2, lambda, &t).unwrap();
                for s1 in [vec![0, 1], vec![0, 4], vec![3, 4]] {
                    let s2 = state.active().iter().filter(|u| !s1.contains(u)).collect();
                    let cut = g.cut_weight(&Partition { s1: s1.clone(), s2 }).unwrap();
                    let obj = objective(&state, &s1, lambda, &t).unwrap();
                    assert!(
                        cut == obj || (cut - obj).abs() <= 1e-9 * obj.abs().max(1.0),
                        "{cut} vs {obj}"
                    );
                }
            }
        }
    }

    #[test]
    fn lambda_one_weights_are_distances() {
        let (net, state) = detached_instance();
        let all: Vec<_> = (0..7).collect();
        let t = distance_table(&net, state.active().members(), &all, 3).unwrap();
        let g = build_cut_graph(&state, 2, 1.0, &t).unwrap();
        assert_eq!(g.w(0, 4), t.d(0, 4));
        assert_eq!(g.w(4, 1), t.d(4, 1));
    }

    #[test]
    fn detached_node_stays_out() {
        let (net, state) = detached_instance();
        let all: Vec<_> = (0..7).collect();
        let t = distance_table(&net, state.active().members(), &all, 3).unwrap();
        let out = fbed_detailed(&state, 4, 0.5, &t).unwrap();
        assert_eq!(out.result.members, vec![0, 1, 2, 3]);
        assert!(out.cut_after_exchange <= out.cut_after_repair + 1e-12);
        let full = fbed(&state, 5, 0.5, &t).unwrap();
        assert_eq!(full.members.len(), 5);
        assert_eq!(full.score, 0.0);
    }
}

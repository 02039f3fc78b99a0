//! Monte Carlo simulation of the independent cascade model.
//!
//! Each edge's coin is a pure function of the trial key and the edge id
//! (live-edge semantics). Two seed sets simulated under the same key
//! therefore see the same live edges, and `S ⊆ S'` implies the active set of
//! `S` is contained in that of `S'` realization by realization. Trial keys are
//! derived from `(seed, trial index)`, which is what makes estimates with a
//! shared seed use common random numbers.

use rand::RngCore;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{IcNetwork, NodeId};
use crate::rng;
use crate::state::ActivationState;

/// Trial count used when the caller does not choose one.
pub const DEFAULT_TRIALS: usize = 10_000;

const CHUNK: usize = 256;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffusionOutcome {
    pub final_state: ActivationState,
    /// Number of rounds that activated at least one new node.
    pub rounds: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Reusable scratch space for repeated simulations on one network.
pub struct Simulator<'a> {
    net: &'a IcNetwork,
    stamp: Vec<u32>,
    epoch: u32,
    active: Vec<NodeId>,
}

impl<'a> Simulator<'a> {
    pub fn new(net: &'a IcNetwork) -> Self {
        Simulator {
            net,
            stamp: vec![0; net.node_count()],
            epoch: 0,
            active: Vec::new(),
        }
    }

    fn next_epoch(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
    }

    /// Runs one cascade. Returns the activated nodes (seeds first, then in
    /// activation order) and the number of productive rounds.
    pub fn run(&mut self, seeds: &[NodeId], key: u64) -> (&[NodeId], usize) {
        self.next_epoch();
        let epoch = self.epoch;
        self.active.clear();
        for &s in seeds {
            if self.stamp[s] != epoch {
                self.stamp[s] = epoch;
                self.active.push(s);
            }
        }
        let mut rounds = 0;
        let mut frontier = 0..self.active.len();
        while !frontier.is_empty() {
            let start = self.active.len();
            for i in frontier.clone() {
                let u = self.active[i];
                for e in self.net.out_edge_ids(u) {
                    let v = self.net.head(e);
                    if self.stamp[v] == epoch {
                        continue;
                    }
                    if rng::unit(rng::derive(key, e as u64)) < self.net.prob(e) {
                        self.stamp[v] = epoch;
                        self.active.push(v);
                    }
                }
            }
            if self.active.len() > start {
                rounds += 1;
            }
            frontier = start..self.active.len();
        }
        (&self.active, rounds)
    }

    pub fn is_active(&self, u: NodeId) -> bool {
        self.stamp[u] == self.epoch
    }
}

fn check_seeds(net: &IcNetwork, seeds: &[NodeId]) -> Result<()> {
    if let Some(&s) = seeds.iter().find(|&&s| s >= net.node_count()) {
        return Err(Error::invalid(format!("seed {s} out of range")));
    }
    Ok(())
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    Ok(())
}

fn check_target(net: &IcNetwork, target: &ActivationState) -> Result<()> {
    if target.len() != net.node_count() {
        return Err(Error::invalid(format!(
            "state has {} entries but the network has {} nodes",
            target.len(),
            net.node_count()
        )));
    }
    Ok(())
}

/// Simulates one cascade, drawing the realization key from `rng`.
pub fn simulate_once<R: RngCore + ?Sized>(net: &IcNetwork, seeds: &[NodeId], rng: &mut R) -> Result<DiffusionOutcome> {
    check_seeds(net, seeds)?;
    Ok(simulate_with_key(net, seeds, rng.next_u64()))
}

pub fn simulate_with_key(net: &IcNetwork, seeds: &[NodeId], key: u64) -> DiffusionOutcome {
    let mut sim = Simulator::new(net);
    let (active, rounds) = sim.run(seeds, key);
    let final_state =
        ActivationState::from_active(net.node_count(), active.iter().copied()).expect("simulated nodes are in range");
    DiffusionOutcome { final_state, rounds }
}

/// Key of trial `t` under master seed `seed`.
#[inline]
pub fn trial_key(seed: u64, t: usize) -> u64 {
    rng::derive(seed, t as u64)
}

#[derive(Clone, Default)]
struct Tally {
    dist_sum: u64,
    dist_sq_sum: u64,
    counts: Vec<u32>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.dist_sum += other.dist_sum;
        self.dist_sq_sum += other.dist_sq_sum;
        if self.counts.is_empty() {
            self.counts = other.counts;
        } else {
            for (a, b) in self.counts.iter_mut().zip(other.counts) {
                *a += b;
            }
        }
        self
    }
}

fn run_trials(
    net: &IcNetwork,
    target: Option<&ActivationState>,
    seeds: &[NodeId],
    trials: usize,
    seed: u64,
    want_counts: bool,
) -> Tally {
    let chunks = trials.div_ceil(CHUNK);
    let n1 = target.map_or(0, |t| t.active_count() as u64);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut sim = Simulator::new(net);
            let mut tally = Tally {
                counts: if want_counts {
                    vec![0; net.node_count()]
                } else {
                    Vec::new()
                },
                ..Tally::default()
            };
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let (active, _) = sim.run(seeds, trial_key(seed, t));
                if let Some(target) = target {
                    let hits = active.iter().filter(|&&u| target.is_active(u)).count() as u64;
                    let d = n1 + active.len() as u64 - 2 * hits;
                    tally.dist_sum += d;
                    tally.dist_sq_sum += d * d;
                }
                if want_counts {
                    for &u in active {
                        tally.counts[u] += 1;
                    }
                }
            }
            tally
        })
        .reduce(Tally::default, Tally::merge)
}

fn mean_estimate(sum: u64, sq_sum: u64, trials: usize) -> MetricEstimate {
    let n = trials as f64;
    let mean = sum as f64 / n;
    let stderr = if trials > 1 {
        let num = (trials as i128) * (sq_sum as i128) - (sum as i128) * (sum as i128);
        let var = num as f64 / (n * (n - 1.0));
        (var.max(0.0) / n).sqrt()
    } else {
        0.0
    };
    MetricEstimate { mean, stderr, trials }
}

fn f2_from_alpha(target: &ActivationState, alpha: &[f64], trials: usize) -> MetricEstimate {
    let mut mean = 0.0;
    let mut stderr = 0.0;
    for (u, &a) in alpha.iter().enumerate() {
        let t = if target.is_active(u) { 1.0 } else { 0.0 };
        mean += (t - a).abs();
        stderr += (a * (1.0 - a) / trials as f64).sqrt();
    }
    MetricEstimate { mean, stderr, trials }
}

/// `f1(S)`: expected Hamming distance between `target` and the final state.
pub fn estimate_f1(
    net: &IcNetwork,
    target: &ActivationState,
    seeds: &[NodeId],
    trials: usize,
    seed: u64,
) -> Result<MetricEstimate> {
    check_trials(trials)?;
    check_seeds(net, seeds)?;
    check_target(net, target)?;
    let tally = run_trials(net, Some(target), seeds, trials, seed, false);
    Ok(mean_estimate(tally.dist_sum, tally.dist_sq_sum, trials))
}

/// Empirical activation probability `α(S, u)` of every node.
pub fn estimate_alpha(net: &IcNetwork, seeds: &[NodeId], trials: usize, seed: u64) -> Result<Vec<f64>> {
    check_trials(trials)?;
    check_seeds(net, seeds)?;
    let tally = run_trials(net, None, seeds, trials, seed, true);
    Ok(tally.counts.iter().map(|&c| c as f64 / trials as f64).collect())
}

/// `f2(S)`: L1 distance between `target` and the expected final state. The
/// reported stderr is the sum of per-node binomial standard errors.
pub fn estimate_f2(
    net: &IcNetwork,
    target: &ActivationState,
    seeds: &[NodeId],
    trials: usize,
    seed: u64,
) -> Result<MetricEstimate> {
    check_target(net, target)?;
    let alpha = estimate_alpha(net, seeds, trials, seed)?;
    Ok(f2_from_alpha(target, &alpha, trials))
}

/// `f1` and `f2` from one shared batch of simulations.
pub fn estimate_f1_f2(
    net: &IcNetwork,
    target: &ActivationState,
    seeds: &[NodeId],
    trials: usize,
    seed: u64,
) -> Result<(MetricEstimate, MetricEstimate)> {
    check_trials(trials)?;
    check_seeds(net, seeds)?;
    check_target(net, target)?;
    let tally = run_trials(net, Some(target), seeds, trials, seed, true);
    let f1 = mean_estimate(tally.dist_sum, tally.dist_sq_sum, trials);
    let alpha: Vec<f64> = tally.counts.iter().map(|&c| c as f64 / trials as f64).collect();
    Ok((f1, f2_from_alpha(target, &alpha, trials)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn edge(p: f64) -> IcNetwork {
        IcNetwork::new(2, [(0, 1, p)]).unwrap()
    }

    #[test]
    fn certain_edge_activates_in_one_round() {
        let out = simulate_with_key(&edge(1.0), &[0], 42);
        assert_eq!(out.final_state.bits(), &[true, true]);
        assert_eq!(out.rounds, 1);
    }

    #[test]
    fn impossible_edge_never_fires() {
        let out = simulate_with_key(&edge(0.0), &[0], 42);
        assert_eq!(out.final_state.bits(), &[true, false]);
        assert_eq!(out.rounds, 0);
    }

    #[test]
    fn empty_seed_set() {
        let out = simulate_with_key(&edge(1.0), &[], 42);
        assert_eq!(out.final_state.active_count(), 0);
        assert_eq!(out.rounds, 0);
    }

    #[test]
    fn simulate_once_is_deterministic_in_rng() {
        let net = IcNetwork::new(4, [(0, 1, 0.5), (1, 2, 0.5), (0, 3, 0.5), (3, 2, 0.5)]).unwrap();
        let a = simulate_once(&net, &[0], &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = simulate_once(&net, &[0], &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(simulate_once(&net, &[7], &mut ChaCha8Rng::seed_from_u64(9)).is_err());
    }

    #[test]
    fn f1_exact_match_is_zero() {
        let net = IcNetwork::new(1, std::iter::empty()).unwrap();
        let target = ActivationState::from_bits(vec![true]);
        let est = estimate_f1(&net, &target, &[0], 100, 1).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn f1_half_edge_converges_to_half() {
        let target = ActivationState::from_bits(vec![true, true]);
        let est = estimate_f1(&edge(0.5), &target, &[0], 40_000, 3).unwrap();
        // sd of Bernoulli(0.5) over 40k trials is 0.0025
        assert!((est.mean - 0.5).abs() < 0.0125, "{est:?}");
        assert!((est.stderr - 0.0025).abs() < 1e-4);
    }

    #[test]
    fn f1_certain_mismatch() {
        let target = ActivationState::from_bits(vec![true, false]);
        let est = estimate_f1(&edge(1.0), &target, &[0], 50, 3).unwrap();
        assert_eq!(est.mean, 1.0);
    }

    #[test]
    fn zero_trials_rejected() {
        let target = ActivationState::from_bits(vec![true, false]);
        assert!(estimate_f1(&edge(1.0), &target, &[0], 0, 3).is_err());
        assert!(estimate_alpha(&edge(1.0), &[0], 0, 3).is_err());
    }

    #[test]
    fn alpha_seed_and_unreachable() {
        let net = IcNetwork::new(3, [(0, 1, 0.3)]).unwrap();
        let alpha = estimate_alpha(&net, &[0], 10_000, 11).unwrap();
        assert_eq!(alpha[0], 1.0);
        assert_eq!(alpha[2], 0.0);
        assert!((alpha[1] - 0.3).abs() <= 0.02, "{}", alpha[1]);
    }

    #[test]
    fn f2_on_half_edge() {
        let on = ActivationState::from_bits(vec![true, true]);
        let off = ActivationState::from_bits(vec![true, false]);
        let a = estimate_f2(&edge(0.5), &on, &[0], 40_000, 5).unwrap();
        let b = estimate_f2(&edge(0.5), &off, &[0], 40_000, 5).unwrap();
        assert!((a.mean - 0.5).abs() < 0.0125);
        assert!((b.mean - 0.5).abs() < 0.0125);
        // same coins: the two estimates are complementary
        assert!((a.mean + b.mean - 1.0).abs() < 1e-12);
        let exact = estimate_f2(&edge(1.0), &ActivationState::from_bits(vec![true, true]), &[0], 10, 5).unwrap();
        assert_eq!(exact.mean, 0.0);
    }

    #[test]
    fn combined_estimator_matches_separate_ones() {
        let net = IcNetwork::new(4, [(0, 1, 0.4), (1, 2, 0.6), (2, 3, 0.2), (0, 3, 0.3)]).unwrap();
        let target = ActivationState::from_active(4, [0, 1, 2]).unwrap();
        let (f1, f2) = estimate_f1_f2(&net, &target, &[0], 3000, 8).unwrap();
        assert_eq!(f1, estimate_f1(&net, &target, &[0], 3000, 8).unwrap());
        assert_eq!(f2, estimate_f2(&net, &target, &[0], 3000, 8).unwrap());
    }

    fn random_net(n: usize, raw: Vec<(usize, usize, f64)>) -> IcNetwork {
        IcNetwork::new(n, raw.into_iter().filter(|(u, v, _)| u != v)).unwrap()
    }

    proptest! {
        #[test]
        fn adding_seeds_never_shrinks_a_realization(
            raw in proptest::collection::vec((0usize..10, 0usize..10, 0.0f64..=1.0), 0..40),
            small in proptest::collection::btree_set(0usize..10, 0..3),
            extra in proptest::collection::btree_set(0usize..10, 0..3),
            key in any::<u64>(),
        ) {
            let net = random_net(10, raw);
            let s: Vec<_> = small.iter().copied().collect();
            let big: Vec<_> = small.union(&extra).copied().collect();
            let a = simulate_with_key(&net, &s, key).final_state;
            let b = simulate_with_key(&net, &big, key).final_state;
            prop_assert!(a.active().is_subset_of(b.active()));
        }

        #[test]
        fn outcome_invariants(
            raw in proptest::collection::vec((0usize..10, 0usize..10, 0.0f64..=1.0), 0..40),
            seeds in proptest::collection::btree_set(0usize..10, 0..4),
            key in any::<u64>(),
        ) {
            let net = random_net(10, raw);
            let seeds: Vec<_> = seeds.into_iter().collect();
            let out = simulate_with_key(&net, &seeds, key).final_state;
            for &s in &seeds {
                prop_assert!(out.is_active(s));
            }
            for u in out.active().iter().filter(|u| !seeds.contains(u)) {
                prop_assert!(net.in_edges(u).any(|e| out.is_active(e.tail)));
            }
            // all-ones target: Hamming distance is N minus the spread
            let ones = ActivationState::from_bits(vec![true; 10]);
            prop_assert_eq!(ones.hamming(&out), 10 - out.active_count());
        }
    }
}

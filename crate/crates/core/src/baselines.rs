//! Comparison detectors: highest active out-degree and uniform sampling.

use rand::seq::index::sample;
use rand::Rng;

use crate::error::Result;
use crate::graph::{IcNetwork, NodeId};
use crate::result::{check_budget, Algorithm, EffectorResult};
use crate::state::ActivationState;

/// Picks the `budget` active nodes with the most out-neighbours inside the
/// active set, ties by node index.
pub fn out_degree_detect(net: &IcNetwork, state: &ActivationState, budget: usize) -> Result<EffectorResult> {
    check_budget(state, budget)?;
    let mut ranked: Vec<(usize, NodeId)> = state
        .active()
        .iter()
        .map(|u| (net.out_edges(u).filter(|e| state.is_active(e.head)).count(), u))
        .collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    ranked.truncate(budget);
    let score = ranked.iter().map(|r| r.0).sum::<usize>() as f64;
    let members = ranked.into_iter().map(|(_, u)| u).collect();
    Ok(EffectorResult::new(members, Algorithm::OutDegree, score).with_note("out-degree within the active subgraph"))
}

/// Uniform sample of `budget` distinct active nodes.
pub fn random_detect<R: Rng + ?Sized>(state: &ActivationState, budget: usize, rng: &mut R) -> Result<EffectorResult> {
    check_budget(state, budget)?;
    let active = state.active().members();
    let members = sample(rng, active.len(), budget)
        .into_iter()
        .map(|i| active[i])
        .collect();
    Ok(EffectorResult::new(members, Algorithm::Random, 0.0))
}

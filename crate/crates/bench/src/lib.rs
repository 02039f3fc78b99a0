//! Shared fixtures for the benchmarks.

use effector_core::distance::{distance_table, DistanceTable};
use effector_core::generate::{social_surrogate, SocialParams};
use effector_core::harness::generate_state_random;
use effector_core::rng::stream;
use effector_core::{ActivationState, IcNetwork, ProbabilityModel};

pub struct Fixture {
    pub net: IcNetwork,
    pub state: ActivationState,
    pub table1: DistanceTable,
    pub table3: DistanceTable,
}

/// A weighted-cascade social graph with `n1` randomly chosen active nodes.
pub fn social_fixture(nodes: usize, edges: usize, n1: usize, seed: u64) -> Fixture {
    let params = SocialParams {
        nodes,
        undirected_edges: edges,
        communities: (nodes / 100).max(2),
        ..SocialParams::default()
    };
    let net = social_surrogate(params, &mut stream(seed, 0))
        .and_then(|g| g.assign_probabilities(ProbabilityModel::WeightedCascade))
        .expect("fixture graph");
    let state = generate_state_random(&net, n1, &mut stream(seed, 1)).expect("fixture state");
    let x1 = state.active().members().to_vec();
    let all: Vec<_> = (0..net.node_count()).collect();
    let table1 = distance_table(&net, &x1, &all, 1).expect("fixture table");
    let table3 = distance_table(&net, &x1, &all, 3).expect("fixture table");
    Fixture {
        net,
        state,
        table1,
        table3,
    }
}

/// A dense square cost matrix with uniform entries.
pub fn cost_matrix(n: usize, seed: u64) -> Vec<f64> {
    use rand::Rng;
    let mut rng = stream(seed, 0);
    (0..n * n).map(|_| rng.gen::<f64>()).collect()
}

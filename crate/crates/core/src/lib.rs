//! Effector detection for the independent cascade (IC) diffusion model.
//!
//! Given a directed network with per-edge propagation probabilities and an
//! observed activation state, the detectors in this crate pick `B` active
//! nodes that best explain the state:
//!
//! * [`mbed`]: matching-based selection on first influence distances, with a
//!   factor-3 guarantee for the distance objective `g_1`;
//! * [`fbed`]: minimum cut plus size repair and pair exchange on k-th
//!   influence distances;
//! * [`mlbed`]: maximum likelihood on DAGs extracted from the active subgraph;
//! * [`baselines`]: out-degree and uniform random selection.
//!
//! [`diffusion`] estimates the quality metrics `f1`/`f2` by Monte Carlo
//! simulation and [`harness`] runs complete experiments.

pub mod baselines;
pub mod diffusion;
pub mod distance;
pub mod error;
pub mod fbed;
pub mod flow;
pub mod generate;
pub mod graph;
pub mod harness;
pub mod io;
pub mod matching;
pub mod mbed;
pub mod mlbed;
pub mod result;
pub mod rng;
pub mod state;

pub use error::{Error, Result};
pub use graph::{EdgeId, EdgeRef, IcNetwork, NodeId, ProbabilityModel};
pub use result::{Algorithm, EffectorResult};
pub use state::{ActivationState, NodeSet};

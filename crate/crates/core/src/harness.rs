//! Experiment protocols: generating activation states, running detectors
//! side by side and scoring them with common random numbers.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{out_degree_detect, random_detect};
use crate::diffusion::{estimate_f1, estimate_f1_f2, simulate_once, MetricEstimate, DEFAULT_TRIALS};
use crate::distance::{distance_table, DistanceTable};
use crate::error::{Error, Result};
use crate::fbed::{fbed, DEFAULT_K};
use crate::graph::{IcNetwork, NodeId, ProbabilityModel};
use crate::io::load_edge_list_file;
use crate::mbed::{mbed, DEFAULT_LAMBDA};
use crate::mlbed::mlbed;
use crate::result::{Algorithm, EffectorResult};
use crate::rng::{derive, stream};
use crate::state::ActivationState;

/// How each replication obtains its activation state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Protocol {
    /// `budget` uniform seeds, one diffusion run; the same `budget` is used
    /// for detection.
    Seeded { budget: usize },
    /// A uniform `n1`-subset is active; the budget is drawn per replication
    /// from `ceil(0.1 n1)..=floor(0.2 n1)`.
    Random { n1: usize },
}

fn default_probability() -> String {
    "wc".into()
}
fn default_algorithms() -> Vec<Algorithm> {
    Algorithm::ALL.to_vec()
}
fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}
fn default_k() -> usize {
    DEFAULT_K
}
fn default_trials() -> usize {
    DEFAULT_TRIALS
}
fn default_one() -> usize {
    1
}
fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Edge list; relative paths are resolved against the config file.
    #[serde(default)]
    pub graph_path: Option<PathBuf>,
    #[serde(default)]
    pub undirected: bool,
    /// `wc`, `explicit` or `uniform:P`.
    #[serde(default = "default_probability")]
    pub probability: String,
    pub protocol: Protocol,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_one")]
    pub replications: usize,
    /// Restrict the graph to a breadth-first ball of this many nodes.
    #[serde(default)]
    pub subgraph_size: Option<usize>,
    #[serde(default)]
    pub subgraph_root: usize,
    /// Node order seed for DAG extraction; node-index order when absent.
    #[serde(default)]
    pub mlbed_order_seed: Option<u64>,
    /// Record wall-clock times; disable for byte-identical output.
    #[serde(default = "default_true")]
    pub timing: bool,
    #[serde(default)]
    pub report_f2: bool,
    /// Score every detector of a replication on the same simulated
    /// realizations; otherwise each detector gets its own stream.
    #[serde(default = "default_true")]
    pub common_random_numbers: bool,
}

impl ExperimentConfig {
    pub fn new(protocol: Protocol) -> Self {
        ExperimentConfig {
            graph_path: None,
            undirected: false,
            probability: default_probability(),
            protocol,
            algorithms: default_algorithms(),
            lambda: DEFAULT_LAMBDA,
            k: DEFAULT_K,
            trials: DEFAULT_TRIALS,
            master_seed: 0,
            replications: 1,
            subgraph_size: None,
            subgraph_root: 0,
            mlbed_order_seed: None,
            timing: true,
            report_f2: false,
            common_random_numbers: true,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file and resolves `graph_path` relative to it.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        if let (Some(g), Some(dir)) = (&cfg.graph_path, path.parent()) {
            if g.is_relative() {
                cfg.graph_path = Some(dir.join(g));
            }
        }
        Ok(cfg)
    }

    pub fn probability_model(&self) -> Result<ProbabilityModel> {
        self.probability
            .parse()
            .map_err(|e: Error| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda {} is outside [0, 1]", self.lambda));
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.algorithms.is_empty() {
            return bad("no algorithms selected".into());
        }
        match self.protocol {
            Protocol::Seeded { budget: 0 } => return bad("seeded protocol needs budget >= 1".into()),
            Protocol::Random { n1: 0 } => return bad("random protocol needs n1 >= 1".into()),
            _ => {}
        }
        self.probability_model()?;
        Ok(())
    }

    /// Loads the configured graph, restricts it and assigns probabilities.
    pub fn load_network(&self) -> Result<IcNetwork> {
        let path = self
            .graph_path
            .as_ref()
            .ok_or_else(|| Error::Config("graph_path is not set".into()))?;
        let loaded = load_edge_list_file(path, self.undirected)?;
        self.prepare_network(loaded.network)
    }

    /// Applies the subgraph restriction and probability model to `net`.
    pub fn prepare_network(&self, net: IcNetwork) -> Result<IcNetwork> {
        let net = match self.subgraph_size {
            Some(size) => {
                if self.subgraph_root >= net.node_count() {
                    return Err(Error::Config(format!(
                        "subgraph root {} is out of range",
                        self.subgraph_root
                    )));
                }
                net.induced_subgraph(&net.undirected_ball(self.subgraph_root, size))?
            }
            None => net,
        };
        net.assign_probabilities(self.probability_model()?)
    }
}

/// One detector run in one replication. `f1`, `score` are absent when the
/// detector could not run; `skipped` then holds the reason.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRecord {
    pub replication: usize,
    pub n1: usize,
    pub budget: usize,
    pub algorithm: Algorithm,
    pub f1: Option<MetricEstimate>,
    pub f2: Option<MetricEstimate>,
    pub score: Option<f64>,
    pub wall_ms: f64,
    pub skipped: Option<String>,
}

pub const CSV_HEADER: [&str; 8] = [
    "replication",
    "n1",
    "budget",
    "algorithm",
    "f1_mean",
    "f1_stderr",
    "score",
    "wall_ms",
];

fn opt_num(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes records as CSV; `f2_mean,f2_stderr` columns are appended when
/// `with_f2` is set.
pub fn write_records_csv<W: Write>(records: &[ResultRecord], with_f2: bool, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = CSV_HEADER.to_vec();
    if with_f2 {
        header.extend(["f2_mean", "f2_stderr"]);
    }
    let io_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(&header).map_err(io_err)?;
    for r in records {
        let mut row = vec![
            r.replication.to_string(),
            r.n1.to_string(),
            r.budget.to_string(),
            r.algorithm.to_string(),
            opt_num(r.f1.map(|m| m.mean)),
            opt_num(r.f1.map(|m| m.stderr)),
            opt_num(r.score),
            format!("{:.3}", r.wall_ms),
        ];
        if with_f2 {
            row.push(opt_num(r.f2.map(|m| m.mean)));
            row.push(opt_num(r.f2.map(|m| m.stderr)));
        }
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Picks `budget` uniform seeds and runs one diffusion from them.
pub fn generate_state_by_seeding<R: Rng + ?Sized>(
    net: &IcNetwork,
    budget: usize,
    rng: &mut R,
) -> Result<(ActivationState, Vec<NodeId>)> {
    let n = net.node_count();
    if budget > n {
        return Err(Error::invalid(format!("budget {budget} exceeds the {n} nodes")));
    }
    let mut seeds = sample(rng, n, budget).into_vec();
    seeds.sort_unstable();
    let outcome = simulate_once(net, &seeds, rng)?;
    Ok((outcome.final_state, seeds))
}

/// A uniform random `n1`-subset of the nodes is active.
pub fn generate_state_random<R: Rng + ?Sized>(net: &IcNetwork, n1: usize, rng: &mut R) -> Result<ActivationState> {
    let n = net.node_count();
    if n1 > n {
        return Err(Error::invalid(format!("n1 = {n1} exceeds the {n} nodes")));
    }
    ActivationState::from_active(n, sample(rng, n, n1))
}

/// Budget range for a random state: `ceil(0.1 n1)..=floor(0.2 n1)`, kept
/// inside `1..=n1`.
pub fn random_budget_range(n1: usize) -> (usize, usize) {
    let lo = n1.div_ceil(10).max(1).min(n1);
    let hi = (n1 / 5).max(lo);
    (lo, hi)
}

/// Distances a detector run needs, computed once per state.
pub struct DetectorInputs<'a> {
    pub net: &'a IcNetwork,
    pub state: &'a ActivationState,
    pub lambda: f64,
    pub k: usize,
    pub mlbed_order_seed: Option<u64>,
    first: Option<DistanceTable>,
    kth: Option<DistanceTable>,
}

impl<'a> DetectorInputs<'a> {
    pub fn new(net: &'a IcNetwork, state: &'a ActivationState, lambda: f64, k: usize) -> Self {
        DetectorInputs {
            net,
            state,
            lambda,
            k,
            mlbed_order_seed: None,
            first: None,
            kth: None,
        }
    }

    fn table(&mut self, k: usize) -> Result<&DistanceTable> {
        let slot = if k == 1 { &mut self.first } else { &mut self.kth };
        if slot.is_none() {
            let all: Vec<NodeId> = (0..self.net.node_count()).collect();
            *slot = Some(distance_table(self.net, self.state.active().members(), &all, k)?);
        }
        Ok(slot.as_ref().expect("filled above"))
    }

    /// Runs one detector; `rng` drives the Random baseline only.
    pub fn run<R: Rng + ?Sized>(&mut self, algorithm: Algorithm, budget: usize, rng: &mut R) -> Result<EffectorResult> {
        let (state, lambda) = (self.state, self.lambda);
        match algorithm {
            Algorithm::Mbed => mbed(state, budget, lambda, self.table(1)?),
            Algorithm::Fbed => {
                let k = self.k;
                fbed(state, budget, lambda, self.table(k)?)
            }
            Algorithm::Mlbed => mlbed(self.net, state, budget, self.mlbed_order_seed),
            Algorithm::OutDegree => out_degree_detect(self.net, state, budget),
            Algorithm::Random => random_detect(state, budget, rng),
        }
    }
}

fn run_replication(net: &IcNetwork, cfg: &ExperimentConfig, rep: usize) -> Result<Vec<ResultRecord>> {
    let rep_seed = derive(cfg.master_seed, rep as u64);
    let mut rng = stream(rep_seed, 0);
    let (state, budget) = match cfg.protocol {
        Protocol::Seeded { budget } => (generate_state_by_seeding(net, budget, &mut rng)?.0, budget),
        Protocol::Random { n1 } => {
            let state = generate_state_random(net, n1, &mut rng)?;
            let (lo, hi) = random_budget_range(n1);
            (state, rng.gen_range(lo..=hi))
        }
    };
    let n1 = state.active_count();
    let shared_eval_seed = derive(rep_seed, 1);
    let mut inputs = DetectorInputs::new(net, &state, cfg.lambda, cfg.k);
    inputs.mlbed_order_seed = cfg.mlbed_order_seed;
    let mut records = Vec::with_capacity(cfg.algorithms.len());
    for (i, &algorithm) in cfg.algorithms.iter().enumerate() {
        let eval_seed = if cfg.common_random_numbers {
            shared_eval_seed
        } else {
            derive(rep_seed, 3 + i as u64)
        };
        let mut record = ResultRecord {
            replication: rep,
            n1,
            budget,
            algorithm,
            f1: None,
            f2: None,
            score: None,
            wall_ms: 0.0,
            skipped: None,
        };
        let started = Instant::now();
        let mut detector_rng = stream(rep_seed, 2);
        let outcome = inputs.run(algorithm, budget, &mut detector_rng);
        if cfg.timing {
            record.wall_ms = started.elapsed().as_secs_f64() * 1e3;
        }
        match outcome {
            Ok(result) => {
                record.score = Some(result.score);
                if cfg.report_f2 {
                    let (f1, f2) = estimate_f1_f2(net, &state, &result.members, cfg.trials, eval_seed)?;
                    record.f1 = Some(f1);
                    record.f2 = Some(f2);
                } else {
                    record.f1 = Some(estimate_f1(net, &state, &result.members, cfg.trials, eval_seed)?);
                }
            }
            Err(e @ (Error::InvalidArgument(_) | Error::Infeasible(_))) => {
                log::warn!("replication {rep}: {algorithm} skipped: {e}");
                record.skipped = Some(e.to_string());
            }
            Err(e) => return Err(e),
        }
        records.push(record);
    }
    Ok(records)
}

/// Runs every replication on an already prepared network. Replications run
/// in parallel; each derives its randomness from `(master_seed, index)`.
pub fn run_experiment_on(net: &IcNetwork, cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    if let Protocol::Random { n1 } = cfg.protocol {
        if n1 > net.node_count() {
            return Err(Error::Config(format!(
                "n1 = {n1} exceeds the {} nodes",
                net.node_count()
            )));
        }
    }
    let per_rep = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| run_replication(net, cfg, rep))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_rep.into_iter().flatten().collect())
}

/// Loads the configured graph and runs the experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    let net = cfg.load_network()?;
    run_experiment_on(&net, cfg)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub lambda: f64,
    pub algorithm: Algorithm,
    pub members: Vec<NodeId>,
    pub f1: MetricEstimate,
    pub score: f64,
}

/// Evaluates the distance-based detectors on one fixed state over a grid
/// of `λ` values, all scored with the same simulations.
#[allow(clippy::too_many_arguments)]
pub fn lambda_sweep(
    net: &IcNetwork,
    state: &ActivationState,
    budget: usize,
    lambdas: &[f64],
    algorithms: &[Algorithm],
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<SweepRecord>> {
    let mut inputs = DetectorInputs::new(net, state, DEFAULT_LAMBDA, k);
    let mut out = Vec::new();
    for &lambda in lambdas {
        inputs.lambda = lambda;
        for &algorithm in algorithms {
            let result = inputs.run(algorithm, budget, &mut stream(seed, 2))?;
            let f1 = estimate_f1(net, state, &result.members, trials, derive(seed, 1))?;
            out.push(SweepRecord {
                lambda,
                algorithm,
                members: result.members,
                f1,
                score: result.score,
            });
        }
    }
    Ok(out)
}

/// The grid `0.05, 0.10, ..., 0.95`.
pub fn default_lambda_grid() -> Vec<f64> {
    (1..20).map(|i| i as f64 * 0.05).collect()
}

pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["lambda", "algorithm", "f1_mean", "f1_stderr", "score"])
        .map_err(io_err)?;
    for r in records {
        w.write_record([
            format!("{:.2}", r.lambda),
            r.algorithm.to_string(),
            r.f1.mean.to_string(),
            r.f1.stderr.to_string(),
            r.score.to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One-sided paired t-test of `mean(a - b) > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairedTest {
    pub mean_difference: f64,
    pub t: f64,
    /// Probability of a mean difference at least this large if the true
    /// difference were zero.
    pub p_value: f64,
}

pub fn paired_t_test_greater(a: &[f64], b: &[f64]) -> Result<PairedTest> {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::invalid("paired test needs two equal samples of size >= 2"));
    }
    let n = a.len() as f64;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        let p = if mean > 0.0 { 0.0 } else { 1.0 };
        let t = if mean == 0.0 {
            0.0
        } else {
            mean.signum() * f64::INFINITY
        };
        return Ok(PairedTest {
            mean_difference: mean,
            t,
            p_value: p,
        });
    }
    let t = mean / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(PairedTest {
        mean_difference: mean,
        t,
        p_value: 1.0 - dist.cdf(t),
    })
}

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use effector_core::diffusion::estimate_f1_f2;
use effector_core::distance::distance_table;
use effector_core::generate::{random_digraph, social_surrogate, SocialParams};
use effector_core::harness::{
    default_lambda_grid, generate_state_by_seeding, generate_state_random, lambda_sweep, run_experiment,
    write_records_csv, write_sweep_csv, DetectorInputs, ExperimentConfig,
};
use effector_core::io::{load_edge_list_file, read_node_list_file, read_state_file, write_edge_list, write_node_list};
use effector_core::mlbed::{mlbed_detailed, write_dags};
use effector_core::rng::stream;
use effector_core::{Algorithm, EffectorResult, Error, IcNetwork, ProbabilityModel, Result};
use serde_json::json;

use crate::args::*;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Detect(a) => detect(a),
        Command::Eval(a) => eval(a),
        Command::Experiment(a) => experiment(a),
        Command::Distances(a) => distances(a),
        Command::Sweep(a) => sweep(a),
        Command::GenGraph(a) => gen_graph(a),
        Command::GenState(a) => gen_state(a),
    }
}

fn load_graph(args: &GraphArgs) -> Result<IcNetwork> {
    let loaded = load_edge_list_file(&args.graph, args.undirected)?;
    let model = match &args.prob {
        Some(p) => p.parse()?,
        None if loaded.explicit_probabilities => ProbabilityModel::Explicit,
        None => ProbabilityModel::WeightedCascade,
    };
    loaded.network.assign_probabilities(model)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn json_number(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

fn print_result(net: &IcNetwork, r: &EffectorResult, as_json: bool) {
    let ids: Vec<&str> = r.members.iter().map(|&u| net.id(u)).collect();
    if as_json {
        let value = json!({
            "algorithm": r.algorithm.as_str(),
            "budget": r.budget,
            "effectors": ids,
            "score": json_number(r.score),
            "zero_likelihood": r.zero_likelihood,
            "note": r.note,
        });
        println!("{value}");
        return;
    }
    println!("algorithm: {}", r.algorithm);
    println!("effectors: {}", ids.join(" "));
    println!("score: {}", r.score);
    if r.zero_likelihood {
        println!("zero likelihood: yes");
    }
    if let Some(note) = &r.note {
        println!("note: {note}");
    }
}

fn detect(a: DetectArgs) -> Result<()> {
    let net = load_graph(&a.graph)?;
    let state = read_state_file(&a.state, &net)?;
    let order_seed = a.shuffle_order.then_some(a.seed);
    let result = if a.algo == Algorithm::Mlbed {
        let out = mlbed_detailed(&net, &state, a.budget, order_seed)?;
        if let Some(path) = &a.dag_out {
            let mut w = create(path)?;
            write_dags(&net, &out.dags, &mut w)?;
            w.flush()?;
        }
        out.result
    } else {
        if a.dag_out.is_some() {
            return Err(Error::InvalidArgument("--dag-out only applies to mlbed".into()));
        }
        let mut inputs = DetectorInputs::new(&net, &state, a.lambda, a.k);
        inputs.mlbed_order_seed = order_seed;
        inputs.run(a.algo, a.budget, &mut stream(a.seed, 0))?
    };
    print_result(&net, &result, a.json);
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let net = load_graph(&a.graph)?;
    let state = read_state_file(&a.state, &net)?;
    let effectors = read_node_list_file(&a.effectors, &net)?;
    let (f1, f2) = estimate_f1_f2(&net, &state, &effectors, a.trials, a.seed)?;
    if a.json {
        let value = json!({
            "trials": a.trials,
            "f1": { "mean": f1.mean, "stderr": f1.stderr },
            "f2": { "mean": f2.mean, "stderr": f2.stderr },
        });
        println!("{value}");
    } else {
        println!("f1: {} ± {}", f1.mean, f1.stderr);
        println!("f2: {} ± {}", f2.mean, f2.stderr);
        println!("trials: {}", a.trials);
    }
    Ok(())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let cfg = ExperimentConfig::from_file(&a.config)?;
    let records = run_experiment(&cfg)?;
    let mut w = create(&a.out)?;
    write_records_csv(&records, cfg.report_f2, &mut w)?;
    w.flush()?;
    let skipped = records.iter().filter(|r| r.skipped.is_some()).count();
    eprintln!(
        "wrote {} records ({skipped} skipped) to {}",
        records.len(),
        a.out.display()
    );
    Ok(())
}

fn distances(a: DistancesArgs) -> Result<()> {
    let net = load_graph(&a.graph)?;
    let sources = read_node_list_file(&a.sources, &net)?;
    let targets = read_node_list_file(&a.targets, &net)?;
    let table = distance_table(&net, &sources, &targets, a.k)?;
    let mut w = create(&a.out)?;
    table.write_csv(&net, &mut w)?;
    w.flush()?;
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let net = load_graph(&a.graph)?;
    let state = read_state_file(&a.state, &net)?;
    let lambdas = if a.lambdas.is_empty() {
        default_lambda_grid()
    } else {
        a.lambdas.clone()
    };
    let records = lambda_sweep(&net, &state, a.budget, &lambdas, &a.algo, a.k, a.trials, a.seed)?;
    let mut w = create(&a.out)?;
    write_sweep_csv(&records, &mut w)?;
    w.flush()?;
    Ok(())
}

fn gen_graph(a: GenGraphArgs) -> Result<()> {
    let mut rng = stream(a.seed, 0);
    let mut w = create(&a.out)?;
    match a.kind {
        GraphKind::Random => {
            let net = random_digraph(a.nodes, a.density, &mut rng)?;
            write_edge_list(&net, &mut w)?;
        }
        GraphKind::Social => {
            let params = SocialParams {
                nodes: a.nodes,
                undirected_edges: a.edges,
                communities: a.communities,
                ..SocialParams::default()
            };
            let net = social_surrogate(params, &mut rng)?;
            for e in net.edges().filter(|e| e.tail < e.head) {
                writeln!(w, "{} {}", net.id(e.tail), net.id(e.head))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn gen_state(a: GenStateArgs) -> Result<()> {
    if a.seeds_out.is_some() && matches!(a.protocol, StateKind::Random) {
        return Err(Error::InvalidArgument("--seeds-out needs the seeded protocol".into()));
    }
    let net = load_graph(&a.graph)?;
    let mut rng = stream(a.seed, 0);
    let (state, seeds) = match a.protocol {
        StateKind::Seeded => {
            let (state, seeds) = generate_state_by_seeding(&net, a.budget, &mut rng)?;
            (state, Some(seeds))
        }
        StateKind::Random => (generate_state_random(&net, a.n1, &mut rng)?, None),
    };
    let mut w = create(&a.out)?;
    write_node_list(&net, state.active().members(), &mut w)?;
    w.flush()?;
    if let (Some(path), Some(seeds)) = (&a.seeds_out, seeds) {
        let mut w = create(path)?;
        write_node_list(&net, &seeds, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

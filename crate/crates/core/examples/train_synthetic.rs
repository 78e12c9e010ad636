//! Trains on planted-cluster data and prints the iteration trace and the
//! cross-modal mAP on held-out queries.

use cuh::io::synth_generate;
use cuh::metrics::{evaluate_cross_modal, DatabaseCodes, EvalConfig};
use cuh::optimizer::train;
use cuh::Hyperparams;

fn main() -> cuh::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let noise: f64 = args.get(1).map_or(0.1, |s| s.parse().expect("noise"));
    let seed: u64 = args.get(2).map_or(7, |s| s.parse().expect("seed"));

    let all = synth_generate(5, 1200, 64, 32, noise, seed)?;
    let (db, queries) = all.split_at(1000)?;
    let hp = Hyperparams {
        num_clusters: 5,
        code_length: 16,
        seed,
        ..Hyperparams::default()
    };
    let (model, trace) = train(&db, &hp)?;
    print!("{}", trace.to_tsv());
    println!("converged: {}", trace.converged);

    let cfg = EvalConfig { r_cut: 100, ..EvalConfig::default() };
    let labels = db.labels().expect("synthetic data is labeled");
    let reports = evaluate_cross_modal(&model, &queries, labels, DatabaseCodes::Trained, &cfg)?;
    println!("mAP@100 view1->view2 {:.4}  view2->view1 {:.4}", reports[0].map, reports[1].map);
    Ok(())
}

//! mAP as β varies, on a fixed seed.

use cuh::io::synth_generate;
use cuh::metrics::{evaluate_cross_modal, DatabaseCodes, EvalConfig};
use cuh::optimizer::train;
use cuh::Hyperparams;

fn main() -> cuh::Result<()> {
    let all = synth_generate(5, 1200, 32, 16, 0.5, 3)?;
    let (db, queries) = all.split_at(1000)?;
    let cfg = EvalConfig { r_cut: 100, ..EvalConfig::default() };
    println!("beta\tmap_v1_v2\tmap_v2_v1\titerations");
    for beta in [1e-6, 1e-5, 1e-4, 1e-3, 1e-2] {
        let hp = Hyperparams { beta, num_clusters: 5, code_length: 8, seed: 3, ..Hyperparams::default() };
        let (model, trace) = train(&db, &hp)?;
        let [a, b] = evaluate_cross_modal(&model, &queries, db.labels().unwrap(), DatabaseCodes::Trained, &cfg)?;
        println!("{beta:e}\t{:.4}\t{:.4}\t{}", a.map, b.map, trace.iterations());
    }
    Ok(())
}

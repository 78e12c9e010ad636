//! mAP, top-n precision and the precision/recall curve for both retrieval
//! directions, with trained and re-encoded database codes.

use cuh::io::synth_generate;
use cuh::metrics::{evaluate_cross_modal, DatabaseCodes, EvalConfig};
use cuh::optimizer::train;
use cuh::Hyperparams;

fn main() -> cuh::Result<()> {
    let all = synth_generate(8, 2300, 64, 32, 0.6, 5)?;
    let (db, queries) = all.split_at(2000)?;
    let hp = Hyperparams { num_clusters: 8, code_length: 16, seed: 5, ..Hyperparams::default() };
    let (model, trace) = train(&db, &hp)?;
    println!("trained in {} iterations", trace.iterations());

    let cfg = EvalConfig::default();
    let labels = db.labels().expect("labeled");
    for (name, source) in [("trained", DatabaseCodes::Trained), ("re-encoded", DatabaseCodes::Reencoded(&db))] {
        let [v1, v2] = evaluate_cross_modal(&model, &queries, labels, source, &cfg)?;
        println!("{name} database codes: mAP@{} view1->view2 {:.4}, view2->view1 {:.4}", cfg.r_cut, v1.map, v2.map);
        if matches!(source, DatabaseCodes::Trained) {
            print!("{}", v1.topn_tsv());
            print!("{}", v1.pr_tsv());
        }
    }
    Ok(())
}

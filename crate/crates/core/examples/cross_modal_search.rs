//! Hashes a held-out view-2 item and looks up its nearest database items
//! by Hamming distance.

use cuh::encode::{encode_dual, encode_single};
use cuh::index::{pack, search_radius, search_topk};
use cuh::io::synth_generate;
use cuh::optimizer::train;
use cuh::{Hyperparams, Modality};

fn main() -> cuh::Result<()> {
    let all = synth_generate(4, 820, 48, 24, 0.15, 21)?;
    let (db, queries) = all.split_at(800)?;
    let hp = Hyperparams { num_clusters: 4, code_length: 16, seed: 21, ..Hyperparams::default() };
    let (model, _) = train(&db, &hp)?;
    let index = pack(model.codes());
    let labels = db.labels().expect("labeled");

    let item = 3;
    let x2: Vec<f64> = queries.view(Modality::View2).data().column(item).iter().copied().collect();
    let code = encode_single(&model, Modality::View2, &x2)?;
    println!("query label {:?}, code {:?}", queries.labels().unwrap()[item], code.to_signs());

    let hits = search_topk(&index, &code, 8)?;
    for n in &hits.neighbors {
        println!("  item {:>4}  distance {:>2}  label {:?}", n.id, n.distance, labels[n.id]);
    }

    let x1: Vec<f64> = queries.view(Modality::View1).data().column(item).iter().copied().collect();
    let both = encode_dual(&model, &x1, &x2)?;
    let near = search_radius(&index, &both, 2)?;
    println!("{} database items within radius 2 of the two-view code", near.len());
    Ok(())
}

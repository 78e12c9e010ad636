//! Writes and reads back the dataset, model and code files.

use cuh::encode::encode_view;
use cuh::io::{
    export_codes, import_codes, load_dataset, load_model, save_labels, save_model, save_view, synth_generate,
};
use cuh::optimizer::train;
use cuh::{Hyperparams, Modality};

fn main() -> cuh::Result<()> {
    let dir = std::env::temp_dir().join("cuh-model-files");
    std::fs::create_dir_all(&dir).map_err(|e| cuh::CuhError::InvalidArgument(e.to_string()))?;

    let data = synth_generate(3, 300, 20, 10, 0.2, 8)?;
    save_view(data.view(Modality::View1), dir.join("view1.cuhd"))?;
    save_view(data.view(Modality::View2), dir.join("view2.cuhd"))?;
    save_labels(data.labels().unwrap(), dir.join("labels.txt"))?;
    let data = load_dataset(dir.join("view1.cuhd"), dir.join("view2.cuhd"), Some(&dir.join("labels.txt")))?;

    let hp = Hyperparams { num_clusters: 3, code_length: 8, seed: 8, ..Hyperparams::default() };
    let (model, _) = train(&data, &hp)?;
    save_model(&model, dir.join("model.cuhm"))?;
    let back = load_model(dir.join("model.cuhm"))?;
    println!("model round trip equal: {}", back == model);

    let codes = encode_view(&back, Modality::View1, data.view(Modality::View1))?;
    export_codes(&codes, dir.join("view1.cuhb"))?;
    println!("codes round trip equal: {}", import_codes(dir.join("view1.cuhb"))? == codes);
    println!("files in {}", dir.display());
    Ok(())
}

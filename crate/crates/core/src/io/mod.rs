//! Dataset ingestion, centering, synthetic data and binary file formats.
//!
//! All binary containers share one layout convention: a four-byte magic, a
//! little-endian `u32` format version, `u64` sizes, then little-endian `f64`
//! or `u64` payloads. Matrices are stored column-major.

mod binfmt;
mod codes_file;
mod dataset;
mod model_file;
mod synth;

pub use codes_file::{export_codes, import_codes, CODES_MAGIC, CODES_VERSION};
pub use dataset::{
    center, load_csv, load_dataset, load_labels, load_view, save_labels, save_view, LabelSets,
    MultiViewDataset, DATASET_MAGIC, DATASET_VERSION,
};
pub use model_file::{load_model, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use synth::synth_generate;

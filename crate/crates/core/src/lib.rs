//! Cluster-wise unsupervised hashing for two-modality retrieval.
//!
//! A re-weighted two-view k-means model is co-trained with one set of unified
//! binary codes. Each modality gets an orthonormal projection `W_k`; a new
//! item is hashed as `sgn(W_kᵀ(x − μ_k))`, or with the projections of both
//! modalities summed when both are available. Retrieval is a linear popcount
//! scan over packed codes.
//!
//! ```no_run
//! use cuh::{io, optimizer, encode, index, Hyperparams, Modality};
//!
//! let data = io::synth_generate(5, 1000, 64, 32, 0.1, 7)?;
//! let hp = Hyperparams { num_clusters: 5, code_length: 16, ..Hyperparams::default() };
//! let (model, trace) = optimizer::train(&data, &hp)?;
//! println!("converged after {} iterations", trace.iterations());
//!
//! let db = index::pack(model.codes());
//! let query: Vec<f64> = data.view(Modality::View2).data().column(0).iter().copied().collect();
//! let code = encode::encode_single(&model, Modality::View2, &query)?;
//! let hits = index::search_topk(&db, &code, 10)?;
//! # Ok::<(), cuh::CuhError>(())
//! ```

pub mod cli;
pub mod encode;
pub mod error;
pub mod index;
pub mod io;
pub mod metrics;
pub mod model;
pub mod optimizer;

pub use error::{CuhError, Result};
pub use model::{
    clustering_residual, objective, prototype_alignment, quantization_error, sgn, BinaryCodeMatrix,
    CentroidMatrix, ClusterAssignment, CuhModel, Hyperparams, Modality, ProjectionMatrix,
    ViewMatrix, ViewWeights,
};

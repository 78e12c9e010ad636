use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::binfmt::{payload_bytes, Reader, Writer};
use crate::error::{CuhError, Result};
use crate::index::{pack, unpack, words_per_code, PackedCodeMatrix};
use crate::model::{
    CentroidMatrix, ClusterAssignment, CuhModel, Hyperparams, Modality, ProjectionMatrix,
    ViewWeights,
};

pub const MODEL_MAGIC: [u8; 4] = *b"CUHM";
pub const MODEL_VERSION: u32 = 1;

const HYPERPARAM_BYTES: usize = 8 * 8;

/// Writes a model file.
///
/// Layout after the magic and `u32` version: `r, C, d1, d2, N` as `u64`;
/// `W1, W2, F1, F2` column-major `f64`; `α1, α2`; the two mean vectors; the
/// packed codes (`N·⌈r/64⌉` words); the hyperparameters (`λ, β` as `f64`,
/// `C, r, max_outer_iters, inner_w_iters` as `u64`, `rel_tol` as `f64`, `seed`
/// as `u64`); and finally the cluster assignment as `N` `u32` ids.
pub fn save_model(model: &CuhModel, path: impl AsRef<Path>) -> Result<()> {
    let hp = model.hyperparams();
    let (d1, d2) = model.dims();
    let mut w = Writer::new(&MODEL_MAGIC, MODEL_VERSION);
    for v in [hp.code_length, hp.num_clusters, d1, d2, model.num_items()] {
        w.u64(v as u64);
    }
    for m in [Modality::View1, Modality::View2] {
        w.f64s(model.projection(m).matrix().as_slice());
    }
    for m in [Modality::View1, Modality::View2] {
        w.f64s(model.centroids(m).matrix().as_slice());
    }
    w.f64s(&model.weights().as_array());
    for m in [Modality::View1, Modality::View2] {
        w.f64s(model.mean(m).as_slice());
    }
    w.u64s(pack(model.codes()).words());
    w.f64(hp.lambda);
    w.f64(hp.beta);
    w.u64(hp.num_clusters as u64);
    w.u64(hp.code_length as u64);
    w.u64(hp.max_outer_iters as u64);
    w.u64(hp.inner_w_iters as u64);
    w.f64(hp.rel_tol);
    w.u64(hp.seed);
    for &c in model.assignment().as_slice() {
        w.u32(c as u32);
    }
    w.finish(path.as_ref())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CuhModel> {
    let mut rd = Reader::open(path.as_ref(), &MODEL_MAGIC, MODEL_VERSION)?;
    let r = rd.usize()?;
    let c = rd.usize()?;
    let d1 = rd.usize()?;
    let d2 = rd.usize()?;
    let n = rd.usize()?;
    let corrupt = |reason: String| CuhError::Corrupt {
        path: path.as_ref().display().to_string(),
        reason,
    };
    if r == 0 || c == 0 {
        return Err(corrupt(format!("invalid code length {r} or cluster count {c}")));
    }
    let cells = |a: usize, b: usize| a.checked_mul(b).ok_or_else(|| corrupt("header sizes overflow".into()));
    let (w1_len, w2_len, f_len) = (cells(d1, r)?, cells(d2, r)?, cells(r, c)?);
    let words = cells(words_per_code(r), n)?;
    let expected = payload_bytes(
        rd.path(),
        &[
            (w1_len, 8),
            (w2_len, 8),
            (f_len, 8),
            (f_len, 8),
            (2, 8),
            (d1, 8),
            (d2, 8),
            (words, 8),
            (1, HYPERPARAM_BYTES),
            (n, 4),
        ],
    )?;
    rd.expect_remaining(expected)?;

    let w1 = DMatrix::from_vec(d1, r, rd.f64s(w1_len)?);
    let w2 = DMatrix::from_vec(d2, r, rd.f64s(w2_len)?);
    let f1 = DMatrix::from_vec(r, c, rd.f64s(f_len)?);
    let f2 = DMatrix::from_vec(r, c, rd.f64s(f_len)?);
    let a1 = rd.f64()?;
    let a2 = rd.f64()?;
    let mean1 = DVector::from_vec(rd.f64s(d1)?);
    let mean2 = DVector::from_vec(rd.f64s(d2)?);
    let packed = PackedCodeMatrix::from_words(rd.u64s(words)?, r, n)?;
    let hp = Hyperparams {
        lambda: rd.f64()?,
        beta: rd.f64()?,
        num_clusters: rd.usize()?,
        code_length: rd.usize()?,
        max_outer_iters: rd.usize()?,
        inner_w_iters: rd.usize()?,
        rel_tol: rd.f64()?,
        seed: rd.u64()?,
    };
    if hp.num_clusters != c || hp.code_length != r {
        return Err(corrupt(format!(
            "hyperparameters (r={}, C={}) disagree with header (r={r}, C={c})",
            hp.code_length, hp.num_clusters
        )));
    }
    let assign = (0..n)
        .map(|_| rd.u32().map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;

    CuhModel::new(
        [ProjectionMatrix::new(w1)?, ProjectionMatrix::new(w2)?],
        [CentroidMatrix::new(f1)?, CentroidMatrix::new(f2)?],
        ViewWeights::new(a1, a2)?,
        unpack(&packed),
        ClusterAssignment::new(assign, c)?,
        [mean1, mean2],
        hp,
    )
}

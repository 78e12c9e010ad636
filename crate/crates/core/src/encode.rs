//! Hash functions for out-of-sample items.
//!
//! A query is centered with the training mean of its modality, projected with
//! that modality's `W`, and signed. When both modalities are present the two
//! projections are summed before signing.

use nalgebra::{DMatrix, DVector};

use crate::error::{CuhError, Result};
use crate::index::{pack, PackedCodeMatrix, QueryCode};
use crate::model::{BinaryCodeMatrix, CuhModel, Modality, ViewMatrix};

/// `W_kᵀ (x − μ_k)` for one raw feature vector.
pub fn project_single(model: &CuhModel, modality: Modality, x: &[f64]) -> Result<DVector<f64>> {
    let w = model.projection(modality);
    if x.len() != w.dim() {
        return Err(CuhError::dim("encode input", w.dim(), x.len()));
    }
    let centered = DVector::from_column_slice(x) - model.mean(modality);
    Ok(w.matrix().tr_mul(&centered))
}

pub fn encode_single(model: &CuhModel, modality: Modality, x: &[f64]) -> Result<QueryCode> {
    let p = project_single(model, modality, x)?;
    Ok(QueryCode::from_signs(p.iter().copied()))
}

pub fn encode_dual(model: &CuhModel, x1: &[f64], x2: &[f64]) -> Result<QueryCode> {
    let p = project_single(model, Modality::View1, x1)? + project_single(model, Modality::View2, x2)?;
    Ok(QueryCode::from_signs(p.iter().copied()))
}

/// `W_kᵀ (X − μ_k 1ᵀ)` for a raw (uncentered) view.
pub fn project_view(model: &CuhModel, modality: Modality, raw: &ViewMatrix) -> Result<DMatrix<f64>> {
    let w = model.projection(modality);
    if raw.dim() != w.dim() {
        return Err(CuhError::dim("encode view", w.dim(), raw.dim()));
    }
    let mut centered = raw.data().clone();
    let mean = model.mean(modality);
    for mut col in centered.column_iter_mut() {
        col -= mean;
    }
    Ok(w.matrix().tr_mul(&centered))
}

/// Batch [`encode_single`] over every column of a raw view.
pub fn encode_view(model: &CuhModel, modality: Modality, raw: &ViewMatrix) -> Result<PackedCodeMatrix> {
    let p = project_view(model, modality, raw)?;
    Ok(pack(&BinaryCodeMatrix::from_signs(&p)))
}

/// Batch [`encode_dual`] over paired raw views.
pub fn encode_views_dual(model: &CuhModel, raw1: &ViewMatrix, raw2: &ViewMatrix) -> Result<PackedCodeMatrix> {
    if raw1.count() != raw2.count() {
        return Err(CuhError::ItemCountMismatch {
            view1: raw1.count(),
            view2: raw2.count(),
        });
    }
    let p = project_view(model, Modality::View1, raw1)? + project_view(model, Modality::View2, raw2)?;
    Ok(pack(&BinaryCodeMatrix::from_signs(&p)))
}

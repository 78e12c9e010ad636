//! Closed-form F, G, α and B updates.

use nalgebra::DMatrix;

use super::wstep::{cluster_sums, inverse_sizes};
use crate::error::{CuhError, Result};
use crate::model::{
    residual_sq_projected, BinaryCodeMatrix, CentroidMatrix, ClusterAssignment, Hyperparams,
    ProjectionMatrix, ViewMatrix, ViewWeights,
};

/// Residuals below this are floored before inversion in the α-step.
pub const ALPHA_RESIDUAL_FLOOR: f64 = 1e-12;

fn projected(view: &ViewMatrix, w: &ProjectionMatrix, g: &ClusterAssignment) -> Result<DMatrix<f64>> {
    if g.len() != view.count() {
        return Err(CuhError::dim("assignment length", view.count(), g.len()));
    }
    w.project(view)
}

fn check_codes(codes: &BinaryCodeMatrix, y: &DMatrix<f64>) -> Result<()> {
    if codes.matrix().shape() != y.shape() {
        return Err(CuhError::dim(
            "code matrix",
            format!("{:?}", y.shape()),
            format!("{:?}", codes.matrix().shape()),
        ));
    }
    Ok(())
}

fn check_centroids(f: &CentroidMatrix, r: usize, g: &ClusterAssignment) -> Result<()> {
    if f.code_length() != r || f.num_clusters() != g.num_clusters() {
        return Err(CuhError::dim(
            "centroid matrix",
            format!("{r}x{}", g.num_clusters()),
            format!("{}x{}", f.code_length(), f.num_clusters()),
        ));
    }
    Ok(())
}

/// `F = (β/(2α)·B + WᵀX) G (GᵀG + εI)⁻¹`: column `c` is the mean of the
/// shifted embeddings of cluster `c` (≈ 0 for an empty cluster).
pub fn update_f(
    view: &ViewMatrix,
    g: &ClusterAssignment,
    codes: &BinaryCodeMatrix,
    alpha: f64,
    hp: &Hyperparams,
    w: &ProjectionMatrix,
) -> Result<CentroidMatrix> {
    let y = projected(view, w, g)?;
    check_codes(codes, &y)?;
    Ok(update_f_projected(&y, g, codes, alpha, hp))
}

pub(crate) fn update_f_projected(
    y: &DMatrix<f64>,
    g: &ClusterAssignment,
    codes: &BinaryCodeMatrix,
    alpha: f64,
    hp: &Hyperparams,
) -> CentroidMatrix {
    let shifted = y + codes.matrix() * (hp.beta / (2.0 * alpha));
    let mut f = cluster_sums(&shifted, g);
    for (c, inv) in inverse_sizes(g).into_iter().enumerate() {
        let mut col = f.column_mut(c);
        col *= inv;
    }
    CentroidMatrix::new(f).expect("centroids of finite data are finite")
}

/// Assigns each item to `argmin_c Σ_k α_k‖W_kᵀx_kⁱ + β/(2α_k)·b_i − F_k e_c‖²`,
/// ties going to the smallest cluster id.
pub fn update_g(
    views: [&ViewMatrix; 2],
    ws: [&ProjectionMatrix; 2],
    fs: [&CentroidMatrix; 2],
    codes: &BinaryCodeMatrix,
    weights: ViewWeights,
    hp: &Hyperparams,
) -> Result<ClusterAssignment> {
    let mut ys = Vec::with_capacity(2);
    for k in 0..2 {
        let y = ws[k].project(views[k])?;
        check_codes(codes, &y)?;
        ys.push(y);
    }
    let c = fs[0].num_clusters();
    if fs[1].num_clusters() != c {
        return Err(CuhError::dim("centroid clusters", c, fs[1].num_clusters()));
    }
    for f in fs {
        if f.code_length() != codes.code_length() {
            return Err(CuhError::dim("centroid rows", codes.code_length(), f.code_length()));
        }
    }
    Ok(update_g_projected([&ys[0], &ys[1]], fs, codes, weights, hp))
}

pub(crate) fn update_g_projected(
    ys: [&DMatrix<f64>; 2],
    fs: [&CentroidMatrix; 2],
    codes: &BinaryCodeMatrix,
    weights: ViewWeights,
    hp: &Hyperparams,
) -> ClusterAssignment {
    let c = fs[0].num_clusters();
    let targets: Vec<DMatrix<f64>> = (0..2)
        .map(|k| ys[k] + codes.matrix() * (hp.beta / (2.0 * weights.get(k))))
        .collect();
    let n = codes.count();
    let mut assign = Vec::with_capacity(n);
    for i in 0..n {
        let mut best = (f64::INFINITY, 0);
        for cluster in 0..c {
            let mut cost = 0.0;
            for k in 0..2 {
                let f = fs[k].matrix();
                let dist: f64 = targets[k]
                    .column(i)
                    .iter()
                    .zip(f.column(cluster).iter())
                    .map(|(t, m)| (t - m) * (t - m))
                    .sum();
                cost += weights.get(k) * dist;
            }
            if cost < best.0 {
                best = (cost, cluster);
            }
        }
        assign.push(best.1);
    }
    ClusterAssignment::new(assign, c).expect("cluster ids are in range")
}

/// `α_k = (2‖W_kᵀX_k − F_kGᵀ‖_F)⁻¹`, residual floored at 1e-12.
pub fn update_alpha(
    views: [&ViewMatrix; 2],
    ws: [&ProjectionMatrix; 2],
    fs: [&CentroidMatrix; 2],
    g: &ClusterAssignment,
) -> Result<ViewWeights> {
    let mut alpha = [0.0; 2];
    for k in 0..2 {
        let y = projected(views[k], ws[k], g)?;
        check_centroids(fs[k], y.nrows(), g)?;
        alpha[k] = alpha_from_residual(residual_sq_projected(&y, fs[k].matrix(), g).sqrt());
    }
    ViewWeights::new(alpha[0], alpha[1])
}

pub(crate) fn alpha_from_residual(residual: f64) -> f64 {
    1.0 / (2.0 * residual.max(ALPHA_RESIDUAL_FLOOR))
}

/// `B = sgn(Σ_k λ W_kᵀX_k + β/2 · F_kGᵀ)` with `sgn(0) = −1`.
pub fn update_b(
    views: [&ViewMatrix; 2],
    ws: [&ProjectionMatrix; 2],
    fs: [&CentroidMatrix; 2],
    g: &ClusterAssignment,
    hp: &Hyperparams,
) -> Result<BinaryCodeMatrix> {
    let mut ys = Vec::with_capacity(2);
    for k in 0..2 {
        let y = projected(views[k], ws[k], g)?;
        check_centroids(fs[k], y.nrows(), g)?;
        ys.push(y);
    }
    if ys[0].shape() != ys[1].shape() {
        return Err(CuhError::dim("view embeddings", format!("{:?}", ys[0].shape()), format!("{:?}", ys[1].shape())));
    }
    Ok(update_b_projected([&ys[0], &ys[1]], fs, g, hp))
}

pub(crate) fn update_b_projected(
    ys: [&DMatrix<f64>; 2],
    fs: [&CentroidMatrix; 2],
    g: &ClusterAssignment,
    hp: &Hyperparams,
) -> BinaryCodeMatrix {
    let mut v = (ys[0] + ys[1]) * hp.lambda;
    for (i, mut col) in v.column_iter_mut().enumerate() {
        let c = g.cluster_of(i);
        for f in fs {
            col.axpy(0.5 * hp.beta, &f.matrix().column(c), 1.0);
        }
    }
    BinaryCodeMatrix::from_signs(&v)
}

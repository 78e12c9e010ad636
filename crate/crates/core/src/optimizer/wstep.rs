//! Projection update on the Stiefel manifold.
//!
//! With `G`, `α` and `B` fixed and `F` eliminated, each projection solves
//! `min tr(WᵀMW) − 2 tr(WᵀN)` subject to `WᵀW = I`. Iterates move along the
//! Cayley curve `W(τ) = (I + τ/2·A)⁻¹(I − τ/2·A) W` with `A = PWᵀ − WPᵀ`,
//! which keeps the columns orthonormal for any `τ`. Step sizes come from the
//! Barzilai-Borwein ratio and are halved until the subproblem does not increase.

use nalgebra::DMatrix;

use crate::error::{CuhError, Result};
use crate::model::{
    orthonormality_error, BinaryCodeMatrix, ClusterAssignment, Hyperparams, ProjectionMatrix,
    ViewMatrix,
};

/// Ridge added to cluster sizes wherever `(GᵀG)⁻¹` appears.
pub const CLUSTER_RIDGE: f64 = 1e-10;

/// Step-size policy for the Cayley iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub tau0: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub max_backtracks: usize,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            tau0: 1e-2,
            tau_min: 1e-6,
            tau_max: 1e2,
            max_backtracks: 20,
        }
    }
}

/// The quadratic W-subproblem `tr(WᵀMW) − 2 tr(WᵀN)` for one view.
#[derive(Debug, Clone, PartialEq)]
pub struct WStepWork {
    /// `d × d`, symmetric.
    pub m: DMatrix<f64>,
    /// `d × r`.
    pub n: DMatrix<f64>,
}

impl WStepWork {
    pub fn value(&self, w: &DMatrix<f64>) -> f64 {
        let mw = &self.m * w;
        w.dot(&mw) - 2.0 * w.dot(&self.n)
    }

    pub fn gradient(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        (&self.m * w - &self.n) * 2.0
    }
}

/// Per-cluster column sums of `x` (that is, `X G`).
pub(crate) fn cluster_sums(x: &DMatrix<f64>, g: &ClusterAssignment) -> DMatrix<f64> {
    let mut sums = DMatrix::zeros(x.nrows(), g.num_clusters());
    for (i, col) in x.column_iter().enumerate() {
        let mut target = sums.column_mut(g.cluster_of(i));
        target += col;
    }
    sums
}

/// `1 / (n_c + ridge)` per cluster.
pub(crate) fn inverse_sizes(g: &ClusterAssignment) -> Vec<f64> {
    g.sizes()
        .into_iter()
        .map(|s| 1.0 / (s as f64 + CLUSTER_RIDGE))
        .collect()
}

fn check_inputs(view: &ViewMatrix, g: &ClusterAssignment, codes: &BinaryCodeMatrix) -> Result<()> {
    if g.len() != view.count() {
        return Err(CuhError::dim("W-step assignment", view.count(), g.len()));
    }
    if codes.count() != view.count() {
        return Err(CuhError::dim("W-step codes", view.count(), codes.count()));
    }
    Ok(())
}

/// Builds `M = (α+λ)XXᵀ − α X P_G Xᵀ` and `N = λXBᵀ + β/2 · X P_G Bᵀ`, where
/// `P_G = G(GᵀG)⁻¹Gᵀ` averages columns within each cluster.
pub fn build_m_n(
    view: &ViewMatrix,
    g: &ClusterAssignment,
    codes: &BinaryCodeMatrix,
    alpha: f64,
    hp: &Hyperparams,
) -> Result<WStepWork> {
    check_inputs(view, g, codes)?;
    let x = view.data();
    let gram = x * x.transpose();
    Ok(build_m_n_with_gram(x, &gram, g, codes, alpha, hp))
}

pub(crate) fn build_m_n_with_gram(
    x: &DMatrix<f64>,
    gram: &DMatrix<f64>,
    g: &ClusterAssignment,
    codes: &BinaryCodeMatrix,
    alpha: f64,
    hp: &Hyperparams,
) -> WStepWork {
    let b = codes.matrix();
    let sums = cluster_sums(x, g);
    let code_sums = cluster_sums(b, g);
    let inv = inverse_sizes(g);
    let mut scaled = sums.clone();
    for (c, mut col) in scaled.column_iter_mut().enumerate() {
        col *= inv[c];
    }
    let within = &scaled * sums.transpose();
    let mut m = gram * (alpha + hp.lambda) - within * alpha;
    // Exact symmetry; the products above agree only to rounding.
    let mt = m.transpose();
    m += mt;
    m *= 0.5;
    let n = x * b.transpose() * hp.lambda + &scaled * code_sums.transpose() * (0.5 * hp.beta);
    WStepWork { m, n }
}

/// Euclidean gradient `P = 2(MW − N)` of the W-subproblem.
pub fn euclidean_gradient_w(work: &WStepWork, w: &ProjectionMatrix) -> Result<DMatrix<f64>> {
    let d = work.m.nrows();
    if w.dim() != d || work.n.nrows() != d || work.n.ncols() != w.code_length() {
        return Err(CuhError::dim(
            "euclidean_gradient_w",
            format!("W of {}x{}", d, work.n.ncols()),
            format!("{}x{}", w.dim(), w.code_length()),
        ));
    }
    Ok(work.gradient(w.matrix()))
}

/// `A = P Wᵀ − W Pᵀ`, antisymmetric by construction.
pub fn build_skew(grad: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if grad.shape() != w.shape() {
        return Err(CuhError::dim(
            "build_skew",
            format!("{:?}", w.shape()),
            format!("{:?}", grad.shape()),
        ));
    }
    let half = grad * w.transpose();
    let d = half.nrows();
    // Fill both triangles from the same difference so A = −Aᵀ holds bitwise.
    let mut a = DMatrix::zeros(d, d);
    for j in 0..d {
        for i in (j + 1)..d {
            let v = half[(i, j)] - half[(j, i)];
            a[(i, j)] = v;
            a[(j, i)] = -v;
        }
    }
    Ok(a)
}

/// `W⁺ = (I + τ/2·A)⁻¹ (I − τ/2·A) W`.
pub fn cayley_update(w: &ProjectionMatrix, skew: &DMatrix<f64>, tau: f64) -> Result<ProjectionMatrix> {
    let d = w.dim();
    if skew.shape() != (d, d) {
        return Err(CuhError::dim("cayley_update", format!("{d}x{d} skew"), format!("{:?}", skew.shape())));
    }
    if !tau.is_finite() {
        return Err(CuhError::InvalidArgument(format!("step size must be finite, got {tau}")));
    }
    let half = skew * (0.5 * tau);
    let lhs = DMatrix::identity(d, d) + &half;
    let rhs = w.matrix() - &half * w.matrix();
    let next = lhs.clone().lu().solve(&rhs).ok_or_else(|| {
        CuhError::Numerical(format!(
            "Cayley system is singular (τ = {tau:e}, ‖I + τ/2·A‖_max = {:e})",
            lhs.amax()
        ))
    })?;
    if next.iter().any(|v| !v.is_finite()) {
        return Err(CuhError::Numerical(format!(
            "Cayley update produced non-finite entries (τ = {tau:e}, ‖A‖_max = {:e})",
            skew.amax()
        )));
    }
    Ok(ProjectionMatrix::from_raw(reorthonormalize_if_drifted(next)))
}

/// Rounding in the linear solve can accumulate over many steps; pull the
/// columns back onto the manifold when the drift becomes measurable.
fn reorthonormalize_if_drifted(w: DMatrix<f64>) -> DMatrix<f64> {
    if orthonormality_error(&w) <= 1e-11 {
        return w;
    }
    let qr = w.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col.neg_mut();
        }
    }
    q
}

/// `|⟨ΔW,ΔW⟩| / |⟨ΔW,ΔP⟩|` clamped to `[lo, hi]`; `fallback` when the
/// denominator vanishes.
pub fn bb_step_size(
    delta_w: &DMatrix<f64>,
    delta_grad: &DMatrix<f64>,
    bounds: (f64, f64),
    fallback: f64,
) -> f64 {
    let num = delta_w.dot(delta_w).abs();
    let den = delta_w.dot(delta_grad).abs();
    if den.is_nan() || den < 1e-18 || !num.is_finite() {
        return fallback;
    }
    (num / den).clamp(bounds.0, bounds.1)
}

/// Outcome of a run of Cayley iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct WStepReport {
    /// Subproblem value at the start and after each accepted step.
    pub values: Vec<f64>,
    /// Step size of each accepted step.
    pub taus: Vec<f64>,
    pub accepted_steps: usize,
}

/// Runs up to `iters` Cayley steps with BB sizing and backtracking.
pub fn minimize_on_stiefel(
    work: &WStepWork,
    w_init: &ProjectionMatrix,
    iters: usize,
    cfg: &StepConfig,
) -> Result<(ProjectionMatrix, WStepReport)> {
    let mut w = w_init.clone();
    let mut grad = euclidean_gradient_w(work, &w)?;
    let mut value = work.value(w.matrix());
    let mut report = WStepReport {
        values: vec![value],
        taus: Vec::new(),
        accepted_steps: 0,
    };
    let mut previous: Option<(DMatrix<f64>, DMatrix<f64>)> = None;

    for _ in 0..iters {
        let skew = build_skew(&grad, w.matrix())?;
        if skew.amax() == 0.0 {
            break;
        }
        let mut tau = match &previous {
            Some((w_prev, g_prev)) => bb_step_size(
                &(w.matrix() - w_prev),
                &(&grad - g_prev),
                (cfg.tau_min, cfg.tau_max),
                cfg.tau0,
            ),
            None => cfg.tau0,
        };
        let mut accepted = None;
        for _ in 0..=cfg.max_backtracks {
            let candidate = cayley_update(&w, &skew, tau)?;
            let candidate_value = work.value(candidate.matrix());
            if candidate_value <= value {
                accepted = Some((candidate, candidate_value));
                break;
            }
            tau *= 0.5;
        }
        let Some((next, next_value)) = accepted else {
            break;
        };
        let next_grad = work.gradient(next.matrix());
        previous = Some((std::mem::replace(&mut w, next).matrix().clone(), std::mem::replace(&mut grad, next_grad)));
        value = next_value;
        report.values.push(value);
        report.taus.push(tau);
        report.accepted_steps += 1;
    }
    Ok((w, report))
}

/// One W-step for one view: builds the subproblem and runs
/// `hp.inner_w_iters` Cayley iterations from `w_init`.
pub fn update_w(
    view: &ViewMatrix,
    g: &ClusterAssignment,
    codes: &BinaryCodeMatrix,
    alpha: f64,
    hp: &Hyperparams,
    w_init: &ProjectionMatrix,
) -> Result<ProjectionMatrix> {
    let work = build_m_n(view, g, codes, alpha, hp)?;
    let (w, _) = minimize_on_stiefel(&work, w_init, hp.inner_w_iters, &StepConfig::default())?;
    Ok(w)
}

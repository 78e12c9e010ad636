use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::init::{init_b, init_g};
use super::steps::{alpha_from_residual, update_b_projected, update_f_projected, update_g_projected};
use super::wstep::{build_m_n_with_gram, minimize_on_stiefel, StepConfig};
use crate::error::{CuhError, Result};
use crate::io::{center, MultiViewDataset};
use crate::model::{
    alignment_projected, residual_sq_projected, BinaryCodeMatrix, CentroidMatrix,
    ClusterAssignment, CuhModel, Hyperparams, Modality, ProjectionMatrix, ViewWeights,
};

/// One outer iteration of the alternating optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Objective at the view weights produced by this iteration's α-step.
    pub objective: f64,
    /// `Σ_k ‖W_kᵀX_k − F_kGᵀ‖_F + λ‖B − W_kᵀX_k‖² − β tr(BᵀF_kGᵀ)`, the
    /// unsquared clustering objective the α re-weighting majorizes.
    pub reweighted_objective: f64,
    pub alpha: [f64; 2],
    pub assignment_changes: usize,
    pub bit_flips: usize,
    /// Worst `‖W_kᵀW_k − I‖_max` over both views after the W-step.
    pub orthonormality_error: f64,
    /// Set when `objective` rose relative to the previous record.
    pub objective_increased: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainTrace {
    pub initial_objective: f64,
    pub records: Vec<IterationRecord>,
    pub converged: bool,
}

impl TrainTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_objective(&self) -> f64 {
        self.records
            .last()
            .map_or(self.initial_objective, |r| r.objective)
    }

    /// Tab-separated table, one row per outer iteration.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("iteration\tobjective\talpha1\talpha2\tg_changes\tb_flips\n");
        for r in &self.records {
            writeln!(
                out,
                "{}\t{:.12e}\t{:.12e}\t{:.12e}\t{}\t{}",
                r.iteration, r.objective, r.alpha[0], r.alpha[1], r.assignment_changes, r.bit_flips
            )
            .expect("writing to a String");
        }
        out
    }
}

/// `|J_t − J_{t−1}| / max(|J_{t−1}|, 1)`.
pub fn relative_change(previous: f64, current: f64) -> f64 {
    (current - previous).abs() / previous.abs().max(1.0)
}

struct Terms {
    residual_sq: [f64; 2],
    quantization: [f64; 2],
    alignment: [f64; 2],
}

impl Terms {
    fn compute(ys: &[DMatrix<f64>; 2], fs: &[CentroidMatrix; 2], g: &ClusterAssignment, b: &BinaryCodeMatrix) -> Self {
        let mut t = Terms {
            residual_sq: [0.0; 2],
            quantization: [0.0; 2],
            alignment: [0.0; 2],
        };
        for k in 0..2 {
            t.residual_sq[k] = residual_sq_projected(&ys[k], fs[k].matrix(), g);
            t.quantization[k] = (b.matrix() - &ys[k]).norm_squared();
            t.alignment[k] = alignment_projected(b.matrix(), fs[k].matrix(), g);
        }
        t
    }

    fn objective(&self, alpha: ViewWeights, hp: &Hyperparams) -> f64 {
        (0..2)
            .map(|k| alpha.get(k) * self.residual_sq[k] + hp.lambda * self.quantization[k] - hp.beta * self.alignment[k])
            .sum()
    }

    fn reweighted(&self, hp: &Hyperparams) -> f64 {
        (0..2)
            .map(|k| self.residual_sq[k].sqrt() + hp.lambda * self.quantization[k] - hp.beta * self.alignment[k])
            .sum()
    }
}

/// Trains a model by alternating W → F → G → B → α until the objective's
/// relative change drops below `hp.rel_tol` or `hp.max_outer_iters` is hit.
///
/// Uncentered input is centered first; the means end up in the model.
/// Labels are ignored. Training is single-threaded and bit-reproducible for
/// a fixed `(data, hp)`.
pub fn train(data: &MultiViewDataset, hp: &Hyperparams) -> Result<(CuhModel, TrainTrace)> {
    let centered;
    let data = if data.is_centered() {
        data
    } else {
        centered = center(data);
        &centered
    };
    let (d1, d2) = data.dims();
    let n = data.count();
    hp.validate(d1, d2, n)?;
    let r = hp.code_length;
    let cfg = StepConfig::default();

    let xs = [
        data.view(Modality::View1).data(),
        data.view(Modality::View2).data(),
    ];
    let grams = [xs[0] * xs[0].transpose(), xs[1] * xs[1].transpose()];

    let mut ws = [ProjectionMatrix::identity(d1, r)?, ProjectionMatrix::identity(d2, r)?];
    let mut g = init_g(n, hp.num_clusters, hp.seed)?;
    let mut b = init_b(r, n, hp.seed)?;
    let mut alpha = ViewWeights::new(0.5, 0.5)?;

    let mut ys = [ws[0].matrix().tr_mul(xs[0]), ws[1].matrix().tr_mul(xs[1])];
    let mut fs = [
        update_f_projected(&ys[0], &g, &b, alpha.get(0), hp),
        update_f_projected(&ys[1], &g, &b, alpha.get(1), hp),
    ];
    let initial_objective = Terms::compute(&ys, &fs, &g, &b).objective(alpha, hp);
    check_finite(initial_objective, 0)?;

    let mut trace = TrainTrace {
        initial_objective,
        records: Vec::new(),
        converged: false,
    };
    let mut previous = initial_objective;

    for iteration in 1..=hp.max_outer_iters {
        let mut ortho = 0.0f64;
        for k in 0..2 {
            let work = build_m_n_with_gram(xs[k], &grams[k], &g, &b, alpha.get(k), hp);
            let (w, _) = minimize_on_stiefel(&work, &ws[k], hp.inner_w_iters, &cfg)?;
            ortho = ortho.max(w.orthonormality_error());
            ws[k] = w;
            ys[k] = ws[k].matrix().tr_mul(xs[k]);
            fs[k] = update_f_projected(&ys[k], &g, &b, alpha.get(k), hp);
        }

        let g_next = update_g_projected([&ys[0], &ys[1]], [&fs[0], &fs[1]], &b, alpha, hp);
        let assignment_changes = g_next.changes_from(&g);
        g = g_next;

        let b_next = update_b_projected([&ys[0], &ys[1]], [&fs[0], &fs[1]], &g, hp);
        let bit_flips = b_next.bit_flips_from(&b);
        b = b_next;

        let terms = Terms::compute(&ys, &fs, &g, &b);
        alpha = ViewWeights::new(
            alpha_from_residual(terms.residual_sq[0].sqrt()),
            alpha_from_residual(terms.residual_sq[1].sqrt()),
        )?;
        let objective = terms.objective(alpha, hp);
        check_finite(objective, iteration)?;

        trace.records.push(IterationRecord {
            iteration,
            objective,
            reweighted_objective: terms.reweighted(hp),
            alpha: alpha.as_array(),
            assignment_changes,
            bit_flips,
            orthonormality_error: ortho,
            objective_increased: objective > previous,
        });
        let change = relative_change(previous, objective);
        previous = objective;
        if change < hp.rel_tol {
            trace.converged = true;
            break;
        }
    }

    let means = data
        .means()
        .cloned()
        .expect("training data is centered above");
    let model = CuhModel::new(ws, fs, alpha, b, g, means, hp.clone())?;
    Ok((model, trace))
}

fn check_finite(objective: f64, iteration: usize) -> Result<()> {
    if objective.is_finite() {
        Ok(())
    } else {
        Err(CuhError::Numerical(format!(
            "objective became non-finite ({objective}) at outer iteration {iteration}"
        )))
    }
}

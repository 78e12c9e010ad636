//! Alternating optimization of the CUH objective.
//!
//! Each outer iteration updates the two projections on the Stiefel manifold
//! (F eliminated), re-solves the centroids in closed form, reassigns clusters,
//! recomputes the unified codes by sign, and finally re-weights the views.

mod init;
mod steps;
mod train;
mod wstep;

pub use init::{init_b, init_g};
pub use steps::{update_alpha, update_b, update_f, update_g, ALPHA_RESIDUAL_FLOOR};
pub use train::{relative_change, train, IterationRecord, TrainTrace};
pub use wstep::{
    bb_step_size, build_m_n, build_skew, cayley_update, euclidean_gradient_w, minimize_on_stiefel,
    update_w, StepConfig, WStepReport, WStepWork, CLUSTER_RIDGE,
};

#![allow(dead_code)]

use cuh::optimizer::WStepWork;
use cuh::{BinaryCodeMatrix, CentroidMatrix, ClusterAssignment, ProjectionMatrix, ViewMatrix};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn view(rng: &mut ChaCha8Rng, d: usize, n: usize) -> ViewMatrix {
    ViewMatrix::new(uniform(rng, d, n))
}

pub fn orthonormal(rng: &mut ChaCha8Rng, d: usize, r: usize) -> ProjectionMatrix {
    let q = uniform(rng, d, r).qr().q();
    ProjectionMatrix::new(q).expect("QR factor is orthonormal")
}

pub fn codes(rng: &mut ChaCha8Rng, r: usize, n: usize) -> BinaryCodeMatrix {
    BinaryCodeMatrix::from_signs(&uniform(rng, r, n))
}

pub fn centroids(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CentroidMatrix {
    CentroidMatrix::new(uniform(rng, r, c)).expect("finite")
}

pub fn assignment(rng: &mut ChaCha8Rng, n: usize, c: usize) -> ClusterAssignment {
    ClusterAssignment::new((0..n).map(|_| rng.random_range(0..c)).collect(), c).expect("ids in range")
}

/// Random symmetric `M` and dense `N` for a W-subproblem.
pub fn work(rng: &mut ChaCha8Rng, d: usize, r: usize) -> WStepWork {
    let a = uniform(rng, d, d);
    WStepWork {
        m: &a + a.transpose(),
        n: uniform(rng, d, r),
    }
}

/// `‖Y − F Gᵀ‖²` with the indicator matrix written out densely.
pub fn dense_residual_sq(y: &DMatrix<f64>, f: &DMatrix<f64>, g: &ClusterAssignment) -> f64 {
    (y - f * g.indicator().transpose()).norm_squared()
}

/// `tr(Bᵀ F Gᵀ)` with the indicator matrix written out densely.
pub fn dense_alignment(b: &DMatrix<f64>, f: &DMatrix<f64>, g: &ClusterAssignment) -> f64 {
    (b.transpose() * f * g.indicator().transpose()).trace()
}

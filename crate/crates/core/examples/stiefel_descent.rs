//! Minimizes tr(WᵀMW) − 2tr(WᵀN) over orthonormal W with Cayley steps and
//! Barzilai–Borwein step sizes.

use cuh::optimizer::{minimize_on_stiefel, StepConfig, WStepWork};
use cuh::ProjectionMatrix;
use nalgebra::DMatrix;

fn main() -> cuh::Result<()> {
    let d = 6;
    let m = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 + i as f64 } else { 0.1 / (1.0 + (i + j) as f64) });
    let work = WStepWork { m, n: DMatrix::zeros(d, 2) };

    // The minimum is the sum of the two smallest eigenvalues of M.
    let mut eig: Vec<f64> = work.m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);

    let start = ProjectionMatrix::new(DMatrix::from_fn(d, 2, |i, j| if i == d - 1 - j { 1.0 } else { 0.0 }))?;
    let (w, report) = minimize_on_stiefel(&work, &start, 60, &StepConfig::default())?;
    for (k, (v, tau)) in report.values.iter().skip(1).zip(&report.taus).enumerate().step_by(6) {
        println!("step {:>2}  value {:.10}  tau {:.3e}", k + 1, v, tau);
    }
    println!("final {:.10}, target {:.10}", report.values.last().unwrap(), eig[0] + eig[1]);
    println!("orthonormality error {:.2e}", w.orthonormality_error());
    Ok(())
}

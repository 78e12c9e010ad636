//! Acceptance suite: one line per criterion, nonzero exit if any fails.

mod common;

use std::panic;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use cuh::index::{pack, search_topk, unpack, Neighbor};
use cuh::io::{load_model, save_model, synth_generate, MultiViewDataset};
use cuh::metrics::{average_precision, evaluate, evaluate_cross_modal, DatabaseCodes, EvalConfig, RelevanceJudge};
use cuh::optimizer::{
    build_m_n, euclidean_gradient_w, minimize_on_stiefel, train, update_b, update_f, update_g, StepConfig,
};
use cuh::{Hyperparams, Modality, ViewWeights};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// N=1000, d=(64,32), σ=0.1, ten planted clusters; the dataset of criteria 1 and 7.
fn base_dataset() -> MultiViewDataset {
    synth_generate(10, 1000, 64, 32, 0.1, 0).unwrap()
}

fn base_hp() -> Hyperparams {
    Hyperparams {
        num_clusters: 10,
        code_length: 32,
        seed: 0,
        ..Hyperparams::default()
    }
}

fn orthonormality() -> Outcome {
    let data = base_dataset();
    let start = Instant::now();
    let (model, trace) = train(&data, &base_hp()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let worst = trace
        .records
        .iter()
        .map(|r| r.orthonormality_error)
        .chain([Modality::View1, Modality::View2].map(|m| model.projection(m).orthonormality_error()))
        .fold(0.0, f64::max);
    check(
        worst <= 1e-8 && secs(elapsed) < 30.0,
        format!(
            "max |WᵀW − I| = {worst:.2e} (≤ 1e-8) over {} iterations, {:.2} s (< 30 s)",
            trace.iterations(),
            secs(elapsed)
        ),
    )
}

fn b_step_exact() -> Outcome {
    let start = Instant::now();
    let mut mismatches = 0;
    for seed in 0..100u64 {
        let mut rng = rng(seed);
        let r = [1, 2, 4][seed as usize % 3];
        let n = 16 / r;
        let c = rng.random_range(1..=4);
        let (d1, d2) = (r + rng.random_range(0..3), r + rng.random_range(0..3));
        let views = [view(&mut rng, d1, n), view(&mut rng, d2, n)];
        let ws = [orthonormal(&mut rng, d1, r), orthonormal(&mut rng, d2, r)];
        let fs = [centroids(&mut rng, r, c), centroids(&mut rng, r, c)];
        let g = assignment(&mut rng, n, c);
        let hp = Hyperparams {
            lambda: rng.random_range(0.01..1.0),
            beta: rng.random_range(0.01..2.0),
            ..Hyperparams::default()
        };
        let b = update_b([&views[0], &views[1]], [&ws[0], &ws[1]], [&fs[0], &fs[1]], &g, &hp).map_err(|e| e.to_string())?;

        let ys = [ws[0].project(&views[0]).unwrap(), ws[1].project(&views[1]).unwrap()];
        let gt = g.indicator().transpose();
        let fg = [fs[0].matrix() * &gt, fs[1].matrix() * &gt];
        let q = |cand: &DMatrix<f64>| -> f64 {
            (0..2)
                .map(|k| hp.lambda * (cand - &ys[k]).norm_squared() - hp.beta * cand.dot(&fg[k]))
                .sum()
        };
        let mut best = (f64::INFINITY, DMatrix::zeros(r, n));
        for mask in 0u32..(1 << (r * n)) {
            let cand = DMatrix::from_fn(r, n, |j, i| if mask >> (i * r + j) & 1 == 1 { 1.0 } else { -1.0 });
            let v = q(&cand);
            if v < best.0 {
                best = (v, cand);
            }
        }
        if b.matrix() != &best.1 {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        mismatches == 0 && secs(elapsed) < 10.0,
        format!("{mismatches} mismatches in 100 instances (r·N = 16), {:.2} s (< 10 s)", secs(elapsed)),
    )
}

fn g_step_exact() -> Outcome {
    let mut mismatches = 0;
    let mut items = 0;
    for seed in 0..100u64 {
        let mut rng = rng(10_000 + seed);
        let c = rng.random_range(1..=8);
        let n = rng.random_range(c..=50);
        let r = rng.random_range(1..=6);
        let (d1, d2) = (r + rng.random_range(0..4), r + rng.random_range(0..4));
        let views = [view(&mut rng, d1, n), view(&mut rng, d2, n)];
        let ws = [orthonormal(&mut rng, d1, r), orthonormal(&mut rng, d2, r)];
        let fs = [centroids(&mut rng, r, c), centroids(&mut rng, r, c)];
        let b = codes(&mut rng, r, n);
        let alpha = ViewWeights::new(rng.random_range(0.05..2.0), rng.random_range(0.05..2.0)).unwrap();
        let hp = Hyperparams {
            lambda: rng.random_range(0.01..1.0),
            beta: rng.random_range(0.01..2.0),
            ..Hyperparams::default()
        };
        let g = update_g([&views[0], &views[1]], [&ws[0], &ws[1]], [&fs[0], &fs[1]], &b, alpha, &hp)
            .map_err(|e| e.to_string())?;

        let ys = [ws[0].project(&views[0]).unwrap(), ws[1].project(&views[1]).unwrap()];
        for i in 0..n {
            let mut best = (f64::INFINITY, 0);
            for cl in 0..c {
                let mut e = DMatrix::zeros(c, 1);
                e[(cl, 0)] = 1.0;
                let cost: f64 = (0..2)
                    .map(|k| {
                        let a = alpha.get(k);
                        let target = ys[k].column(i) + b.matrix().column(i) * (hp.beta / (2.0 * a));
                        a * (target - fs[k].matrix() * &e).norm_squared()
                    })
                    .sum();
                if cost < best.0 {
                    best = (cost, cl);
                }
            }
            items += 1;
            if g.cluster_of(i) != best.1 {
                mismatches += 1;
            }
        }
    }
    check(mismatches == 0, format!("{mismatches} mismatches over {items} items in 100 instances (C ≤ 8, N ≤ 50)"))
}

fn f_step_optimal() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..50u64 {
        let mut rng = rng(20_000 + seed);
        let c = rng.random_range(1..=6);
        let n = rng.random_range(c..=40);
        let r = rng.random_range(1..=6);
        let d = r + rng.random_range(0..4);
        let x = view(&mut rng, d, n);
        let w = orthonormal(&mut rng, d, r);
        let g = assignment(&mut rng, n, c);
        let b = codes(&mut rng, r, n);
        let alpha = rng.random_range(0.05..2.0);
        let hp = Hyperparams { beta: rng.random_range(0.01..2.0), ..Hyperparams::default() };
        let f = update_f(&x, &g, &b, alpha, &hp, &w).map_err(|e| e.to_string())?;
        let y = w.project(&x).unwrap();
        let sub = |f: &DMatrix<f64>| alpha * dense_residual_sq(&y, f, &g) - hp.beta * dense_alignment(b.matrix(), f, &g);
        let base = sub(f.matrix());
        for _ in 0..50 {
            let dir = uniform(&mut rng, r, c).normalize() * 1e-3;
            worst = worst.max(base - sub(&(f.matrix() + dir)));
        }
    }
    check(
        worst <= 1e-9,
        format!("largest decrease under ε=1e-3 perturbation {worst:.2e} (≤ 1e-9), 50 instances × 50 directions"),
    )
}

fn gradient_check() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut rng = rng(30_000 + seed);
        let r = rng.random_range(1..=6);
        let d = r + rng.random_range(0..6);
        let n = rng.random_range(8..40);
        let c = rng.random_range(1..=4).min(n);
        let x = view(&mut rng, d, n);
        let g = assignment(&mut rng, n, c);
        let b = codes(&mut rng, r, n);
        let hp = Hyperparams { lambda: rng.random_range(0.05..1.0), beta: rng.random_range(0.01..1.0), ..Hyperparams::default() };
        let work = build_m_n(&x, &g, &b, rng.random_range(0.05..2.0), &hp).map_err(|e| e.to_string())?;
        let w = orthonormal(&mut rng, d, r);
        let p = euclidean_gradient_w(&work, &w).map_err(|e| e.to_string())?;
        let h = 1e-6;
        let fd = DMatrix::from_fn(d, r, |i, j| {
            let mut plus = w.matrix().clone();
            let mut minus = w.matrix().clone();
            plus[(i, j)] += h;
            minus[(i, j)] -= h;
            (work.value(&plus) - work.value(&minus)) / (2.0 * h)
        });
        worst = worst.max((&fd - &p).norm() / p.norm().max(1e-300));
    }
    check(worst <= 1e-5, format!("max relative error vs central differences (h=1e-6) {worst:.2e} (≤ 1e-5), 20 instances"))
}

fn w_monotone() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut steps = 0;
    for seed in 0..100u64 {
        let mut rng = rng(40_000 + seed);
        let r = rng.random_range(1..=8);
        let d = r + rng.random_range(0..10);
        let n = rng.random_range(20..80);
        let c = rng.random_range(1..=6);
        let x = view(&mut rng, d, n);
        let g = assignment(&mut rng, n, c);
        let b = codes(&mut rng, r, n);
        let hp = Hyperparams { lambda: rng.random_range(0.05..1.0), beta: rng.random_range(0.0..1.0), ..Hyperparams::default() };
        let work = build_m_n(&x, &g, &b, rng.random_range(0.05..2.0), &hp).map_err(|e| e.to_string())?;
        let w0 = orthonormal(&mut rng, d, r);
        let (_, report) = minimize_on_stiefel(&work, &w0, 25, &StepConfig::default()).map_err(|e| e.to_string())?;
        steps += report.accepted_steps;
        for v in report.values.windows(2) {
            worst = worst.max(v[1] - v[0]);
        }
    }
    check(
        worst <= 1e-10,
        format!("largest increase of tr(WᵀMW) − 2tr(WᵀN) {worst:.2e} (≤ 1e-10) over {steps} accepted steps, 100 runs"),
    )
}

fn convergence() -> Outcome {
    let data = base_dataset();
    let hp = Hyperparams { rel_tol: 1e-4, ..base_hp() };
    let start = Instant::now();
    let (_, trace) = train(&data, &hp).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(
        trace.converged && trace.iterations() <= 30 && secs(elapsed) < 60.0,
        format!(
            "converged={} after {} iterations (≤ 30) at rel_tol=1e-4, {:.2} s (< 60 s)",
            trace.converged,
            trace.iterations(),
            secs(elapsed)
        ),
    )
}

fn retrieval_map(noise: f64) -> Result<([f64; 2], [f64; 2]), String> {
    let all = synth_generate(5, 1200, 64, 32, noise, 1).map_err(|e| e.to_string())?;
    let (db, queries) = all.split_at(1000).map_err(|e| e.to_string())?;
    let hp = Hyperparams { num_clusters: 5, code_length: 16, seed: 1, ..Hyperparams::default() };
    let (model, _) = train(&db, &hp).map_err(|e| e.to_string())?;
    let cfg = EvalConfig { r_cut: 100, ..EvalConfig::default() };
    let db_labels = db.labels().unwrap();
    let reports = evaluate_cross_modal(&model, &queries, db_labels, DatabaseCodes::Trained, &cfg).map_err(|e| e.to_string())?;

    let mut rng = rng(99);
    let judge = RelevanceJudge::new(queries.labels().unwrap().clone(), db_labels.clone());
    let random_db = pack(&codes(&mut rng, 16, 1000));
    let mut baseline = [0.0; 2];
    for slot in &mut baseline {
        let random_q = pack(&codes(&mut rng, 16, 200));
        *slot = evaluate(&random_db, &random_q, &judge, &cfg).map_err(|e| e.to_string())?.map;
    }
    Ok(([reports[0].map, reports[1].map], baseline))
}

fn retrieval_quality() -> Outcome {
    let (noisy, baseline) = retrieval_map(0.1)?;
    let (clean, _) = retrieval_map(0.0)?;
    let ok = noisy.iter().zip(&baseline).all(|(m, b)| *m >= 0.8 && *m >= 3.0 * b) && clean.iter().all(|&m| m >= 0.99);
    check(
        ok,
        format!(
            "mAP@100 σ=0.1: {:.4} / {:.4} (≥ 0.8, ≥ 3× random {:.4} / {:.4}); σ=0: {:.4} / {:.4} (≥ 0.99)",
            noisy[0], noisy[1], baseline[0], baseline[1], clean[0], clean[1]
        ),
    )
}

fn metric_oracles() -> Outcome {
    let hand_judge = RelevanceJudge::from_categories(&[0], &[0, 1, 0]);
    let hand = cuh::index::SearchResult {
        neighbors: (0..3).map(|id| Neighbor { distance: id as u32, id }).collect(),
    };
    let ap = average_precision(&hand, &hand_judge, 0, 3).map_err(|e| e.to_string())?;

    let n = 10_000;
    let db_labels: Vec<u32> = (0..n).map(|i| u32::from(i % 10 != 0)).collect();
    let judge = RelevanceJudge::from_categories(&[0; 200], &db_labels);
    let mut rng = rng(7);
    let mut total = 0.0;
    for q in 0..200 {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let ranked = cuh::index::SearchResult {
            neighbors: order.into_iter().map(|id| Neighbor { distance: 0, id }).collect(),
        };
        total += average_precision(&ranked, &judge, q, 1000).map_err(|e| e.to_string())?;
    }
    let random_map = total / 200.0;
    check(
        ap == 5.0 / 6.0 && (random_map - 0.1).abs() <= 0.05,
        format!("hand case AP = {ap} (5/6 exactly); random-ranking mAP@1000 = {random_map:.4} (0.1 ± 0.05)"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = synth_generate(6, 500, 32, 16, 0.2, 5).unwrap();
    let hp = Hyperparams { num_clusters: 6, code_length: 16, seed: 5, ..Hyperparams::default() };
    let (m1, _) = train(&data, &hp).map_err(|e| e.to_string())?;
    let (m2, _) = train(&data, &hp).map_err(|e| e.to_string())?;
    let (p1, p2, p3) = (dir.path().join("a.cuhm"), dir.path().join("b.cuhm"), dir.path().join("c.cuhm"));
    save_model(&m1, &p1).map_err(|e| e.to_string())?;
    save_model(&m2, &p2).map_err(|e| e.to_string())?;
    let bytes1 = std::fs::read(&p1).unwrap();
    let identical_runs = bytes1 == std::fs::read(&p2).unwrap();
    let loaded = load_model(&p1).map_err(|e| e.to_string())?;
    save_model(&loaded, &p3).map_err(|e| e.to_string())?;
    let round_trip = loaded == m1 && std::fs::read(&p3).unwrap() == bytes1;

    let mut rng = rng(6);
    let db_signs = codes(&mut rng, 64, 1000);
    let db = pack(&db_signs);
    let queries = pack(&codes(&mut rng, 64, 50));
    let mut search_ok = unpack(&db) == db_signs;
    for q in 0..queries.count() {
        let qs = unpack(&queries);
        let mut oracle: Vec<(u32, usize)> = (0..1000)
            .map(|i| {
                let dist = (0..64).filter(|&j| db_signs.matrix()[(j, i)] != qs.matrix()[(j, q)]).count() as u32;
                (dist, i)
            })
            .collect();
        oracle.sort();
        for k in [1, 10, 100, 1000] {
            let got = search_topk(&db, &queries.query(q), k).map_err(|e| e.to_string())?;
            let got: Vec<(u32, usize)> = got.neighbors.iter().map(|n| (n.distance, n.id)).collect();
            search_ok &= got == oracle[..k];
        }
    }
    check(
        identical_runs && round_trip && search_ok,
        format!(
            "identical seeded model files: {identical_runs}; save/load bit-exact: {round_trip}; top-k = full-sort oracle on N=1000: {search_ok}"
        ),
    )
}

fn scaling() -> Outcome {
    let sizes = [1000usize, 2000, 4000];
    let iters = 5;
    let mut per_iter = Vec::new();
    for &n in &sizes {
        let data = synth_generate(10, n, 64, 32, 0.1, 2).unwrap();
        let hp = Hyperparams { rel_tol: 0.0, max_outer_iters: iters, seed: 2, ..base_hp() };
        let best = (0..3)
            .map(|_| {
                let start = Instant::now();
                train(&data, &hp).expect("training succeeds");
                secs(start.elapsed())
            })
            .fold(f64::INFINITY, f64::min);
        per_iter.push(best / iters as f64);
    }
    // Least-squares slope of log t against log N.
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = per_iter.iter().map(|t| t.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let ratio = per_iter[2] / per_iter[1];
    let limit = 1.0 + 1.5f64.log2();
    check(
        ratio <= 3.0 && slope <= limit,
        format!(
            "per-iteration {:.1} / {:.1} / {:.1} ms at N = 1000 / 2000 / 4000; t(4000)/t(2000) = {ratio:.2} (≤ 3), fitted exponent {slope:.2} (≤ {limit:.2})",
            per_iter[0] * 1e3,
            per_iter[1] * 1e3,
            per_iter[2] * 1e3
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("orthonormality", orthonormality),
        ("b-step exactness", b_step_exact),
        ("g-step exactness", g_step_exact),
        ("f-step optimality", f_step_optimal),
        ("gradient check", gradient_check),
        ("w-subproblem monotonicity", w_monotone),
        ("convergence", convergence),
        ("retrieval quality", retrieval_quality),
        ("metric oracles", metric_oracles),
        ("determinism + serialization", determinism),
        ("scaling", scaling),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {:>2} {name}: {detail}", i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

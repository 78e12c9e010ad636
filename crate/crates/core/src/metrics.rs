//! Retrieval metrics: mAP@R, precision over the top `n`, and precision/recall
//! swept over the Hamming radius.
//!
//! Relevance is label overlap: a database item is a true neighbor of a query
//! when their label sets share at least one id.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{CuhError, Result};
use crate::encode::encode_view;
use crate::index::{pack, rank_all, search_topk, PackedCodeMatrix, SearchResult};
use crate::io::{LabelSets, MultiViewDataset};
use crate::model::{CuhModel, Modality};

/// Cutoff used for mAP unless overridden.
pub const DEFAULT_R_CUT: usize = 1000;

#[derive(Debug, Clone)]
pub struct RelevanceJudge {
    queries: LabelSets,
    database: LabelSets,
}

impl RelevanceJudge {
    pub fn new(mut queries: LabelSets, mut database: LabelSets) -> Self {
        for set in queries.iter_mut().chain(database.iter_mut()) {
            set.sort_unstable();
            set.dedup();
        }
        RelevanceJudge { queries, database }
    }

    /// Single-category labels, one per item.
    pub fn from_categories(queries: &[u32], database: &[u32]) -> Self {
        RelevanceJudge::new(
            queries.iter().map(|&c| vec![c]).collect(),
            database.iter().map(|&c| vec![c]).collect(),
        )
    }

    pub fn num_queries(&self) -> usize {
        self.queries.len()
    }

    pub fn database_len(&self) -> usize {
        self.database.len()
    }

    pub fn is_relevant(&self, query: usize, item: usize) -> bool {
        let (a, b) = (&self.queries[query], &self.database[item]);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    /// Number of relevant items in the whole database.
    pub fn relevant_count(&self, query: usize) -> usize {
        (0..self.database.len())
            .filter(|&d| self.is_relevant(query, d))
            .count()
    }
}

/// `AP = (1/n_rel) Σ_{k ≤ R} P(k)·δ(k)` over the top `r_cut`, where `n_rel`
/// counts the relevant items among those retrieved. Zero when none is relevant.
pub fn average_precision(
    ranked: &SearchResult,
    judge: &RelevanceJudge,
    query: usize,
    r_cut: usize,
) -> Result<f64> {
    if r_cut == 0 {
        return Err(CuhError::InvalidArgument("AP cutoff must be at least 1".into()));
    }
    if ranked.is_empty() {
        return Err(CuhError::InvalidArgument("cannot score an empty ranking".into()));
    }
    Ok(ap_of_flags(
        ranked.ids().take(r_cut).map(|id| judge.is_relevant(query, id)),
    ))
}

fn ap_of_flags(flags: impl Iterator<Item = bool>) -> f64 {
    // Precisions are summed as an exact fraction while it fits, so small
    // cases come out correctly rounded; long lists fall back to f64.
    let mut hits = 0u64;
    let mut exact = Some((0u128, 1u128));
    let mut sum = 0.0;
    for (k, relevant) in flags.enumerate() {
        if relevant {
            hits += 1;
            let k = k as u128 + 1;
            sum += hits as f64 / k as f64;
            exact = exact.and_then(|(num, den)| add_fraction(num, den, hits as u128, k));
        }
    }
    match (hits, exact) {
        (0, _) => 0.0,
        (_, Some((num, den))) => match den.checked_mul(hits as u128) {
            Some(den) => num as f64 / den as f64,
            None => sum / hits as f64,
        },
        (_, None) => sum / hits as f64,
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn add_fraction(num: u128, den: u128, p: u128, q: u128) -> Option<(u128, u128)> {
    let g = gcd(den, q);
    let lcm = den.checked_mul(q / g)?;
    let num = num.checked_mul(lcm / den)?.checked_add(p.checked_mul(lcm / q)?)?;
    let g = gcd(num, lcm);
    // f64 only holds 53 mantissa bits; beyond that the fraction buys nothing.
    if lcm / g > 1 << 53 {
        return None;
    }
    Some((num / g, lcm / g))
}

/// Mean of per-query AP; `results[q]` is the ranking for query `q`.
pub fn mean_ap(results: &[SearchResult], judge: &RelevanceJudge, r_cut: usize) -> Result<f64> {
    if results.is_empty() {
        return Err(CuhError::InvalidArgument("mAP needs at least one query".into()));
    }
    let mut total = 0.0;
    for (q, ranked) in results.iter().enumerate() {
        total += average_precision(ranked, judge, q, r_cut)?;
    }
    Ok(total / results.len() as f64)
}

fn normalized_grid(n_grid: &[usize], database_len: usize) -> Result<Vec<usize>> {
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CuhError::InvalidArgument("top-n grid must be strictly increasing".into()));
    }
    if n_grid.first() == Some(&0) {
        return Err(CuhError::InvalidArgument("top-n grid values must be positive".into()));
    }
    let mut grid: Vec<usize> = n_grid.iter().map(|&n| n.min(database_len)).collect();
    grid.dedup();
    Ok(grid)
}

/// Mean over queries of `(relevant in top n) / n` for each `n` in the grid;
/// grid points past the database size are truncated to it.
pub fn topn_precision(
    results: &[SearchResult],
    judge: &RelevanceJudge,
    n_grid: &[usize],
) -> Result<Vec<(usize, f64)>> {
    if results.is_empty() {
        return Err(CuhError::InvalidArgument("top-n precision needs at least one query".into()));
    }
    let grid = normalized_grid(n_grid, judge.database_len())?;
    let mut sums = vec![0.0; grid.len()];
    for (q, ranked) in results.iter().enumerate() {
        let flags: Vec<bool> = ranked.ids().map(|id| judge.is_relevant(q, id)).collect();
        for (slot, hits) in sums.iter_mut().zip(prefix_hits(&flags, &grid)) {
            *slot += hits;
        }
    }
    Ok(grid
        .into_iter()
        .zip(sums)
        .map(|(n, s)| (n, s / results.len() as f64))
        .collect())
}

/// Precision at each grid point for one query's relevance flags.
fn prefix_hits(flags: &[bool], grid: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut hits = 0usize;
    let mut seen = 0usize;
    for &n in grid {
        while seen < n && seen < flags.len() {
            hits += flags[seen] as usize;
            seen += 1;
        }
        out.push(hits as f64 / n as f64);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub radius: u32,
    pub recall: f64,
    pub precision: f64,
}

/// Per-query retrieval tallies by exact Hamming distance.
#[derive(Debug, Clone, Default)]
struct RadiusTally {
    retrieved: Vec<u64>,
    hits: Vec<u64>,
    relevant: u64,
}

impl RadiusTally {
    fn new(code_length: usize) -> Self {
        RadiusTally {
            retrieved: vec![0; code_length + 1],
            hits: vec![0; code_length + 1],
            relevant: 0,
        }
    }

    fn add(&mut self, other: &RadiusTally) {
        for (a, b) in self.retrieved.iter_mut().zip(&other.retrieved) {
            *a += b;
        }
        for (a, b) in self.hits.iter_mut().zip(&other.hits) {
            *a += b;
        }
        self.relevant += other.relevant;
    }

    fn curve(&self) -> Vec<PrPoint> {
        let (mut retrieved, mut hits) = (0u64, 0u64);
        (0..self.retrieved.len())
            .map(|radius| {
                retrieved += self.retrieved[radius];
                hits += self.hits[radius];
                PrPoint {
                    radius: radius as u32,
                    recall: if self.relevant == 0 {
                        1.0
                    } else {
                        hits as f64 / self.relevant as f64
                    },
                    precision: if retrieved == 0 {
                        1.0
                    } else {
                        hits as f64 / retrieved as f64
                    },
                }
            })
            .collect()
    }
}

fn tally_query(ranked: &SearchResult, judge: &RelevanceJudge, query: usize, code_length: usize) -> Result<RadiusTally> {
    let mut t = RadiusTally::new(code_length);
    for n in &ranked.neighbors {
        let d = n.distance as usize;
        if d > code_length {
            return Err(CuhError::dim("Hamming distance", format!("<= {code_length}"), d));
        }
        t.retrieved[d] += 1;
        if judge.is_relevant(query, n.id) {
            t.hits[d] += 1;
        }
    }
    t.relevant = judge.relevant_count(query) as u64;
    Ok(t)
}

/// Micro-averaged precision and recall at every radius `0..=code_length`.
///
/// `results[q]` must be the complete ranking of the database for query `q`;
/// the retrieval set at radius `ρ` is every item at distance `≤ ρ`. A radius
/// that retrieves nothing for every query has precision 1.
pub fn precision_recall(
    results: &[SearchResult],
    judge: &RelevanceJudge,
    code_length: usize,
) -> Result<Vec<PrPoint>> {
    let mut total = RadiusTally::new(code_length);
    for (q, ranked) in results.iter().enumerate() {
        total.add(&tally_query(ranked, judge, q, code_length)?);
    }
    Ok(total.curve())
}

/// All three criteria for one retrieval task.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub map: f64,
    pub r_cut: usize,
    pub topn_curve: Vec<(usize, f64)>,
    pub pr_curve: Vec<PrPoint>,
}

impl EvalReport {
    pub fn topn_tsv(&self) -> String {
        let mut out = String::from("n\tprecision\n");
        for (n, p) in &self.topn_curve {
            writeln!(out, "{n}\t{p:.6}").expect("writing to a String");
        }
        out
    }

    pub fn pr_tsv(&self) -> String {
        let mut out = String::from("radius\trecall\tprecision\n");
        for p in &self.pr_curve {
            writeln!(out, "{}\t{:.6}\t{:.6}", p.radius, p.recall, p.precision).expect("writing to a String");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub r_cut: usize,
    pub n_grid: Vec<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            r_cut: DEFAULT_R_CUT,
            n_grid: vec![1, 5, 10, 20, 50, 100, 200, 500, 1000],
        }
    }
}

/// Scores every query code against the database codes.
///
/// Queries are processed in parallel; per-query results are reduced in query
/// order so the report is identical to a sequential run.
pub fn evaluate(
    database: &PackedCodeMatrix,
    queries: &PackedCodeMatrix,
    judge: &RelevanceJudge,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    if queries.is_empty() {
        return Err(CuhError::InvalidArgument("evaluation needs at least one query".into()));
    }
    if judge.num_queries() != queries.count() || judge.database_len() != database.count() {
        return Err(CuhError::dim(
            "relevance labels",
            format!("{} queries x {} items", queries.count(), database.count()),
            format!("{} queries x {} items", judge.num_queries(), judge.database_len()),
        ));
    }
    if cfg.r_cut == 0 {
        return Err(CuhError::InvalidArgument("AP cutoff must be at least 1".into()));
    }
    let grid = normalized_grid(&cfg.n_grid, database.count())?;
    let r = database.code_length();
    let per_query: Vec<(f64, Vec<f64>, RadiusTally)> = (0..queries.count())
        .into_par_iter()
        .map(|q| {
            let code = queries.query(q);
            let ranked = rank_all(database, &code)?;
            let flags: Vec<bool> = ranked.ids().map(|id| judge.is_relevant(q, id)).collect();
            let ap = ap_of_flags(flags.iter().take(cfg.r_cut).copied());
            let topn = prefix_hits(&flags, &grid);
            let tally = tally_query(&ranked, judge, q, r)?;
            Ok((ap, topn, tally))
        })
        .collect::<Result<_>>()?;

    let nq = per_query.len() as f64;
    let mut ap_sum = 0.0;
    let mut topn_sum = vec![0.0; grid.len()];
    let mut tally = RadiusTally::new(r);
    for (ap, topn, t) in &per_query {
        ap_sum += ap;
        for (s, v) in topn_sum.iter_mut().zip(topn) {
            *s += v;
        }
        tally.add(t);
    }
    Ok(EvalReport {
        map: ap_sum / nq,
        r_cut: cfg.r_cut,
        topn_curve: grid.into_iter().zip(topn_sum).map(|(n, s)| (n, s / nq)).collect(),
        pr_curve: tally.curve(),
    })
}

/// Where database codes come from in a cross-modal evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DatabaseCodes<'a> {
    /// The unified codes learned for the training items.
    Trained,
    /// `sgn(W_kᵀ(x − μ_k))` of the given raw database views, using the
    /// modality opposite to the query.
    Reencoded(&'a MultiViewDataset),
}

/// Scores both retrieval directions: view-1 queries against the database
/// (index 0) and view-2 queries against the database (index 1).
pub fn evaluate_cross_modal(
    model: &CuhModel,
    queries: &MultiViewDataset,
    database_labels: &LabelSets,
    database: DatabaseCodes<'_>,
    cfg: &EvalConfig,
) -> Result<[EvalReport; 2]> {
    let query_labels = queries
        .labels()
        .ok_or_else(|| CuhError::InvalidArgument("evaluation needs query labels".into()))?;
    let judge = RelevanceJudge::new(query_labels.clone(), database_labels.clone());
    let trained = pack(model.codes());
    let mut reports = Vec::with_capacity(2);
    for m in [Modality::View1, Modality::View2] {
        let q = encode_view(model, m, queries.view(m))?;
        let db = match database {
            DatabaseCodes::Trained => trained.clone(),
            DatabaseCodes::Reencoded(raw) => encode_view(model, m.other(), raw.view(m.other()))?,
        };
        reports.push(evaluate(&db, &q, &judge, cfg)?);
    }
    let second = reports.pop().expect("two reports");
    let first = reports.pop().expect("two reports");
    Ok([first, second])
}

/// Top-`k` rankings for every query, in query order.
pub fn batch_topk(database: &PackedCodeMatrix, queries: &PackedCodeMatrix, k: usize) -> Result<Vec<SearchResult>> {
    (0..queries.count())
        .into_par_iter()
        .map(|q| search_topk(database, &queries.query(q), k))
        .collect()
}

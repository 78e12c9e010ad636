//! Domain types shared across the pipeline and the CUH objective.
//!
//! Matrices follow the column-per-item orientation: a view is `d × N`, a
//! projection `d × r`, centroids `r × C`, codes `r × N`. Cluster membership
//! is stored as an assignment vector rather than a dense indicator matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::{CuhError, Result};
use crate::io::MultiViewDataset;

/// Tolerance on `‖WᵀW − I‖_max` accepted for a projection.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// Sign with `sgn(0) = −1`: only strictly positive inputs map to `+1`.
#[inline]
pub fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Which of the two feature spaces an item or projection belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modality {
    View1,
    View2,
}

impl Modality {
    pub fn index(self) -> usize {
        match self {
            Modality::View1 => 0,
            Modality::View2 => 1,
        }
    }

    pub fn other(self) -> Modality {
        match self {
            Modality::View1 => Modality::View2,
            Modality::View2 => Modality::View1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    /// Weight of the quantization error `‖B − WᵀX‖²`.
    pub lambda: f64,
    /// Weight of the code/prototype alignment term.
    pub beta: f64,
    pub num_clusters: usize,
    pub code_length: usize,
    pub max_outer_iters: usize,
    /// Cayley iterations per W-step.
    pub inner_w_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            lambda: 1e-1,
            beta: 1e-4,
            num_clusters: 40,
            code_length: 32,
            max_outer_iters: 50,
            inner_w_iters: 5,
            rel_tol: 1e-5,
            seed: 0,
        }
    }
}

impl Hyperparams {
    /// Checks the scalar invariants and their compatibility with the data shape.
    pub fn validate(&self, d1: usize, d2: usize, n: usize) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(CuhError::InvalidArgument(format!(
                "lambda must be positive and finite, got {}",
                self.lambda
            )));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(CuhError::InvalidArgument(format!(
                "beta must be non-negative and finite, got {}",
                self.beta
            )));
        }
        if self.num_clusters == 0 {
            return Err(CuhError::InvalidArgument("num_clusters must be at least 1".into()));
        }
        if self.code_length == 0 {
            return Err(CuhError::InvalidArgument("code_length must be at least 1".into()));
        }
        if self.rel_tol.is_nan() || self.rel_tol < 0.0 {
            return Err(CuhError::InvalidArgument(format!(
                "rel_tol must be non-negative, got {}",
                self.rel_tol
            )));
        }
        if self.code_length > d1.min(d2) {
            return Err(CuhError::InvalidArgument(format!(
                "code length {} exceeds the smaller view dimension {}",
                self.code_length,
                d1.min(d2)
            )));
        }
        if n < self.num_clusters {
            return Err(CuhError::InvalidArgument(format!(
                "{} items cannot populate {} clusters",
                n, self.num_clusters
            )));
        }
        Ok(())
    }
}

/// One view's features, `d × N`, one column per item.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewMatrix {
    data: DMatrix<f64>,
}

impl ViewMatrix {
    pub fn new(data: DMatrix<f64>) -> Self {
        ViewMatrix { data }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn count(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.data
    }

    /// Largest absolute row sum.
    pub fn max_row_sum(&self) -> f64 {
        self.data
            .row_iter()
            .map(|row| row.sum().abs())
            .fold(0.0, f64::max)
    }
}

/// A `d × r` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    w: DMatrix<f64>,
}

impl ProjectionMatrix {
    pub fn new(w: DMatrix<f64>) -> Result<Self> {
        if w.ncols() > w.nrows() {
            return Err(CuhError::dim("projection", format!("r <= d = {}", w.nrows()), w.ncols()));
        }
        let err = orthonormality_error(&w);
        if err.is_nan() || err > ORTHONORMAL_TOL {
            return Err(CuhError::InvalidArgument(format!(
                "projection columns are not orthonormal (‖WᵀW − I‖_max = {err:e})"
            )));
        }
        Ok(ProjectionMatrix { w })
    }

    /// First `r` columns of the `d × d` identity.
    pub fn identity(d: usize, r: usize) -> Result<Self> {
        if r > d {
            return Err(CuhError::dim("projection", format!("r <= d = {d}"), r));
        }
        Ok(ProjectionMatrix {
            w: DMatrix::identity(d, r),
        })
    }

    pub(crate) fn from_raw(w: DMatrix<f64>) -> Self {
        ProjectionMatrix { w }
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn code_length(&self) -> usize {
        self.w.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.w)
    }

    /// `Wᵀ X`, the `r × N` low-dimensional embedding of a view.
    pub fn project(&self, view: &ViewMatrix) -> Result<DMatrix<f64>> {
        if view.dim() != self.dim() {
            return Err(CuhError::dim("projection of view", self.dim(), view.dim()));
        }
        Ok(self.w.tr_mul(view.data()))
    }
}

/// `‖WᵀW − I‖_max`.
pub fn orthonormality_error(w: &DMatrix<f64>) -> f64 {
    let gram = w.tr_mul(w);
    let mut worst = 0.0f64;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// `r × C` cluster centroids (code prototypes) for one view.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidMatrix {
    f: DMatrix<f64>,
}

impl CentroidMatrix {
    pub fn new(f: DMatrix<f64>) -> Result<Self> {
        if f.iter().any(|v| !v.is_finite()) {
            return Err(CuhError::Numerical("centroid matrix has non-finite entries".into()));
        }
        Ok(CentroidMatrix { f })
    }

    pub fn zeros(r: usize, c: usize) -> Self {
        CentroidMatrix {
            f: DMatrix::zeros(r, c),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn code_length(&self) -> usize {
        self.f.nrows()
    }

    pub fn num_clusters(&self) -> usize {
        self.f.ncols()
    }
}

/// Hard cluster membership: one cluster id in `[0, C)` per item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    assign: Vec<usize>,
    num_clusters: usize,
}

impl ClusterAssignment {
    pub fn new(assign: Vec<usize>, num_clusters: usize) -> Result<Self> {
        if num_clusters == 0 {
            return Err(CuhError::InvalidArgument("num_clusters must be at least 1".into()));
        }
        if let Some((i, &c)) = assign.iter().enumerate().find(|(_, &c)| c >= num_clusters) {
            return Err(CuhError::InvalidArgument(format!(
                "item {i} assigned to cluster {c}, but only {num_clusters} clusters exist"
            )));
        }
        Ok(ClusterAssignment { assign, num_clusters })
    }

    pub fn len(&self) -> usize {
        self.assign.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assign.is_empty()
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.assign
    }

    pub fn cluster_of(&self, item: usize) -> usize {
        self.assign[item]
    }

    /// Members per cluster (the diagonal of `GᵀG`).
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_clusters];
        for &c in &self.assign {
            sizes[c] += 1;
        }
        sizes
    }

    /// Dense `N × C` indicator matrix.
    pub fn indicator(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.assign.len(), self.num_clusters);
        for (i, &c) in self.assign.iter().enumerate() {
            g[(i, c)] = 1.0;
        }
        g
    }

    pub fn changes_from(&self, other: &ClusterAssignment) -> usize {
        self.assign
            .iter()
            .zip(&other.assign)
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// `r × N` matrix of ±1 codes.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryCodeMatrix {
    b: DMatrix<f64>,
}

impl BinaryCodeMatrix {
    pub fn new(b: DMatrix<f64>) -> Result<Self> {
        if let Some(v) = b.iter().find(|&&v| v != 1.0 && v != -1.0) {
            return Err(CuhError::InvalidArgument(format!(
                "binary codes must be exactly +1 or -1, found {v}"
            )));
        }
        Ok(BinaryCodeMatrix { b })
    }

    /// Entrywise `sgn` of a real matrix.
    pub fn from_signs(v: &DMatrix<f64>) -> Self {
        BinaryCodeMatrix { b: v.map(sgn) }
    }

    pub fn code_length(&self) -> usize {
        self.b.nrows()
    }

    pub fn count(&self) -> usize {
        self.b.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn bit_flips_from(&self, other: &BinaryCodeMatrix) -> usize {
        self.b.iter().zip(other.b.iter()).filter(|(a, b)| a != b).count()
    }
}

/// Per-view weights `(α_1, α_2)`, both strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewWeights {
    alpha: [f64; 2],
}

impl ViewWeights {
    pub fn new(alpha1: f64, alpha2: f64) -> Result<Self> {
        for a in [alpha1, alpha2] {
            if !(a > 0.0 && a.is_finite()) {
                return Err(CuhError::InvalidArgument(format!(
                    "view weights must be positive and finite, got {a}"
                )));
            }
        }
        Ok(ViewWeights {
            alpha: [alpha1, alpha2],
        })
    }

    pub fn get(&self, view: usize) -> f64 {
        self.alpha[view]
    }

    pub fn as_array(&self) -> [f64; 2] {
        self.alpha
    }
}

/// A trained model: everything needed to encode queries and to resume analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct CuhModel {
    projections: [ProjectionMatrix; 2],
    centroids: [CentroidMatrix; 2],
    weights: ViewWeights,
    codes: BinaryCodeMatrix,
    assignment: ClusterAssignment,
    means: [DVector<f64>; 2],
    hyperparams: Hyperparams,
}

impl CuhModel {
    pub fn new(
        projections: [ProjectionMatrix; 2],
        centroids: [CentroidMatrix; 2],
        weights: ViewWeights,
        codes: BinaryCodeMatrix,
        assignment: ClusterAssignment,
        means: [DVector<f64>; 2],
        hyperparams: Hyperparams,
    ) -> Result<Self> {
        let r = hyperparams.code_length;
        let c = hyperparams.num_clusters;
        let n = codes.count();
        for k in 0..2 {
            if projections[k].code_length() != r {
                return Err(CuhError::dim("model projection columns", r, projections[k].code_length()));
            }
            if centroids[k].code_length() != r || centroids[k].num_clusters() != c {
                return Err(CuhError::dim(
                    "model centroid shape",
                    format!("{r}x{c}"),
                    format!("{}x{}", centroids[k].code_length(), centroids[k].num_clusters()),
                ));
            }
            if means[k].len() != projections[k].dim() {
                return Err(CuhError::dim("model mean length", projections[k].dim(), means[k].len()));
            }
        }
        if codes.code_length() != r {
            return Err(CuhError::dim("model code length", r, codes.code_length()));
        }
        if assignment.len() != n || assignment.num_clusters() != c {
            return Err(CuhError::dim(
                "model assignment",
                format!("{n} items over {c} clusters"),
                format!("{} items over {} clusters", assignment.len(), assignment.num_clusters()),
            ));
        }
        Ok(CuhModel {
            projections,
            centroids,
            weights,
            codes,
            assignment,
            means,
            hyperparams,
        })
    }

    pub fn projection(&self, m: Modality) -> &ProjectionMatrix {
        &self.projections[m.index()]
    }

    pub fn centroids(&self, m: Modality) -> &CentroidMatrix {
        &self.centroids[m.index()]
    }

    pub fn mean(&self, m: Modality) -> &DVector<f64> {
        &self.means[m.index()]
    }

    pub fn weights(&self) -> ViewWeights {
        self.weights
    }

    pub fn codes(&self) -> &BinaryCodeMatrix {
        &self.codes
    }

    pub fn assignment(&self) -> &ClusterAssignment {
        &self.assignment
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hyperparams
    }

    pub fn code_length(&self) -> usize {
        self.hyperparams.code_length
    }

    pub fn num_items(&self) -> usize {
        self.codes.count()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.projections[0].dim(), self.projections[1].dim())
    }
}

fn check_term_shapes(
    context: &'static str,
    view: &ViewMatrix,
    w: &ProjectionMatrix,
) -> Result<()> {
    if view.dim() != w.dim() {
        return Err(CuhError::dim(context, format!("view dim {}", w.dim()), view.dim()));
    }
    Ok(())
}

fn check_centroids(context: &'static str, r: usize, n: usize, f: &CentroidMatrix, g: &ClusterAssignment) -> Result<()> {
    if f.code_length() != r {
        return Err(CuhError::dim(context, format!("centroid rows {r}"), f.code_length()));
    }
    if f.num_clusters() != g.num_clusters() {
        return Err(CuhError::dim(context, format!("{} centroid columns", g.num_clusters()), f.num_clusters()));
    }
    if g.len() != n {
        return Err(CuhError::dim(context, format!("{n} assigned items"), g.len()));
    }
    Ok(())
}

/// `‖Y − F Gᵀ‖_F²` for an already projected `Y = WᵀX`.
pub(crate) fn residual_sq_projected(y: &DMatrix<f64>, f: &DMatrix<f64>, g: &ClusterAssignment) -> f64 {
    let mut total = 0.0;
    for (i, col) in y.column_iter().enumerate() {
        let centroid = f.column(g.cluster_of(i));
        total += (col - centroid).norm_squared();
    }
    total
}

/// `Σ_i b_iᵀ f_{g(i)}`, i.e. `tr(Bᵀ F Gᵀ)`.
pub(crate) fn alignment_projected(b: &DMatrix<f64>, f: &DMatrix<f64>, g: &ClusterAssignment) -> f64 {
    b.column_iter()
        .enumerate()
        .map(|(i, col)| col.dot(&f.column(g.cluster_of(i))))
        .sum()
}

/// Frobenius norm of `WᵀX − F Gᵀ`.
pub fn clustering_residual(
    view: &ViewMatrix,
    w: &ProjectionMatrix,
    f: &CentroidMatrix,
    g: &ClusterAssignment,
) -> Result<f64> {
    check_term_shapes("clustering_residual", view, w)?;
    check_centroids("clustering_residual", w.code_length(), view.count(), f, g)?;
    let y = w.project(view)?;
    Ok(residual_sq_projected(&y, f.matrix(), g).sqrt())
}

/// `‖B − WᵀX‖_F²`.
pub fn quantization_error(view: &ViewMatrix, w: &ProjectionMatrix, codes: &BinaryCodeMatrix) -> Result<f64> {
    check_term_shapes("quantization_error", view, w)?;
    if codes.code_length() != w.code_length() || codes.count() != view.count() {
        return Err(CuhError::dim(
            "quantization_error",
            format!("{}x{} codes", w.code_length(), view.count()),
            format!("{}x{}", codes.code_length(), codes.count()),
        ));
    }
    let y = w.project(view)?;
    Ok((codes.matrix() - y).norm_squared())
}

/// `tr(Bᵀ F Gᵀ)`.
pub fn prototype_alignment(codes: &BinaryCodeMatrix, f: &CentroidMatrix, g: &ClusterAssignment) -> Result<f64> {
    check_centroids("prototype_alignment", codes.code_length(), codes.count(), f, g)?;
    Ok(alignment_projected(codes.matrix(), f.matrix(), g))
}

/// The full objective at the model's current view weights:
/// `Σ_k α_k‖W_kᵀX_k − F_kGᵀ‖² + λ‖B − W_kᵀX_k‖² − β tr(BᵀF_kGᵀ)`.
pub fn objective(model: &CuhModel, data: &MultiViewDataset) -> Result<f64> {
    let hp = model.hyperparams();
    let mut total = 0.0;
    for m in [Modality::View1, Modality::View2] {
        let view = data.view(m);
        let w = model.projection(m);
        let f = model.centroids(m);
        let resid = clustering_residual(view, w, f, model.assignment())?;
        let quant = quantization_error(view, w, model.codes())?;
        let align = prototype_alignment(model.codes(), f, model.assignment())?;
        total += model.weights().get(m.index()) * resid * resid + hp.lambda * quant - hp.beta * align;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn view(rows: usize, cols: usize, vals: &[f64]) -> ViewMatrix {
        ViewMatrix::new(DMatrix::from_column_slice(rows, cols, vals))
    }

    #[test]
    fn residual_zero_for_exact_cluster_fit() {
        // Items 0 and 2 share a column, so F can hold each cluster exactly.
        let x = view(2, 3, &[1.0, 2.0, -3.0, 0.5, 1.0, 2.0]);
        let w = ProjectionMatrix::identity(2, 2).unwrap();
        let g = ClusterAssignment::new(vec![0, 1, 0], 2).unwrap();
        let f = CentroidMatrix::new(DMatrix::from_column_slice(2, 2, &[1.0, 2.0, -3.0, 0.5])).unwrap();
        assert_eq!(clustering_residual(&x, &w, &f, &g).unwrap(), 0.0);
    }

    #[test]
    fn residual_hand_case_sqrt_two() {
        let x = view(1, 2, &[1.0, -1.0]);
        let w = ProjectionMatrix::identity(1, 1).unwrap();
        let g = ClusterAssignment::new(vec![0, 0], 1).unwrap();
        let f = CentroidMatrix::zeros(1, 1);
        let r = clustering_residual(&x, &w, &f, &g).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn quantization_hand_case() {
        let x = view(1, 1, &[0.5]);
        let w = ProjectionMatrix::identity(1, 1).unwrap();
        let b = BinaryCodeMatrix::new(DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert_eq!(quantization_error(&x, &w, &b).unwrap(), 0.25);

        let exact = view(2, 2, &[1.0, -1.0, -1.0, -1.0]);
        let w2 = ProjectionMatrix::identity(2, 2).unwrap();
        let b2 = BinaryCodeMatrix::from_signs(exact.data());
        assert_eq!(quantization_error(&exact, &w2, &b2).unwrap(), 0.0);
    }

    #[test]
    fn alignment_hand_case_and_zero_centroids() {
        let b = BinaryCodeMatrix::new(DMatrix::from_column_slice(2, 1, &[1.0, -1.0])).unwrap();
        let g = ClusterAssignment::new(vec![1], 2).unwrap();
        let f = CentroidMatrix::new(DMatrix::from_column_slice(2, 2, &[9.0, 9.0, 3.0, 1.0])).unwrap();
        assert_eq!(prototype_alignment(&b, &f, &g).unwrap(), 2.0);
        assert_eq!(prototype_alignment(&b, &CentroidMatrix::zeros(2, 2), &g).unwrap(), 0.0);
    }

    #[test]
    fn shape_mismatch_is_a_dimension_error() {
        let x = view(3, 2, &[0.0; 6]);
        let w = ProjectionMatrix::identity(2, 1).unwrap();
        let g = ClusterAssignment::new(vec![0, 0], 1).unwrap();
        let f = CentroidMatrix::zeros(1, 1);
        assert!(matches!(
            clustering_residual(&x, &w, &f, &g),
            Err(CuhError::Dimension { .. })
        ));
        let b = BinaryCodeMatrix::new(DMatrix::from_element(2, 2, 1.0)).unwrap();
        assert!(matches!(prototype_alignment(&b, &f, &g), Err(CuhError::Dimension { .. })));
    }

    #[test]
    fn code_matrix_rejects_non_sign_entries() {
        assert!(BinaryCodeMatrix::new(DMatrix::from_element(1, 1, 0.0)).is_err());
        assert_eq!(sgn(0.0), -1.0);
        assert_eq!(sgn(1e-300), 1.0);
    }

    #[test]
    fn projection_constructor_checks_orthonormality() {
        assert!(ProjectionMatrix::new(DMatrix::from_element(2, 1, 1.0)).is_err());
        assert!(ProjectionMatrix::new(DMatrix::from_column_slice(2, 1, &[0.6, 0.8])).is_ok());
    }

    #[test]
    fn hyperparams_validation() {
        let hp = Hyperparams::default();
        assert!(hp.validate(64, 32, 100).is_ok());
        assert!(hp.validate(64, 16, 100).is_err());
        assert!(hp.validate(64, 32, 10).is_err());
        let bad = Hyperparams { lambda: 0.0, ..Hyperparams::default() };
        assert!(bad.validate(64, 64, 100).is_err());
    }
}

//! Small dense linear algebra around the eigenvalue −1 of an operator α.
//!
//! The space splits as F ⊕ G where F = Ker((I+α)ⁿ) is the root subspace of −1
//! and G = Im((I+α)ⁿ) is an α-invariant complement on which I+α is
//! invertible. K = Ker(I+α) is the eigenspace, always contained in F.
//!
//! Subspaces are carried as orthonormal bases. Integer-entry inputs go
//! through exact rational elimination (see [`exact`]); everything else uses
//! singular-value thresholding at `n · ‖M‖₂ · 1e-10`.

pub mod exact;

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use self::exact::RationalMatrix;

/// Residual bound for α-invariance and containment checks.
pub const INVARIANCE_TOL: f64 = 1e-10;
/// Orthonormality bound on stored bases.
pub const ORTHONORMAL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix dimension must be at least 1")]
    Empty,
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("declared dimension {declared} does not match {actual} rows")]
    DimensionMismatch { declared: usize, actual: usize },
    #[error("operator is singular: smallest singular value {smallest:e} <= tolerance {tolerance:e}")]
    Singular { smallest: f64, tolerance: f64 },
    #[error("subspace is not invariant: residual {residual:e}")]
    NotInvariant { residual: f64 },
    #[error("Jordan cell requires n >= 2, got {0}")]
    JordanTooSmall(usize),
    #[error("basis is not orthonormal: deviation {0:e}")]
    NotOrthonormal(f64),
}

/// `n · ‖M‖₂ · 1e-10`, the singular-value cutoff used for every rank decision.
pub fn rank_tolerance(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows().max(m.ncols()) as f64;
    n * spectral_norm(m) * 1e-10
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.min()
}

/// An invertible operator on ℝⁿ in the standard basis.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearOperator {
    matrix: DMatrix<f64>,
    det_estimate: f64,
}

impl LinearOperator {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self, OperatorError> {
        if matrix.nrows() != matrix.ncols() {
            return Err(OperatorError::NotSquare { rows: matrix.nrows(), cols: matrix.ncols() });
        }
        if matrix.nrows() == 0 {
            return Err(OperatorError::Empty);
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(OperatorError::NonFinite);
        }
        let tolerance = rank_tolerance(&matrix);
        let smallest = smallest_singular_value(&matrix);
        if smallest <= tolerance {
            return Err(OperatorError::Singular { smallest, tolerance });
        }
        let det_estimate = matrix.determinant();
        Ok(Self { matrix, det_estimate })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, OperatorError> {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(OperatorError::NotSquare { rows: n, cols: rows.iter().map(Vec::len).max().unwrap_or(0) });
        }
        Self::new(DMatrix::from_fn(n, cols, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n)).expect("identity is invertible")
    }

    pub fn scalar(n: usize, value: f64) -> Result<Self, OperatorError> {
        Self::new(DMatrix::identity(n, n) * value)
    }

    pub fn diagonal(values: &[f64]) -> Result<Self, OperatorError> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn det_estimate(&self) -> f64 {
        self.det_estimate
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }

    /// I + α.
    pub fn shifted(&self) -> DMatrix<f64> {
        &self.matrix + DMatrix::identity(self.dim(), self.dim())
    }

    pub fn is_integer(&self) -> bool {
        RationalMatrix::from_integer_matrix(&self.matrix).is_some()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.matrix.row(i).iter().copied().collect())
            .collect()
    }
}

/// Transpose with respect to the standard inner product.
pub fn adjoint(alpha: &LinearOperator) -> LinearOperator {
    LinearOperator {
        matrix: alpha.matrix.transpose(),
        det_estimate: alpha.det_estimate,
    }
}

/// The n×n Jordan cell with eigenvalue −1:
/// α(x₁,…,xₙ) = (−x₁+x₂, …, −xₙ₋₁+xₙ, −xₙ).
pub fn jordan_cell(n: usize) -> Result<LinearOperator, OperatorError> {
    if n < 2 {
        return Err(OperatorError::JordanTooSmall(n));
    }
    let m = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            -1.0
        } else if j == i + 1 {
            1.0
        } else {
            0.0
        }
    });
    LinearOperator::new(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SubspaceLabel {
    K,
    F,
    G,
    H,
    #[serde(rename = "L_lambda")]
    LLambda,
    #[serde(rename = "annihilator")]
    Annihilator,
    #[serde(rename = "other")]
    Other,
}

impl fmt::Display for SubspaceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SubspaceLabel::K => "K",
            SubspaceLabel::F => "F",
            SubspaceLabel::G => "G",
            SubspaceLabel::H => "H",
            SubspaceLabel::LLambda => "L_lambda",
            SubspaceLabel::Annihilator => "annihilator",
            SubspaceLabel::Other => "other",
        };
        f.write_str(s)
    }
}

/// A subspace of ℝⁿ given by an orthonormal basis (the columns of `basis`).
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
    label: SubspaceLabel,
}

impl Subspace {
    pub fn zero(ambient_dim: usize, label: SubspaceLabel) -> Self {
        Self { basis: DMatrix::zeros(ambient_dim, 0), label }
    }

    pub fn full(ambient_dim: usize, label: SubspaceLabel) -> Self {
        Self { basis: DMatrix::identity(ambient_dim, ambient_dim), label }
    }

    /// Orthonormalize `vectors`, dropping those already in the span of earlier ones.
    pub fn from_spanning(ambient_dim: usize, vectors: &[DVector<f64>], label: SubspaceLabel) -> Self {
        let cols = orthonormalize(ambient_dim, vectors);
        Self { basis: DMatrix::from_columns_or_empty(ambient_dim, &cols), label }
    }

    /// Accept a basis that must already be orthonormal within 1e-12.
    pub fn from_orthonormal(
        ambient_dim: usize,
        vectors: &[DVector<f64>],
        label: SubspaceLabel,
    ) -> Result<Self, OperatorError> {
        if vectors.iter().any(|v| v.len() != ambient_dim) {
            return Err(OperatorError::DimensionMismatch {
                declared: ambient_dim,
                actual: vectors.iter().map(|v| v.len()).find(|&l| l != ambient_dim).unwrap_or(0),
            });
        }
        let basis = DMatrix::from_columns_or_empty(ambient_dim, vectors);
        let gram = basis.transpose() * &basis;
        let dev = (gram - DMatrix::identity(vectors.len(), vectors.len())).amax();
        if dev > ORTHONORMAL_TOL || vectors.len() > ambient_dim {
            return Err(OperatorError::NotOrthonormal(dev));
        }
        Ok(Self { basis, label })
    }

    pub fn with_label(mut self, label: SubspaceLabel) -> Self {
        self.label = label;
        self
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn label(&self) -> SubspaceLabel {
        self.label
    }

    /// n×k matrix whose columns are the basis vectors.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<DVector<f64>> {
        self.basis.column_iter().map(|c| c.into_owned()).collect()
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.basis.transpose() * x)
    }

    /// ‖x − P x‖.
    pub fn distance(&self, x: &DVector<f64>) -> f64 {
        (x - self.project(x)).norm()
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.distance(x) <= tol
    }

    /// Largest distance from a basis vector of `self` to `other`.
    pub fn containment_residual(&self, other: &Subspace) -> f64 {
        self.basis
            .column_iter()
            .map(|c| other.distance(&c.into_owned()))
            .fold(0.0, f64::max)
    }

    /// Zero iff the two subspaces coincide.
    pub fn mutual_residual(&self, other: &Subspace) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        self.containment_residual(other).max(other.containment_residual(self))
    }

    /// Coordinates of x in this basis.
    pub fn coordinates(&self, x: &DVector<f64>) -> DVector<f64> {
        self.basis.transpose() * x
    }

    /// Map coordinates back to the ambient space.
    pub fn embed(&self, coords: &DVector<f64>) -> DVector<f64> {
        &self.basis * coords
    }
}

trait FromColumnsOrEmpty {
    fn from_columns_or_empty(rows: usize, cols: &[DVector<f64>]) -> Self;
}

impl FromColumnsOrEmpty for DMatrix<f64> {
    fn from_columns_or_empty(rows: usize, cols: &[DVector<f64>]) -> Self {
        DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
    }
}

/// Modified Gram–Schmidt with a second orthogonalization pass.
pub fn orthonormalize(ambient_dim: usize, vectors: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for v in vectors {
        assert_eq!(v.len(), ambient_dim, "vector length must match ambient dimension");
        let scale = v.norm();
        if scale == 0.0 || !scale.is_finite() {
            continue;
        }
        let mut w = v / scale;
        for _ in 0..2 {
            for q in &out {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
        }
        let norm = w.norm();
        if norm > 1e-10 {
            out.push(w / norm);
        }
    }
    out
}

/// Null space by singular-value thresholding.
pub fn numeric_kernel(m: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let n = m.ncols();
    let tol = rank_tolerance(m);
    // Pad to square so the SVD returns a full right basis.
    let padded = if m.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let vectors: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    orthonormalize(n, &vectors)
}

/// Column space by singular-value thresholding.
pub fn numeric_image(m: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let tol = rank_tolerance(m);
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let vectors: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > tol)
        .map(|(i, _)| u.column(i).into_owned())
        .collect();
    orthonormalize(m.nrows(), &vectors)
}

fn exact_shifted_power(alpha: &LinearOperator, k: u32) -> Option<RationalMatrix> {
    let a = RationalMatrix::from_integer_matrix(alpha.matrix())?;
    let shifted = a.add(&RationalMatrix::identity(alpha.dim()));
    Some(shifted.pow(k))
}

/// (I+α)^k by repeated multiplication in floating point.
pub fn shifted_power(alpha: &LinearOperator, k: u32) -> DMatrix<f64> {
    if let Some(exact) = exact_shifted_power(alpha, k) {
        return exact.to_f64();
    }
    let s = alpha.shifted();
    let mut acc = DMatrix::identity(alpha.dim(), alpha.dim());
    for _ in 0..k {
        acc = &acc * &s;
    }
    acc
}

fn kernel_of_shifted_power(alpha: &LinearOperator, k: u32, label: SubspaceLabel) -> Subspace {
    let n = alpha.dim();
    let vectors = match exact_shifted_power(alpha, k) {
        Some(p) => p.kernel_basis().iter().map(|v| exact::rational_vector(v)).collect(),
        None => numeric_kernel_chain(&alpha.shifted(), k),
    };
    Subspace::from_spanning(n, &vectors, label)
}

/// Ker(Sᵏ) as the chain V_{j+1} = {x : Sx ∈ V_j}. Every rank decision is
/// made on S itself, so a small singular value of S is not raised to the
/// k-th power and mistaken for zero.
fn numeric_kernel_chain(s: &DMatrix<f64>, k: u32) -> Vec<DVector<f64>> {
    let n = s.nrows();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for _ in 0..k {
        let off = if basis.is_empty() {
            s.clone()
        } else {
            let b = DMatrix::from_columns(&basis);
            s - &b * (b.transpose() * s)
        };
        let next = numeric_kernel(&off);
        if next.len() == basis.len() {
            break;
        }
        basis = next;
    }
    orthonormalize(n, &basis)
}

/// Im(Sᵏ) as the chain W_{j+1} = S·W_j, thresholded at each step.
fn numeric_image_chain(s: &DMatrix<f64>, k: u32) -> Vec<DVector<f64>> {
    let n = s.nrows();
    let mut basis: Vec<DVector<f64>> = (0..n).map(|i| DVector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 })).collect();
    for _ in 0..k {
        if basis.is_empty() {
            break;
        }
        let next = numeric_image(&(s * DMatrix::from_columns(&basis)));
        if next.len() == basis.len() {
            break;
        }
        basis = next;
    }
    basis
}

/// K = Ker(I+α), the eigenspace of −1. Empty iff −1 is not an eigenvalue.
pub fn kernel_of_i_plus(alpha: &LinearOperator) -> Subspace {
    kernel_of_shifted_power(alpha, 1, SubspaceLabel::K)
}

/// F = Ker((I+α)ⁿ), the root subspace of −1.
pub fn root_subspace(alpha: &LinearOperator) -> Subspace {
    kernel_of_shifted_power(alpha, alpha.dim() as u32, SubspaceLabel::F)
}

/// G = Im((I+α)ⁿ), the α-invariant complement of F.
pub fn invariant_complement(alpha: &LinearOperator) -> Subspace {
    let n = alpha.dim();
    let vectors = match exact_shifted_power(alpha, n as u32) {
        Some(p) => p.column_space_basis().iter().map(|v| exact::rational_vector(v)).collect(),
        None => numeric_image_chain(&alpha.shifted(), n as u32),
    };
    Subspace::from_spanning(n, &vectors, SubspaceLabel::G)
}

/// Null space of an arbitrary matrix, exact for small integer entries.
pub fn kernel(m: &DMatrix<f64>, label: SubspaceLabel) -> Subspace {
    let vectors = match RationalMatrix::from_integer_matrix(m) {
        Some(r) => r.kernel_basis().iter().map(|v| exact::rational_vector(v)).collect(),
        None => numeric_kernel(m),
    };
    Subspace::from_spanning(m.ncols(), &vectors, label)
}

/// Column space of an arbitrary matrix, exact for small integer entries.
pub fn image(m: &DMatrix<f64>, label: SubspaceLabel) -> Subspace {
    let vectors = match RationalMatrix::from_integer_matrix(m) {
        Some(r) => r.column_space_basis().iter().map(|v| exact::rational_vector(v)).collect(),
        None => numeric_image(m),
    };
    Subspace::from_spanning(m.nrows(), &vectors, label)
}

/// H = (I + α̃)(ℝⁿ). A characteristic function identically 1 on H means the
/// distribution lives in the annihilator of H, which is K.
pub fn image_of_i_plus_adjoint(alpha: &LinearOperator) -> Subspace {
    image(&adjoint(alpha).shifted(), SubspaceLabel::H)
}

/// Largest ‖α·s − P_S(α·s)‖ over basis vectors s.
pub fn invariance_residual(alpha: &LinearOperator, s: &Subspace) -> f64 {
    s.basis_vectors()
        .iter()
        .map(|v| s.distance(&alpha.apply(v)))
        .fold(0.0, f64::max)
}

/// Matrix of α restricted to an invariant subspace, in that subspace's basis:
/// entry (i, j) is ⟨α·s_j, s_i⟩.
pub fn restrict(alpha: &LinearOperator, s: &Subspace) -> Result<DMatrix<f64>, OperatorError> {
    let residual = invariance_residual(alpha, s);
    if residual > INVARIANCE_TOL {
        return Err(OperatorError::NotInvariant { residual });
    }
    Ok(s.basis().transpose() * alpha.matrix() * s.basis())
}

/// Orthogonal complement {x : ⟨x, y⟩ = 0 for all y ∈ S}.
pub fn annihilator(s: &Subspace) -> Subspace {
    let n = s.ambient_dim();
    if s.is_zero() {
        return Subspace::full(n, SubspaceLabel::Annihilator);
    }
    if s.dim() == n {
        return Subspace::zero(n, SubspaceLabel::Annihilator);
    }
    let complement = DMatrix::identity(n, n) - s.projector();
    let eig = SymmetricEigen::new(complement);
    let mut candidates: Vec<DVector<f64>> = s.basis_vectors();
    let k = candidates.len();
    candidates.extend(
        eig.eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 0.5)
            .map(|(i, _)| eig.eigenvectors.column(i).into_owned()),
    );
    // Orthonormalize against S itself, then drop S's own vectors.
    let mut all = orthonormalize(n, &candidates);
    let rest = all.split_off(k);
    Subspace::from_spanning(n, &rest, SubspaceLabel::Annihilator)
}

/// The splitting ℝⁿ = F ⊕ G together with K and the restricted operators.
#[derive(Clone, Debug)]
pub struct OperatorDecomposition {
    pub k: Subspace,
    pub f: Subspace,
    pub g: Subspace,
    pub alpha_g: DMatrix<f64>,
    pub alpha_f: DMatrix<f64>,
    pub root_equals_eigen: bool,
}

pub fn decompose(alpha: &LinearOperator) -> Result<OperatorDecomposition, OperatorError> {
    let k = kernel_of_i_plus(alpha);
    let f = root_subspace(alpha);
    let g = invariant_complement(alpha);
    let alpha_f = restrict(alpha, &f)?;
    let alpha_g = restrict(alpha, &g)?;
    let root_equals_eigen = k.dim() == f.dim();
    Ok(OperatorDecomposition { k, f, g, alpha_g, alpha_f, root_equals_eigen })
}

impl OperatorDecomposition {
    /// Largest violation among the structural invariants, for diagnostics.
    pub fn invariant_report(&self, alpha: &LinearOperator) -> DecompositionCheck {
        let n = alpha.dim();
        let minus_identity = -DMatrix::identity(self.k.dim(), self.k.dim());
        let restrict_k = restrict(alpha, &self.k)
            .map(|m| (m - minus_identity).amax())
            .unwrap_or(f64::INFINITY);
        let ig = DMatrix::identity(self.g.dim(), self.g.dim()) + &self.alpha_g;
        let shifted_g_min_sv = if self.g.is_zero() {
            f64::INFINITY
        } else {
            smallest_singular_value(&ig)
        };
        DecompositionCheck {
            dims_sum_ok: self.f.dim() + self.g.dim() == n,
            f_invariance: invariance_residual(alpha, &self.f),
            g_invariance: invariance_residual(alpha, &self.g),
            k_in_f: self.k.containment_residual(&self.f),
            k_g_independence: independence(&self.k, &self.g),
            restrict_k_minus_identity: restrict_k,
            shifted_g_min_singular_value: shifted_g_min_sv,
            shifted_g_tolerance: if self.g.is_zero() { 0.0 } else { rank_tolerance(&ig) },
        }
    }
}

/// Smallest singular value of [A | B] for orthonormal bases A, B. Zero when
/// the subspaces intersect nontrivially; 1 when they are orthogonal.
pub fn independence(a: &Subspace, b: &Subspace) -> f64 {
    let n = a.ambient_dim();
    let k = a.dim() + b.dim();
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    let stacked = DMatrix::from_fn(n, k, |i, j| {
        if j < a.dim() {
            a.basis()[(i, j)]
        } else {
            b.basis()[(i, j - a.dim())]
        }
    });
    smallest_singular_value(&stacked)
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionCheck {
    pub dims_sum_ok: bool,
    pub f_invariance: f64,
    pub g_invariance: f64,
    pub k_in_f: f64,
    /// Smallest singular value of the stacked bases [K | G]; positive iff K ∩ G = {0}.
    pub k_g_independence: f64,
    pub restrict_k_minus_identity: f64,
    pub shifted_g_min_singular_value: f64,
    pub shifted_g_tolerance: f64,
}

impl DecompositionCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.dims_sum_ok
            && self.f_invariance <= tol
            && self.g_invariance <= tol
            && self.k_in_f <= tol
            && self.k_g_independence > tol
            && self.restrict_k_minus_identity <= tol
            && self.shifted_g_min_singular_value > self.shifted_g_tolerance
    }
}

/// Matrix JSON: `{"n": 2, "rows": [[-1.0, 1.0], [0.0, -1.0]]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self {
            n: m.nrows(),
            rows: (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect(),
        }
    }

    pub fn to_operator(&self) -> Result<LinearOperator, OperatorError> {
        if self.rows.len() != self.n {
            return Err(OperatorError::DimensionMismatch { declared: self.n, actual: self.rows.len() });
        }
        LinearOperator::from_rows(&self.rows)
    }
}

impl From<&LinearOperator> for MatrixJson {
    fn from(a: &LinearOperator) -> Self {
        Self::from_matrix(a.matrix())
    }
}

/// Subspace JSON: `{"ambient_dim": 2, "basis": [[1.0, 0.0]], "label": "K"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubspaceJson {
    pub ambient_dim: usize,
    pub basis: Vec<Vec<f64>>,
    pub label: SubspaceLabel,
}

impl From<&Subspace> for SubspaceJson {
    fn from(s: &Subspace) -> Self {
        Self {
            ambient_dim: s.ambient_dim(),
            basis: s.basis_vectors().iter().map(|v| v.iter().copied().collect()).collect(),
            label: s.label(),
        }
    }
}

impl TryFrom<SubspaceJson> for Subspace {
    type Error = OperatorError;

    fn try_from(j: SubspaceJson) -> Result<Self, Self::Error> {
        let vectors: Vec<DVector<f64>> = j.basis.iter().map(|v| DVector::from_vec(v.clone())).collect();
        Subspace::from_orthonormal(j.ambient_dim, &vectors, j.label)
    }
}

impl Serialize for Subspace {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SubspaceJson::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Subspace {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let j = SubspaceJson::deserialize(deserializer)?;
        Subspace::try_from(j).map_err(serde::de::Error::custom)
    }
}

//! Spectral case analysis: which families of distribution pairs an operator admits.
//!
//! [`classify_general`] reports the structure valid in every dimension: a
//! Gaussian part on G, a shared factor on K, degenerate shifts. On the plane
//! [`classify2d`] refines this into the full list of cases, split first by
//! whether −1 is an eigenvalue and then by the signs of the remaining
//! eigenvalues.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operator::{
    decompose, kernel_of_i_plus, orthonormalize, root_subspace, spectral_norm, LinearOperator,
    OperatorError, Subspace, SubspaceLabel,
};

/// Relative tolerance for eigenvalue equalities (λ = −1, λ₁ = λ₂, α = λI).
pub const EIGEN_TOL: f64 = 1e-9;
/// Relative margin inside which a decision is reported as near-degenerate.
pub const NEAR_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("the plane classifier needs a 2x2 operator, got {0}x{0}")]
    Dimension(usize),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexJson {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    /// Coefficients of det(λI − α), leading 1 first.
    pub char_poly_coeffs: Vec<f64>,
    pub eigenvalues: Vec<ComplexJson>,
    pub has_minus_one: bool,
    pub minus_one_diagonalizable: bool,
    /// tr² − 4 det, reported for n = 2 only.
    pub discriminant: Option<f64>,
}

impl SpectralSummary {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.eigenvalues.iter().map(|z| Complex64::new(z.re, z.im)).collect()
    }
}

/// Faddeev–LeVerrier recursion for the characteristic polynomial.
pub fn char_poly(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut coeffs = vec![1.0];
    let mut acc = DMatrix::zeros(n, n);
    let identity = DMatrix::identity(n, n);
    for k in 1..=n {
        acc = m * &acc + &identity * coeffs[k - 1];
        let c = -(m * &acc).trace() / k as f64;
        coeffs.push(c);
    }
    coeffs
}

fn scale(alpha: &LinearOperator) -> f64 {
    spectral_norm(alpha.matrix()).max(1.0)
}

/// Roots of λ² − tλ + d, with a discriminant within `disc_tol` of zero
/// treated as a double root.
fn quadratic_roots(t: f64, d: f64, disc_tol: f64) -> Vec<Complex64> {
    let disc = t * t - 4.0 * d;
    if disc.abs() <= disc_tol {
        let r = Complex64::new(t / 2.0, 0.0);
        return vec![r, r];
    }
    if disc < 0.0 {
        let im = (-disc).sqrt() / 2.0;
        return vec![Complex64::new(t / 2.0, -im), Complex64::new(t / 2.0, im)];
    }
    let s = if t >= 0.0 { 1.0 } else { -1.0 };
    let big = (t + s * disc.sqrt()) / 2.0;
    let small = d / big;
    let (lo, hi) = if big < small { (big, small) } else { (small, big) };
    vec![Complex64::new(lo, 0.0), Complex64::new(hi, 0.0)]
}

fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

fn eigenvalues_of(alpha: &LinearOperator) -> Vec<Complex64> {
    let m = alpha.matrix();
    match alpha.dim() {
        1 => vec![Complex64::new(m[(0, 0)], 0.0)],
        2 => {
            let s = scale(alpha);
            quadratic_roots(m.trace(), m.determinant(), EIGEN_TOL * s * s)
        }
        _ => sorted(m.complex_eigenvalues().iter().copied().collect()),
    }
}

pub fn spectral_summary(alpha: &LinearOperator) -> SpectralSummary {
    let m = alpha.matrix();
    let k = kernel_of_i_plus(alpha);
    let f = root_subspace(alpha);
    SpectralSummary {
        char_poly_coeffs: char_poly(m),
        eigenvalues: eigenvalues_of(alpha).into_iter().map(ComplexJson::from).collect(),
        has_minus_one: !k.is_zero(),
        minus_one_diagonalizable: k.dim() == f.dim(),
        discriminant: (alpha.dim() == 2).then(|| m.trace().powi(2) - 4.0 * m.determinant()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CaseTag {
    /// μ₁ = μ₂ arbitrary.
    ArbitraryEqual,
    /// μⱼ = ω ∗ E_{xⱼ} with ω supported in K.
    ShiftedSubspace,
    /// μⱼ = γⱼ ∗ ω ∗ E_{xⱼ} with γⱼ on G and ω on K.
    GaussTimesSubspace,
    /// μⱼ Gaussian (no eigenvalue −1).
    GaussianGeneral,
    /// Gaussian parts confined to one eigenline.
    GaussianLine,
    /// Gaussian parts on one of several admissible supports.
    GaussianChoice,
    /// μⱼ = E_{xⱼ}.
    DegenerateOnly,
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().expect("string tag"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFamily {
    pub case_tag: CaseTag,
    /// Plane case label such as "1A" or "2A(ii)"; absent from the general classifier.
    pub case: Option<String>,
    #[serde(rename = "K")]
    pub k: Subspace,
    #[serde(rename = "G")]
    pub g: Subspace,
    pub gaussian_support_options: Vec<Subspace>,
    pub constraints: Vec<String>,
    pub singular_flag: bool,
    pub near_degenerate: bool,
    pub spectral_summary: SpectralSummary,
}

const SHIFTS: &str = "x₁+αx₂=0";
const OMEGA_ON_K: &str = "ω supported in K";
const MATRIX_EQUATION: &str = "A₁+A₂α̃=0";

/// Unit eigenvector of a real 2×2 matrix for the real eigenvalue λ.
fn eigenvector2(m: &DMatrix<f64>, lambda: f64) -> DVector<f64> {
    let (a, b, c, d) = (m[(0, 0)] - lambda, m[(0, 1)], m[(1, 0)], m[(1, 1)] - lambda);
    // Rows of m − λI are orthogonal to the eigenvector; use the longer one.
    let v = if a * a + b * b >= c * c + d * d {
        DVector::from_vec(vec![-b, a])
    } else {
        DVector::from_vec(vec![-d, c])
    };
    let norm = v.norm();
    if norm == 0.0 {
        DVector::from_vec(vec![1.0, 0.0])
    } else {
        v / norm
    }
}

fn line(v: DVector<f64>) -> Subspace {
    Subspace::from_spanning(2, &[v], SubspaceLabel::LLambda)
}

fn near(x: f64, tol: f64, margin: f64) -> bool {
    x.abs() > tol && x.abs() <= margin
}

/// The plane case table.
pub fn classify2d(alpha: &LinearOperator) -> Result<SolutionFamily, ClassifyError> {
    if alpha.dim() != 2 {
        return Err(ClassifyError::Dimension(alpha.dim()));
    }
    let m = alpha.matrix();
    let s = scale(alpha);
    let tol = EIGEN_TOL * s;
    let (tr, det) = (m.trace(), m.determinant());
    let disc = tr * tr - 4.0 * det;
    let summary = spectral_summary(alpha);
    let roots = summary.eigenvalues();
    let k = kernel_of_i_plus(alpha);
    let zero = Subspace::zero(2, SubspaceLabel::Other);
    let plane = Subspace::full(2, SubspaceLabel::Other);

    let mut near_degenerate = near(disc, tol * s, NEAR_TOL * s * s)
        || roots.iter().any(|z| near((z + 1.0).norm(), tol, NEAR_TOL * s) || z.norm() <= NEAR_TOL * s);

    let family = |tag, case: &str, g: Subspace, options: Vec<Subspace>, constraints: &[&str], singular| SolutionFamily {
        case_tag: tag,
        case: Some(case.to_string()),
        k: k.clone(),
        g,
        gaussian_support_options: options,
        constraints: constraints.iter().map(|c| c.to_string()).collect(),
        singular_flag: singular,
        near_degenerate: false,
        spectral_summary: summary.clone(),
    };

    let mut out = match k.dim() {
        2 => family(CaseTag::ArbitraryEqual, "1B", Subspace::zero(2, SubspaceLabel::G), vec![zero], &["μ₁=μ₂"], false),
        1 => {
            // Eigenvalues −1 and λ₀ with −λ₀ = det.
            let lambda0 = -det;
            near_degenerate |= near(lambda0 + 1.0, tol, NEAR_TOL * s);
            if (lambda0 + 1.0).abs() <= tol {
                family(
                    CaseTag::ShiftedSubspace,
                    "1B",
                    Subspace::zero(2, SubspaceLabel::G),
                    vec![zero],
                    &[OMEGA_ON_K, SHIFTS],
                    true,
                )
            } else {
                let g = line(eigenvector2(m, lambda0)).with_label(SubspaceLabel::G);
                if lambda0 > 0.0 {
                    family(CaseTag::ShiftedSubspace, "1A", g, vec![zero], &[OMEGA_ON_K, SHIFTS], false)
                } else {
                    let options = vec![zero, g.clone().with_label(SubspaceLabel::LLambda)];
                    family(
                        CaseTag::GaussTimesSubspace,
                        "1A",
                        g,
                        options,
                        &[OMEGA_ON_K, "γⱼ supported in L_λ₀", MATRIX_EQUATION],
                        false,
                    )
                }
            }
        }
        _ => {
            let g = Subspace::full(2, SubspaceLabel::G);
            let degenerate = |case: &str| {
                family(CaseTag::DegenerateOnly, case, g.clone(), vec![zero.clone()], &["μⱼ=E_{xⱼ}", SHIFTS], false)
            };
            if disc < 0.0 && disc.abs() > tol * s {
                degenerate("2B")
            } else if disc.abs() <= tol * s {
                let lambda0 = tr / 2.0;
                let scalar = (m - DMatrix::identity(2, 2) * lambda0).amax() <= tol;
                if lambda0 > 0.0 {
                    degenerate("2A(ii)")
                } else if scalar {
                    let e1 = line(DVector::from_vec(vec![1.0, 0.0]));
                    let e2 = line(DVector::from_vec(vec![0.0, 1.0]));
                    family(
                        CaseTag::GaussianChoice,
                        "2A(ii)",
                        g.clone(),
                        vec![zero.clone(), e1, e2, plane.clone()],
                        &[
                            MATRIX_EQUATION,
                            "a one-dimensional support may be any line, the same for γ₁ and γ₂",
                            "shift pair satisfies the Heyde equation",
                        ],
                        false,
                    )
                } else {
                    let l = line(eigenvector2(m, lambda0));
                    family(
                        CaseTag::GaussianLine,
                        "2A(ii)",
                        g.clone(),
                        vec![zero.clone(), l],
                        &["γⱼ supported in L_λ₀", MATRIX_EQUATION, "shift pair satisfies the Heyde equation"],
                        false,
                    )
                }
            } else {
                let (l1, l2) = (roots[0].re, roots[1].re);
                if l1 > 0.0 && l2 > 0.0 {
                    degenerate("2A(i)")
                } else if l1 < 0.0 && l2 < 0.0 {
                    let options = vec![zero.clone(), line(eigenvector2(m, l1)), line(eigenvector2(m, l2)), plane];
                    family(
                        CaseTag::GaussianChoice,
                        "2A(i)",
                        g.clone(),
                        options,
                        &[MATRIX_EQUATION, "shift pair satisfies the Heyde equation"],
                        false,
                    )
                } else {
                    let negative = if l1 < 0.0 { l1 } else { l2 };
                    family(
                        CaseTag::GaussianLine,
                        "2A(i)",
                        g.clone(),
                        vec![zero.clone(), line(eigenvector2(m, negative))],
                        &["γⱼ supported in L_λ for the negative λ", MATRIX_EQUATION, "shift pair satisfies the Heyde equation"],
                        false,
                    )
                }
            }
        }
    };
    out.near_degenerate = near_degenerate;
    Ok(out)
}

/// Real negative eigenvalues of `m` with their eigenspaces.
///
/// Eigenvalues within 1e-6 of each other are merged, and the eigenspace is
/// the span of right singular vectors of m − λI with singular value at most
/// 1e-7·max(1, ‖m‖), which tolerates the splitting of defective eigenvalues.
pub fn negative_eigenspaces(m: &DMatrix<f64>) -> Vec<(f64, Vec<DVector<f64>>)> {
    let k = m.nrows();
    if k == 0 {
        return Vec::new();
    }
    let s = spectral_norm(m).max(1.0);
    let mut reals: Vec<f64> = m
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= NEAR_TOL * s && z.re < 0.0)
        .map(|z| z.re)
        .collect();
    reals.sort_by(f64::total_cmp);
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for r in reals {
        match clusters.last_mut() {
            Some(c) if (r - c[c.len() - 1]).abs() <= NEAR_TOL * s => c.push(r),
            _ => clusters.push(vec![r]),
        }
    }
    clusters
        .into_iter()
        .filter_map(|c| {
            let lambda = c.iter().sum::<f64>() / c.len() as f64;
            let shifted = m - DMatrix::identity(k, k) * lambda;
            let svd = shifted.svd(false, true);
            let v_t = svd.v_t.expect("requested V^T");
            let vectors: Vec<DVector<f64>> = svd
                .singular_values
                .iter()
                .enumerate()
                .filter(|(_, &sv)| sv <= 1e-7 * s)
                .map(|(i, _)| v_t.row(i).transpose())
                .collect();
            let vectors = orthonormalize(k, &vectors);
            (!vectors.is_empty()).then_some((lambda, vectors))
        })
        .collect()
}

/// The structure valid in every dimension.
pub fn classify_general(alpha: &LinearOperator) -> Result<SolutionFamily, ClassifyError> {
    let n = alpha.dim();
    let d = decompose(alpha)?;
    let summary = spectral_summary(alpha);
    let s = scale(alpha);
    let near_degenerate = summary
        .eigenvalues()
        .iter()
        .any(|z| near((z + 1.0).norm(), EIGEN_TOL * s, NEAR_TOL * s));

    // Supports reached by the eigenvector construction on G.
    let negative: Vec<DVector<f64>> = negative_eigenspaces(&d.alpha_g)
        .into_iter()
        .flat_map(|(_, vs)| vs)
        .map(|c| d.g.embed(&c))
        .collect();
    let mut options = vec![Subspace::zero(n, SubspaceLabel::Other)];
    if !negative.is_empty() {
        options.push(Subspace::from_spanning(n, &negative, SubspaceLabel::Other));
    }

    let (tag, mut constraints) = if d.k.is_zero() {
        (CaseTag::GaussianGeneral, vec![MATRIX_EQUATION, SHIFTS])
    } else {
        (CaseTag::GaussTimesSubspace, vec!["K∩G={0}", OMEGA_ON_K, MATRIX_EQUATION, SHIFTS])
    };
    if d.k.dim() == n {
        constraints.push("μ₁=μ₂");
    }
    Ok(SolutionFamily {
        case_tag: tag,
        case: None,
        singular_flag: d.f.dim() > d.k.dim(),
        k: d.k,
        g: d.g,
        gaussian_support_options: options,
        constraints: constraints.into_iter().map(String::from).collect(),
        near_degenerate,
        spectral_summary: summary,
    })
}

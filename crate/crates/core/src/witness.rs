//! Explicit pairs (μ₁, μ₂) with the Heyde property.
//!
//! A witness is μⱼ = γⱼ ∗ ω ∗ E_{xⱼ}: symmetric Gaussians γⱼ on G whose
//! coefficient matrices solve A₁ + A₂α̃ = 0 there, one distribution ω on K
//! shared by both, and shifts with x₁ + αx₂ = 0.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::negative_eigenspaces;
use crate::distribution::{Atom, AtomJson, DiscreteMeasure, DistributionError, DistributionJson, GaussianComponent, ModelDistribution};
use crate::operator::{
    decompose, image, independence, kernel, LinearOperator, MatrixJson, OperatorError, Subspace, SubspaceLabel,
    INVARIANCE_TOL,
};
use crate::verify::{heyde_residual, GridSpec, ResidualReport, VerifyError};

/// Bound on ‖A₁ + A₂α̃‖ for accepted solutions.
pub const EQUATION_TOL: f64 = 1e-10;
/// Smallest eigenvalue tolerated in a PSD witness.
pub const PSD_TOL: f64 = 1e-12;
/// Residual bound every returned witness satisfies on the default grid.
pub const WITNESS_RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WitnessError {
    #[error("atom {index} lies outside K (distance {distance:e})")]
    AtomsOutsideK { index: usize, distance: f64 },
    #[error("Gaussian A{index} has support meeting the root subspace F (independence {independence:e})")]
    GaussianMeetsRootSubspace { index: usize, independence: f64 },
    #[error("Gaussian pair violates A1 + A2 α̃ = 0 (residual {0:e})")]
    GaussianEquationViolated(f64),
    #[error("internal consistency check failed: Heyde residual {0:e} on the default grid")]
    ResidualCheckFailed(f64),
    #[error("{0}")]
    InvalidOption(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

/// A solution pair of symmetric matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPair {
    pub a1: DMatrix<f64>,
    pub a2: DMatrix<f64>,
}

impl MatrixPair {
    pub fn zero(k: usize) -> Self {
        Self { a1: DMatrix::zeros(k, k), a2: DMatrix::zeros(k, k) }
    }

    /// ‖A₁ + A₂α̃‖ (largest entry).
    pub fn equation_residual(&self, alpha: &DMatrix<f64>) -> f64 {
        if self.a1.is_empty() {
            return 0.0;
        }
        (&self.a1 + &self.a2 * alpha.transpose()).amax()
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        [&self.a1, &self.a2].iter().all(|a| a.is_empty() || SymmetricEigen::new((*a).clone()).eigenvalues.min() >= -tol)
    }

    pub fn is_zero(&self) -> bool {
        self.a1.iter().chain(self.a2.iter()).all(|x| *x == 0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixEquationSolution {
    pub basis_pairs: Vec<MatrixPair>,
    pub psd_witness: Option<MatrixPair>,
    pub psd_cone_nonempty: bool,
}

fn sym_index(k: usize) -> Vec<(usize, usize)> {
    (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).collect()
}

fn from_sym(k: usize, idx: &[(usize, usize)], coords: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(k, k);
    for (&(i, j), &c) in idx.iter().zip(coords) {
        m[(i, j)] = c;
        m[(j, i)] = c;
    }
    m
}

fn to_sym(m: &DMatrix<f64>, idx: &[(usize, usize)]) -> Vec<f64> {
    idx.iter().map(|&(i, j)| m[(i, j)]).collect()
}

/// All symmetric (A₁, A₂) with A₁ + A₂α̃_G = 0, and a PSD member if one exists.
///
/// The solution space is the null space of the linear map from the
/// symmetric coordinates of (A₁, A₂) to the k² entries of A₁ + A₂α̃_G. The
/// PSD member sums (−λeeᵀ, eeᵀ) over unit eigenvectors e of α_G with real
/// eigenvalue λ < 0, projected back onto the solution space when that
/// reduces its equation residual.
pub fn solve_matrix_equation(alpha_g: &DMatrix<f64>) -> MatrixEquationSolution {
    let k = alpha_g.nrows();
    if k == 0 {
        return MatrixEquationSolution { basis_pairs: Vec::new(), psd_witness: None, psd_cone_nonempty: false };
    }
    let idx = sym_index(k);
    let m = idx.len();
    let mut system = DMatrix::zeros(k * k, 2 * m);
    for r in 0..k {
        for c in 0..k {
            let row = r * k + c;
            for (p, &(i, j)) in idx.iter().enumerate() {
                // Coordinate p of A₁ contributes to entries (i, j) and (j, i).
                if (r, c) == (i, j) || (r, c) == (j, i) {
                    system[(row, p)] += 1.0;
                }
                // (A₂α̃)[r][c] = Σ_l A₂[r][l] α[c][l]; coordinate p of A₂ sits at (i, j) and (j, i).
                if r == i {
                    system[(row, m + p)] += alpha_g[(c, j)];
                }
                if r == j && i != j {
                    system[(row, m + p)] += alpha_g[(c, i)];
                }
            }
        }
    }
    let null = kernel(&system, SubspaceLabel::Other);
    let split = |v: &DVector<f64>| MatrixPair {
        a1: from_sym(k, &idx, &v.as_slice()[..m]),
        a2: from_sym(k, &idx, &v.as_slice()[m..]),
    };
    let basis_pairs: Vec<MatrixPair> = null.basis_vectors().iter().map(split).collect();

    let mut raw = MatrixPair::zero(k);
    for (lambda, vectors) in negative_eigenspaces(alpha_g) {
        for e in vectors {
            let outer = &e * e.transpose();
            raw.a1 += &outer * -lambda;
            raw.a2 += outer;
        }
    }
    if raw.is_zero() {
        return MatrixEquationSolution { basis_pairs, psd_witness: None, psd_cone_nonempty: false };
    }
    let mut coords = to_sym(&raw.a1, &idx);
    coords.extend(to_sym(&raw.a2, &idx));
    let projected = split(&null.project(&DVector::from_vec(coords)));
    let better = projected.equation_residual(alpha_g) < raw.equation_residual(alpha_g);
    let witness = if better && projected.is_psd(PSD_TOL) { projected } else { raw };
    MatrixEquationSolution { basis_pairs, psd_witness: Some(witness), psd_cone_nonempty: true }
}

/// x₂ = x, x₁ = −αx, so that x₁ + αx₂ = 0.
pub fn shift_pair(alpha: &LinearOperator, x: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    (-alpha.apply(x), x.clone())
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessOptions {
    /// Atoms of ω, all in K. `None` means ½(δ_k + δ_{−k}) for the first basis vector k of K.
    pub omega_atoms: Option<Vec<Atom>>,
    /// x in [`shift_pair`]; zero when absent.
    pub shift_x: Option<DVector<f64>>,
    pub gaussian_scale: f64,
    /// Full n×n (A₁, A₂) replacing the eigenvector construction on G.
    pub gaussians: Option<MatrixPair>,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        Self { omega_atoms: None, shift_x: None, gaussian_scale: 1.0, gaussians: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub mu1: ModelDistribution,
    pub mu2: ModelDistribution,
    /// Embedded Gaussian coefficients, zero when no Gaussian part was used.
    pub gaussians: MatrixPair,
    pub omega: Option<DiscreteMeasure>,
    pub x1: DVector<f64>,
    pub x2: DVector<f64>,
    pub residual: ResidualReport,
}

fn embed(g: &Subspace, a: &DMatrix<f64>) -> DMatrix<f64> {
    let full = g.basis() * a * g.basis().transpose();
    (&full + full.transpose()) * 0.5
}

fn check_gaussians(pair: &MatrixPair, alpha: &LinearOperator, f: &Subspace) -> Result<(), WitnessError> {
    let n = alpha.dim();
    for (index, a) in [(1, &pair.a1), (2, &pair.a2)] {
        if a.nrows() != n || a.ncols() != n {
            return Err(WitnessError::InvalidOption(format!("Gaussian A{index} must be {n}x{n}")));
        }
        let support = image(a, SubspaceLabel::Other);
        if !support.is_zero() && !f.is_zero() {
            let ind = independence(&support, f);
            if ind <= INVARIANCE_TOL {
                return Err(WitnessError::GaussianMeetsRootSubspace { index, independence: ind });
            }
        }
    }
    let r = pair.equation_residual(alpha.matrix());
    if r > EQUATION_TOL * pair.a2.amax().max(1.0) {
        return Err(WitnessError::GaussianEquationViolated(r));
    }
    Ok(())
}

/// Build (μ₁, μ₂) = (γ₁ ∗ ω ∗ E_{x₁}, γ₂ ∗ ω ∗ E_{x₂}) and confirm the Heyde
/// residual on the default grid before returning.
pub fn construct_witness(alpha: &LinearOperator, options: &WitnessOptions) -> Result<Witness, WitnessError> {
    let n = alpha.dim();
    if !(options.gaussian_scale >= 0.0 && options.gaussian_scale.is_finite()) {
        return Err(WitnessError::InvalidOption("gaussian_scale must be a finite non-negative number".into()));
    }
    let d = decompose(alpha)?;

    let gaussians = match &options.gaussians {
        Some(pair) => {
            check_gaussians(pair, alpha, &d.f)?;
            pair.clone()
        }
        None => match solve_matrix_equation(&d.alpha_g).psd_witness {
            Some(w) => MatrixPair { a1: embed(&d.g, &w.a1), a2: embed(&d.g, &w.a2) },
            None => MatrixPair::zero(n),
        },
    };
    let gaussians =
        MatrixPair { a1: &gaussians.a1 * options.gaussian_scale, a2: &gaussians.a2 * options.gaussian_scale };

    let omega = match &options.omega_atoms {
        Some(atoms) => {
            for (index, a) in atoms.iter().enumerate() {
                if a.point.len() != n {
                    return Err(DistributionError::DimensionMismatch { expected: n, actual: a.point.len() }.into());
                }
                let distance = d.k.distance(&a.point);
                if distance > INVARIANCE_TOL {
                    return Err(WitnessError::AtomsOutsideK { index, distance });
                }
            }
            Some(DiscreteMeasure::new(n, atoms.clone())?.with_support(d.k.clone())?)
        }
        None if d.k.is_zero() => None,
        None => {
            let k = d.k.basis().column(0).into_owned();
            Some(DiscreteMeasure::uniform(n, vec![k.clone(), -k])?.with_support(d.k.clone())?)
        }
    };

    let x = options.shift_x.clone().unwrap_or_else(|| DVector::zeros(n));
    if x.len() != n {
        return Err(DistributionError::DimensionMismatch { expected: n, actual: x.len() }.into());
    }
    let (x1, x2) = shift_pair(alpha, &x);

    let build = |a: &DMatrix<f64>, shift: &DVector<f64>| -> Result<ModelDistribution, WitnessError> {
        let gaussian = if a.iter().all(|v| *v == 0.0) { None } else { Some(GaussianComponent::centered(a.clone())?) };
        Ok(ModelDistribution::new(n, gaussian, omega.clone(), shift.clone())?)
    };
    let mu1 = build(&gaussians.a1, &x1)?;
    let mu2 = build(&gaussians.a2, &x2)?;

    let residual = heyde_residual(&mu1, &mu2, alpha, &GridSpec::default_for(n))?;
    if !(residual.sup_residual <= WITNESS_RESIDUAL_TOL) {
        return Err(WitnessError::ResidualCheckFailed(residual.sup_residual));
    }
    Ok(Witness { mu1, mu2, gaussians, omega, x1, x2, residual })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceJson {
    #[serde(rename = "A1")]
    pub a1: MatrixJson,
    #[serde(rename = "A2")]
    pub a2: MatrixJson,
    pub omega: Option<Vec<AtomJson>>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub residual_check: ResidualReport,
    pub residual_tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessJson {
    pub mu1: DistributionJson,
    pub mu2: DistributionJson,
    pub provenance: ProvenanceJson,
}

impl From<&Witness> for WitnessJson {
    fn from(w: &Witness) -> Self {
        Self {
            mu1: DistributionJson::from(&w.mu1),
            mu2: DistributionJson::from(&w.mu2),
            provenance: ProvenanceJson {
                a1: MatrixJson::from_matrix(&w.gaussians.a1),
                a2: MatrixJson::from_matrix(&w.gaussians.a2),
                omega: w.omega.as_ref().map(|o| {
                    o.atoms()
                        .iter()
                        .map(|a| AtomJson { point: a.point.iter().copied().collect(), weight: a.weight })
                        .collect()
                }),
                x1: w.x1.iter().copied().collect(),
                x2: w.x2.iter().copied().collect(),
                residual_check: w.residual.clone(),
                residual_tolerance: WITNESS_RESIDUAL_TOL,
                passed: w.residual.sup_residual <= WITNESS_RESIDUAL_TOL,
            },
        }
    }
}

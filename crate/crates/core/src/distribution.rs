//! Distributions of the form γ ∗ ω ∗ E_x on ℝⁿ.
//!
//! γ is Gaussian, ω a finite discrete measure and E_x a point mass. The
//! Gaussian characteristic function is written exp{−⟨Ay, y⟩ + i⟨b, y⟩}, so
//! **the covariance matrix is 2A, not A**. Every constructor and the sampler
//! follow that convention.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operator::{Subspace, INVARIANCE_TOL};
use crate::par::{self, Execution};

/// Atoms whose coordinates agree to this tolerance are merged.
pub const ATOM_MERGE_TOL: f64 = 1e-12;
/// Largest atom count a convolution may produce.
pub const MAX_ATOMS: usize = 1_000_000;
/// Eigenvalues of A down to −PSD_TOL are clamped to zero.
pub const PSD_TOL: f64 = 1e-12;
const WEIGHT_SUM_TOL: f64 = 1e-12;
const SAMPLE_BLOCK: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("Gaussian coefficient matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("Gaussian coefficient matrix is not positive semidefinite (eigenvalue {0:e})")]
    NonPsd(f64),
    #[error("atom weight {0} outside (0, 1]")]
    BadWeight(f64),
    #[error("atom weights sum to {0}, expected 1")]
    WeightSum(f64),
    #[error("discrete measure has no atoms")]
    NoAtoms,
    #[error("atom lies outside its declared support (distance {0:e})")]
    AtomOutsideSupport(f64),
    #[error("convolution would produce {0} atoms (limit {MAX_ATOMS})")]
    AtomBlowup(usize),
    #[error("non-finite parameter")]
    NonFinite,
    #[error("sample count must be at least 1")]
    EmptySample,
    #[error("distribution JSON does not determine a dimension")]
    UnknownDimension,
}

/// Gaussian factor with characteristic function exp{−⟨Ay, y⟩ + i⟨b, y⟩}.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianComponent {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl GaussianComponent {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self, DistributionError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(DistributionError::DimensionMismatch { expected: n, actual: a.ncols() });
        }
        if b.len() != n {
            return Err(DistributionError::DimensionMismatch { expected: n, actual: b.len() });
        }
        if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
            return Err(DistributionError::NonFinite);
        }
        let asym = (&a - a.transpose()).amax();
        if asym > 1e-12 * a.amax().max(1.0) {
            return Err(DistributionError::NotSymmetric(asym));
        }
        let a = (&a + a.transpose()) * 0.5;
        if n > 0 {
            let min = SymmetricEigen::new(a.clone()).eigenvalues.min();
            if min < -PSD_TOL {
                return Err(DistributionError::NonPsd(min));
            }
        }
        Ok(Self { a, b })
    }

    pub fn centered(a: DMatrix<f64>) -> Result<Self, DistributionError> {
        let n = a.nrows();
        Self::new(a, DVector::zeros(n))
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// CF exponent coefficient A (covariance is 2A).
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        &self.a * 2.0
    }

    fn log_cf(&self, y: &DVector<f64>) -> Complex64 {
        Complex64::new(-(&self.a * y).dot(y), self.b.dot(y))
    }

    /// Symmetric square root of the covariance 2A.
    fn covariance_root(&self) -> Result<DMatrix<f64>, DistributionError> {
        let eig = SymmetricEigen::new(self.covariance());
        let mut vals = eig.eigenvalues.clone();
        for v in vals.iter_mut() {
            if *v < -2.0 * PSD_TOL {
                return Err(DistributionError::NonPsd(*v / 2.0));
            }
            *v = v.max(0.0).sqrt();
        }
        let q = &eig.eigenvectors;
        Ok(q * DMatrix::from_diagonal(&vals) * q.transpose())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub point: DVector<f64>,
    pub weight: f64,
}

/// A finite discrete probability measure.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    atoms: Vec<Atom>,
    support: Option<Subspace>,
}

impl DiscreteMeasure {
    pub fn new(dim: usize, atoms: Vec<Atom>) -> Result<Self, DistributionError> {
        if atoms.is_empty() {
            return Err(DistributionError::NoAtoms);
        }
        for a in &atoms {
            if a.point.len() != dim {
                return Err(DistributionError::DimensionMismatch { expected: dim, actual: a.point.len() });
            }
            if a.point.iter().any(|x| !x.is_finite()) {
                return Err(DistributionError::NonFinite);
            }
            if !(a.weight > 0.0 && a.weight <= 1.0) {
                return Err(DistributionError::BadWeight(a.weight));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL * atoms.len().max(1) as f64 {
            return Err(DistributionError::WeightSum(total));
        }
        Ok(Self { dim, atoms: merge_atoms(atoms), support: None })
    }

    /// Equal-weight atoms.
    pub fn uniform(dim: usize, points: Vec<DVector<f64>>) -> Result<Self, DistributionError> {
        let w = 1.0 / points.len().max(1) as f64;
        Self::new(dim, points.into_iter().map(|point| Atom { point, weight: w }).collect())
    }

    /// Declare a support subspace; every atom must lie in it within 1e-10.
    pub fn with_support(mut self, support: Subspace) -> Result<Self, DistributionError> {
        if support.ambient_dim() != self.dim {
            return Err(DistributionError::DimensionMismatch { expected: self.dim, actual: support.ambient_dim() });
        }
        let worst = self.atoms.iter().map(|a| support.distance(&a.point)).fold(0.0, f64::max);
        if worst > INVARIANCE_TOL {
            return Err(DistributionError::AtomOutsideSupport(worst));
        }
        self.support = Some(support);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn support(&self) -> Option<&Subspace> {
        self.support.as_ref()
    }

    fn cf(&self, y: &DVector<f64>) -> Complex64 {
        self.atoms
            .iter()
            .map(|a| Complex64::from_polar(a.weight, a.point.dot(y)))
            .sum()
    }

    fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.atoms
            .iter()
            .map(|a| {
                acc += a.weight;
                acc
            })
            .collect()
    }
}

fn lexicographic(a: &DVector<f64>, b: &DVector<f64>) -> std::cmp::Ordering {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Sort atoms and merge those within [`ATOM_MERGE_TOL`] in every coordinate.
fn merge_atoms(mut atoms: Vec<Atom>) -> Vec<Atom> {
    atoms.sort_by(|a, b| lexicographic(&a.point, &b.point));
    let mut kept: Vec<Atom> = Vec::with_capacity(atoms.len());
    'next: for atom in atoms {
        let lead = atom.point.get(0).copied().unwrap_or(0.0);
        for k in kept.iter_mut().rev() {
            let k_lead = k.point.get(0).copied().unwrap_or(0.0);
            if lead - k_lead > ATOM_MERGE_TOL {
                break;
            }
            if k.point.iter().zip(atom.point.iter()).all(|(x, y)| (x - y).abs() <= ATOM_MERGE_TOL) {
                k.weight += atom.weight;
                continue 'next;
            }
        }
        kept.push(atom);
    }
    kept
}

/// γ ∗ ω ∗ E_shift with absent factors treated as the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelDistribution {
    dim: usize,
    gaussian: Option<GaussianComponent>,
    discrete: Option<DiscreteMeasure>,
    shift: DVector<f64>,
}

impl ModelDistribution {
    pub fn new(
        dim: usize,
        gaussian: Option<GaussianComponent>,
        discrete: Option<DiscreteMeasure>,
        shift: DVector<f64>,
    ) -> Result<Self, DistributionError> {
        if let Some(g) = &gaussian {
            if g.dim() != dim {
                return Err(DistributionError::DimensionMismatch { expected: dim, actual: g.dim() });
            }
        }
        if let Some(d) = &discrete {
            if d.dim() != dim {
                return Err(DistributionError::DimensionMismatch { expected: dim, actual: d.dim() });
            }
        }
        if shift.len() != dim {
            return Err(DistributionError::DimensionMismatch { expected: dim, actual: shift.len() });
        }
        if shift.iter().any(|x| !x.is_finite()) {
            return Err(DistributionError::NonFinite);
        }
        Ok(Self { dim, gaussian, discrete, shift })
    }

    /// The degenerate distribution E_x.
    pub fn point_mass(x: DVector<f64>) -> Self {
        let dim = x.len();
        Self { dim, gaussian: None, discrete: None, shift: x }
    }

    pub fn from_gaussian(g: GaussianComponent) -> Self {
        let dim = g.dim();
        Self { dim, gaussian: Some(g), discrete: None, shift: DVector::zeros(dim) }
    }

    pub fn from_discrete(d: DiscreteMeasure) -> Self {
        let dim = d.dim();
        Self { dim, gaussian: None, discrete: Some(d), shift: DVector::zeros(dim) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gaussian(&self) -> Option<&GaussianComponent> {
        self.gaussian.as_ref()
    }

    pub fn discrete(&self) -> Option<&DiscreteMeasure> {
        self.discrete.as_ref()
    }

    pub fn shift(&self) -> &DVector<f64> {
        &self.shift
    }

    /// Characteristic function at y.
    pub fn cf(&self, y: &DVector<f64>) -> Complex64 {
        let mut log = Complex64::new(0.0, self.shift.dot(y));
        if let Some(g) = &self.gaussian {
            log += g.log_cf(y);
        }
        let base = log.exp();
        match &self.discrete {
            Some(d) => base * d.cf(y),
            None => base,
        }
    }

    /// Shift every atom, the Gaussian mean and the point mass by their negatives.
    pub fn reflect(&self) -> Self {
        Self {
            dim: self.dim,
            gaussian: self.gaussian.as_ref().map(|g| GaussianComponent { a: g.a.clone(), b: -&g.b }),
            discrete: self.discrete.as_ref().map(|d| DiscreteMeasure {
                dim: d.dim,
                atoms: merge_atoms(
                    d.atoms.iter().map(|a| Atom { point: -&a.point, weight: a.weight }).collect(),
                ),
                support: d.support.clone(),
            }),
            shift: -&self.shift,
        }
    }

    /// ν = μ ∗ μ̄, whose characteristic function is |μ̂|².
    pub fn symmetrize(&self) -> Result<Self, DistributionError> {
        convolve(self, &self.reflect())
    }

    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<DVector<f64>>, DistributionError> {
        let flat = self.sample_flat(count, seed, Execution::default())?;
        Ok(flat.chunks(self.dim.max(1)).map(DVector::from_column_slice).collect())
    }

    /// Draws as a row-major `count × dim` buffer. Block `b` of 4096 draws uses
    /// generator stream `b` of `seed`, so the result does not depend on `exec`.
    pub fn sample_flat(&self, count: usize, seed: u64, exec: Execution) -> Result<Vec<f64>, DistributionError> {
        if count == 0 {
            return Err(DistributionError::EmptySample);
        }
        let n = self.dim;
        let root = self.gaussian.as_ref().map(GaussianComponent::covariance_root).transpose()?;
        let cumulative = self.discrete.as_ref().map(DiscreteMeasure::cumulative);
        let ranges = par::block_ranges(count, SAMPLE_BLOCK);
        let blocks = par::map_blocks(exec, ranges.len(), |b| {
            let mut rng = par::stream_rng(seed, b as u64);
            let len = ranges[b].len();
            let mut out = vec![0.0; len * n];
            let mut z = DVector::zeros(n);
            for row in out.chunks_mut(n.max(1)).take(len) {
                let mut x = self.shift.clone();
                if let (Some(r), Some(g)) = (&root, &self.gaussian) {
                    for zi in z.iter_mut() {
                        *zi = rng.sample(StandardNormal);
                    }
                    x += r * &z + &g.b;
                }
                if let (Some(cum), Some(d)) = (&cumulative, &self.discrete) {
                    let u: f64 = rng.random::<f64>() * cum[cum.len() - 1];
                    let idx = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
                    x += &d.atoms[idx].point;
                }
                row.copy_from_slice(x.as_slice());
            }
            out
        });
        Ok(blocks.concat())
    }
}

/// Convolution within the representable class.
pub fn convolve(mu: &ModelDistribution, nu: &ModelDistribution) -> Result<ModelDistribution, DistributionError> {
    if mu.dim != nu.dim {
        return Err(DistributionError::DimensionMismatch { expected: mu.dim, actual: nu.dim });
    }
    let gaussian = match (&mu.gaussian, &nu.gaussian) {
        (Some(g), Some(h)) => Some(GaussianComponent { a: &g.a + &h.a, b: &g.b + &h.b }),
        (g, h) => g.clone().or_else(|| h.clone()),
    };
    let discrete = match (&mu.discrete, &nu.discrete) {
        (Some(d), Some(e)) => {
            let count = d.atoms.len().saturating_mul(e.atoms.len());
            if count > MAX_ATOMS {
                return Err(DistributionError::AtomBlowup(count));
            }
            let mut atoms = Vec::with_capacity(count);
            for a in &d.atoms {
                for b in &e.atoms {
                    atoms.push(Atom { point: &a.point + &b.point, weight: a.weight * b.weight });
                }
            }
            let support = match (&d.support, &e.support) {
                (Some(s), Some(t)) => {
                    let mut v = s.basis_vectors();
                    v.extend(t.basis_vectors());
                    Some(Subspace::from_spanning(mu.dim, &v, s.label()))
                }
                _ => None,
            };
            Some(DiscreteMeasure { dim: mu.dim, atoms: merge_atoms(atoms), support })
        }
        (d, e) => d.clone().or_else(|| e.clone()),
    };
    let out = ModelDistribution { dim: mu.dim, gaussian, discrete, shift: &mu.shift + &nu.shift };
    debug_assert!(cf_product_holds(&out, mu, nu), "convolution CF is not the product of the factor CFs");
    Ok(out)
}

fn cf_product_holds(out: &ModelDistribution, mu: &ModelDistribution, nu: &ModelDistribution) -> bool {
    let mut rng = par::stream_rng(0x5eed, 0);
    (0..10).all(|_| {
        let y = DVector::from_fn(out.dim, |_, _| rng.random_range(-2.0..2.0));
        (out.cf(&y) - mu.cf(&y) * nu.cf(&y)).norm() <= 1e-10
    })
}

/// (1/N) Σ exp{i⟨y, x_k⟩} over a row-major sample buffer.
pub fn empirical_cf(samples: &[f64], dim: usize, y: &DVector<f64>) -> Complex64 {
    let n = samples.len() / dim.max(1);
    let sum: Complex64 = samples
        .chunks(dim.max(1))
        .map(|x| {
            let t: f64 = x.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
            Complex64::from_polar(1.0, t)
        })
        .sum();
    sum / n as f64
}

/// Distribution JSON. Any of the three keys may be omitted.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaussian: Option<GaussianJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<AtomJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianJson {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomJson {
    pub point: Vec<f64>,
    pub weight: f64,
}

impl DistributionJson {
    /// Dimension implied by whichever keys are present.
    pub fn implied_dim(&self) -> Option<usize> {
        self.shift
            .as_ref()
            .map(Vec::len)
            .or_else(|| self.gaussian.as_ref().map(|g| g.a.len()))
            .or_else(|| self.atoms.as_ref().and_then(|a| a.first()).map(|a| a.point.len()))
    }

    pub fn to_model(&self, dim: Option<usize>) -> Result<ModelDistribution, DistributionError> {
        let dim = dim.or_else(|| self.implied_dim()).ok_or(DistributionError::UnknownDimension)?;
        let gaussian = match &self.gaussian {
            Some(g) => {
                if g.a.len() != dim || g.a.iter().any(|r| r.len() != dim) {
                    return Err(DistributionError::DimensionMismatch { expected: dim, actual: g.a.len() });
                }
                let a = DMatrix::from_fn(dim, dim, |i, j| g.a[i][j]);
                let b = g.b.clone().map(DVector::from_vec).unwrap_or_else(|| DVector::zeros(dim));
                Some(GaussianComponent::new(a, b)?)
            }
            None => None,
        };
        let discrete = match &self.atoms {
            Some(atoms) => Some(DiscreteMeasure::new(
                dim,
                atoms
                    .iter()
                    .map(|a| Atom { point: DVector::from_vec(a.point.clone()), weight: a.weight })
                    .collect(),
            )?),
            None => None,
        };
        let shift = self.shift.clone().map(DVector::from_vec).unwrap_or_else(|| DVector::zeros(dim));
        ModelDistribution::new(dim, gaussian, discrete, shift)
    }
}

impl From<&ModelDistribution> for DistributionJson {
    fn from(m: &ModelDistribution) -> Self {
        let rows = |a: &DMatrix<f64>| (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect();
        Self {
            gaussian: m.gaussian.as_ref().map(|g| GaussianJson { a: rows(&g.a), b: Some(g.b.iter().copied().collect()) }),
            atoms: m.discrete.as_ref().map(|d| {
                d.atoms
                    .iter()
                    .map(|a| AtomJson { point: a.point.iter().copied().collect(), weight: a.weight })
                    .collect()
            }),
            shift: Some(m.shift.iter().copied().collect()),
        }
    }
}

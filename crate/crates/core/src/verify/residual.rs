//! Functional-equation residuals on grids of (u, v) pairs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::VerifyError;
use crate::distribution::ModelDistribution;
use crate::operator::LinearOperator;
use crate::par::{self, Execution};

/// Pairs evaluated together in one parallel block.
const PAIR_BLOCK: usize = 1024;
/// Random subsample size used by the default grid for n ≥ 3.
pub const DEFAULT_SUBSAMPLE: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    /// μ̂₁(u+v)μ̂₂(u+α̃v) = μ̂₁(u−v)μ̂₂(u−α̃v)
    Heyde,
    /// μ̂₁(u+v)μ̂₂(u+α̃v) = μ̂₁(u)μ̂₂(u)μ̂₁(v)μ̂₂(α̃v)
    SkitovichDarmois,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum PairMode {
    /// Every (u, v) in the product grid.
    Full,
    /// `count` pairs, each coordinate drawn uniformly from its axis values.
    Random { seed: u64, count: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub coordinate_values: Vec<Vec<f64>>,
    pub pair_mode: PairMode,
}

/// `-max, -max+step, …, max`.
pub fn axis_values(step: f64, max: f64) -> Vec<f64> {
    let k = (max / step).round() as i64;
    (-k..=k).map(|i| i as f64 * step).collect()
}

impl GridSpec {
    /// Coordinates −2, −1.5, …, 2 on every axis: the full product for n ≤ 2,
    /// a seeded random subsample of 10⁴ pairs for n ≥ 3.
    pub fn default_for(dim: usize) -> Self {
        Self::uniform(dim, 0.5, 2.0, 0)
    }

    pub fn uniform(dim: usize, step: f64, max: f64, seed: u64) -> Self {
        let mode = if dim <= 2 {
            PairMode::Full
        } else {
            PairMode::Random { seed, count: DEFAULT_SUBSAMPLE }
        };
        Self { dim, coordinate_values: vec![axis_values(step, max); dim], pair_mode: mode }
    }

    pub fn validate(&self) -> Result<(), VerifyError> {
        if self.coordinate_values.len() != self.dim {
            return Err(VerifyError::DimensionMismatch { expected: self.dim, actual: self.coordinate_values.len() });
        }
        if self.coordinate_values.iter().any(Vec::is_empty) {
            return Err(VerifyError::InvalidArgument("every axis needs at least one coordinate value".into()));
        }
        if let PairMode::Random { count: 0, .. } = self.pair_mode {
            return Err(VerifyError::InvalidArgument("subsample count must be at least 1".into()));
        }
        Ok(())
    }

    fn points_per_side(&self) -> usize {
        self.coordinate_values.iter().map(Vec::len).product()
    }

    pub fn pair_count(&self) -> usize {
        match self.pair_mode {
            PairMode::Full => self.points_per_side().pow(2),
            PairMode::Random { count, .. } => count,
        }
    }

    fn decode(&self, mut index: usize) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for axis in (0..self.dim).rev() {
            let vals = &self.coordinate_values[axis];
            out[axis] = vals[index % vals.len()];
            index /= vals.len();
        }
        out
    }

    /// Every (u, v) pair in evaluation order.
    pub fn pairs(&self) -> Vec<(DVector<f64>, DVector<f64>)> {
        match self.pair_mode {
            PairMode::Full => {
                let m = self.points_per_side();
                let side: Vec<DVector<f64>> = (0..m).map(|i| self.decode(i)).collect();
                let mut out = Vec::with_capacity(m * m);
                for u in &side {
                    for v in &side {
                        out.push((u.clone(), v.clone()));
                    }
                }
                out
            }
            PairMode::Random { seed, count } => {
                let mut rng = par::stream_rng(seed, 0);
                let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
                    DVector::from_fn(self.dim, |i, _| {
                        let vals = &self.coordinate_values[i];
                        vals[rng.random_range(0..vals.len())]
                    })
                };
                (0..count)
                    .map(|_| {
                        let u = draw(&mut rng);
                        let v = draw(&mut rng);
                        (u, v)
                    })
                    .collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    pub equation: Equation,
    pub sup_residual: f64,
    pub argmax_u: DVector<f64>,
    pub argmax_v: DVector<f64>,
    pub points_evaluated: usize,
}

#[derive(Serialize, Deserialize)]
struct ArgmaxJson {
    u: Vec<f64>,
    v: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ResidualReportJson {
    equation: Equation,
    sup_residual: f64,
    argmax: ArgmaxJson,
    points: usize,
}

impl Serialize for ResidualReport {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ResidualReportJson {
            equation: self.equation,
            sup_residual: self.sup_residual,
            argmax: ArgmaxJson {
                u: self.argmax_u.iter().copied().collect(),
                v: self.argmax_v.iter().copied().collect(),
            },
            points: self.points_evaluated,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ResidualReport {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let j = ResidualReportJson::deserialize(deserializer)?;
        Ok(Self {
            equation: j.equation,
            sup_residual: j.sup_residual,
            argmax_u: DVector::from_vec(j.argmax.u),
            argmax_v: DVector::from_vec(j.argmax.v),
            points_evaluated: j.points,
        })
    }
}

pub(crate) fn check_dims(
    mu1: &ModelDistribution,
    mu2: &ModelDistribution,
    alpha: &LinearOperator,
) -> Result<(), VerifyError> {
    for d in [mu1.dim(), mu2.dim()] {
        if d != alpha.dim() {
            return Err(VerifyError::DimensionMismatch { expected: alpha.dim(), actual: d });
        }
    }
    Ok(())
}

/// Modulus of the equation's two sides differing at (u, v).
pub fn pointwise_residual(
    equation: Equation,
    mu1: &ModelDistribution,
    mu2: &ModelDistribution,
    adjoint: &DMatrix<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> f64 {
    let av = adjoint * v;
    let lhs: Complex64 = mu1.cf(&(u + v)) * mu2.cf(&(u + &av));
    let rhs = match equation {
        Equation::Heyde => mu1.cf(&(u - v)) * mu2.cf(&(u - &av)),
        Equation::SkitovichDarmois => mu1.cf(u) * mu2.cf(u) * mu1.cf(v) * mu2.cf(&av),
    };
    (lhs - rhs).norm()
}

pub fn residual_with(
    equation: Equation,
    mu1: &ModelDistribution,
    mu2: &ModelDistribution,
    alpha: &LinearOperator,
    grid: &GridSpec,
    exec: Execution,
) -> Result<ResidualReport, VerifyError> {
    check_dims(mu1, mu2, alpha)?;
    grid.validate()?;
    if grid.dim != alpha.dim() {
        return Err(VerifyError::DimensionMismatch { expected: alpha.dim(), actual: grid.dim });
    }
    let adjoint = alpha.matrix().transpose();
    let pairs = grid.pairs();
    let ranges = par::block_ranges(pairs.len(), PAIR_BLOCK);
    let block_max = par::map_blocks(exec, ranges.len(), |b| {
        let mut best = (f64::NEG_INFINITY, ranges[b].start);
        for i in ranges[b].clone() {
            let (u, v) = &pairs[i];
            let r = pointwise_residual(equation, mu1, mu2, &adjoint, u, v);
            let r = if r.is_nan() { f64::INFINITY } else { r };
            if r > best.0 {
                best = (r, i);
            }
        }
        best
    });
    let (sup, idx) = block_max
        .into_iter()
        .fold((f64::NEG_INFINITY, 0), |acc, b| if b.0 > acc.0 { b } else { acc });
    let (u, v) = pairs[idx].clone();
    Ok(ResidualReport {
        equation,
        sup_residual: sup.max(0.0),
        argmax_u: u,
        argmax_v: v,
        points_evaluated: pairs.len(),
    })
}

/// sup over the grid of |μ̂₁(u+v)μ̂₂(u+α̃v) − μ̂₁(u−v)μ̂₂(u−α̃v)|.
pub fn heyde_residual(
    mu1: &ModelDistribution,
    mu2: &ModelDistribution,
    alpha: &LinearOperator,
    grid: &GridSpec,
) -> Result<ResidualReport, VerifyError> {
    residual_with(Equation::Heyde, mu1, mu2, alpha, grid, Execution::default())
}

/// sup over the grid of |μ̂₁(u+v)μ̂₂(u+α̃v) − μ̂₁(u)μ̂₂(u)μ̂₁(v)μ̂₂(α̃v)|.
pub fn sd_residual(
    mu1: &ModelDistribution,
    mu2: &ModelDistribution,
    alpha: &LinearOperator,
    grid: &GridSpec,
) -> Result<ResidualReport, VerifyError> {
    residual_with(Equation::SkitovichDarmois, mu1, mu2, alpha, grid, Execution::default())
}

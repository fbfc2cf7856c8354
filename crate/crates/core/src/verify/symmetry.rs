//! Monte-Carlo test of (L₁, L₂) ≐ (L₁, −L₂) for L₁ = ξ₁+ξ₂, L₂ = ξ₁+αξ₂.
//!
//! The statistic at a test point (u, v) is the modulus of the difference of
//! the empirical joint characteristic functions of (L₁, L₂) and (L₁, −L₂):
//!
//! ```text
//! |(1/N) Σ e^{i⟨u,L₁⟩} (e^{i⟨v,L₂⟩} − e^{−i⟨v,L₂⟩})| = (2/N) |Σ e^{i⟨u,L₁⟩} sin⟨v,L₂⟩|
//! ```
//!
//! Under the null, flipping the sign of L₂ in any subset of the pairs leaves
//! the joint law unchanged, so the threshold is a quantile of the same
//! statistic recomputed with independent Rademacher signs on the summands.

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::residual::{check_dims, pointwise_residual, Equation};
use super::VerifyError;
use crate::distribution::ModelDistribution;
use crate::operator::LinearOperator;
use crate::par::{self, Execution};

pub const MIN_SAMPLES: usize = 10_000;
pub const RESAMPLES: usize = 200;
pub const QUANTILE: f64 = 0.99;
/// Test points chosen when the caller does not supply any.
pub const DEFAULT_TEST_POINTS: usize = 20;
/// Below this exact residual a pair is treated as satisfying the equation
/// everywhere on the search grid, and fixed axis points are used instead.
const GUIDE_FLOOR: f64 = 1e-12;
const GUIDE_SUBSAMPLE: usize = 50_000;
/// Search grid spacing and half-width used for default test points.
pub const GUIDE_STEP: f64 = 0.1;
pub const GUIDE_MAX: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestPoint {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl TestPoint {
    pub fn new(u: &DVector<f64>, v: &DVector<f64>) -> Self {
        Self { u: u.iter().copied().collect(), v: v.iter().copied().collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Consistent,
    Rejected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryTestReport {
    pub statistic: f64,
    pub threshold: f64,
    pub decision: Decision,
    pub sample_count: usize,
    pub seed: u64,
    pub resamples: usize,
    pub quantile: f64,
    pub test_points: Vec<TestPoint>,
}

pub fn mc_symmetry_test(
    mu1: &ModelDistribution,
    mu2: &ModelDistribution,
    alpha: &LinearOperator,
    sample_count: usize,
    test_points: &[TestPoint],
    seed: u64,
) -> Result<SymmetryTestReport, VerifyError> {
    mc_symmetry_test_with(mu1, mu2, alpha, sample_count, test_points, seed, Execution::default())
}

pub fn mc_symmetry_test_with(
    mu1: &ModelDistribution,
    mu2: &ModelDistribution,
    alpha: &LinearOperator,
    sample_count: usize,
    test_points: &[TestPoint],
    seed: u64,
    exec: Execution,
) -> Result<SymmetryTestReport, VerifyError> {
    check_dims(mu1, mu2, alpha)?;
    let n = alpha.dim();
    if sample_count < MIN_SAMPLES {
        return Err(VerifyError::InvalidArgument(format!(
            "sample_count must be at least {MIN_SAMPLES}, got {sample_count}"
        )));
    }
    if test_points.is_empty() {
        return Err(VerifyError::InvalidArgument("at least one test point is required".into()));
    }
    for p in test_points {
        for len in [p.u.len(), p.v.len()] {
            if len != n {
                return Err(VerifyError::DimensionMismatch { expected: n, actual: len });
            }
        }
        if p.u.iter().chain(&p.v).any(|x| !x.is_finite()) {
            return Err(VerifyError::InvalidArgument("test point coordinates must be finite".into()));
        }
    }

    let xi1 = mu1.sample_flat(sample_count, par::mix_seed(seed, 1), exec)?;
    let xi2 = mu2.sample_flat(sample_count, par::mix_seed(seed, 2), exec)?;
    let summands = Summands::build(&xi1, &xi2, alpha.matrix(), test_points, exec);

    let statistic = summands.statistic();

    let boot_seed = par::mix_seed(seed, 3);
    let groups = par::block_ranges(RESAMPLES, RESAMPLE_GROUP);
    let mut boot: Vec<f64> = par::map_blocks(exec, groups.len(), |g| {
        let signs: Vec<Vec<u64>> = groups[g].clone().map(|b| sign_words(sample_count, boot_seed, b as u64)).collect();
        summands.resampled(&signs)
    })
    .into_iter()
    .flatten()
    .collect();
    boot.sort_by(f64::total_cmp);
    let threshold = boot[quantile_index(RESAMPLES, QUANTILE)];

    let decision = if statistic > threshold { Decision::Rejected } else { Decision::Consistent };
    Ok(SymmetryTestReport {
        statistic,
        threshold,
        decision,
        sample_count,
        seed,
        resamples: RESAMPLES,
        quantile: QUANTILE,
        test_points: test_points.to_vec(),
    })
}

/// Index of the q-quantile in a sorted list of `len` values: ⌈q·len⌉ − 1.
fn quantile_index(len: usize, q: f64) -> usize {
    ((q * len as f64).ceil() as usize).clamp(1, len) - 1
}

/// Rademacher signs packed 64 to a word: bit i of word j is sample
/// 64j + i, set for +1.
fn sign_words(count: usize, seed: u64, stream: u64) -> Vec<u64> {
    let mut rng = par::stream_rng(seed, stream);
    (0..count.div_ceil(64)).map(|_| rng.next_u64()).collect()
}

/// z_{p,k} = e^{i⟨u_p,L₁_k⟩} sin⟨v_p,L₂_k⟩, stored point-major.
struct Summands {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
    count: usize,
}

impl Summands {
    fn build(xi1: &[f64], xi2: &[f64], alpha: &DMatrix<f64>, points: &[TestPoint], exec: Execution) -> Self {
        let n = alpha.nrows();
        let count = xi1.len() / n;
        let rows = par::map_blocks(exec, points.len(), |p| {
            let u = &points[p].u;
            let v = &points[p].v;
            // ⟨v, ξ₁+αξ₂⟩ = ⟨v,ξ₁⟩ + ⟨α̃v, ξ₂⟩
            let av: Vec<f64> = (0..n).map(|j| (0..n).map(|i| alpha[(i, j)] * v[i]).sum()).collect();
            let mut re = Vec::with_capacity(count);
            let mut im = Vec::with_capacity(count);
            for (a, b) in xi1.chunks_exact(n).zip(xi2.chunks_exact(n)) {
                let mut t1 = 0.0;
                let mut t2 = 0.0;
                for i in 0..n {
                    t1 += u[i] * (a[i] + b[i]);
                    t2 += v[i] * a[i] + av[i] * b[i];
                }
                let s = t2.sin();
                let (sin1, cos1) = t1.sin_cos();
                re.push(cos1 * s);
                im.push(sin1 * s);
            }
            (re, im)
        });
        let (re, im) = rows.into_iter().unzip();
        Self { re, im, count }
    }

    /// max_p (2/N)|Σ_k z_{p,k}|.
    fn statistic(&self) -> f64 {
        let best = self.re.iter().zip(&self.im).map(|(re, im)| lane_sum(re).hypot(lane_sum(im))).fold(0.0, f64::max);
        2.0 * best / self.count as f64
    }

    /// max_p (2/N)|Σ_k s_k z_{p,k}| for each sign vector. Samples are walked
    /// in cache-sized blocks shared by every sign vector of the group.
    fn resampled(&self, signs: &[Vec<u64>]) -> Vec<f64> {
        let points = self.re.len();
        let mut acc = vec![[0.0f64; 2]; signs.len() * points];
        let mut buf = vec![0.0; SAMPLE_BLOCK];
        for start in (0..self.count).step_by(SAMPLE_BLOCK) {
            let end = (start + SAMPLE_BLOCK).min(self.count);
            let words = start / 64..end.div_ceil(64);
            let len = end - start;
            for (b, s) in signs.iter().enumerate() {
                expand_signs(&s[words.clone()], &mut buf[..len]);
                for p in 0..points {
                    let a = &mut acc[b * points + p];
                    a[0] += dot(&self.re[p][start..end], &buf[..len]);
                    a[1] += dot(&self.im[p][start..end], &buf[..len]);
                }
            }
        }
        acc.chunks(points)
            .map(|row| 2.0 * row.iter().map(|a| a[0].hypot(a[1])).fold(0.0, f64::max) / self.count as f64)
            .collect()
    }
}

const LANES: usize = 8;
/// Resamples sharing one pass over the summands.
const RESAMPLE_GROUP: usize = 8;
/// Samples per cache block; a multiple of 64 so blocks start on a sign word.
const SAMPLE_BLOCK: usize = 2048;

fn lane_sum(x: &[f64]) -> f64 {
    let mut acc = [0.0; LANES];
    let chunks = x.chunks_exact(LANES);
    let tail: f64 = chunks.remainder().iter().sum();
    for c in chunks {
        for l in 0..LANES {
            acc[l] += c[l];
        }
    }
    acc.iter().sum::<f64>() + tail
}

fn expand_signs(words: &[u64], out: &mut [f64]) {
    for (chunk, &w) in out.chunks_mut(64).zip(words) {
        for (i, x) in chunk.iter_mut().enumerate() {
            *x = if w >> i & 1 == 1 { 1.0 } else { -1.0 };
        }
    }
}

/// Σ_k x_k s_k with a fixed lane split, so the compiler can vectorize it
/// while the summation order stays the same on every run.
fn dot(x: &[f64], s: &[f64]) -> f64 {
    let mut acc = [0.0; LANES];
    let xs = x.chunks_exact(LANES);
    let ss = s.chunks_exact(LANES);
    let tail: f64 = xs.remainder().iter().zip(ss.remainder()).map(|(a, b)| a * b).sum();
    for (a, b) in xs.zip(ss) {
        for l in 0..LANES {
            acc[l] += a[l] * b[l];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// Test points where the exact Heyde discrepancy of (μ₁, μ₂) is largest.
///
/// Searches the grid with spacing `step` on [−max, max]ⁿ (the full product for
/// n ≤ 2, a seeded subsample otherwise) and keeps the `count` best pairs, one
/// from each conjugate pair ±(u, v). When the pair satisfies the equation on
/// the whole grid there is nothing to aim at, and [`axis_test_points`] is
/// returned instead.
pub fn guided_test_points(
    mu1: &ModelDistribution,
    mu2: &ModelDistribution,
    alpha: &LinearOperator,
    count: usize,
    step: f64,
    max: f64,
) -> Result<Vec<TestPoint>, VerifyError> {
    check_dims(mu1, mu2, alpha)?;
    if count == 0 || !(step > 0.0) || !(max > 0.0) {
        return Err(VerifyError::InvalidArgument("count, step and max must be positive".into()));
    }
    let n = alpha.dim();
    let mut grid = super::GridSpec::uniform(n, step, max, 0);
    if let super::PairMode::Random { count: c, .. } = &mut grid.pair_mode {
        *c = GUIDE_SUBSAMPLE;
    }
    let adjoint = alpha.matrix().transpose();
    let pairs = grid.pairs();
    let mut scored: Vec<(f64, usize)> = pairs
        .iter()
        .enumerate()
        .map(|(i, (u, v))| (pointwise_residual(Equation::Heyde, mu1, mu2, &adjoint, u, v), i))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    if scored.first().is_none_or(|s| !(s.0 > GUIDE_FLOOR)) {
        return Ok(axis_test_points(n, count));
    }
    let mut chosen: Vec<TestPoint> = Vec::with_capacity(count);
    for &(_, i) in &scored {
        if chosen.len() == count {
            break;
        }
        let (u, v) = &pairs[i];
        let neg = TestPoint::new(&-u, &-v);
        if chosen.contains(&neg) {
            continue;
        }
        chosen.push(TestPoint::new(u, v));
    }
    Ok(chosen)
}

/// Deterministic points along coordinate axes: u ∈ {0, ±½eᵢ}, v ∈ {½eⱼ, eⱼ}.
pub fn axis_test_points(dim: usize, count: usize) -> Vec<TestPoint> {
    let e = |i: usize, s: f64| DVector::from_fn(dim, |k, _| if k == i { s } else { 0.0 });
    let mut us = vec![DVector::zeros(dim)];
    for i in 0..dim {
        us.push(e(i, 0.5));
        us.push(e(i, -0.5));
    }
    let mut out = Vec::new();
    for scale in [0.5, 1.0] {
        for j in 0..dim {
            for u in &us {
                if out.len() < count {
                    out.push(TestPoint::new(u, &e(j, scale)));
                }
            }
        }
    }
    out
}

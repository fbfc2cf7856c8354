//! Brute-force reference classification for 2×2 integer operators.
//!
//! Works from the matrix equation A₁ + A₂α̃ = 0 alone: the symmetric
//! solutions are an exact rational null space in the six coordinates
//! (p, q, r, s, t, w) of A₁ = [[p, q], [q, r]], A₂ = [[s, t], [t, w]], and the
//! PSD part of that space is probed by maximizing the concave function
//! min(λ_min(A₁), λ_min(A₂)) over the slice tr A₁ + tr A₂ = 1.
//!
//! * maximum > 0: a full-rank PSD pair exists,
//! * maximum = 0: only rank-one PSD pairs exist, all on one line,
//! * maximum < 0: the only PSD pair is zero.
//!
//! Combined with the exact kernel of I + α this decides the case tag without
//! consulting eigenvalues.

use heyde::classify::CaseTag;
use nalgebra::{DMatrix, DVector};
use num_rational::Rational64;
use num_traits::{One, ToPrimitive, Zero};

/// Decision margin for the sign of the maximum.
pub const ORACLE_TOL: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct OracleVerdict {
    pub tag: CaseTag,
    pub kernel_dim: usize,
    /// Exact kernel of I + α, when one-dimensional.
    pub kernel_vector: Option<[i64; 2]>,
    pub f_max: f64,
    /// Direction of the rank-one A₂ at the maximizer.
    pub support_line: DVector<f64>,
}

fn r(x: i64) -> Rational64 {
    Rational64::from_integer(x)
}

/// Null space of an integer matrix over the rationals.
fn rational_null_space(rows: &[Vec<Rational64>], cols: usize) -> Vec<Vec<Rational64>> {
    let mut m: Vec<Vec<Rational64>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..m.len()).find(|&i| !m[i][col].is_zero()) else { continue };
        m.swap(row, p);
        let inv = m[row][col].recip();
        for x in m[row].iter_mut() {
            *x *= inv;
        }
        for i in 0..m.len() {
            if i != row && !m[i][col].is_zero() {
                let f = m[i][col];
                for j in 0..cols {
                    let v = m[row][j] * f;
                    m[i][j] -= v;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == m.len() {
            break;
        }
    }
    (0..cols)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![Rational64::zero(); cols];
            v[free] = Rational64::one();
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = -m[i][free];
            }
            v
        })
        .collect()
}

/// Rows of the linear system A₁ + A₂α̃ = 0 in (p, q, r, s, t, w).
fn system(alpha: [[i64; 2]; 2]) -> Vec<Vec<Rational64>> {
    let sym = |i: usize, j: usize| -> usize {
        match (i.min(j), i.max(j)) {
            (0, 0) => 0,
            (0, 1) => 1,
            _ => 2,
        }
    };
    let mut rows = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            let mut row = vec![Rational64::zero(); 6];
            row[sym(i, j)] += Rational64::one();
            // (A₂α̃)_ij = Σ_l (A₂)_il α_jl
            for l in 0..2 {
                row[3 + sym(i, l)] += r(alpha[j][l]);
            }
            rows.push(row);
        }
    }
    rows
}

fn lambda_min(a: f64, b: f64, c: f64) -> f64 {
    (a + c) / 2.0 - (((a - c) / 2.0).powi(2) + b * b).sqrt()
}

fn objective(x: &DVector<f64>) -> f64 {
    lambda_min(x[0], x[1], x[2]).min(lambda_min(x[3], x[4], x[5]))
}

/// Maximize a concave function of one variable on [lo, hi].
fn golden<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..90 {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        }
    }
    let t = (lo + hi) / 2.0;
    (t, f(t))
}

fn to_f64(v: &[Rational64]) -> DVector<f64> {
    DVector::from_iterator(v.len(), v.iter().map(|x| x.to_f64().unwrap()))
}

/// Orthonormal basis of the trace-free part of the null space, and the
/// minimum-norm point of the trace-one slice. `None` when the trace vanishes
/// on every solution.
fn slice(null: &[DVector<f64>]) -> Option<(DVector<f64>, Vec<DVector<f64>>)> {
    let trace = DVector::from_vec(vec![1.0, 0.0, 1.0, 1.0, 0.0, 1.0]);
    let basis = DMatrix::from_columns(null);
    let qr = basis.clone().qr();
    let q = qr.q();
    let q = q.columns(0, null.len()).into_owned();
    // Trace functional restricted to span(q).
    let t = q.transpose() * &trace;
    let tn = t.norm();
    if tn <= 1e-12 {
        return None;
    }
    let x0 = &q * (&t / (tn * tn));
    // Complement of t inside span(q).
    let unit_t = &t / tn;
    let k = null.len();
    let mut dirs: Vec<DVector<f64>> = Vec::new();
    for i in 0..k {
        let mut e = DVector::zeros(k);
        e[i] = 1.0;
        let mut w = &e - &unit_t * unit_t.dot(&e);
        for d in &dirs {
            let coeff = d.dot(&w);
            w -= d * coeff;
        }
        if w.norm() > 1e-9 {
            let nw = w.norm();
            dirs.push(w / nw);
        }
    }
    let dirs = dirs.iter().map(|d| &q * d).collect();
    Some((x0, dirs))
}

/// Maximum of the objective over x0 + span(dirs), dirs at most two.
fn maximize(x0: &DVector<f64>, dirs: &[DVector<f64>]) -> (f64, DVector<f64>) {
    let bound = 10.0 + x0.norm();
    match dirs.len() {
        0 => (objective(x0), x0.clone()),
        1 => {
            let (t, v) = golden(|t| objective(&(x0 + &dirs[0] * t)), -bound, bound);
            (v, x0 + &dirs[0] * t)
        }
        2 => {
            let inner = |s: f64| golden(|t| objective(&(x0 + &dirs[0] * s + &dirs[1] * t)), -bound, bound);
            let (s, v) = golden(|s| inner(s).1, -bound, bound);
            let (t, _) = inner(s);
            (v, x0 + &dirs[0] * s + &dirs[1] * t)
        }
        n => panic!("trace slice of dimension {n} cannot occur for 2x2 operators"),
    }
}

fn kernel_of_shifted(alpha: [[i64; 2]; 2]) -> (usize, Option<[i64; 2]>) {
    let m = [[alpha[0][0] + 1, alpha[0][1]], [alpha[1][0], alpha[1][1] + 1]];
    if m.iter().flatten().all(|&x| x == 0) {
        return (2, None);
    }
    if m[0][0] * m[1][1] - m[0][1] * m[1][0] != 0 {
        return (0, None);
    }
    let v = if m[0][0] != 0 || m[0][1] != 0 { [-m[0][1], m[0][0]] } else { [-m[1][1], m[1][0]] };
    (1, Some(v))
}

pub fn oracle(alpha: [[i64; 2]; 2]) -> OracleVerdict {
    let null: Vec<DVector<f64>> = rational_null_space(&system(alpha), 6).iter().map(|v| to_f64(v)).collect();
    let (f_max, arg) = match slice(&null) {
        Some((x0, dirs)) => maximize(&x0, &dirs),
        None => (f64::NEG_INFINITY, DVector::zeros(6)),
    };
    let (kernel_dim, kernel_vector) = kernel_of_shifted(alpha);
    let tag = match kernel_dim {
        2 => CaseTag::ArbitraryEqual,
        1 if f_max > ORACLE_TOL => CaseTag::GaussTimesSubspace,
        1 => CaseTag::ShiftedSubspace,
        _ if f_max > ORACLE_TOL => CaseTag::GaussianChoice,
        _ if f_max >= -ORACLE_TOL => CaseTag::GaussianLine,
        _ => CaseTag::DegenerateOnly,
    };
    // Leading eigenvector of A₂ at the maximizer.
    let a2 = DMatrix::from_row_slice(2, 2, &[arg[3], arg[4], arg[4], arg[5]]);
    let eig = a2.symmetric_eigen();
    let top = if eig.eigenvalues[0].abs() >= eig.eigenvalues[1].abs() { 0 } else { 1 };
    let support_line = eig.eigenvectors.column(top).into_owned();
    OracleVerdict { tag, kernel_dim, kernel_vector, f_max, support_line }
}

/// Whether (A₁, A₂) = (−vvᵀα̃, vvᵀ) is a nonzero symmetric PSD solution.
pub fn line_attainable(alpha: [[i64; 2]; 2], v: &DVector<f64>) -> bool {
    let a = DMatrix::from_fn(2, 2, |i, j| alpha[i][j] as f64);
    let a2 = v * v.transpose();
    let a1 = -(&a2 * a.transpose());
    let asym = (&a1 - a1.transpose()).amax();
    let a1 = (&a1 + a1.transpose()) * 0.5;
    asym <= 1e-9 && a1.clone().symmetric_eigen().eigenvalues.min() >= -1e-9 && a1.trace() > 1e-9
}

/// Whether the exact kernel vector lies in the span of `basis` (one column).
pub fn kernel_matches(kernel: [i64; 2], basis: &DMatrix<f64>) -> bool {
    if basis.ncols() != 1 {
        return false;
    }
    let k = DVector::from_vec(vec![kernel[0] as f64, kernel[1] as f64]);
    let b = basis.column(0);
    (k[0] * b[1] - k[1] * b[0]).abs() <= 1e-10 * k.norm()
}

pub fn random_invertible(rng: &mut impl rand::Rng) -> [[i64; 2]; 2] {
    loop {
        let m = [[rng.random_range(-3..=3), rng.random_range(-3..=3)], [rng.random_range(-3..=3), rng.random_range(-3..=3)]];
        if m[0][0] * m[1][1] - m[0][1] * m[1][0] != 0 {
            return m;
        }
    }
}

pub fn all_invertible() -> Vec<[[i64; 2]; 2]> {
    let mut out = Vec::new();
    for a in -3..=3 {
        for b in -3..=3 {
            for c in -3..=3 {
                for d in -3..=3 {
                    if a * d - b * c != 0 {
                        out.push([[a, b], [c, d]]);
                    }
                }
            }
        }
    }
    out
}

//! Exact rational arithmetic for integer-entry operators.
//!
//! Nilpotency and rank questions on (I+α)^k are decided here without any
//! threshold when the input matrix has small integer entries.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Entries above this magnitude are not routed through the exact path.
pub const EXACT_ENTRY_LIMIT: f64 = 1e6;

#[derive(Clone, Debug, PartialEq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

impl RationalMatrix {
    /// `None` unless every entry is an integer with |entry| ≤ 10⁶.
    pub fn from_integer_matrix(m: &DMatrix<f64>) -> Option<Self> {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let x = m[(i, j)];
                if !x.is_finite() || x.fract() != 0.0 || x.abs() > EXACT_ENTRY_LIMIT {
                    return None;
                }
                data.push(BigRational::from_integer(BigInt::from(x as i64)));
            }
        }
        Some(Self { rows: m.nrows(), cols: m.ncols(), data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![BigRational::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = BigRational::one();
        }
        Self { rows: n, cols: n, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.cols + j]
    }

    fn get_mut(&mut self, i: usize, j: usize) -> &mut BigRational {
        &mut self.data[i * self.cols + j]
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self {
            rows: self.rows,
            cols: other.cols,
            data: vec![BigRational::zero(); self.rows * other.cols],
        };
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a * other.get(k, j);
                    *out.get_mut(i, j) += prod;
                }
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        assert_eq!(self.rows, self.cols);
        let mut acc = Self::identity(self.rows);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    /// Reduced row echelon form and pivot columns.
    fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(p) = (row..m.rows).find(|&r| !m.get(r, col).is_zero()) else {
                continue;
            };
            if p != row {
                for j in 0..m.cols {
                    m.data.swap(p * m.cols + j, row * m.cols + j);
                }
            }
            let inv = m.get(row, col).recip();
            for j in 0..m.cols {
                let v = m.get(row, j) * &inv;
                *m.get_mut(row, j) = v;
            }
            for r in 0..m.rows {
                if r == row || m.get(r, col).is_zero() {
                    continue;
                }
                let factor = m.get(r, col).clone();
                for j in 0..m.cols {
                    let v = m.get(r, j) - &factor * m.get(row, j);
                    *m.get_mut(r, j) = v;
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the null space, one vector per free column.
    pub fn kernel_basis(&self) -> Vec<Vec<BigRational>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![BigRational::zero(); self.cols];
                v[f] = BigRational::one();
                for (i, &p) in pivots.iter().enumerate() {
                    v[p] = -r.get(i, f).clone();
                }
                v
            })
            .collect()
    }

    /// Pivot columns of the original matrix, a basis of its column space.
    pub fn column_space_basis(&self) -> Vec<Vec<BigRational>> {
        let (_, pivots) = self.rref();
        pivots
            .iter()
            .map(|&c| (0..self.rows).map(|i| self.get(i, c).clone()).collect())
            .collect()
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| rational_to_f64(self.get(i, j)))
    }

    /// Largest absolute entry, as a float.
    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .map(|x| rational_to_f64(&x.abs()))
            .fold(0.0, f64::max)
    }
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn rational_vector(v: &[BigRational]) -> DVector<f64> {
    DVector::from_iterator(v.len(), v.iter().map(rational_to_f64))
}

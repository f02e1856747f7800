//! Dense symmetric matrices and the decompositions and update rules the
//! subset searches are built on.

mod dense;
mod eigen;
mod index_set;
mod ops;
mod update;

pub use dense::Matrix;
pub use eigen::EigenDecomp;
pub use index_set::IndexSet;
pub use ops::{
    cc_sum, log_det, low_rank_root, pseudo_inverse, pseudo_inverse_with_rank, psd_project, residual_covariance,
};
pub use update::{pinv_add, pinv_remove, residual_add, residual_remove};
pub(crate) use update::{pinv_add_tracked, pinv_remove_tracked, residual_add_in_place, residual_remove_in_place};
pub(crate) use ops::{log_det_floor, residual_with_pinv};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Numerical thresholds shared by the decompositions and the update rules.
///
/// `rank_tol` is relative to the largest eigenvalue of the matrix being
/// decomposed. `zero_tol` is relative to `trace(sigma) / p` of the covariance
/// a search runs on, and decides the `beta_i > 0` indicator of rank-one updates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances<T> {
    pub rank_tol: T,
    pub zero_tol: T,
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        Tolerances {
            rank_tol: T::default_rank_tol(),
            zero_tol: T::default_rank_tol(),
        }
    }
}

impl<T: Scalar> Tolerances<T> {
    /// Absolute threshold for diagonal residual entries of `sigma`.
    pub fn absolute_zero(&self, sigma: &SymMatrix<T>) -> T {
        let scale = sigma.trace() / T::from_usize_lossy(sigma.dim());
        if scale > T::zero() {
            self.zero_tol * scale
        } else {
            T::min_positive_value()
        }
    }
}

/// Dense symmetric `p x p` matrix.
///
/// Both triangles are stored and every mutation writes mirrored pairs, so
/// `get(i, j) == get(j, i)` holds bit-for-bit.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> SymMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = T::one();
        }
        m
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = v;
        }
        m
    }

    /// Builds the matrix from its lower triangle: `f(i, j)` is called for `j <= i`.
    pub fn from_lower_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    /// Builds from a full row-major grid. Entries must agree with their mirror
    /// within `sym_tol * max(1, |a_ij|, |a_ji|)`; the result is the exact
    /// average of the two triangles.
    pub fn from_row_major(dim: usize, data: Vec<T>, sym_tol: T) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimMismatch {
                context: "symmat",
                expected: dim * dim,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let two = T::lit(2.0);
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                let a = data[i * dim + j];
                let b = data[j * dim + i];
                let scale = T::one().max(a.abs()).max(b.abs());
                if (a - b).abs() > sym_tol * scale {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
                let v = if a == b { a } else { (a + b) / two };
                out.data[i * dim + j] = v;
                out.data[j * dim + i] = v;
            }
        }
        Ok(out)
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimMismatch {
                    context: "symmat",
                    expected: dim,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_row_major(dim, data, T::zero())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    /// Row `i`, which by symmetry is also column `i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_sq(&self) -> T {
        self.data.iter().map(|&v| v * v).sum()
    }

    pub fn frobenius(&self) -> T {
        self.frobenius_sq().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Principal submatrix on `idx`, in the order given.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let k = idx.len();
        let mut out = Self::zeros(k);
        for (a, &i) in idx.iter().enumerate() {
            let row = self.row(i);
            for (b, &j) in idx.iter().enumerate() {
                out.data[a * k + b] = row[j];
            }
        }
        out
    }

    /// Rectangular block with rows `rows` and columns `cols`.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> Matrix<T> {
        Matrix::from_fn(rows.len(), cols.len(), |a, b| self.get(rows[a], cols[b]))
    }

    pub fn scaled(&self, c: T) -> Self {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&v| v * c).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in SymMatrix::sub");
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in SymMatrix::add");
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    /// Matrix product as a general matrix.
    pub fn matmul(&self, other: &Self) -> Matrix<T> {
        let n = self.dim;
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            let ri = self.row(i);
            for (k, &a) in ri.iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                let rk = other.row(k);
                let orow = out.row_mut(i);
                for j in 0..n {
                    orow[j] += a * rk[j];
                }
            }
        }
        out
    }

    /// `sum_ij self_ij * other_ij`, i.e. `Tr(self * other)` for symmetric inputs.
    pub fn trace_product(&self, other: &Self) -> T {
        self.data.iter().zip(&other.data).map(|(&a, &b)| a * b).sum()
    }

    /// Quadratic form `x' A x`.
    pub fn quad_form(&self, x: &[T]) -> T {
        (0..self.dim)
            .map(|i| x[i] * self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum::<T>())
            .sum()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn eigen(&self) -> Result<EigenDecomp<T>> {
        EigenDecomp::new(self)
    }

    /// Relative Frobenius distance `||self - other|| / max(||other||, 1)`.
    pub fn rel_diff(&self, other: &Self) -> T {
        self.sub(other).frobenius() / other.frobenius().max(T::one())
    }

    /// Converts every entry to another scalar type.
    pub fn cast<U: Scalar>(&self) -> SymMatrix<U> {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
        }
    }

    pub(crate) fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// `self -= factor * v v'` computed on one triangle and mirrored.
    pub(crate) fn rank_one_sub(&mut self, v: &[T], factor: T) {
        let n = self.dim;
        for i in 0..n {
            let fi = factor * v[i];
            if fi == T::zero() {
                continue;
            }
            for j in 0..=i {
                self.data[i * n + j] -= fi * v[j];
            }
        }
        self.mirror_lower();
    }

    pub(crate) fn mirror_lower(&mut self) {
        let n = self.dim;
        for i in 0..n {
            for j in 0..i {
                self.data[j * n + i] = self.data[i * n + j];
            }
        }
    }

    pub(crate) fn clamp_diag_nonneg(&mut self) {
        let n = self.dim;
        for i in 0..n {
            if self.data[i * n + i] < T::zero() {
                self.data[i * n + i] = T::zero();
            }
        }
    }

    /// Moves the last row/column to position `pos`, shifting the rest down.
    pub(crate) fn move_last_to(&mut self, pos: usize) {
        let n = self.dim;
        if n == 0 || pos >= n - 1 {
            return;
        }
        let mut order: Vec<usize> = (0..n - 1).collect();
        order.insert(pos, n - 1);
        *self = self.submatrix(&order);
    }

    /// Drops row/column `pos`.
    pub(crate) fn without(&self, pos: usize) -> Self {
        let keep: Vec<usize> = (0..self.dim).filter(|&i| i != pos).collect();
        self.submatrix(&keep)
    }
}

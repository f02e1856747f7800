use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{Matrix, SymMatrix};

const MAX_SWEEPS_PER_VALUE: usize = 60;

/// Symmetric eigendecomposition `A = V diag(values) V'`.
///
/// Values are sorted in descending order and column `j` of `vectors` is the
/// unit eigenvector for `values[j]`.
#[derive(Clone, Debug)]
pub struct EigenDecomp<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Scalar> EigenDecomp<T> {
    /// Householder tridiagonalisation followed by implicit QL iterations.
    pub fn new(a: &SymMatrix<T>) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::NonFinite);
        }
        let n = a.dim();
        if n == 0 {
            return Ok(EigenDecomp {
                values: Vec::new(),
                vectors: Matrix::zeros(0, 0),
            });
        }
        let mut v = a.as_slice().to_vec();
        let mut d = vec![T::zero(); n];
        let mut e = vec![T::zero(); n];
        tred2(n, &mut v, &mut d, &mut e);
        tql2(n, &mut v, &mut d, &mut e)?;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| d[y].partial_cmp(&d[x]).unwrap_or(std::cmp::Ordering::Equal));
        let values = order.iter().map(|&j| d[j]).collect();
        let vectors = Matrix::from_fn(n, n, |i, j| v[i * n + order[j]]);
        Ok(EigenDecomp { values, vectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max_value(&self) -> T {
        self.values.first().copied().unwrap_or_else(T::zero)
    }

    pub fn min_value(&self) -> T {
        self.values.last().copied().unwrap_or_else(T::zero)
    }

    /// `sum_j g(values[j]) v_j v_j'` over the eigenpairs where `g` returns `Some`.
    pub fn spectral_map(&self, mut g: impl FnMut(T) -> Option<T>) -> SymMatrix<T> {
        let n = self.dim();
        let weights: Vec<Option<T>> = self.values.iter().map(|&l| g(l)).collect();
        SymMatrix::from_lower_fn(n, |i, k| {
            let vi = self.vectors.row(i);
            let vk = self.vectors.row(k);
            let mut s = T::zero();
            for (j, w) in weights.iter().enumerate() {
                if let Some(w) = *w {
                    s += w * vi[j] * vk[j];
                }
            }
            s
        })
    }

    /// `V diag(values) V'`.
    pub fn reconstruct(&self) -> SymMatrix<T> {
        self.spectral_map(Some)
    }
}

// Householder reduction to tridiagonal form. `v` holds the matrix row-major on
// entry and the accumulated orthogonal transform on exit.
fn tred2<T: Scalar>(n: usize, v: &mut [T], d: &mut [T], e: &mut [T]) {
    let zero = T::zero();
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
    }
    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = zero;
                v[j * n + i] = zero;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = zero;
            }
            for j in 0..i {
                f = d[j];
                v[j * n + i] = f;
                g = e[j] + v[j * n + j] * f;
                for k in j + 1..i {
                    g += v[k * n + j] * d[k];
                    e[k] += v[k * n + j] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k * n + j] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = zero;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[(n - 1) * n + i] = v[i * n + i];
        v[i * n + i] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[k * n + i + 1] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g += v[k * n + i + 1] * v[k * n + j];
                }
                for k in 0..=i {
                    v[k * n + j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k * n + i + 1] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
        v[(n - 1) * n + j] = zero;
    }
    v[(n - 1) * n + n - 1] = T::one();
    e[0] = zero;
}

// Implicit QL on the tridiagonal matrix, accumulating rotations into `v`.
fn tql2<T: Scalar>(n: usize, v: &mut [T], d: &mut [T], e: &mut [T]) -> Result<()> {
    let zero = T::zero();
    let one = T::one();
    let two = T::lit(2.0);
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;

    let mut f = zero;
    let mut tst1 = zero;
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_SWEEPS_PER_VALUE {
                    return Err(Error::NoConvergence);
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let row = k * n;
                        h = v[row + i + 1];
                        v[row + i + 1] = s * v[row + i] + c * h;
                        v[row + i] = c * v[row + i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = zero;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(a: &SymMatrix<f64>) {
        let eig = a.eigen().unwrap();
        assert!(a.rel_diff(&eig.reconstruct()) < 1e-12);
        for w in eig.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
        let vtv = eig.vectors.transpose().matmul(&eig.vectors);
        for i in 0..a.dim() {
            for j in 0..a.dim() {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((vtv.get(i, j) - target).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_by_two_closed_form() {
        let a = SymMatrix::<f64>::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let eig = a.eigen().unwrap();
        assert!((eig.values[0] - 3.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
        check(&a);
    }

    #[test]
    fn degenerate_and_diagonal_inputs() {
        check(&SymMatrix::identity(5));
        check(&SymMatrix::from_diag(&[0.0, -3.0, 7.0, 0.0]));
        check(&SymMatrix::from_lower_fn(6, |_, _| 1.0));
        check(&SymMatrix::zeros(3));
        check(&SymMatrix::from_diag(&[4.0]));
    }

    #[test]
    fn dense_input_reconstructs() {
        let a = SymMatrix::from_lower_fn(9, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0 + if i == j { 2.0 } else { 0.0 });
        check(&a);
    }

    #[test]
    fn single_precision_path() {
        let a = SymMatrix::<f32>::from_rows(&[vec![4.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]]).unwrap();
        let eig = a.eigen().unwrap();
        assert!(a.rel_diff(&eig.reconstruct()) < 1e-5);
    }

    #[test]
    fn rejects_non_finite() {
        let a = SymMatrix::from_diag(&[1.0, f64::INFINITY]);
        assert!(matches!(a.eigen(), Err(Error::NonFinite)));
    }
}

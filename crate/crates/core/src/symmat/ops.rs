use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::scalar::Scalar;

use super::{EigenDecomp, IndexSet, Matrix, SymMatrix};

// Eigendecomposition plus the PSD check shared by every spectral routine.
// Returns the decomposition and the absolute null threshold.
fn psd_spectrum<T: Scalar>(m: &SymMatrix<T>, rank_tol: T) -> Result<(EigenDecomp<T>, T)> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let eig = m.eigen()?;
    let threshold = rank_tol * eig.max_value().max(T::zero());
    let min = eig.min_value();
    if min < -threshold {
        return Err(Error::NotPsd {
            min_eigenvalue: min.to_f64_lossy(),
            threshold: threshold.to_f64_lossy(),
        });
    }
    Ok((eig, threshold))
}

/// Moore-Penrose pseudo-inverse of a PSD matrix. Eigenvalues at or below
/// `rank_tol * lambda_max` are treated as zero.
pub fn pseudo_inverse<T: Scalar>(m: &SymMatrix<T>, rank_tol: T) -> Result<SymMatrix<T>> {
    pseudo_inverse_with_rank(m, rank_tol).map(|(p, _)| p)
}

/// [`pseudo_inverse`] together with the numerical rank.
pub fn pseudo_inverse_with_rank<T: Scalar>(m: &SymMatrix<T>, rank_tol: T) -> Result<(SymMatrix<T>, usize)> {
    if m.dim() == 0 {
        return Ok((SymMatrix::zeros(0), 0));
    }
    let (eig, threshold) = psd_spectrum(m, rank_tol)?;
    let rank = eig.values.iter().filter(|&&l| l > threshold && l > T::zero()).count();
    let pinv = eig.spectral_map(|l| (l > threshold && l > T::zero()).then(|| l.recip()));
    Ok((pinv, rank))
}

/// Nearest PSD matrix in Frobenius norm: negative eigenvalues are set to zero.
/// Inputs that are already PSD are returned unchanged.
pub fn psd_project<T: Scalar>(m: &SymMatrix<T>) -> Result<SymMatrix<T>> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    if m.dim() == 0 {
        return Ok(m.clone());
    }
    let eig = m.eigen()?;
    if eig.min_value() >= T::zero() {
        return Ok(m.clone());
    }
    Ok(eig.spectral_map(|l| (l > T::zero()).then_some(l)))
}

/// Residual covariance `sigma - sigma[:, U] pinv(sigma[U, U]) sigma[U, :]`
/// computed from scratch. Rows and columns in `U` are set to exactly zero.
pub fn residual_covariance<T: Scalar>(sigma: &SymMatrix<T>, subset: &IndexSet, rank_tol: T) -> Result<SymMatrix<T>> {
    let p = sigma.dim();
    subset.validate(p)?;
    if subset.is_empty() {
        return Ok(sigma.clone());
    }
    let block_pinv = pseudo_inverse(&sigma.submatrix(subset.as_slice()), rank_tol)?;
    Ok(residual_with_pinv(sigma, subset, &block_pinv))
}

/// Residual covariance given `subset`, from `block_pinv = pinv(sigma[U, U])`.
pub(crate) fn residual_with_pinv<T: Scalar>(sigma: &SymMatrix<T>, subset: &IndexSet, block_pinv: &SymMatrix<T>) -> SymMatrix<T> {
    let p = sigma.dim();
    let u = subset.as_slice();
    if u.is_empty() {
        return sigma.clone();
    }
    let c = sigma.block(&(0..p).collect::<Vec<_>>(), u);
    let g = c.matmul(&Matrix::from_fn(u.len(), u.len(), |a, b| block_pinv.get(a, b)));
    let mut r = SymMatrix::from_lower_fn(p, |i, j| {
        let gi = g.row(i);
        let cj = c.row(j);
        sigma.get(i, j) - gi.iter().zip(cj).map(|(&x, &y)| x * y).sum::<T>()
    });
    for &i in u {
        for j in 0..p {
            r.set(i, j, T::zero());
        }
    }
    r.clamp_diag_nonneg();
    r
}

/// Log-determinant of a PSD matrix, or the sentinel when any eigenvalue is at
/// or below `rank_tol * lambda_max`. The empty matrix has log-determinant 0.
pub fn log_det<T: Scalar>(m: &SymMatrix<T>, rank_tol: T) -> Result<Extended<T>> {
    if m.dim() == 0 {
        return Ok(Extended::Finite(T::zero()));
    }
    let (eig, threshold) = psd_spectrum(m, rank_tol)?;
    if eig.values.iter().any(|&l| l <= threshold || l <= T::zero()) {
        return Ok(Extended::NegInfinity);
    }
    Ok(Extended::Finite(eig.values.iter().map(|l| l.ln()).sum()))
}

/// Log-determinant of a residual block, with an absolute null threshold
/// `floor` on top of the relative one. Residuals are PSD by construction, so
/// negative eigenvalues are rounding noise on the scale of the original
/// covariance and count as null rather than failing a PSD check.
pub(crate) fn log_det_floor<T: Scalar>(m: &SymMatrix<T>, rank_tol: T, floor: T) -> Result<Extended<T>> {
    if m.dim() == 0 {
        return Ok(Extended::Finite(T::zero()));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let eig = m.eigen()?;
    let threshold = (rank_tol * eig.max_value().max(T::zero())).max(floor);
    if eig.values.iter().any(|&l| l <= threshold || l <= T::zero()) {
        return Ok(Extended::NegInfinity);
    }
    Ok(Extended::Finite(eig.values.iter().map(|l| l.ln()).sum()))
}

/// Root `X_r` with `r` rows and `X_r' X_r = X' X`, where `r` is the numerical
/// rank of `x`. Built from the eigendecomposition of the Gram matrix, whose
/// eigenvectors are the right singular vectors of `x`.
pub fn low_rank_root<T: Scalar>(x: &Matrix<T>, rank_tol: T) -> Result<Matrix<T>> {
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    let gram = x.gram();
    let eig = gram.eigen()?;
    let threshold = rank_tol * eig.max_value().max(T::zero());
    let keep: Vec<usize> = (0..eig.dim())
        .filter(|&j| eig.values[j] > threshold && eig.values[j] > T::zero())
        .collect();
    Ok(Matrix::from_fn(keep.len(), x.cols(), |r, c| {
        let j = keep[r];
        eig.values[j].sqrt() * eig.vectors.get(c, j)
    }))
}

/// Sum of squared canonical correlations between the variable sets `a` and
/// `b`: `Tr(pinv(S_a) S_ab pinv(S_b) S_ba)`.
pub fn cc_sum<T: Scalar>(sigma: &SymMatrix<T>, a: &IndexSet, b: &IndexSet, rank_tol: T) -> Result<T> {
    let p = sigma.dim();
    a.validate(p)?;
    b.validate(p)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty);
    }
    let pa = pseudo_inverse(&sigma.submatrix(a.as_slice()), rank_tol)?;
    let pb = pseudo_inverse(&sigma.submatrix(b.as_slice()), rank_tol)?;
    let ab = sigma.block(a.as_slice(), b.as_slice());
    let (ka, kb) = (a.len(), b.len());
    // m1 = pinv(S_a) S_ab, m2 = pinv(S_b) S_ba
    let m1 = Matrix::from_fn(ka, kb, |i, j| (0..ka).map(|t| pa.get(i, t) * ab.get(t, j)).sum::<T>());
    let m2 = Matrix::from_fn(kb, ka, |i, j| (0..kb).map(|t| pb.get(i, t) * ab.get(j, t)).sum::<T>());
    let mut tr = T::zero();
    for i in 0..ka {
        for j in 0..kb {
            tr += m1.get(i, j) * m2.get(j, i);
        }
    }
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(rows: &[&[f64]]) -> SymMatrix<f64> {
        SymMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn close(a: &SymMatrix<f64>, b: &SymMatrix<f64>, tol: f64) -> bool {
        a.rel_diff(b) <= tol
    }

    #[test]
    fn pseudo_inverse_examples() {
        let id = SymMatrix::<f64>::identity(3);
        assert!(close(&pseudo_inverse(&id, 1e-10).unwrap(), &id, 1e-14));
        let d = SymMatrix::from_diag(&[2.0, 0.0]);
        assert!(close(&pseudo_inverse(&d, 1e-10).unwrap(), &SymMatrix::from_diag(&[0.5, 0.0]), 1e-14));
        // rank one: v v' with v = (2, 1), pinv = v v' / |v|^4
        let a = sym(&[&[4.0, 2.0], &[2.0, 1.0]]);
        let expected = a.scaled(1.0 / 25.0);
        let ap = pseudo_inverse(&a, 1e-10).unwrap();
        assert!(close(&ap, &expected, 1e-12));
        let apa = SymMatrix::from_lower_fn(2, |i, j| {
            let m = a.matmul(&ap);
            (0..2).map(|t| m.get(i, t) * a.get(t, j)).sum()
        });
        assert!(close(&apa, &a, 1e-12));
    }

    #[test]
    fn pseudo_inverse_rejects_indefinite_and_non_finite() {
        let bad = SymMatrix::from_diag(&[1.0, -0.5]);
        assert!(matches!(pseudo_inverse(&bad, 1e-10), Err(Error::NotPsd { .. })));
        let nan = SymMatrix::from_diag(&[1.0, f64::NAN]);
        assert_eq!(pseudo_inverse(&nan, 1e-10), Err(Error::NonFinite));
    }

    #[test]
    fn psd_project_examples() {
        let d = SymMatrix::from_diag(&[1.0, -1.0]);
        assert!(close(&psd_project(&d).unwrap(), &SymMatrix::from_diag(&[1.0, 0.0]), 1e-14));
        let id = SymMatrix::<f64>::identity(4);
        assert_eq!(psd_project(&id).unwrap(), id);
        // eigenvalues +-1 with eigenvectors (1, +-1)/sqrt(2); keep the +1 part
        let swap = sym(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!(close(&psd_project(&swap).unwrap(), &sym(&[&[0.5, 0.5], &[0.5, 0.5]]), 1e-14));
    }

    #[test]
    fn residual_covariance_examples() {
        let id = SymMatrix::<f64>::identity(3);
        let r = residual_covariance(&id, &IndexSet::new(vec![0]).unwrap(), 1e-10).unwrap();
        assert_eq!(r, SymMatrix::from_diag(&[0.0, 1.0, 1.0]));
        let s = sym(&[&[1.0, 0.5], &[0.5, 1.0]]);
        let r = residual_covariance(&s, &IndexSet::new(vec![0]).unwrap(), 1e-10).unwrap();
        assert!(close(&r, &SymMatrix::from_diag(&[0.0, 0.75]), 1e-15));
        // variable 1 reconstructs variable 0 exactly in a rank-one covariance
        let s = sym(&[&[4.0, 2.0], &[2.0, 1.0]]);
        let r = residual_covariance(&s, &IndexSet::new(vec![1]).unwrap(), 1e-10).unwrap();
        assert!(r.max_abs() < 1e-14);
    }

    #[test]
    fn log_det_examples() {
        assert_eq!(log_det(&SymMatrix::<f64>::identity(3), 1e-10).unwrap(), Extended::Finite(0.0));
        assert_eq!(log_det(&SymMatrix::from_diag(&[2.0, 0.0]), 1e-10).unwrap(), Extended::NegInfinity);
        let v = log_det(&sym(&[&[2.0, 1.0], &[1.0, 2.0]]), 1e-10).unwrap().finite().unwrap();
        assert!((v - 3f64.ln()).abs() < 1e-14);
        assert!(matches!(log_det(&SymMatrix::from_diag(&[1.0, -1.0]), 1e-10), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn low_rank_root_examples() {
        let id = Matrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.0 });
        let root = low_rank_root(&id, 1e-10).unwrap();
        assert_eq!(root.rows(), 3);
        assert!(root.gram().rel_diff(&SymMatrix::identity(3)) < 1e-12);
        let twins = Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        let root = low_rank_root(&twins, 1e-10).unwrap();
        assert_eq!(root.rows(), 1);
        assert!(root.gram().rel_diff(&twins.gram()) < 1e-12);
    }

    #[test]
    fn cc_sum_examples() {
        let id = SymMatrix::<f64>::identity(4);
        let a = IndexSet::new(vec![0, 1]).unwrap();
        let b = IndexSet::new(vec![2, 3]).unwrap();
        assert_eq!(cc_sum(&id, &a, &b, 1e-10).unwrap(), 0.0);
        let s = sym(&[&[2.0, 0.3, 0.1], &[0.3, 1.0, 0.2], &[0.1, 0.2, 1.5]]);
        let all = IndexSet::range(3);
        assert!((cc_sum(&s, &all, &all, 1e-10).unwrap() - 3.0).abs() < 1e-12);
    }
}

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{pseudo_inverse_with_rank, IndexSet, SymMatrix, Tolerances};

fn check_index(i: usize, len: usize) -> Result<()> {
    if i >= len {
        return Err(Error::Index {
            context: "symmat",
            index: i,
            len,
        });
    }
    Ok(())
}

/// Adds variable `i` to the conditioning set of a residual covariance:
/// `res - beta beta' / beta_i` with `beta = res[:, i]`, applied only when
/// `beta_i > zero_tol` (an eliminated variable leaves `res` unchanged).
pub fn residual_add<T: Scalar>(res: &SymMatrix<T>, i: usize, zero_tol: T) -> Result<SymMatrix<T>> {
    check_index(i, res.dim())?;
    let mut out = res.clone();
    residual_add_in_place(&mut out, i, zero_tol);
    Ok(out)
}

/// In-place form of [`residual_add`]. Returns whether the update was applied.
pub(crate) fn residual_add_in_place<T: Scalar>(res: &mut SymMatrix<T>, i: usize, zero_tol: T) -> bool {
    let b = res.get(i, i);
    if !(b > zero_tol) {
        return false;
    }
    let beta = res.row(i).to_vec();
    res.rank_one_sub(&beta, b.recip());
    for j in 0..res.dim() {
        res.set(i, j, T::zero());
    }
    res.clamp_diag_nonneg();
    true
}

/// Removes variable `j` from the conditioning set.
///
/// `res` is the residual given `U + {j}` and `reduced_pinv` the pseudo-inverse
/// of `sigma[U, U]` for the remaining set `reduced`. With
/// `beta = sigma[:, j] - sigma[:, U] pinv(sigma[U, U]) sigma[U, j]` (the column
/// of the residual given `U`), the residual given `U` is
/// `res + beta beta' / beta_j` when `beta_j > zero_tol`, and `res` otherwise.
pub fn residual_remove<T: Scalar>(
    res: &SymMatrix<T>,
    sigma: &SymMatrix<T>,
    reduced: &IndexSet,
    reduced_pinv: &SymMatrix<T>,
    j: usize,
    zero_tol: T,
) -> Result<SymMatrix<T>> {
    let mut out = res.clone();
    residual_remove_in_place(&mut out, sigma, reduced, reduced_pinv, j, zero_tol)?;
    Ok(out)
}

pub(crate) fn residual_remove_in_place<T: Scalar>(
    res: &mut SymMatrix<T>,
    sigma: &SymMatrix<T>,
    reduced: &IndexSet,
    reduced_pinv: &SymMatrix<T>,
    j: usize,
    zero_tol: T,
) -> Result<()> {
    let p = sigma.dim();
    check_index(j, p)?;
    if res.dim() != p {
        return Err(Error::DimMismatch {
            context: "symmat",
            expected: p,
            found: res.dim(),
        });
    }
    if reduced_pinv.dim() != reduced.len() {
        return Err(Error::DimMismatch {
            context: "symmat",
            expected: reduced.len(),
            found: reduced_pinv.dim(),
        });
    }
    let u = reduced.as_slice();
    let sj = sigma.row(j);
    // w = pinv(S_U) S_{U, j}
    let w: Vec<T> = (0..u.len())
        .map(|a| reduced_pinv.row(a).iter().zip(u).map(|(&x, &t)| x * sj[t]).sum())
        .collect();
    let mut beta: Vec<T> = (0..p)
        .map(|r| {
            let sr = sigma.row(r);
            sj[r] - u.iter().zip(&w).map(|(&t, &wt)| sr[t] * wt).sum::<T>()
        })
        .collect();
    for &t in u {
        beta[t] = T::zero();
    }
    let b = beta[j];
    if !(b > zero_tol) {
        return Ok(());
    }
    res.rank_one_sub(&beta, -b.recip());
    res.clamp_diag_nonneg();
    Ok(())
}

/// Pseudo-inverse of `sigma[U + {i}, U + {i}]` (with `i` appended last) from
/// `block_pinv = pinv(sigma[U, U])`.
///
/// Uses the bordered-block formula when the Schur complement
/// `s = sigma_ii - c' pinv(B) c` exceeds the zero threshold; otherwise `i` lies
/// in the span of `U` and the block is inverted from scratch. The block is
/// also inverted afresh when `s` is below `eps^(1/4) * sigma_ii`: `s` then
/// carries a relative error of about `eps * sigma_ii / s`, which the formula
/// spreads over every entry.
pub fn pinv_add<T: Scalar>(
    block_pinv: &SymMatrix<T>,
    sigma: &SymMatrix<T>,
    current: &IndexSet,
    i: usize,
    tol: &Tolerances<T>,
) -> Result<SymMatrix<T>> {
    pinv_add_tracked(block_pinv, sigma, current, i, tol).map(|(m, _)| m)
}

/// [`pinv_add`] that also reports the rank: `None` when the closed form was
/// used (rank grew by one), `Some(rank)` when the block was inverted afresh.
pub(crate) fn pinv_add_tracked<T: Scalar>(
    block_pinv: &SymMatrix<T>,
    sigma: &SymMatrix<T>,
    current: &IndexSet,
    i: usize,
    tol: &Tolerances<T>,
) -> Result<(SymMatrix<T>, Option<usize>)> {
    let p = sigma.dim();
    check_index(i, p)?;
    current.validate(p)?;
    if current.contains(i) {
        return Err(Error::DuplicateIndex(i));
    }
    let k = current.len();
    if block_pinv.dim() != k {
        return Err(Error::DimMismatch {
            context: "symmat",
            expected: k,
            found: block_pinv.dim(),
        });
    }
    let u = current.as_slice();
    let si = sigma.row(i);
    let c: Vec<T> = u.iter().map(|&t| si[t]).collect();
    let bc = block_pinv.mul_vec(&c);
    let s = si[i] - c.iter().zip(&bc).map(|(&x, &y)| x * y).sum::<T>();
    let well_conditioned = s >= T::epsilon().sqrt().sqrt() * si[i];
    if !(s > tol.absolute_zero(sigma)) || !well_conditioned {
        let mut idx = u.to_vec();
        idx.push(i);
        let (m, rank) = pseudo_inverse_with_rank(&sigma.submatrix(&idx), tol.rank_tol)?;
        return Ok((m, Some(rank)));
    }
    let inv_s = s.recip();
    let m = SymMatrix::from_lower_fn(k + 1, |a, b| {
        if a == k && b == k {
            inv_s
        } else if a == k {
            -bc[b] * inv_s
        } else {
            block_pinv.get(a, b) + bc[a] * bc[b] * inv_s
        }
    });
    Ok((m, None))
}

/// Pseudo-inverse of the block with `current[position]` removed, from
/// `block_pinv = pinv(sigma[current, current])`.
///
/// When the block has full rank and no variable in it is nearly dependent on
/// the others, the downdate `P - q q' / r` applies. Otherwise the reduced
/// block is inverted from scratch. A rank-deficient block may keep its rank
/// after the removal, with a small but retained eigenvalue that `P` cannot
/// represent. A nearly dependent variable (some `sigma_aa * P_aa` large, the
/// variance inflation factor) makes `P` carry errors of order
/// `eps * sigma_aa * P_aa` that the downdate would pass on.
pub fn pinv_remove<T: Scalar>(
    block_pinv: &SymMatrix<T>,
    sigma: &SymMatrix<T>,
    current: &IndexSet,
    position: usize,
    tol: &Tolerances<T>,
) -> Result<SymMatrix<T>> {
    pinv_remove_tracked(block_pinv, sigma, current, position, tol).map(|(m, _)| m)
}

/// [`pinv_remove`] that also reports the rank: `None` when the downdate was
/// used (rank dropped by one), `Some(rank)` when the block was inverted afresh.
pub(crate) fn pinv_remove_tracked<T: Scalar>(
    block_pinv: &SymMatrix<T>,
    sigma: &SymMatrix<T>,
    current: &IndexSet,
    position: usize,
    tol: &Tolerances<T>,
) -> Result<(SymMatrix<T>, Option<usize>)> {
    let k = current.len();
    check_index(position, k)?;
    current.validate(sigma.dim())?;
    if block_pinv.dim() != k {
        return Err(Error::DimMismatch {
            context: "symmat",
            expected: k,
            found: block_pinv.dim(),
        });
    }
    let u = current.as_slice();
    let uk = u[position];
    let sk = sigma.row(uk);
    let pr = block_pinv.row(position);
    // diagonal entry of the projector A pinv(A) onto the range of A
    let proj_kk: T = u.iter().zip(pr).map(|(&t, &x)| sk[t] * x).sum();
    let r = pr[position];
    // trace(A pinv(A)) is the rank retained by the pseudo-inverse
    let rank: T = u
        .iter()
        .enumerate()
        .map(|(a, &ta)| {
            let sa = sigma.row(ta);
            u.iter().zip(block_pinv.row(a)).map(|(&tb, &x)| sa[tb] * x).sum::<T>()
        })
        .sum();
    let full_rank = rank > T::from_usize_lossy(k) - T::lit(0.5);
    let independent = (T::one() - proj_kk).abs() <= T::epsilon().sqrt() && r > T::zero();
    let max_vif = u.iter().enumerate().fold(T::zero(), |m, (a, &t)| m.max(sigma.get(t, t) * block_pinv.get(a, a)));
    let well_conditioned = max_vif <= T::epsilon().sqrt().sqrt().recip();
    if !full_rank || !independent || !well_conditioned {
        let idx: Vec<usize> = u.iter().enumerate().filter(|&(a, _)| a != position).map(|(_, &t)| t).collect();
        let (m, rank) = pseudo_inverse_with_rank(&sigma.submatrix(&idx), tol.rank_tol)?;
        return Ok((m, Some(rank)));
    }
    let inv_r = r.recip();
    let mut out = block_pinv.without(position);
    let q: Vec<T> = pr.iter().enumerate().filter(|&(a, _)| a != position).map(|(_, &v)| v).collect();
    out.rank_one_sub(&q, inv_r);
    Ok((out, None))
}

//! Selection criteria.
//!
//! Every criterion is normalised so that lower is better. Each one has a
//! from-scratch `evaluate` used as the oracle, and an incremental score whose
//! argmin over candidates matches the argmin of `evaluate` on `U + {i}`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::scalar::Scalar;
use crate::symmat::{
    cc_sum, log_det, log_det_floor, pinv_add_tracked, pinv_remove_tracked, pseudo_inverse, pseudo_inverse_with_rank,
    residual_add_in_place, residual_covariance, residual_remove_in_place, residual_with_pinv, IndexSet, SymMatrix, Tolerances,
};

/// The six objectives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriterionKind {
    /// Trace of the residual covariance (the column subset selection objective).
    CssTrace,
    /// `-log|Sigma_S|`: maximises the determinant of the selected block.
    /// Singular blocks evaluate to `+inf`.
    DetResidual,
    /// Squared Frobenius norm of the residual covariance.
    FrobResidual,
    /// Negated sum of squared canonical correlations between the selected and
    /// unselected variables. The natural objective is maximised; it is stored
    /// negated so every criterion is minimised.
    CanonCorr,
    /// `log|Sigma_S| + sum_j log R_jj` over unselected `j`: the profile
    /// likelihood of the subset factor model.
    DiagDet,
    /// `log|Sigma_S| + (p - k) log(Tr R / (p - k))`: the profile likelihood of
    /// the model with isotropic noise.
    IsoLrt,
}

impl CriterionKind {
    pub const ALL: [CriterionKind; 6] = [
        CriterionKind::CssTrace,
        CriterionKind::DetResidual,
        CriterionKind::FrobResidual,
        CriterionKind::CanonCorr,
        CriterionKind::DiagDet,
        CriterionKind::IsoLrt,
    ];

    /// Short name used on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            CriterionKind::CssTrace => "css",
            CriterionKind::DetResidual => "det",
            CriterionKind::FrobResidual => "frob",
            CriterionKind::CanonCorr => "cc",
            CriterionKind::DiagDet => "diag-det",
            CriterionKind::IsoLrt => "iso-lrt",
        }
    }

    /// Smallest relative score difference the incremental updates resolve.
    /// Canonical-correlation scores go through a pseudo-inverse of the
    /// complement block, whose condition number may reach `1 / rank_tol`; on
    /// rank-deficient inputs, where exact ties are common, the rounding error
    /// is far above machine precision.
    pub fn resolution<T: Scalar>(&self) -> T {
        match self {
            CriterionKind::CanonCorr => T::epsilon().cbrt(),
            _ => T::zero(),
        }
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CriterionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CriterionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown criterion '{s}'")))
    }
}

/// A criterion bound to a problem size `p` and target subset size `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Criterion {
    pub kind: CriterionKind,
    pub p: usize,
    pub k: usize,
}

/// Pieces of the Gaussian log-likelihood shared by [`CriterionKind::DiagDet`],
/// [`CriterionKind::IsoLrt`] and the subset-size statistics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualTerms<T> {
    /// `log|Sigma_U|`.
    pub log_det_block: Extended<T>,
    /// `sum_{j not in U} log R_jj`.
    pub log_diag: Extended<T>,
    /// `log|R_{-U}|`.
    pub log_det_residual: Extended<T>,
    /// `Tr R`.
    pub trace: T,
    /// Number of unselected variables.
    pub rest: usize,
}

/// Computes [`ResidualTerms`] from scratch.
pub fn residual_log_terms<T: Scalar>(
    sigma: &SymMatrix<T>,
    subset: &IndexSet,
    tol: &Tolerances<T>,
) -> Result<ResidualTerms<T>> {
    let p = sigma.dim();
    subset.validate(p)?;
    let zero = tol.absolute_zero(sigma);
    let residual = residual_covariance(sigma, subset, tol.rank_tol)?;
    let rest = subset.complement(p);
    let log_diag = rest
        .iter()
        .fold(Extended::Finite(T::zero()), |acc, j| acc + Extended::ln_above(residual.get(j, j), zero));
    Ok(ResidualTerms {
        log_det_block: log_det(&sigma.submatrix(subset.as_slice()), tol.rank_tol)?,
        log_diag,
        log_det_residual: log_det_floor(&residual.submatrix(rest.as_slice()), tol.rank_tol, zero)?,
        trace: residual.trace(),
        rest: rest.len(),
    })
}

// m * log(trace / m), or the sentinel when the trace vanishes.
pub(crate) fn iso_term<T: Scalar>(trace: T, m: usize, zero: T) -> Extended<T> {
    if m == 0 {
        return Extended::Finite(T::zero());
    }
    let mf = T::from_usize_lossy(m);
    Extended::ln_above(trace, zero).scale(mf) + (-mf * mf.ln())
}

fn neg_log_det<T: Scalar>(v: Extended<T>) -> Extended<T> {
    match v {
        Extended::NegInfinity => Extended::Finite(T::infinity()),
        Extended::Finite(x) => Extended::Finite(-x),
    }
}

impl Criterion {
    pub fn new(kind: CriterionKind, p: usize, k: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::Empty);
        }
        let needs_rest = matches!(kind, CriterionKind::DiagDet | CriterionKind::IsoLrt);
        if k > p || (needs_rest && k >= p) {
            return Err(Error::KTooLarge { k, p });
        }
        Ok(Criterion { kind, p, k })
    }

    /// Same criterion with a different target size.
    pub fn with_k(&self, k: usize) -> Result<Self> {
        Criterion::new(self.kind, self.p, k)
    }

    fn check_dim<T: Scalar>(&self, sigma: &SymMatrix<T>) -> Result<()> {
        if sigma.dim() != self.p {
            return Err(Error::DimMismatch {
                context: "search",
                expected: self.p,
                found: sigma.dim(),
            });
        }
        Ok(())
    }

    /// Typical magnitude of incremental scores on `sigma`. Tie margins are
    /// relative to the larger of this and the scores compared, so selections
    /// do not change when `sigma` is rescaled.
    pub fn score_scale<T: Scalar>(&self, sigma: &SymMatrix<T>) -> T {
        let p = T::from_usize_lossy(sigma.dim().max(1));
        match self.kind {
            CriterionKind::CssTrace => sigma.trace(),
            CriterionKind::FrobResidual => sigma.frobenius_sq(),
            CriterionKind::DetResidual => sigma.trace() / p,
            CriterionKind::CanonCorr | CriterionKind::DiagDet | CriterionKind::IsoLrt => T::one(),
        }
        .max(T::min_positive_value())
    }

    /// Typical magnitude of objective values on `sigma`; see
    /// [`Criterion::score_scale`].
    pub fn objective_scale<T: Scalar>(&self, sigma: &SymMatrix<T>) -> T {
        match self.kind {
            CriterionKind::DetResidual => T::one(),
            _ => self.score_scale(sigma),
        }
    }

    /// Objective value of `subset`, computed from scratch.
    pub fn evaluate<T: Scalar>(&self, sigma: &SymMatrix<T>, subset: &IndexSet, tol: &Tolerances<T>) -> Result<Extended<T>> {
        self.check_dim(sigma)?;
        subset.validate(self.p)?;
        if !sigma.is_finite() {
            return Err(Error::NonFinite);
        }
        let zero = tol.absolute_zero(sigma);
        Ok(match self.kind {
            CriterionKind::CssTrace => Extended::Finite(residual_covariance(sigma, subset, tol.rank_tol)?.trace()),
            CriterionKind::FrobResidual => {
                Extended::Finite(residual_covariance(sigma, subset, tol.rank_tol)?.frobenius_sq())
            }
            CriterionKind::DetResidual => neg_log_det(log_det(&sigma.submatrix(subset.as_slice()), tol.rank_tol)?),
            CriterionKind::CanonCorr => {
                if subset.is_empty() || subset.len() == self.p {
                    Extended::Finite(T::zero())
                } else {
                    Extended::Finite(-cc_sum(sigma, subset, &subset.complement(self.p), tol.rank_tol)?)
                }
            }
            CriterionKind::DiagDet => {
                let t = residual_log_terms(sigma, subset, tol)?;
                t.log_det_block + t.log_diag
            }
            CriterionKind::IsoLrt => {
                let t = residual_log_terms(sigma, subset, tol)?;
                t.log_det_block + iso_term(t.trace, self.p - self.k, zero)
            }
        })
    }

    /// Objective of the subset held by `state`, read from its caches.
    pub fn state_objective<T: Scalar>(&self, state: &SubsetState<T>) -> Extended<T> {
        let r = &state.residual;
        let zero = state.zero;
        match self.kind {
            CriterionKind::CssTrace => Extended::Finite(r.trace()),
            CriterionKind::FrobResidual => Extended::Finite(r.frobenius_sq()),
            CriterionKind::DetResidual => neg_log_det(state.log_det_block),
            CriterionKind::CanonCorr => match &state.canon {
                Some(c) => {
                    let idx = c.complement.as_slice();
                    let mut tr = T::zero();
                    for (a, &s) in idx.iter().enumerate() {
                        let prow = c.pinv.row(a);
                        let rrow = r.row(s);
                        for (b, &t) in idx.iter().enumerate() {
                            tr += prow[b] * rrow[t];
                        }
                    }
                    Extended::Finite(tr - T::from_usize_lossy(c.rank))
                }
                None => Extended::Finite(T::zero()),
            },
            CriterionKind::DiagDet => (0..self.p)
                .filter(|&j| !state.mask[j])
                .fold(state.log_det_block, |acc, j| acc + Extended::ln_above(r.get(j, j), zero)),
            CriterionKind::IsoLrt => state.log_det_block + iso_term(r.trace(), self.p - self.k, zero),
        }
    }

    /// Incremental score of adding `i` to the subset held by `state`.
    pub fn score<T: Scalar>(&self, state: &SubsetState<T>, sigma: &SymMatrix<T>, i: usize) -> Result<Extended<T>> {
        if i >= self.p {
            return Err(Error::Index {
                context: "search",
                index: i,
                len: self.p,
            });
        }
        if state.mask[i] {
            return Err(Error::DuplicateIndex(i));
        }
        let r = &state.residual;
        let zero = state.zero;
        let b = r.get(i, i);
        let live = b > zero;
        let beta = r.row(i);
        let beta_sq = || beta.iter().map(|&v| v * v).sum::<T>();
        Ok(match self.kind {
            CriterionKind::CssTrace => Extended::Finite(if live { -beta_sq() / b } else { T::zero() }),
            CriterionKind::FrobResidual => Extended::Finite(if live {
                let nb = beta_sq() / b;
                nb * nb - T::lit(2.0) * r.quad_form(beta) / b
            } else {
                T::zero()
            }),
            CriterionKind::DetResidual => Extended::Finite(if state.log_det_block.is_neg_infinity() {
                T::zero()
            } else if live {
                -b
            } else {
                T::infinity()
            }),
            CriterionKind::CanonCorr => self.canon_score(state, sigma, i)?,
            CriterionKind::DiagDet => {
                if !live || state.log_det_block.is_neg_infinity() {
                    return Ok(Extended::NegInfinity);
                }
                let mut acc = state.log_det_block + b.ln();
                for j in 0..self.p {
                    if j == i || state.mask[j] {
                        continue;
                    }
                    let rij = beta[j];
                    acc = acc + Extended::ln_above(r.get(j, j) - rij * rij / b, zero);
                    if acc.is_neg_infinity() {
                        break;
                    }
                }
                acc
            }
            CriterionKind::IsoLrt => {
                if !live || state.log_det_block.is_neg_infinity() {
                    return Ok(Extended::NegInfinity);
                }
                state.log_det_block + b.ln() + iso_term(r.trace() - beta_sq() / b, self.p - self.k, zero)
            }
        })
    }

    // rank(Sigma_{-V}) - Tr(pinv(Sigma_{-V}) R_V) for V = U + {i}, negated. The
    // complement pseudo-inverse is downdated from the cached one.
    fn canon_score<T: Scalar>(&self, state: &SubsetState<T>, sigma: &SymMatrix<T>, i: usize) -> Result<Extended<T>> {
        let cache = state
            .canon
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("state was not built for the canonical-correlation criterion".into()))?;
        let pos = cache.complement.position(i).ok_or(Error::Index {
            context: "search",
            index: i,
            len: self.p,
        })?;
        let (pv, info) = pinv_remove_tracked(&cache.pinv, sigma, &cache.complement, pos, &state.tol)?;
        let rank = info.unwrap_or(cache.rank.saturating_sub(1));
        let idx: Vec<usize> = cache
            .complement
            .iter()
            .enumerate()
            .filter(|&(a, _)| a != pos)
            .map(|(_, t)| t)
            .collect();
        let r = &state.residual;
        let mut tr = T::zero();
        for (a, &s) in idx.iter().enumerate() {
            let prow = pv.row(a);
            let rrow = r.row(s);
            for (c, &t) in idx.iter().enumerate() {
                tr += prow[c] * rrow[t];
            }
        }
        let b = r.get(i, i);
        if b > state.zero {
            let bv: Vec<T> = idx.iter().map(|&t| r.get(i, t)).collect();
            tr -= pv.quad_form(&bv) / b;
        }
        Ok(Extended::Finite(tr - T::from_usize_lossy(rank)))
    }

    /// Scores of every candidate outside the current subset, ascending by index.
    pub fn score_all<T: Scalar>(&self, state: &SubsetState<T>, sigma: &SymMatrix<T>) -> Result<Vec<(usize, Extended<T>)>> {
        (0..self.p)
            .filter(|&i| !state.mask[i])
            .map(|i| self.score(state, sigma, i).map(|s| (i, s)))
            .collect()
    }
}

#[derive(Clone, Debug)]
struct CanonCache<T> {
    complement: IndexSet,
    pinv: SymMatrix<T>,
    rank: usize,
    edits: usize,
}

impl<T: Scalar> CanonCache<T> {
    fn build(sigma: &SymMatrix<T>, subset: &IndexSet, tol: &Tolerances<T>) -> Result<Self> {
        let complement = subset.complement(sigma.dim());
        let (pinv, rank) = pseudo_inverse_with_rank(&sigma.submatrix(complement.as_slice()), tol.rank_tol)?;
        Ok(CanonCache {
            complement,
            pinv,
            rank,
            edits: 0,
        })
    }
}

/// Selected variables together with the caches the incremental scores read:
/// the residual covariance, `pinv(Sigma_U)` in subset order and `log|Sigma_U|`.
/// The canonical-correlation criterion also keeps `pinv(Sigma_{-U})`.
#[derive(Clone, Debug)]
pub struct SubsetState<T> {
    subset: IndexSet,
    mask: Vec<bool>,
    residual: SymMatrix<T>,
    block_pinv: SymMatrix<T>,
    log_det_block: Extended<T>,
    tol: Tolerances<T>,
    zero: T,
    canon: Option<CanonCache<T>>,
}

// log|A[idx, idx]| by Gaussian elimination in insertion order; a pivot at or
// below `zero` makes the block singular. This matches the running sum kept
// by `advance`.
fn pivot_log_det<T: Scalar>(sigma: &SymMatrix<T>, idx: &[usize], zero: T) -> Extended<T> {
    let k = idx.len();
    let mut a = sigma.submatrix(idx).as_slice().to_vec();
    let mut acc = T::zero();
    for t in 0..k {
        let b = a[t * k + t];
        if !(b > zero) {
            return Extended::NegInfinity;
        }
        acc += b.ln();
        for i in t + 1..k {
            let f = a[i * k + t] / b;
            for j in t + 1..k {
                let v = a[t * k + j];
                a[i * k + j] -= f * v;
            }
        }
    }
    Extended::Finite(acc)
}

impl<T: Scalar> SubsetState<T> {
    /// State for the empty subset.
    pub fn empty(criterion: &Criterion, sigma: &SymMatrix<T>, tol: &Tolerances<T>) -> Result<Self> {
        Self::from_subset(criterion, sigma, &IndexSet::empty(), tol)
    }

    /// State for `subset`, with every cache computed from scratch.
    pub fn from_subset(criterion: &Criterion, sigma: &SymMatrix<T>, subset: &IndexSet, tol: &Tolerances<T>) -> Result<Self> {
        criterion.check_dim(sigma)?;
        if !sigma.is_finite() {
            return Err(Error::NonFinite);
        }
        let p = sigma.dim();
        subset.validate(p)?;
        let zero = tol.absolute_zero(sigma);
        let mut mask = vec![false; p];
        for i in subset.iter() {
            mask[i] = true;
        }
        let canon = match criterion.kind {
            CriterionKind::CanonCorr => Some(CanonCache::build(sigma, subset, tol)?),
            _ => None,
        };
        Ok(SubsetState {
            subset: subset.clone(),
            mask,
            residual: residual_covariance(sigma, subset, tol.rank_tol)?,
            block_pinv: pseudo_inverse(&sigma.submatrix(subset.as_slice()), tol.rank_tol)?,
            log_det_block: pivot_log_det(sigma, subset.as_slice(), zero),
            tol: *tol,
            zero,
            canon,
        })
    }

    pub fn subset(&self) -> &IndexSet {
        &self.subset
    }

    pub fn residual(&self) -> &SymMatrix<T> {
        &self.residual
    }

    pub fn block_pinv(&self) -> &SymMatrix<T> {
        &self.block_pinv
    }

    pub fn log_det_block(&self) -> Extended<T> {
        self.log_det_block
    }

    pub fn tolerances(&self) -> &Tolerances<T> {
        &self.tol
    }

    /// Absolute threshold below which a residual variance counts as zero.
    pub fn zero_threshold(&self) -> T {
        self.zero
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask.get(i).copied().unwrap_or(false)
    }

    /// Appends `i` to the subset.
    pub fn advance(&mut self, sigma: &SymMatrix<T>, i: usize) -> Result<()> {
        let p = self.mask.len();
        if i >= p {
            return Err(Error::Index {
                context: "search",
                index: i,
                len: p,
            });
        }
        if self.mask[i] {
            return Err(Error::DuplicateIndex(i));
        }
        let b = self.residual.get(i, i);
        self.log_det_block = if b > self.zero {
            self.log_det_block + b.ln()
        } else {
            Extended::NegInfinity
        };
        self.block_pinv = pinv_add_tracked(&self.block_pinv, sigma, &self.subset, i, &self.tol)?.0;
        if let Some(cache) = self.canon.as_mut() {
            let pos = cache.complement.position(i).ok_or(Error::DuplicateIndex(i))?;
            let (pinv, info) = pinv_remove_tracked(&cache.pinv, sigma, &cache.complement, pos, &self.tol)?;
            cache.rank = info.unwrap_or(cache.rank.saturating_sub(1));
            cache.pinv = pinv;
            cache.complement.remove_at(pos)?;
            cache.edits += 1;
        }
        residual_add_in_place(&mut self.residual, i, self.zero);
        self.subset.push(i)?;
        self.mask[i] = true;
        if self.nearly_dependent(sigma, i, b) {
            self.residual = residual_with_pinv(sigma, &self.subset, &self.block_pinv);
        }
        self.refresh_canon(sigma)?;
        self.debug_check(sigma);
        Ok(())
    }

    /// Inserts `i` at `position` in the subset order.
    pub fn advance_at(&mut self, sigma: &SymMatrix<T>, i: usize, position: usize) -> Result<()> {
        if position > self.subset.len() {
            return Err(Error::Index {
                context: "search",
                index: position,
                len: self.subset.len() + 1,
            });
        }
        self.advance(sigma, i)?;
        let last = self.subset.len() - 1;
        if position < last {
            self.subset.remove_at(last)?;
            self.subset.insert_at(position, i)?;
            self.block_pinv.move_last_to(position);
        }
        Ok(())
    }

    /// Removes the variable at `position` of the subset order.
    pub fn retract(&mut self, sigma: &SymMatrix<T>, position: usize) -> Result<usize> {
        if position >= self.subset.len() {
            return Err(Error::Index {
                context: "search",
                index: position,
                len: self.subset.len(),
            });
        }
        let j = self.subset.as_slice()[position];
        let (reduced_pinv, inverted) = pinv_remove_tracked(&self.block_pinv, sigma, &self.subset, position, &self.tol)?;
        let mut reduced = self.subset.clone();
        reduced.remove_at(position)?;
        residual_remove_in_place(&mut self.residual, sigma, &reduced, &reduced_pinv, j, self.zero)?;
        let b = self.residual.get(j, j);
        // A freshly inverted block means the old block was rank deficient or
        // ill conditioned, and the residual inherited errors of the same
        // order; a dependent `j` leaves the residual unchanged only up to the
        // rank decision made when it was added.
        if inverted.is_some() || !(b > self.zero) || self.nearly_dependent(sigma, j, b) {
            self.residual = residual_with_pinv(sigma, &reduced, &reduced_pinv);
        }
        self.log_det_block = match self.log_det_block {
            Extended::Finite(v) if b > self.zero => Extended::Finite(v - b.ln()),
            _ => pivot_log_det(sigma, reduced.as_slice(), self.zero),
        };
        if let Some(cache) = self.canon.as_mut() {
            let (pinv, info) = pinv_add_tracked(&cache.pinv, sigma, &cache.complement, j, &self.tol)?;
            cache.rank = info.unwrap_or(cache.rank + 1);
            cache.pinv = pinv;
            cache.complement.push(j)?;
            cache.edits += 1;
        }
        self.block_pinv = reduced_pinv;
        self.subset = reduced;
        self.mask[j] = false;
        self.refresh_canon(sigma)?;
        self.debug_check(sigma);
        Ok(j)
    }

    // A rank-one update by a variable whose residual variance `b` is a tiny
    // fraction of its variance divides by a pivot with relative error about
    // `eps * sigma_ii / b`; the residual is then recomputed from the block
    // pseudo-inverse instead.
    fn nearly_dependent(&self, sigma: &SymMatrix<T>, i: usize, b: T) -> bool {
        b > self.zero && b < T::epsilon().sqrt().sqrt() * sigma.get(i, i)
    }

    // Periodic rebuild of the complement pseudo-inverse bounds drift.
    fn refresh_canon(&mut self, sigma: &SymMatrix<T>) -> Result<()> {
        let p = self.mask.len();
        if let Some(cache) = &self.canon {
            if cache.edits >= (p / 2).max(1) {
                self.canon = Some(CanonCache::build(sigma, &self.subset, &self.tol)?);
            }
        }
        Ok(())
    }

    #[cfg(debug_assertions)]
    fn debug_check(&self, sigma: &SymMatrix<T>) {
        if sigma.dim() > 24 {
            return;
        }
        // Near either zero threshold the incremental and from-scratch rank
        // decisions may legitimately differ; only drift elsewhere is checked.
        if let Ok(eig) = sigma.submatrix(self.subset.as_slice()).eigen() {
            let cut = self.tol.rank_tol * eig.max_value();
            let (lo, hi) = (cut.min(self.zero), cut.max(self.zero));
            let band = T::lit(1e3);
            if eig.values.iter().any(|&v| v > lo / band && v < hi * band) {
                return;
            }
        }
        if let Ok(scratch) = residual_covariance(sigma, &self.subset, self.tol.rank_tol) {
            let tol = T::epsilon().sqrt() * T::lit(100.0) * sigma.frobenius().max(T::one());
            debug_assert!(
                self.residual.sub(&scratch).frobenius() <= tol,
                "cached residual drifted from its from-scratch value"
            );
        }
    }

    #[cfg(not(debug_assertions))]
    fn debug_check(&self, _sigma: &SymMatrix<T>) {}
}

/// Free-function form of [`Criterion::evaluate`].
pub fn evaluate<T: Scalar>(
    criterion: &Criterion,
    sigma: &SymMatrix<T>,
    subset: &IndexSet,
    tol: &Tolerances<T>,
) -> Result<Extended<T>> {
    criterion.evaluate(sigma, subset, tol)
}

/// Free-function form of [`Criterion::score`].
pub fn score_candidate<T: Scalar>(
    criterion: &Criterion,
    state: &SubsetState<T>,
    sigma: &SymMatrix<T>,
    i: usize,
) -> Result<Extended<T>> {
    criterion.score(state, sigma, i)
}

/// Returns a copy of `state` with `i` appended.
pub fn advance<T: Scalar>(state: &SubsetState<T>, sigma: &SymMatrix<T>, i: usize) -> Result<SubsetState<T>> {
    let mut next = state.clone();
    next.advance(sigma, i)?;
    Ok(next)
}

/// Returns a copy of `state` with the variable at `position` removed.
pub fn retract<T: Scalar>(state: &SubsetState<T>, sigma: &SymMatrix<T>, position: usize) -> Result<SubsetState<T>> {
    let mut next = state.clone();
    next.retract(sigma, position)?;
    Ok(next)
}

//! Subset search: greedy forward selection, swapping with random restarts,
//! and exhaustive enumeration as an oracle.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::criteria::{Criterion, SubsetState};
use crate::error::{Error, Result};
use crate::extended::{argmin_lowest_at, Extended};
use crate::scalar::Scalar;
use crate::symmat::{IndexSet, SymMatrix, Tolerances};

/// Default cap on the number of subsets [`exhaustive`] will enumerate.
pub const DEFAULT_EXHAUSTIVE_CAP: u128 = 2_000_000;

#[derive(Clone, Debug)]
pub struct SearchConfig<T> {
    /// Objective and target size `k`.
    pub criterion: Criterion,
    /// Random initialisations for [`swap`].
    pub restarts: usize,
    /// Cap on full passes over the subset positions in [`swap`].
    pub max_sweeps: usize,
    /// Restart `r` is seeded with `seed + r`.
    pub seed: u64,
    /// Greedy stops early once the objective reaches this value.
    pub objective_floor: Option<T>,
    pub tolerances: Tolerances<T>,
    /// Relative margin for "strictly better" comparisons.
    pub tie_margin: T,
    pub exhaustive_cap: u128,
}

impl<T: Scalar> SearchConfig<T> {
    pub fn new(criterion: Criterion) -> Self {
        SearchConfig {
            criterion,
            restarts: 1,
            max_sweeps: 100,
            seed: 0,
            objective_floor: None,
            tolerances: Tolerances::default(),
            tie_margin: T::default_tie_margin(),
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
        }
    }

    pub fn k(&self) -> usize {
        self.criterion.k
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_sweeps(mut self, max_sweeps: usize) -> Self {
        self.max_sweeps = max_sweeps;
        self
    }

    pub fn with_objective_floor(mut self, floor: T) -> Self {
        self.objective_floor = Some(floor);
        self
    }

    pub fn with_criterion(mut self, criterion: Criterion) -> Self {
        self.criterion = criterion;
        self
    }

    /// Margin actually used for comparisons: `tie_margin`, raised to the
    /// criterion's resolution.
    pub fn margin(&self) -> T {
        self.tie_margin.max(self.criterion.kind.resolution())
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let k = self.k();
        if self.criterion.p != p {
            return Err(Error::DimMismatch {
                context: "search",
                expected: self.criterion.p,
                found: p,
            });
        }
        if k == 0 || k > p {
            return Err(Error::KTooLarge { k, p });
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidConfig("max_sweeps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "T: Scalar + Serialize"))]
pub struct SearchResult<T> {
    pub subset: IndexSet,
    /// From-scratch objective of `subset`.
    pub objective: Extended<T>,
    /// Greedy: objective after each step. Swap: initial objective, then the
    /// objective after every accepted swap.
    pub trajectory: Vec<Extended<T>>,
    /// Greedy prefixes of sizes `1..=k`.
    pub nested_subsets: Vec<IndexSet>,
    pub sweeps_used: usize,
    /// Swap stopped on a sweep without changes rather than at the sweep cap.
    pub converged: bool,
    /// Seed of the restart that produced this result.
    pub seed: Option<u64>,
}

/// Initial subset for [`swap`].
#[derive(Clone, Debug)]
pub enum SwapInit {
    Given(IndexSet),
    /// `restarts` uniform random subsets.
    Random,
}

/// One position update inside a swap sweep.
#[derive(Debug)]
pub struct SwapDecision<'a, T> {
    pub sweep: usize,
    pub position: usize,
    /// Subset with the variable at `position` removed.
    pub reduced: &'a IndexSet,
    /// Incremental scores of every candidate outside `reduced`.
    pub scores: &'a [(usize, Extended<T>)],
    pub previous: usize,
    pub chosen: usize,
}

// Cheap necessary conditions for positive semi-definiteness: finite entries,
// non-negative diagonal and every 2x2 principal minor non-negative. A full
// eigendecomposition would dominate the cost of greedy selection.
fn check_covariance<T: Scalar>(sigma: &SymMatrix<T>, tol: &Tolerances<T>) -> Result<()> {
    if !sigma.is_finite() {
        return Err(Error::NonFinite);
    }
    let p = sigma.dim();
    let scale = (0..p).fold(T::zero(), |m, i| m.max(sigma.get(i, i).abs()));
    let slack = tol.rank_tol * scale;
    let two = T::lit(2.0);
    for i in 0..p {
        let a = sigma.get(i, i);
        let row = sigma.row(i);
        for (j, &b) in row.iter().enumerate().take(i + 1) {
            let d = sigma.get(j, j);
            let half = (a - d) / two;
            let min_eig = (a + d) / two - (half * half + b * b).sqrt();
            if min_eig < -slack {
                return Err(Error::NotPsd {
                    min_eigenvalue: min_eig.to_f64_lossy(),
                    threshold: slack.to_f64_lossy(),
                });
            }
        }
    }
    Ok(())
}

fn validate_inputs<T: Scalar>(sigma: &SymMatrix<T>, config: &SearchConfig<T>) -> Result<()> {
    config.validate(sigma.dim())?;
    check_covariance(sigma, &config.tolerances)
}

/// Greedy forward selection: `k` steps, each adding the candidate with the
/// lowest incremental score (lowest index on ties).
pub fn greedy<T: Scalar>(sigma: &SymMatrix<T>, config: &SearchConfig<T>) -> Result<SearchResult<T>> {
    validate_inputs(sigma, config)?;
    let c = &config.criterion;
    let mut state = SubsetState::empty(c, sigma, &config.tolerances)?;
    let (margin, floor) = (config.margin(), c.score_scale(sigma));
    let mut trajectory = Vec::with_capacity(c.k);
    let mut nested = Vec::with_capacity(c.k);
    for _ in 0..c.k {
        let next = if c.state_objective(&state).is_neg_infinity() {
            // perfect fit: every candidate ties, take the lowest index
            (0..c.p).find(|&i| !state.contains(i)).expect("k <= p leaves a candidate")
        } else {
            let scores = c.score_all(&state, sigma)?;
            argmin_lowest_at(&scores, margin, floor).expect("k <= p leaves a candidate").0
        };
        state.advance(sigma, next)?;
        let obj = c.state_objective(&state);
        trajectory.push(obj);
        nested.push(state.subset().clone());
        if let Some(floor) = config.objective_floor {
            if obj.total_cmp(&Extended::Finite(floor)).is_le() {
                break;
            }
        }
    }
    let subset = state.subset().clone();
    Ok(SearchResult {
        objective: c.evaluate(sigma, &subset, &config.tolerances)?,
        subset,
        trajectory,
        nested_subsets: nested,
        sweeps_used: 0,
        converged: true,
        seed: None,
    })
}

/// `k` distinct indices drawn uniformly without replacement.
pub fn random_subset(p: usize, k: usize, seed: u64) -> IndexSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, p, k).into_vec();
    IndexSet::new(picked).expect("sampled indices are distinct")
}

/// Swapping search. With [`SwapInit::Random`] the configured number of
/// restarts run in parallel and the best result is returned (lowest seed on
/// ties).
pub fn swap<T: Scalar>(sigma: &SymMatrix<T>, config: &SearchConfig<T>, init: SwapInit) -> Result<SearchResult<T>> {
    validate_inputs(sigma, config)?;
    match init {
        SwapInit::Given(s) => swap_from(sigma, config, s, &mut |_| {}),
        SwapInit::Random => {
            let (p, k) = (config.criterion.p, config.k());
            let runs: Vec<SearchResult<T>> = (0..config.restarts)
                .into_par_iter()
                .map(|r| {
                    let seed = config.seed.wrapping_add(r as u64);
                    let mut res = swap_from(sigma, config, random_subset(p, k, seed), &mut |_| {})?;
                    res.seed = Some(seed);
                    Ok(res)
                })
                .collect::<Result<_>>()?;
            let floor = config.criterion.objective_scale(sigma);
            let mut best: Option<SearchResult<T>> = None;
            for res in runs {
                let better = match &best {
                    None => true,
                    Some(b) => res.objective.strictly_below_at(&b.objective, config.margin(), floor),
                };
                if better {
                    best = Some(res);
                }
            }
            Ok(best.expect("restarts >= 1"))
        }
    }
}

/// Swapping search from `init`, reporting every position decision to
/// `observer`.
pub fn swap_with_observer<T: Scalar>(
    sigma: &SymMatrix<T>,
    config: &SearchConfig<T>,
    init: IndexSet,
    observer: &mut dyn FnMut(&SwapDecision<'_, T>),
) -> Result<SearchResult<T>> {
    validate_inputs(sigma, config)?;
    swap_from(sigma, config, init, observer)
}

fn swap_from<T: Scalar>(
    sigma: &SymMatrix<T>,
    config: &SearchConfig<T>,
    init: IndexSet,
    observer: &mut dyn FnMut(&SwapDecision<'_, T>),
) -> Result<SearchResult<T>> {
    let c = &config.criterion;
    let k = c.k;
    init.validate(c.p)?;
    if init.len() != k {
        return Err(Error::DimMismatch {
            context: "search",
            expected: k,
            found: init.len(),
        });
    }
    let tol = &config.tolerances;
    let mut state = SubsetState::from_subset(c, sigma, &init, tol)?;
    let mut trajectory = vec![c.state_objective(&state)];
    let (margin, floor) = (config.margin(), c.score_scale(sigma));
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < config.max_sweeps {
        sweeps += 1;
        if sweeps > 1 {
            // rebuild the caches from scratch once per sweep to bound drift
            state = SubsetState::from_subset(c, sigma, &state.subset().clone(), tol)?;
        }
        let mut changed = false;
        for j in 0..k {
            let previous = state.retract(sigma, j)?;
            let scores = c.score_all(&state, sigma)?;
            let best = argmin_lowest_at(&scores, margin, floor).expect("the removed variable is a candidate");
            let prev_score = scores
                .iter()
                .find(|(i, _)| *i == previous)
                .map(|(_, s)| *s)
                .expect("the removed variable is a candidate");
            let chosen = if best.1.strictly_below_at(&prev_score, margin, floor) {
                best.0
            } else {
                previous
            };
            observer(&SwapDecision {
                sweep: sweeps,
                position: j,
                reduced: state.subset(),
                scores: &scores,
                previous,
                chosen,
            });
            state.advance_at(sigma, chosen, j)?;
            if chosen != previous {
                changed = true;
                trajectory.push(c.state_objective(&state));
            }
        }
        if !changed {
            converged = true;
            break;
        }
    }
    let subset = state.subset().clone();
    Ok(SearchResult {
        objective: c.evaluate(sigma, &subset, tol)?,
        subset,
        trajectory,
        nested_subsets: Vec::new(),
        sweeps_used: sweeps,
        converged,
        seed: None,
    })
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Global optimum over all size-`k` subsets, enumerated in lexicographic
/// order; the first subset within the tie margin of the optimum wins.
pub fn exhaustive<T: Scalar>(sigma: &SymMatrix<T>, config: &SearchConfig<T>) -> Result<SearchResult<T>> {
    validate_inputs(sigma, config)?;
    let c = &config.criterion;
    let (p, k) = (c.p, c.k);
    let count = binomial(p, k);
    if count > config.exhaustive_cap {
        return Err(Error::TooManySubsets {
            count,
            cap: config.exhaustive_cap,
        });
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut best: Option<(Vec<usize>, Extended<T>)> = None;
    let (margin, floor) = (config.margin(), c.objective_scale(sigma));
    loop {
        let subset = IndexSet::new(idx.clone())?;
        let v = c.evaluate(sigma, &subset, &config.tolerances)?;
        let better = match &best {
            None => true,
            Some((_, b)) => v.strictly_below_at(b, margin, floor),
        };
        if better {
            best = Some((idx.clone(), v));
        }
        // next combination
        let mut t = k;
        loop {
            if t == 0 {
                let (subset, objective) = best.expect("at least one subset");
                return Ok(SearchResult {
                    subset: IndexSet::new(subset)?,
                    objective,
                    trajectory: Vec::new(),
                    nested_subsets: Vec::new(),
                    sweeps_used: 0,
                    converged: true,
                    seed: None,
                });
            }
            t -= 1;
            if idx[t] < p - k + t {
                idx[t] += 1;
                for u in t + 1..k {
                    idx[u] = idx[u - 1] + 1;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::CriterionKind;

    fn css(p: usize, k: usize) -> SearchConfig<f64> {
        SearchConfig::new(Criterion::new(CriterionKind::CssTrace, p, k).unwrap())
    }

    #[test]
    fn greedy_examples() {
        let d = SymMatrix::from_diag(&[1.0, 2.0, 3.0]);
        let r = greedy(&d, &css(3, 2)).unwrap();
        assert_eq!(r.subset.as_slice(), &[2, 1]);
        assert_eq!(r.objective, Extended::Finite(1.0));
        assert_eq!(r.nested_subsets[0].as_slice(), &[2]);
        let ex = SymMatrix::from_lower_fn(3, |i, j| if i == j { 1.0 } else { 0.25 });
        assert_eq!(greedy(&ex, &css(3, 1)).unwrap().subset.as_slice(), &[0]);
    }

    #[test]
    fn swap_examples() {
        let d = SymMatrix::from_diag(&[1.0, 2.0, 3.0]);
        let r = swap(&d, &css(3, 1), SwapInit::Given(IndexSet::new(vec![0]).unwrap())).unwrap();
        assert_eq!(r.subset.as_slice(), &[2]);
        let fixed = swap(&d, &css(3, 1), SwapInit::Given(IndexSet::new(vec![2]).unwrap())).unwrap();
        assert_eq!(fixed.sweeps_used, 1);
        assert!(fixed.converged);
    }

    #[test]
    fn exhaustive_examples() {
        let d = SymMatrix::from_diag(&[1.0, 2.0, 3.0]);
        assert_eq!(exhaustive(&d, &css(3, 1)).unwrap().subset.as_slice(), &[2]);
        let full = exhaustive(&d, &css(3, 3)).unwrap();
        assert_eq!(full.objective, Extended::Finite(0.0));
        let mut cfg = css(30, 10);
        cfg.exhaustive_cap = 1000;
        let big = SymMatrix::<f64>::identity(30);
        assert!(matches!(exhaustive(&big, &cfg), Err(Error::TooManySubsets { .. })));
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(20, 4), 4845);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 4), 0);
    }

    #[test]
    fn rejects_invalid_inputs() {
        let bad = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(greedy(&bad, &css(2, 1)), Err(Error::NotPsd { .. })));
        let d = SymMatrix::<f64>::identity(3);
        assert!(matches!(greedy(&d, &css(3, 0)), Err(Error::KTooLarge { .. })));
        assert!(greedy(&d, &css(3, 1).with_restarts(0)).is_err());
    }

    #[test]
    fn random_subset_is_deterministic() {
        assert_eq!(random_subset(10, 4, 3), random_subset(10, 4, 3));
        assert_eq!(random_subset(10, 10, 1).sorted(), IndexSet::range(10));
    }
}

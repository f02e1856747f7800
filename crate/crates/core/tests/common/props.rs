//! Property suites shared by the proptest target and the acceptance harness.

use csskit::search::{greedy, random_subset, swap_with_observer, SearchConfig, SwapInit};
use csskit::sizesel::{mc_quantile_pcss, mc_quantile_subset_factor};
use csskit::symmat::psd_project;
use csskit::{CriterionKind, IndexSet, SymMatrix};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{criterion, gram_psd, random_pd, random_psd};

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn symmetric(p: usize, entries: &[f64]) -> SymMatrix<f64> {
    SymMatrix::from_lower_fn(p, |i, j| entries[i * p + j] + entries[j * p + i])
}

/// No PSD matrix is closer (in Frobenius norm) to a symmetric `A` than its
/// projection. Each case checks 1000 candidates: random PSD matrices, PSD
/// perturbations of the projection and mixtures of the two.
pub fn psd_projection_dominance(cases: u32) -> Result<(), String> {
    let strategy = (2usize..=6).prop_flat_map(|p| (Just(p), prop::collection::vec(-2.0..2.0f64, p * p), any::<u64>()));
    run(cases, strategy, |(p, entries, seed)| {
        let a = symmetric(p, &entries);
        let proj = psd_project(&a).unwrap();
        prop_assert!(proj.eigen().unwrap().min_value() >= -1e-10);
        let best = a.sub(&proj).frobenius();
        let slack = 1e-10 * (1.0 + a.frobenius());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for c in 0..1000 {
            let rank = rng.random_range(1..=p + 1);
            let g = gram_psd(&mut rng, p, rank).scaled(rng.random_range(0.01..4.0));
            let candidate = match c % 3 {
                0 => g,
                1 => proj.add(&g.scaled(rng.random_range(1e-6..1e-2))),
                _ => {
                    let t = rng.random_range(0.0..1.0);
                    proj.scaled(t).add(&g.scaled(1.0 - t))
                }
            };
            let d = a.sub(&candidate).frobenius();
            prop_assert!(best <= d + slack, "candidate {c} closer: {d} < {best}");
        }
        Ok(())
    })
}

fn kinds_and_k(p: usize) -> impl Iterator<Item = (CriterionKind, usize)> {
    CriterionKind::ALL.into_iter().map(move |kind| {
        let k = match kind {
            CriterionKind::DiagDet | CriterionKind::IsoLrt => p - 1,
            _ => p,
        };
        (kind, k)
    })
}

/// Greedy selections are nested: the size-`k'` answer is the first `k'`
/// variables of the size-`k` answer. The isotropic criterion is excluded
/// because its objective depends on the target size.
pub fn greedy_nested(cases: u32) -> Result<(), String> {
    run(cases, (3usize..=8, any::<u64>()), |(p, seed)| {
        let sigma = random_psd(seed, p);
        for (kind, k) in kinds_and_k(p).filter(|(kind, _)| *kind != CriterionKind::IsoLrt) {
            let full = greedy(&sigma, &SearchConfig::new(criterion(kind, p, k).unwrap())).unwrap();
            for kp in 1..k {
                let part = greedy(&sigma, &SearchConfig::new(criterion(kind, p, kp).unwrap())).unwrap();
                prop_assert_eq!(part.subset.as_slice(), &full.subset.as_slice()[..kp], "{} k={}", kind, kp);
                prop_assert_eq!(&full.nested_subsets[kp - 1], &part.subset);
            }
        }
        Ok(())
    })
}

/// The objective never increases along a swap trajectory, and every accepted
/// swap is strictly better than keeping the removed variable.
pub fn swap_monotone(cases: u32) -> Result<(), String> {
    run(cases, (3usize..=9, any::<u64>()), |(p, seed)| {
        let sigma = random_psd(seed, p);
        for kind in CriterionKind::ALL {
            let k_max = if matches!(kind, CriterionKind::DiagDet | CriterionKind::IsoLrt) { p - 1 } else { p };
            let k = 1 + (seed as usize % k_max);
            let config = SearchConfig::new(criterion(kind, p, k).unwrap());
            let init = random_subset(p, k, seed);
            let floor = config.criterion.score_scale(&sigma);
            let mut accepted_ok = true;
            let res = swap_with_observer(&sigma, &config, init.clone(), &mut |d| {
                if d.chosen != d.previous {
                    let s = |i: usize| d.scores.iter().find(|(c, _)| *c == i).unwrap().1;
                    accepted_ok &= s(d.chosen).strictly_below_at(&s(d.previous), config.margin(), floor);
                }
            })
            .unwrap();
            prop_assert!(accepted_ok, "{}: accepted a swap that was not strictly better", kind);
            let start = config.criterion.evaluate(&sigma, &init, &config.tolerances).unwrap();
            let margin = config.margin().max(1e-8);
            prop_assert!(!start.strictly_below(&res.objective, margin), "{}: {:?} -> {:?}", kind, start, res.objective);
            for w in res.trajectory.windows(2) {
                prop_assert!(!w[0].strictly_below(&w[1], margin), "{}: trajectory rose {:?} -> {:?}", kind, w[0], w[1]);
            }
        }
        Ok(())
    })
}

/// Multiplying the covariance by a positive constant does not change which
/// variables greedy (in order) or swap (as a set) select. Rescaling changes
/// rounding, so two subsets whose objectives agree to 1e-8 are exact ties in
/// exact arithmetic and either may be returned. Inputs are full rank: on
/// rank-deficient inputs a residual of pure rounding noise can land on either
/// side of the zero threshold after rescaling.
pub fn scale_equivariance(cases: u32) -> Result<(), String> {
    run(cases, (3usize..=8, any::<u64>(), -3.0..3.0f64), |(p, seed, log_c)| {
        let sigma = random_pd(seed, p);
        let scaled = sigma.scaled(10f64.powf(log_c));
        for (kind, k_max) in kinds_and_k(p) {
            let k = 1 + (seed as usize % k_max);
            let config = SearchConfig::new(criterion(kind, p, k).unwrap()).with_seed(seed).with_restarts(2);
            let tied = |a: &IndexSet, b: &IndexSet| {
                let f = |s: &IndexSet| config.criterion.evaluate(&sigma, s, &config.tolerances).unwrap();
                let floor = config.criterion.objective_scale(&sigma);
                let (fa, fb) = (f(a), f(b));
                !fa.strictly_below_at(&fb, 1e-8, floor) && !fb.strictly_below_at(&fa, 1e-8, floor)
            };
            let a = greedy(&sigma, &config).unwrap().subset;
            let b = greedy(&scaled, &config).unwrap().subset;
            prop_assert!(a == b || tied(&a, &b), "greedy {}: {} vs {}", kind, a, b);
            let a = csskit::search::swap(&sigma, &config, SwapInit::Random).unwrap().subset;
            let b = csskit::search::swap(&scaled, &config, SwapInit::Random).unwrap().subset;
            prop_assert!(a.same_members(&b) || tied(&a, &b), "swap {}: {} vs {}", kind, a, b);
        }
        Ok(())
    })
}

/// Monte Carlo critical values decrease as the subset size grows.
pub fn quantile_monotone(cases: u32) -> Result<(), String> {
    run(cases, (2usize..=12, 1usize..=150, any::<u64>(), any::<bool>()), |(p, extra, seed, pcss)| {
        let n = p + extra;
        let q = |k| {
            if pcss {
                mc_quantile_pcss(n, p, k, 0.05, 4000, seed).unwrap()
            } else {
                mc_quantile_subset_factor(n, p, k, 0.05, 4000, seed).unwrap()
            }
        };
        let qs: Vec<f64> = (0..p).map(q).collect();
        for k in 0..p - 1 {
            prop_assert!(qs[k] > qs[k + 1], "n={} p={} k={}: {:?}", n, p, k, qs);
        }
        prop_assert_eq!(qs[p - 1], 0.0);
        Ok(())
    })
}

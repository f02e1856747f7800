use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::{population_cov, sample, trial_seed, ScenarioSpec};
use crate::covest::pairwise_cov_psd;
use crate::criteria::{Criterion, CriterionKind};
use crate::error::{Error, Result};
use crate::search::{random_subset, swap, SearchConfig, SwapInit};
use crate::sizesel::{choose_k, ChooseKConfig};
use crate::symmat::{cc_sum, residual_covariance, IndexSet, SymMatrix};

const RANK_TOL: f64 = 1e-10;

/// Quality of one selected subset against the truth, measured on the
/// population covariance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrialMetrics {
    pub exact_recovery: bool,
    pub overlap: usize,
    pub pop_css_objective: f64,
    /// Sum of squared population canonical correlations with the true subset.
    pub cc_sum_value: f64,
}

pub fn trial_metrics(pop: &SymMatrix<f64>, truth: &IndexSet, selected: &IndexSet) -> Result<TrialMetrics> {
    let cc = if selected.is_empty() || truth.is_empty() {
        0.0
    } else {
        cc_sum(pop, selected, truth, RANK_TOL)?
    };
    Ok(TrialMetrics {
        exact_recovery: selected.same_members(truth),
        overlap: selected.intersection_len(truth),
        pop_css_objective: residual_covariance(pop, selected, RANK_TOL)?.trace(),
        cc_sum_value: cc,
    })
}

/// Mean and standard error of the mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub std_err: f64,
}

impl Summary {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        let n = v.len() as f64;
        if v.is_empty() {
            return Summary { mean: f64::NAN, std_err: f64::NAN };
        }
        let mean = v.iter().sum::<f64>() / n;
        let std_err = if v.len() > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        Summary { mean, std_err }
    }
}

fn subset_string(s: &IndexSet) -> String {
    s.sorted().iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
}

/// One row of the missing-data study: the swap selection and the random
/// baseline of a single trial.
#[derive(Clone, Debug, Serialize)]
pub struct MissingTrial {
    pub trial: usize,
    pub seed: u64,
    pub swap_subset: String,
    pub swap_exact_recovery: bool,
    pub swap_overlap: usize,
    pub swap_pop_css_objective: f64,
    pub swap_cc_sum: f64,
    pub random_subset: String,
    pub random_exact_recovery: bool,
    pub random_overlap: usize,
    pub random_pop_css_objective: f64,
    pub random_cc_sum: f64,
}

impl MissingTrial {
    /// Metrics of the named method (`"swap"` or `"random"`).
    pub fn metrics(&self, method: &str) -> Option<TrialMetrics> {
        let m = match method {
            "swap" => TrialMetrics {
                exact_recovery: self.swap_exact_recovery,
                overlap: self.swap_overlap,
                pop_css_objective: self.swap_pop_css_objective,
                cc_sum_value: self.swap_cc_sum,
            },
            "random" => TrialMetrics {
                exact_recovery: self.random_exact_recovery,
                overlap: self.random_overlap,
                pop_css_objective: self.random_pop_css_objective,
                cc_sum_value: self.random_cc_sum,
            },
            _ => return None,
        };
        Some(m)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MethodSummary {
    pub method: &'static str,
    pub trials: usize,
    pub exact_recovery_rate: f64,
    pub overlap: Summary,
    pub pop_css_objective: Summary,
    pub cc_sum: Summary,
}

#[derive(Clone, Debug, Serialize)]
pub struct MissingSummary {
    pub scenario: String,
    pub n: usize,
    pub restarts: usize,
    pub seed: u64,
    pub methods: Vec<MethodSummary>,
}

impl MissingSummary {
    pub fn method(&self, name: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == name)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MissingStudy {
    pub trials: Vec<MissingTrial>,
    pub summary: MissingSummary,
}

fn summarize_method(method: &'static str, rows: &[MissingTrial]) -> MethodSummary {
    let m: Vec<TrialMetrics> = rows.iter().filter_map(|r| r.metrics(method)).collect();
    let n = m.len();
    MethodSummary {
        method,
        trials: n,
        exact_recovery_rate: m.iter().filter(|t| t.exact_recovery).count() as f64 / n.max(1) as f64,
        overlap: Summary::of(m.iter().map(|t| t.overlap as f64)),
        pop_css_objective: Summary::of(m.iter().map(|t| t.pop_css_objective)),
        cc_sum: Summary::of(m.iter().map(|t| t.cc_sum_value)),
    }
}

/// Missing-data study: each trial samples `n` rows with entries missing at
/// random, estimates the covariance pairwise with a PSD projection, and
/// selects `k*` variables by swapping on the trace criterion. A uniformly
/// random subset is scored alongside as a baseline.
pub fn run_missing_study(spec: &ScenarioSpec, trials: usize, n: usize, restarts: usize, seed: u64) -> Result<MissingStudy> {
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    let pop = population_cov(spec)?;
    let p = spec.p;
    let k = spec.k_star();
    let config = SearchConfig::new(Criterion::new(CriterionKind::CssTrace, p, k)?).with_restarts(restarts);
    let rows: Vec<MissingTrial> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let ts = trial_seed(seed, t);
            let x = sample(spec, n, ts)?;
            let sigma_hat = pairwise_cov_psd(&x)?;
            let chosen = swap(&sigma_hat, &config.clone().with_seed(ts), SwapInit::Random)?.subset;
            let baseline = random_subset(p, k, ts ^ 0x5eed);
            let ours = trial_metrics(&pop, &spec.subset, &chosen)?;
            let base = trial_metrics(&pop, &spec.subset, &baseline)?;
            Ok(MissingTrial {
                trial: t,
                seed: ts,
                swap_subset: subset_string(&chosen),
                swap_exact_recovery: ours.exact_recovery,
                swap_overlap: ours.overlap,
                swap_pop_css_objective: ours.pop_css_objective,
                swap_cc_sum: ours.cc_sum_value,
                random_subset: subset_string(&baseline),
                random_exact_recovery: base.exact_recovery,
                random_overlap: base.overlap,
                random_pop_css_objective: base.pop_css_objective,
                random_cc_sum: base.cc_sum_value,
            })
        })
        .collect::<Result<_>>()?;
    let summary = MissingSummary {
        scenario: spec.name.clone(),
        n,
        restarts,
        seed,
        methods: vec![summarize_method("swap", &rows), summarize_method("random", &rows)],
    };
    Ok(MissingStudy { trials: rows, summary })
}

/// One row of the size-selection study.
#[derive(Clone, Debug, Serialize)]
pub struct SizeselTrial {
    pub trial: usize,
    pub seed: u64,
    pub k_hat: usize,
    pub overlap: usize,
    pub superset: bool,
    pub cc_sum: f64,
    pub subset: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SizeselSummary {
    pub scenario: String,
    pub n: usize,
    pub k_star: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Number of trials per chosen size.
    pub k_hat_counts: BTreeMap<usize, usize>,
    pub frac_exact: f64,
    pub frac_over: f64,
    pub frac_under: f64,
    /// Fraction with `k* <= k_hat <= k* + 2`.
    pub frac_near: f64,
    pub frac_superset: f64,
    pub median_overlap: f64,
    pub cc_sum: Summary,
}

#[derive(Clone, Debug, Serialize)]
pub struct SizeselStudy {
    pub trials: Vec<SizeselTrial>,
    pub summary: SizeselSummary,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m == 0 {
        f64::NAN
    } else if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Size-selection study: each trial samples `n` complete rows, runs
/// [`choose_k`] on the sample covariance and records the chosen size, its
/// overlap with the true subset and the population canonical-correlation sum.
/// The search seed of every trial is derived from `seed`; the Monte Carlo
/// seed in `config` is shared so critical values are computed once.
pub fn run_sizesel_study(
    spec: &ScenarioSpec,
    trials: usize,
    n: usize,
    config: &ChooseKConfig<f64>,
    seed: u64,
) -> Result<SizeselStudy> {
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    let pop = population_cov(spec)?;
    let truth = &spec.subset;
    let rows: Vec<SizeselTrial> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let ts = trial_seed(seed, t);
            let x = sample(spec, n, ts)?;
            let sigma_hat = crate::covest::sample_cov(&x)?;
            let mut cfg = config.clone();
            cfg.search_seed = ts;
            let report = choose_k(&sigma_hat, n, &cfg)?;
            let chosen = report.chosen_subset;
            let m = trial_metrics(&pop, truth, &chosen)?;
            Ok(SizeselTrial {
                trial: t,
                seed: ts,
                k_hat: report.chosen_k,
                overlap: m.overlap,
                superset: m.overlap == truth.len(),
                cc_sum: m.cc_sum_value,
                subset: subset_string(&chosen),
            })
        })
        .collect::<Result<_>>()?;
    let k_star = truth.len();
    let total = rows.len() as f64;
    let frac = |f: &dyn Fn(&SizeselTrial) -> bool| rows.iter().filter(|r| f(r)).count() as f64 / total;
    let mut k_hat_counts = BTreeMap::new();
    for r in &rows {
        *k_hat_counts.entry(r.k_hat).or_insert(0) += 1;
    }
    let summary = SizeselSummary {
        scenario: spec.name.clone(),
        n,
        k_star,
        alpha: config.alpha,
        seed,
        k_hat_counts,
        frac_exact: frac(&|r| r.k_hat == k_star),
        frac_over: frac(&|r| r.k_hat > k_star),
        frac_under: frac(&|r| r.k_hat < k_star),
        frac_near: frac(&|r| r.k_hat >= k_star && r.k_hat <= k_star + 2),
        frac_superset: frac(&|r| r.superset),
        median_overlap: median(rows.iter().map(|r| r.overlap as f64).collect()),
        cc_sum: Summary::of(rows.iter().map(|r| r.cc_sum)),
    };
    Ok(SizeselStudy { trials: rows, summary })
}

/// Writes serialisable rows as CSV with a header line.
pub fn write_csv<W: Write, R: Serialize>(writer: W, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(())
}

//! Choosing the subset size.
//!
//! For each candidate size `k` the best subset is found by swapping, its
//! likelihood-ratio statistic is compared with a Monte Carlo quantile of the
//! exact finite-sample null law, and the smallest `k` that is not rejected is
//! returned.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::criteria::{iso_term, residual_log_terms, Criterion, CriterionKind};
use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::scalar::Scalar;
use crate::search::{swap, SearchConfig, SwapInit};
use crate::symmat::{IndexSet, SymMatrix, Tolerances};

/// Default number of Monte Carlo draws per critical value.
pub const DEFAULT_MC_SAMPLES: usize = 100_000;

const MIN_MC_SAMPLES: usize = 1000;
const CHUNK: usize = 4096;

/// Generative model whose size is being tested.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SizeModel {
    /// Diagonal unique-factor covariance; statistic `T`, searched with
    /// [`CriterionKind::DiagDet`].
    SubsetFactor,
    /// Isotropic noise; statistic `T~`, searched with [`CriterionKind::IsoLrt`].
    Pcss,
}

impl SizeModel {
    pub fn name(&self) -> &'static str {
        match self {
            SizeModel::SubsetFactor => "subset-factor",
            SizeModel::Pcss => "pcss",
        }
    }

    pub fn criterion_kind(&self) -> CriterionKind {
        match self {
            SizeModel::SubsetFactor => CriterionKind::DiagDet,
            SizeModel::Pcss => CriterionKind::IsoLrt,
        }
    }
}

impl fmt::Display for SizeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SizeModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subset-factor" => Ok(SizeModel::SubsetFactor),
            "pcss" => Ok(SizeModel::Pcss),
            _ => Err(Error::InvalidArgument(format!("unknown model '{s}'"))),
        }
    }
}

fn check_subset<T: Scalar>(sigma_hat: &SymMatrix<T>, subset: &IndexSet) -> Result<()> {
    let p = sigma_hat.dim();
    subset.validate(p)?;
    if subset.len() >= p {
        return Err(Error::KTooLarge { k: subset.len(), p });
    }
    Ok(())
}

// n * (a - b) with the conventions for vanishing determinants: zero when both
// sides vanish, infinite when only the denominator does.
fn log_ratio<T: Scalar>(n: usize, num: Extended<T>, den: Extended<T>) -> T {
    match (num, den) {
        (Extended::Finite(a), Extended::Finite(b)) => T::from_usize_lossy(n) * (a - b),
        (Extended::Finite(_), Extended::NegInfinity) => T::infinity(),
        (Extended::NegInfinity, _) => T::zero(),
    }
}

/// `T(U) = n log(|Diag R| / |R|)` for the residual `R` of the unselected
/// variables given `U`.
pub fn stat_t<T: Scalar>(sigma_hat: &SymMatrix<T>, n: usize, subset: &IndexSet, tol: &Tolerances<T>) -> Result<T> {
    check_subset(sigma_hat, subset)?;
    if sigma_hat.dim() - subset.len() <= 1 {
        return Ok(T::zero());
    }
    let t = residual_log_terms(sigma_hat, subset, tol)?;
    Ok(log_ratio(n, t.log_diag, t.log_det_residual))
}

/// `T~(U) = n log((Tr R / m)^m / |R|)` with `m = p - |U|`.
pub fn stat_ttilde<T: Scalar>(sigma_hat: &SymMatrix<T>, n: usize, subset: &IndexSet, tol: &Tolerances<T>) -> Result<T> {
    check_subset(sigma_hat, subset)?;
    let m = sigma_hat.dim() - subset.len();
    if m <= 1 {
        return Ok(T::zero());
    }
    let t = residual_log_terms(sigma_hat, subset, tol)?;
    let iso = iso_term(t.trace, m, tol.absolute_zero(sigma_hat));
    Ok(log_ratio(n, iso, t.log_det_residual))
}

/// Statistic of `model` for `subset`.
pub fn statistic<T: Scalar>(
    model: SizeModel,
    sigma_hat: &SymMatrix<T>,
    n: usize,
    subset: &IndexSet,
    tol: &Tolerances<T>,
) -> Result<T> {
    match model {
        SizeModel::SubsetFactor => stat_t(sigma_hat, n, subset, tol),
        SizeModel::Pcss => stat_ttilde(sigma_hat, n, subset, tol),
    }
}

fn check_mc_args(n: usize, p: usize, k: usize, alpha: f64, mc_samples: usize) -> Result<()> {
    if k >= p {
        return Err(Error::KTooLarge { k, p });
    }
    if n <= p {
        return Err(Error::DegreesOfFreedom { n, p, k });
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if mc_samples < MIN_MC_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_MC_SAMPLES} Monte Carlo samples are required, got {mc_samples}"
        )));
    }
    Ok(())
}

fn chi2(df: usize) -> ChiSquared<f64> {
    ChiSquared::new(df as f64).expect("positive degrees of freedom")
}

// One draw from the null law of each statistic. `dens[j]` has `n - k - j`
// degrees of freedom for j = 1..=p-k (index 0 unused).
enum NullLaw {
    SubsetFactor { nums: Vec<ChiSquared<f64>>, dens: Vec<ChiSquared<f64>> },
    Pcss { off: Option<ChiSquared<f64>>, dens: Vec<ChiSquared<f64>> },
}

impl NullLaw {
    fn new(model: SizeModel, n: usize, p: usize, k: usize) -> Self {
        let m = p - k;
        match model {
            SizeModel::SubsetFactor => NullLaw::SubsetFactor {
                nums: (2..=m).map(|j| chi2(j - 1)).collect(),
                dens: (2..=m).map(|j| chi2(n - k - j)).collect(),
            },
            SizeModel::Pcss => NullLaw::Pcss {
                off: (m > 1).then(|| chi2(m * (m - 1) / 2)),
                dens: (1..=m).map(|j| chi2(n - k - j)).collect(),
            },
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R, n: f64) -> f64 {
        match self {
            NullLaw::SubsetFactor { nums, dens } => {
                let mut s = 0.0;
                for (a, b) in nums.iter().zip(dens) {
                    let num = a.sample(rng);
                    let den = b.sample(rng);
                    s += (num / den).ln_1p();
                }
                n * s
            }
            NullLaw::Pcss { off, dens } => {
                let Some(off) = off else {
                    return 0.0;
                };
                let m = dens.len() as f64;
                let extra = off.sample(rng);
                let mut sum = extra;
                let mut log_prod = 0.0;
                for d in dens {
                    let v = d.sample(rng);
                    sum += v;
                    log_prod += v.ln();
                }
                n * (m * (sum / m).ln() - log_prod)
            }
        }
    }
}

/// `mc_samples` independent draws from the null law of the statistic, in a
/// fixed order. Draws are generated in chunks, each on its own ChaCha stream
/// of `seed`, so the result does not depend on the thread count.
pub fn null_samples(model: SizeModel, n: usize, p: usize, k: usize, mc_samples: usize, seed: u64) -> Result<Vec<f64>> {
    if k >= p {
        return Err(Error::KTooLarge { k, p });
    }
    if n <= p {
        return Err(Error::DegreesOfFreedom { n, p, k });
    }
    if k + 1 == p {
        return Ok(vec![0.0; mc_samples]);
    }
    let law = NullLaw::new(model, n, p, k);
    let nf = n as f64;
    let chunks = mc_samples.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(mc_samples - c * CHUNK);
            (0..len).map(|_| law.draw(&mut rng, nf)).collect()
        })
        .collect();
    Ok(parts.concat())
}

/// Empirical `(1 - alpha)` quantile: the `ceil((1 - alpha) m)`-th smallest of
/// `m` values.
pub fn upper_quantile(samples: &mut [f64], alpha: f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let m = samples.len();
    let rank = ((1.0 - alpha) * m as f64).ceil() as usize;
    samples[rank.clamp(1, m) - 1]
}

fn mc_quantile(model: SizeModel, n: usize, p: usize, k: usize, alpha: f64, mc_samples: usize, seed: u64) -> Result<f64> {
    check_mc_args(n, p, k, alpha, mc_samples)?;
    let mut draws = null_samples(model, n, p, k, mc_samples, seed)?;
    Ok(upper_quantile(&mut draws, alpha))
}

/// Critical value for `T` under the subset factor model.
pub fn mc_quantile_subset_factor(n: usize, p: usize, k: usize, alpha: f64, mc_samples: usize, seed: u64) -> Result<f64> {
    mc_quantile(SizeModel::SubsetFactor, n, p, k, alpha, mc_samples, seed)
}

/// Critical value for `T~` under the isotropic-noise model.
pub fn mc_quantile_pcss(n: usize, p: usize, k: usize, alpha: f64, mc_samples: usize, seed: u64) -> Result<f64> {
    mc_quantile(SizeModel::Pcss, n, p, k, alpha, mc_samples, seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct CacheKey {
    model: SizeModel,
    n: usize,
    p: usize,
    k: usize,
    alpha_bits: u64,
    mc_samples: usize,
    seed: u64,
}

fn cache() -> &'static Mutex<HashMap<CacheKey, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Memoised critical value, shared process-wide. The lock is not held while
/// sampling, so concurrent misses on one key may both compute it; the values
/// are identical.
pub fn critical_value(model: SizeModel, n: usize, p: usize, k: usize, alpha: f64, mc_samples: usize, seed: u64) -> Result<f64> {
    let key = CacheKey {
        model,
        n,
        p,
        k,
        alpha_bits: alpha.to_bits(),
        mc_samples,
        seed,
    };
    if let Some(&v) = cache().lock().expect("cache lock").get(&key) {
        return Ok(v);
    }
    let v = mc_quantile(model, n, p, k, alpha, mc_samples, seed)?;
    cache().lock().expect("cache lock").insert(key, v);
    Ok(v)
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Settings for [`choose_k`].
#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "T: Scalar + Serialize"))]
pub struct ChooseKConfig<T> {
    pub alpha: f64,
    pub model: SizeModel,
    pub mc_samples: usize,
    /// Seed of the Monte Carlo critical values.
    pub mc_seed: u64,
    /// Random initialisations of the swapping search at each size.
    pub restarts: usize,
    pub search_seed: u64,
    pub max_sweeps: usize,
    /// Largest size tested; defaults to `p - 1`.
    pub max_k: Option<usize>,
    #[serde(skip)]
    pub tolerances: Tolerances<T>,
}

impl<T: Scalar> ChooseKConfig<T> {
    pub fn new(alpha: f64, model: SizeModel) -> Self {
        ChooseKConfig {
            alpha,
            model,
            mc_samples: DEFAULT_MC_SAMPLES,
            mc_seed: 0,
            restarts: 1,
            search_seed: 0,
            max_sweeps: 100,
            max_k: None,
            tolerances: Tolerances::default(),
        }
    }

    pub fn with_seeds(mut self, mc_seed: u64, search_seed: u64) -> Self {
        self.mc_seed = mc_seed;
        self.search_seed = search_seed;
        self
    }

    pub fn with_mc_samples(mut self, mc_samples: usize) -> Self {
        self.mc_samples = mc_samples;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }
}

/// Outcome of one size test.
#[derive(Clone, Debug, Serialize)]
pub struct SizeTestRecord {
    pub k: usize,
    pub subset: IndexSet,
    pub statistic: f64,
    pub critical_value: f64,
    pub reject: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ToleranceReport {
    pub rank_tol: f64,
    pub zero_tol: f64,
    pub tie_margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SizeSelectionReport {
    pub n: usize,
    pub p: usize,
    pub model: SizeModel,
    pub alpha: f64,
    pub mc_samples: usize,
    pub mc_seed: u64,
    pub search_seed: u64,
    pub restarts: usize,
    pub tolerances: ToleranceReport,
    /// Tests for `k = 0, 1, ..., chosen_k`.
    pub records: Vec<SizeTestRecord>,
    pub chosen_k: usize,
    pub chosen_subset: IndexSet,
}

/// Tests `k = 0, 1, ...` and stops at the first size that is not rejected.
pub fn choose_k<T: Scalar>(sigma_hat: &SymMatrix<T>, n: usize, config: &ChooseKConfig<T>) -> Result<SizeSelectionReport> {
    let p = sigma_hat.dim();
    if p == 0 {
        return Err(Error::Empty);
    }
    if n <= p {
        return Err(Error::DegreesOfFreedom { n, p, k: 0 });
    }
    check_mc_args(n, p, 0, config.alpha, config.mc_samples)?;
    if config.restarts == 0 {
        return Err(Error::InvalidConfig("restarts must be at least 1".into()));
    }
    let k_max = config.max_k.map_or(p - 1, |m| m.min(p - 1));
    let tol = &config.tolerances;
    let mut records = Vec::new();
    for k in 0..=k_max {
        let subset = if k == 0 {
            IndexSet::empty()
        } else {
            let criterion = Criterion::new(config.model.criterion_kind(), p, k)?;
            let mut search = SearchConfig::new(criterion)
                .with_restarts(config.restarts)
                .with_seed(config.search_seed)
                .with_max_sweeps(config.max_sweeps);
            search.tolerances = *tol;
            swap(sigma_hat, &search, SwapInit::Random)?.subset
        };
        let stat = statistic(config.model, sigma_hat, n, &subset, tol)?.to_f64_lossy();
        let crit = critical_value(config.model, n, p, k, config.alpha, config.mc_samples, config.mc_seed)?;
        let reject = stat > crit;
        records.push(SizeTestRecord {
            k,
            subset: subset.clone(),
            statistic: stat,
            critical_value: crit,
            reject,
        });
        if !reject {
            return Ok(SizeSelectionReport {
                n,
                p,
                model: config.model,
                alpha: config.alpha,
                mc_samples: config.mc_samples,
                mc_seed: config.mc_seed,
                search_seed: config.search_seed,
                restarts: config.restarts,
                tolerances: ToleranceReport {
                    rank_tol: tol.rank_tol.to_f64_lossy(),
                    zero_tol: tol.zero_tol.to_f64_lossy(),
                    tie_margin: T::default_tie_margin().to_f64_lossy(),
                },
                records,
                chosen_k: k,
                chosen_subset: subset,
            });
        }
    }
    Err(Error::NoFeasibleK)
}

//! Generative scenarios for the simulation studies.
//!
//! A scenario draws the selected variables `X_S ~ N(0, Sigma_S)` and sets
//! `X_{-S} = W X_S + mu_{-S} + eps` with independent unique factors `eps`.
//! Isotropic Gaussian noise gives the PCSS model; per-coordinate variances and
//! laws give the subset factor model.

mod presets;
mod study;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, StudentT};
use serde::Serialize;

use crate::covest::DataMatrix;
use crate::error::{Error, Result};
use crate::sizesel::SizeModel;
use crate::symmat::{IndexSet, Matrix, SymMatrix};

pub use presets::{preset_a1, preset_a2, FactorSet, PRESET_A2_SIGNALS};
pub use study::{
    run_missing_study, run_sizesel_study, trial_metrics, MissingStudy, MissingSummary, MissingTrial, SizeselStudy,
    SizeselSummary, SizeselTrial, Summary, TrialMetrics, MethodSummary, write_csv,
};

/// Distribution of one unique factor before scaling to its variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorLaw {
    Gaussian,
    /// `+1` or `-1` with probability one half.
    Rademacher,
    /// Student t with `df > 2` degrees of freedom.
    StudentT(f64),
    /// `Exp(1) - 1`.
    CenteredExponential,
}

impl FactorLaw {
    /// A draw with mean zero and variance `variance`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, variance: f64) -> f64 {
        let sd = variance.sqrt();
        match *self {
            FactorLaw::Gaussian => sd * rng.sample::<f64, _>(StandardNormal),
            FactorLaw::Rademacher => {
                if rng.random::<bool>() {
                    sd
                } else {
                    -sd
                }
            }
            FactorLaw::StudentT(df) => {
                let t = StudentT::new(df).expect("valid degrees of freedom").sample(rng);
                t * (variance * (df - 2.0) / df).sqrt()
            }
            FactorLaw::CenteredExponential => sd * (rng.sample::<f64, _>(Exp1) - 1.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Noise {
    /// `N(0, sigma2 I)`.
    Isotropic { sigma2: f64 },
    /// Independent factors with variances `d` and the given laws.
    Diagonal { d: Vec<f64>, laws: Vec<FactorLaw> },
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub p: usize,
    pub subset: IndexSet,
    /// Covariance of the selected variables, in `subset` order.
    #[serde(skip)]
    pub sigma_s: SymMatrix<f64>,
    /// `(p - k) x k` coefficients; row `t` belongs to the `t`-th unselected
    /// variable in increasing order.
    #[serde(skip)]
    pub w: Matrix<f64>,
    pub noise: Noise,
    pub mu: Vec<f64>,
    /// Probability of omitting each entry independently; 0 disables.
    pub mar_prob: f64,
}

impl ScenarioSpec {
    pub fn k_star(&self) -> usize {
        self.subset.len()
    }

    pub fn model(&self) -> SizeModel {
        match self.noise {
            Noise::Isotropic { .. } => SizeModel::Pcss,
            Noise::Diagonal { .. } => SizeModel::SubsetFactor,
        }
    }

    /// Variances of the unique factors.
    pub fn noise_variances(&self) -> Vec<f64> {
        match &self.noise {
            Noise::Isotropic { sigma2 } => vec![*sigma2; self.p - self.k_star()],
            Noise::Diagonal { d, .. } => d.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p;
        self.subset.validate(p)?;
        let k = self.k_star();
        let dim = |context: &'static str, expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(Error::DimMismatch { context, expected, found })
            }
        };
        dim("scenario sigma_s", k, self.sigma_s.dim())?;
        dim("scenario w rows", p - k, self.w.rows())?;
        dim("scenario w cols", k, self.w.cols())?;
        dim("scenario mu", p, self.mu.len())?;
        match &self.noise {
            Noise::Isotropic { sigma2 } => {
                if !(*sigma2 > 0.0) {
                    return Err(Error::InvalidConfig("noise variance must be positive".into()));
                }
            }
            Noise::Diagonal { d, laws } => {
                dim("scenario d", p - k, d.len())?;
                dim("scenario laws", p - k, laws.len())?;
                if d.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::InvalidConfig("unique factor variances must be positive".into()));
                }
                if laws.iter().any(|l| matches!(l, FactorLaw::StudentT(df) if !(*df > 2.0))) {
                    return Err(Error::InvalidConfig("t factors need more than 2 degrees of freedom".into()));
                }
            }
        }
        if !(0.0..1.0).contains(&self.mar_prob) {
            return Err(Error::InvalidConfig("mar_prob must lie in [0, 1)".into()));
        }
        if !self.sigma_s.is_finite() || !self.w.is_finite() || self.mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }
}

/// Exact covariance of the scenario in natural variable order:
/// `Sigma_S`, `W Sigma_S` and `W Sigma_S W^T + D` placed blockwise.
pub fn population_cov(spec: &ScenarioSpec) -> Result<SymMatrix<f64>> {
    spec.validate()?;
    let p = spec.p;
    let s = spec.subset.as_slice();
    let rest = spec.subset.complement(p);
    let rest = rest.as_slice();
    let k = s.len();
    let ws = Matrix::from_fn(p - k, k, |t, j| (0..k).map(|l| spec.w.get(t, l) * spec.sigma_s.get(l, j)).sum());
    let d = spec.noise_variances();
    let mut out = SymMatrix::zeros(p);
    for a in 0..k {
        for b in 0..=a {
            out.set(s[a], s[b], spec.sigma_s.get(a, b));
        }
    }
    for t in 0..p - k {
        for j in 0..k {
            out.set(rest[t], s[j], ws.get(t, j));
        }
        for u in 0..=t {
            let mut v: f64 = (0..k).map(|j| ws.get(t, j) * spec.w.get(u, j)).sum();
            if u == t {
                v += d[t];
            }
            out.set(rest[t], rest[u], v);
        }
    }
    Ok(out)
}

// Columns of `L` with `L L^T = sigma_s`, from the eigendecomposition so
// singular blocks are allowed.
fn root(sigma_s: &SymMatrix<f64>) -> Result<Matrix<f64>> {
    let k = sigma_s.dim();
    if k == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let e = sigma_s.eigen()?;
    Ok(Matrix::from_fn(k, k, |i, j| e.vectors.get(i, j) * e.values[j].max(0.0).sqrt()))
}

/// `n` independent draws from the scenario, with each entry then omitted with
/// probability `mar_prob`.
pub fn sample(spec: &ScenarioSpec, n: usize, seed: u64) -> Result<DataMatrix<f64>> {
    spec.validate()?;
    let p = spec.p;
    let s = spec.subset.as_slice();
    let rest = spec.subset.complement(p);
    let rest = rest.as_slice();
    let k = s.len();
    let l = root(&spec.sigma_s)?;
    let d = spec.noise_variances();
    let laws: Vec<FactorLaw> = match &spec.noise {
        Noise::Isotropic { .. } => vec![FactorLaw::Gaussian; p - k],
        Noise::Diagonal { laws, .. } => laws.clone(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![0.0; n * p];
    let mut z = vec![0.0; k];
    let mut xs = vec![0.0; k];
    for row in values.chunks_mut(p) {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        for (a, x) in xs.iter_mut().enumerate() {
            *x = (0..k).map(|j| l.get(a, j) * z[j]).sum();
        }
        for (a, &i) in s.iter().enumerate() {
            row[i] = spec.mu[i] + xs[a];
        }
        for (t, &i) in rest.iter().enumerate() {
            let signal: f64 = (0..k).map(|j| spec.w.get(t, j) * xs[j]).sum();
            row[i] = spec.mu[i] + signal + laws[t].draw(&mut rng, d[t]);
        }
    }
    let mut data = DataMatrix::complete(n, p, values)?;
    if spec.mar_prob > 0.0 {
        let mut mask_rng = ChaCha8Rng::seed_from_u64(seed);
        mask_rng.set_stream(1);
        data.mask_where(|_, _| mask_rng.random::<f64>() < spec.mar_prob);
    }
    Ok(data)
}

/// Seed for trial `t` of a study seeded with `seed`.
pub fn trial_seed(seed: u64, t: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t as u64 + 1);
    rng.next_u64()
}

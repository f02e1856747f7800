use serde::Serialize;

use super::{FactorLaw, Noise, ScenarioSpec};
use crate::symmat::{IndexSet, Matrix, SymMatrix};

pub(crate) const A1_W: &str = include_str!("../../data/a1_w.csv");
pub(crate) const A2_W: &str = include_str!("../../data/a2_w.csv");
pub(crate) const A2_NOISE: &str = include_str!("../../data/a2_noise.csv");

/// Signal levels of the size-selection study, from strongest to weakest.
pub const PRESET_A2_SIGNALS: [f64; 5] = [0.254, 0.812, 2.71, 9.2, 30.0];

/// Unique-factor laws of the size-selection preset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorSet {
    Gaussian,
    /// Centred exponential, Rademacher and scaled t3 factors.
    Mixed,
}

fn records(text: &str, header: bool) -> Vec<csv::StringRecord> {
    csv::ReaderBuilder::new()
        .has_headers(header)
        .from_reader(text.as_bytes())
        .records()
        .collect::<Result<_, _>>()
        .expect("bundled preset file is valid csv")
}

fn equicorrelated_blocks(blocks: usize, size: usize, diag: f64, off: f64) -> SymMatrix<f64> {
    SymMatrix::from_lower_fn(blocks * size, |i, j| {
        if i == j {
            diag
        } else if i / size == j / size {
            off
        } else {
            0.0
        }
    })
}

/// PCSS scenario with `p = 20`, `S = {0, 1, 2, 3}`, equicorrelated
/// `Sigma_S = 0.75 I + 0.25 11^T`, noise variance 0.15 and unit variances.
pub fn preset_a1(mar_prob: f64) -> ScenarioSpec {
    let a = (17.0f64 / 90.0).sqrt();
    let b = (17.0f64 / 50.0).sqrt();
    let rows: Vec<Vec<f64>> = records(A1_W, false)
        .iter()
        .map(|r| {
            r.iter()
                .map(|tok| match tok {
                    "0" => 0.0,
                    "a" => a,
                    "-a" => -a,
                    "b" => b,
                    "-b" => -b,
                    other => panic!("unexpected token {other} in preset"),
                })
                .collect()
        })
        .collect();
    ScenarioSpec {
        name: "missing-a1".into(),
        p: 20,
        subset: IndexSet::range(4),
        sigma_s: equicorrelated_blocks(1, 4, 1.0, 0.25),
        w: Matrix::from_rows(&rows).expect("rectangular preset"),
        noise: Noise::Isotropic { sigma2: 0.15 },
        mu: vec![0.0; 20],
        mar_prob,
    }
}

/// Subset factor scenario with `p = 50`, `S = {0, ..., 19}`, five
/// equicorrelated blocks `0.5 I + 0.5 11^T`, sparse sign matrix `W` and
/// unique-factor variances `signal * ((t mod 6) + 1)`.
pub fn preset_a2(signal: f64, factors: FactorSet) -> ScenarioSpec {
    let rows: Vec<Vec<f64>> = records(A2_W, false)
        .iter()
        .map(|r| r.iter().map(|tok| tok.parse::<f64>().expect("numeric preset")).collect())
        .collect();
    let noise = records(A2_NOISE, true);
    let d = noise
        .iter()
        .map(|r| signal * r[1].parse::<f64>().expect("numeric preset"))
        .collect();
    let laws = noise
        .iter()
        .map(|r| match factors {
            FactorSet::Gaussian => FactorLaw::Gaussian,
            FactorSet::Mixed => match &r[2] {
                "exp" => FactorLaw::CenteredExponential,
                "rademacher" => FactorLaw::Rademacher,
                "t3" => FactorLaw::StudentT(3.0),
                other => panic!("unexpected law {other} in preset"),
            },
        })
        .collect();
    ScenarioSpec {
        name: "sizesel-a2".into(),
        p: 50,
        subset: IndexSet::range(20),
        sigma_s: equicorrelated_blocks(5, 4, 1.0, 0.5),
        w: Matrix::from_rows(&rows).expect("rectangular preset"),
        noise: Noise::Diagonal { d, laws },
        mu: vec![0.0; 50],
        mar_prob: 0.0,
    }
}

#![allow(dead_code)]

pub mod props;

use csskit::{Criterion, CriterionKind, IndexSet, Matrix, SymMatrix};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// `X^T X / m` for an `m x p` Gaussian `X`; rank-deficient when `m < p`.
pub fn gram_psd(rng: &mut ChaCha8Rng, p: usize, m: usize) -> SymMatrix<f64> {
    let x = Matrix::from_fn(m, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    x.gram().scaled(1.0 / m as f64)
}

/// Random covariance with random rank in `1..=p + 2` and random column scales.
pub fn random_psd(seed: u64, p: usize) -> SymMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(1..=p + 2);
    let g = gram_psd(&mut rng, p, m);
    let scale: Vec<f64> = (0..p).map(|_| rng.random_range(0.3..3.0)).collect();
    SymMatrix::from_lower_fn(p, |i, j| g.get(i, j) * scale[i] * scale[j])
}

/// Random covariance whose rank deficiency is exact: `r` well-conditioned
/// base columns, and the rest are signed sums of one or two base columns. Any
/// principal block is then either exactly singular or well conditioned, so
/// pseudo-inverses are stable under the rank threshold.
pub fn structured_psd(seed: u64, p: usize) -> SymMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = rng.random_range(1..=p);
    let m = 3 * r + 5;
    let base = Matrix::from_fn(m, r, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut coef = vec![vec![0.0; r]; p];
    for (c, row) in coef.iter_mut().enumerate() {
        if c < r {
            row[c] = 1.0;
        } else {
            for _ in 0..rng.random_range(1..=2) {
                row[rng.random_range(0..r)] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            }
        }
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(&mut rng);
    let scale: Vec<f64> = (0..p).map(|_| rng.random_range(0.5..2.0)).collect();
    let x = Matrix::from_fn(m, p, |i, j| {
        let row = &coef[order[j]];
        scale[j] * (0..r).map(|t| base.get(i, t) * row[t]).sum::<f64>()
    });
    x.gram().scaled(1.0 / m as f64)
}

/// Full-rank random covariance.
pub fn random_pd(seed: u64, p: usize) -> SymMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gram_psd(&mut rng, p, 2 * p + 3)
}

/// Random correlation matrix of a data set with a few latent factors.
pub fn factor_correlation(seed: u64, p: usize, n: usize, factors: usize) -> SymMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let load = Matrix::from_fn(p, factors, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut x = Matrix::zeros(n, p);
    for r in 0..n {
        let f: Vec<f64> = (0..factors).map(|_| rng.sample(StandardNormal)).collect();
        for c in 0..p {
            let signal: f64 = (0..factors).map(|t| load.get(c, t) * f[t]).sum();
            x.set(r, c, signal + rng.sample::<f64, _>(StandardNormal));
        }
    }
    let data = csskit::covest::DataMatrix::from_matrix(&x).unwrap();
    let cov = csskit::covest::sample_cov(&data).unwrap();
    csskit::covest::to_correlation(&cov).unwrap()
}

/// Criterion of `kind` for size `k`, or `None` where `k` is not allowed.
pub fn criterion(kind: CriterionKind, p: usize, k: usize) -> Option<Criterion> {
    Criterion::new(kind, p, k).ok()
}

pub fn set(v: &[usize]) -> IndexSet {
    IndexSet::new(v.to_vec()).unwrap()
}

/// Prints one acceptance line and reports whether it passed.
pub fn report(id: usize, name: &str, pass: bool, detail: &str, secs: f64) -> bool {
    println!(
        "criterion {id} [{}] {name}: {detail} ({secs:.1}s)",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

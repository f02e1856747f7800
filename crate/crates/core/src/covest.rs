//! Covariance estimation: sample covariance, the pairwise-complete estimator
//! for data missing at random, correlation scaling and CSV interchange.
//!
//! All covariances use divisor `n` (not `n - 1`), so that for complete data
//! the estimate is exactly `X'X / n` of the column-centred data.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::symmat::{psd_project, Matrix, SymMatrix};

/// `n x p` samples with an explicit observation mask.
#[derive(Clone, Debug, PartialEq)]
pub struct DataMatrix<T> {
    n: usize,
    p: usize,
    values: Vec<T>,
    observed: Vec<bool>,
}

impl<T: Scalar> DataMatrix<T> {
    /// Complete data from row-major values.
    pub fn complete(n: usize, p: usize, values: Vec<T>) -> Result<Self> {
        Self::with_mask(n, p, values, vec![true; n * p])
    }

    /// Row-major values with an observation mask; unobserved values are ignored.
    pub fn with_mask(n: usize, p: usize, values: Vec<T>, observed: Vec<bool>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::Empty);
        }
        for len in [values.len(), observed.len()] {
            if len != n * p {
                return Err(Error::DimMismatch {
                    context: "covest",
                    expected: n * p,
                    found: len,
                });
            }
        }
        if values.iter().zip(&observed).any(|(v, &o)| o && !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(DataMatrix { n, p, values, observed })
    }

    /// Rows of optional values (`None` is missing).
    pub fn from_rows(rows: &[Vec<Option<T>>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * p);
        let mut observed = Vec::with_capacity(rows.len() * p);
        for r in rows {
            if r.len() != p {
                return Err(Error::DimMismatch {
                    context: "covest",
                    expected: p,
                    found: r.len(),
                });
            }
            for v in r {
                values.push(v.unwrap_or_else(T::zero));
                observed.push(v.is_some());
            }
        }
        Self::with_mask(rows.len(), p, values, observed)
    }

    pub fn from_matrix(x: &Matrix<T>) -> Result<Self> {
        Self::complete(x.rows(), x.cols(), x.as_slice().to_vec())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn get(&self, i: usize, j: usize) -> Option<T> {
        let at = i * self.p + j;
        self.observed[at].then(|| self.values[at])
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.observed[i * self.p + j]
    }

    pub fn has_missing(&self) -> bool {
        self.observed.iter().any(|&o| !o)
    }

    pub fn missing_count(&self) -> usize {
        self.observed.iter().filter(|&&o| !o).count()
    }

    pub fn observed_in_column(&self, j: usize) -> usize {
        (0..self.n).filter(|&i| self.is_observed(i, j)).count()
    }

    /// Marks entries as missing where `drop(i, j)` is true.
    pub fn mask_where(&mut self, mut drop: impl FnMut(usize, usize) -> bool) {
        for i in 0..self.n {
            for j in 0..self.p {
                if drop(i, j) {
                    self.observed[i * self.p + j] = false;
                }
            }
        }
    }

    /// The values as a dense matrix; fails when any entry is missing.
    pub fn to_matrix(&self) -> Result<Matrix<T>> {
        if self.has_missing() {
            return Err(Error::HasMissing);
        }
        Matrix::from_row_major(self.n, self.p, self.values.clone())
    }

    /// Column means over the observed entries.
    pub fn column_means(&self) -> Vec<T> {
        (0..self.p)
            .map(|j| {
                let mut sum = T::zero();
                let mut count = 0usize;
                for i in 0..self.n {
                    if self.is_observed(i, j) {
                        sum += self.values[i * self.p + j];
                        count += 1;
                    }
                }
                if count == 0 {
                    T::zero()
                } else {
                    sum / T::from_usize_lossy(count)
                }
            })
            .collect()
    }
}

// Entry (s, t) averages the centred products over samples observing both
// variables; columns are centred with their own observed means. With no
// missing values this is exactly X'X / n of the centred data.
fn pairwise_products<T: Scalar>(x: &DataMatrix<T>) -> (SymMatrix<T>, Vec<usize>) {
    let (n, p) = (x.n, x.p);
    let means = x.column_means();
    let centred: Vec<T> = (0..n * p).map(|a| x.values[a] - means[a % p]).collect();
    let rows: Vec<(Vec<T>, Vec<usize>)> = (0..p)
        .into_par_iter()
        .map(|s| {
            let mut vals = Vec::with_capacity(s + 1);
            let mut counts = Vec::with_capacity(s + 1);
            for t in 0..=s {
                let mut acc = T::zero();
                let mut count = 0usize;
                for i in 0..n {
                    if x.observed[i * p + s] && x.observed[i * p + t] {
                        acc += centred[i * p + s] * centred[i * p + t];
                        count += 1;
                    }
                }
                counts.push(count);
                vals.push(if count == 0 {
                    T::zero()
                } else {
                    acc / T::from_usize_lossy(count)
                });
            }
            (vals, counts)
        })
        .collect();
    let mut pair_counts = vec![0usize; p * p];
    let psi = SymMatrix::from_lower_fn(p, |s, t| {
        pair_counts[s * p + t] = rows[s].1[t];
        pair_counts[t * p + s] = rows[s].1[t];
        rows[s].0[t]
    });
    (psi, pair_counts)
}

/// Sample covariance `X'X / n` of the column-centred data.
pub fn sample_cov<T: Scalar>(x: &DataMatrix<T>) -> Result<SymMatrix<T>> {
    if x.has_missing() {
        return Err(Error::HasMissing);
    }
    Ok(pairwise_products(x).0)
}

/// Diagnostics of [`pairwise_cov_psd_with_diagnostics`].
#[derive(Clone, Debug, Serialize)]
pub struct CovDiagnostics {
    /// Smallest eigenvalue of the pairwise estimate before projection.
    pub min_eigenvalue_before: f64,
    /// Smallest eigenvalue of the returned matrix.
    pub min_eigenvalue_after: f64,
    pub projected: bool,
    /// Jointly observed sample counts, row-major `p x p`.
    pub pair_counts: Vec<Vec<usize>>,
    pub min_pair_count: usize,
    pub missing_entries: usize,
}

/// Pairwise-complete covariance projected onto the PSD cone.
pub fn pairwise_cov_psd<T: Scalar>(x: &DataMatrix<T>) -> Result<SymMatrix<T>> {
    pairwise_cov_psd_with_diagnostics(x).map(|(s, _)| s)
}

/// [`pairwise_cov_psd`] together with projection and overlap diagnostics.
///
/// The projection is skipped when the smallest eigenvalue is above
/// `-100 p eps lambda_max`, i.e. negative only through rounding, so that
/// complete data reproduces [`sample_cov`] exactly.
pub fn pairwise_cov_psd_with_diagnostics<T: Scalar>(x: &DataMatrix<T>) -> Result<(SymMatrix<T>, CovDiagnostics)> {
    let p = x.p;
    for j in 0..p {
        let observed = x.observed_in_column(j);
        if observed < 2 {
            return Err(Error::TooFewObserved { column: j, observed });
        }
    }
    let (psi, counts) = pairwise_products(x);
    for s in 0..p {
        for t in 0..s {
            if counts[s * p + t] == 0 {
                return Err(Error::InsufficientOverlap(t, s));
            }
        }
    }
    let eig = psi.eigen()?;
    let before = eig.min_value();
    let noise = T::lit(100.0) * T::from_usize_lossy(p) * T::epsilon() * eig.max_value().abs();
    let (out, projected) = if before >= -noise {
        (psi, false)
    } else {
        (psd_project(&psi)?, true)
    };
    let after = if projected { out.eigen()?.min_value() } else { before };
    let pair_counts: Vec<Vec<usize>> = (0..p).map(|s| counts[s * p..(s + 1) * p].to_vec()).collect();
    let diagnostics = CovDiagnostics {
        min_eigenvalue_before: before.to_f64_lossy(),
        min_eigenvalue_after: after.to_f64_lossy(),
        projected,
        min_pair_count: counts.iter().copied().min().unwrap_or(0),
        pair_counts,
        missing_entries: x.missing_count(),
    };
    Ok((out, diagnostics))
}

/// Correlation matrix `D^{-1/2} Sigma D^{-1/2}` with an exactly unit diagonal.
pub fn to_correlation<T: Scalar>(sigma: &SymMatrix<T>) -> Result<SymMatrix<T>> {
    let d = sigma.diag();
    if let Some(i) = d.iter().position(|&v| !(v > T::zero())) {
        return Err(Error::ZeroVariance(i));
    }
    let s: Vec<T> = d.iter().map(|v| v.sqrt()).collect();
    Ok(SymMatrix::from_lower_fn(sigma.dim(), |i, j| {
        if i == j {
            T::one()
        } else {
            sigma.get(i, j) / (s[i] * s[j])
        }
    }))
}

fn is_missing_token(field: &str) -> bool {
    matches!(field, "" | "NA" | "na" | "NaN" | "nan" | "NAN")
}

fn csv_reader<R: Read>(reader: R, header: bool) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader)
}

fn parse_field<T: Scalar>(field: &str, line: usize) -> Result<T> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(T::lit)
        .ok_or_else(|| Error::Parse(format!("line {line}: '{field}' is not a finite number")))
}

/// Reads samples as comma-separated rows. Empty fields and `NA`/`NaN` tokens
/// are missing.
pub fn read_data_csv<T: Scalar, R: Read>(reader: R, header: bool) -> Result<DataMatrix<T>> {
    let mut rows = Vec::new();
    for (line, rec) in csv_reader(reader, header).records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let row = rec
            .iter()
            .map(|f| {
                if is_missing_token(f) {
                    Ok(None)
                } else {
                    parse_field(f, line + 1).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    DataMatrix::from_rows(&rows)
}

/// Reads a `p x p` covariance grid. Mirror entries must agree within `1e-8`
/// relative; the result is exactly symmetric.
pub fn read_cov_csv<T: Scalar, R: Read>(reader: R, header: bool) -> Result<SymMatrix<T>> {
    let mut data = Vec::new();
    let mut rows = 0;
    for (line, rec) in csv_reader(reader, header).records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        for f in rec.iter() {
            data.push(parse_field::<T>(f, line + 1)?);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Empty);
    }
    SymMatrix::from_row_major(rows, data, T::lit(1e-8))
}

/// Writes the full matrix; values use the shortest representation that reads
/// back to the same number.
pub fn write_cov_csv<T: Scalar, W: Write>(writer: W, sigma: &SymMatrix<T>, header: Option<&[String]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Parse(e.to_string());
    if let Some(h) = header {
        w.write_record(h).map_err(io)?;
    }
    for i in 0..sigma.dim() {
        w.write_record(sigma.row(i).iter().map(|v| v.to_string())).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

/// Writes samples; missing entries become `NA`.
pub fn write_data_csv<T: Scalar, W: Write>(writer: W, x: &DataMatrix<T>, header: Option<&[String]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Parse(e.to_string());
    if let Some(h) = header {
        w.write_record(h).map_err(io)?;
    }
    for i in 0..x.n {
        w.write_record((0..x.p).map(|j| match x.get(i, j) {
            Some(v) => v.to_string(),
            None => "NA".to_string(),
        }))
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(rows: &[&[f64]]) -> DataMatrix<f64> {
        DataMatrix::from_rows(&rows.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn sample_cov_examples() {
        let x = complete(&[&[0.0, 0.0], &[2.0, 2.0]]);
        assert_eq!(sample_cov(&x).unwrap(), SymMatrix::from_lower_fn(2, |_, _| 1.0));
        let c = complete(&[&[3.0, 1.0], &[3.0, 2.0], &[3.0, 4.0]]);
        let s = sample_cov(&c).unwrap();
        assert_eq!((s.get(0, 0), s.get(0, 1)), (0.0, 0.0));
        let one = complete(&[&[1.5, -2.0, 7.0]]);
        assert_eq!(sample_cov(&one).unwrap(), SymMatrix::zeros(3));
    }

    #[test]
    fn sample_cov_rejects_missing() {
        let x = DataMatrix::from_rows(&[vec![Some(1.0), None], vec![Some(2.0), Some(1.0)]]).unwrap();
        assert_eq!(sample_cov(&x), Err(Error::HasMissing));
    }

    #[test]
    fn pairwise_matches_sample_cov_without_missing() {
        let x = complete(&[&[1.0, 2.0, 0.5], &[-1.0, 0.3, 2.0], &[0.7, -1.1, 0.0], &[2.0, 2.5, -1.0]]);
        let (psd, diag) = pairwise_cov_psd_with_diagnostics(&x).unwrap();
        assert_eq!(psd, sample_cov(&x).unwrap());
        assert!(!diag.projected);
        assert_eq!(diag.min_pair_count, 4);
    }

    #[test]
    fn pairwise_worked_example() {
        // column 0 observed in rows 0,1,2; column 1 in rows 1,2,3
        let x = DataMatrix::from_rows(&[
            vec![Some(1.0), None],
            vec![Some(2.0), Some(4.0)],
            vec![Some(6.0), Some(0.0)],
            vec![None, Some(2.0)],
        ])
        .unwrap();
        // means over observed entries: 3 and 2
        // psi_00 = ((1-3)^2 + (2-3)^2 + (6-3)^2) / 3 = 14/3
        // psi_11 = ((4-2)^2 + (0-2)^2 + (2-2)^2) / 3 = 8/3
        // psi_01 = ((2-3)(4-2) + (6-3)(0-2)) / 2 = -4
        // det = 112/9 - 16 < 0, so the projection is active
        let (out, diag) = pairwise_cov_psd_with_diagnostics(&x).unwrap();
        assert!(diag.projected);
        assert_eq!(diag.pair_counts[0][1], 2);
        let psi = SymMatrix::from_rows(&[vec![14.0 / 3.0, -4.0], vec![-4.0, 8.0 / 3.0]]).unwrap();
        let eig = psi.eigen().unwrap();
        let (l, v0, v1) = (eig.values[0], eig.vectors.get(0, 0), eig.vectors.get(1, 0));
        let expected = SymMatrix::from_rows(&[vec![l * v0 * v0, l * v0 * v1], vec![l * v0 * v1, l * v1 * v1]]).unwrap();
        assert!(out.rel_diff(&expected) < 1e-12);
        assert!(diag.min_eigenvalue_before < 0.0);
        assert!(diag.min_eigenvalue_after >= -1e-10);
    }

    #[test]
    fn pairwise_reports_insufficient_overlap() {
        let x = DataMatrix::from_rows(&[
            vec![Some(1.0), None],
            vec![Some(2.0), None],
            vec![None, Some(1.0)],
            vec![None, Some(3.0)],
        ])
        .unwrap();
        assert_eq!(pairwise_cov_psd(&x), Err(Error::InsufficientOverlap(0, 1)));
        let y = DataMatrix::from_rows(&[vec![Some(1.0), Some(1.0)], vec![None, Some(2.0)]]).unwrap();
        assert!(matches!(pairwise_cov_psd(&y), Err(Error::TooFewObserved { column: 0, .. })));
    }

    #[test]
    fn correlation_examples() {
        let d = SymMatrix::from_diag(&[4.0, 9.0]);
        assert_eq!(to_correlation(&d).unwrap(), SymMatrix::identity(2));
        let r = to_correlation(&SymMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 1.0]]).unwrap()).unwrap();
        assert_eq!(r, SymMatrix::from_lower_fn(2, |_, _| 1.0));
        assert_eq!(to_correlation(&r).unwrap(), r);
        assert_eq!(to_correlation(&SymMatrix::from_diag(&[1.0, 0.0])), Err(Error::ZeroVariance(1)));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = SymMatrix::from_rows(&[vec![0.1 + 0.2, 1.0 / 3.0], vec![1.0 / 3.0, 1e-300]]).unwrap();
        let mut buf = Vec::new();
        write_cov_csv(&mut buf, &s, Some(&["a".to_string(), "b".to_string()])).unwrap();
        let back: SymMatrix<f64> = read_cov_csv(buf.as_slice(), true).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn csv_reading_handles_missing_tokens_and_asymmetry() {
        let x: DataMatrix<f64> = read_data_csv("1,NA,3\n4,,6\nNaN,8,9\n".as_bytes(), false).unwrap();
        assert_eq!(x.missing_count(), 3);
        assert_eq!(x.get(2, 1), Some(8.0));
        let bad = read_cov_csv::<f64, _>("1,0.5\n0.4,1\n".as_bytes(), false);
        assert!(matches!(bad, Err(Error::NotSymmetric { .. })));
        let near = read_cov_csv::<f64, _>("1,0.5\n0.500000000001,1\n".as_bytes(), false).unwrap();
        assert_eq!(near.get(0, 1), near.get(1, 0));
        assert!(read_data_csv::<f64, _>("1,x\n".as_bytes(), false).is_err());
    }
}

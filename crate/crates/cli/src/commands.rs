use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use csskit::covest::{
    pairwise_cov_psd_with_diagnostics, read_cov_csv, read_data_csv, sample_cov, to_correlation, write_cov_csv,
    CovDiagnostics, DataMatrix,
};
use csskit::search::{exhaustive, greedy, swap, SearchConfig, SwapInit};
use csskit::simlab::{preset_a1, preset_a2, run_missing_study, run_sizesel_study, write_csv, FactorSet};
use csskit::sizesel::{choose_k as run_choose_k, ChooseKConfig, SizeModel};
use csskit::{Criterion, CriterionKind, SymMatrix, Tolerances};
use serde::Serialize;

use crate::manifest::{read_input, sibling, write_file, write_json, Clock, Input, InputDigest, RunManifest, SCHEMA};
use crate::{ChooseKArgs, CliError, CovestArgs, Factors, Format, Method, Missing, Model, Scenario, SelectArgs, SimulateArgs};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

// Column names from the first line of a file with a header row.
fn header_names(input: &Input, header: bool) -> Option<Vec<String>> {
    if !header {
        return None;
    }
    let text = String::from_utf8_lossy(&input.bytes);
    let line = text.lines().next()?;
    Some(line.split(',').map(|f| f.trim().trim_matches('"').to_string()).collect())
}

fn read_data(input: &Input, header: bool) -> Result<DataMatrix<f64>, CliError> {
    Ok(read_data_csv(input.bytes.as_slice(), header)?)
}

fn estimate(x: &DataMatrix<f64>, missing: Missing) -> Result<(SymMatrix<f64>, CovDiagnostics), CliError> {
    match missing {
        Missing::PairwisePsd => Ok(pairwise_cov_psd_with_diagnostics(x)?),
        Missing::None => {
            let sigma = sample_cov(x)?;
            let min = sigma.eigen()?.min_value();
            let (n, p) = (x.n(), x.p());
            Ok((
                sigma,
                CovDiagnostics {
                    min_eigenvalue_before: min,
                    min_eigenvalue_after: min,
                    projected: false,
                    pair_counts: vec![vec![n; p]; p],
                    min_pair_count: n,
                    missing_entries: 0,
                },
            ))
        }
    }
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Compute(format!("io: cannot write to standard output: {e}"))),
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Compute(format!("json: {e}")))?;
    text.push('\n');
    Ok(text.into_bytes())
}

struct ManifestInfo<'a, A: Serialize> {
    command: &'static str,
    flags: &'a A,
    explicit: &'a Option<PathBuf>,
    out: &'a Option<PathBuf>,
    seeds: BTreeMap<&'static str, u64>,
    threads: usize,
    inputs: Vec<InputDigest>,
    outputs: Vec<Option<PathBuf>>,
}

fn write_manifest<A: Serialize>(info: ManifestInfo<'_, A>, clock: Clock) -> Result<(), CliError> {
    let path = match (info.explicit, info.out) {
        (Some(p), _) => p.clone(),
        (None, Some(out)) => sibling(out, "manifest.json"),
        (None, None) => return Ok(()),
    };
    let manifest = RunManifest {
        schema: SCHEMA,
        command: info.command,
        version: env!("CARGO_PKG_VERSION"),
        flags: info.flags,
        seeds: info.seeds,
        threads: info.threads,
        inputs: info.inputs,
        outputs: info.outputs.into_iter().flatten().map(|p| p.display().to_string()).collect(),
        timings: clock.finish(),
    };
    write_json(&path, &manifest)
}

#[derive(Serialize)]
struct SelectRow {
    k: usize,
    criterion: &'static str,
    method: Method,
    /// Selected indices in selection order, separated by `;`.
    subset: String,
    objective: f64,
    /// Trace of the residual covariance of `subset`.
    css_objective: f64,
    /// `1 - css_objective / Tr(Sigma)`.
    avg_r2: f64,
    /// Share of `Tr(Sigma)` in the `k` largest eigenvalues.
    pca_r2: f64,
    sweeps_used: usize,
    converged: bool,
}

#[derive(Serialize)]
struct SelectReport<'a> {
    schema: &'static str,
    p: usize,
    trace: f64,
    criterion: &'static str,
    method: Method,
    rows: &'a [SelectRow],
}

pub fn select(a: &SelectArgs, threads: usize) -> Result<(), CliError> {
    let mut clock = Clock::start();
    let (input, mut sigma) = match (&a.cov, &a.data) {
        (Some(path), _) => {
            let input = read_input(path)?;
            let sigma = read_cov_csv(input.bytes.as_slice(), a.header)?;
            (input, sigma)
        }
        (None, Some(path)) => {
            let input = read_input(path)?;
            let (sigma, _) = estimate(&read_data(&input, a.header)?, a.missing)?;
            (input, sigma)
        }
        (None, None) => return Err(usage("one of --cov or --data is required")),
    };
    if a.standardize {
        sigma = to_correlation(&sigma)?;
    }
    clock.lap("load");
    let p = sigma.dim();
    let ks: Vec<usize> = match (a.k, a.k_range) {
        (Some(k), _) => vec![k],
        (None, Some((lo, hi))) => (lo..=hi).collect(),
        (None, None) => return Err(usage("one of --k or --k-range is required")),
    };
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > p) {
        return Err(usage(format!("subset size {k} is not in 1..={p}")));
    }
    if a.method == Method::Swap && a.seed.is_none() {
        return Err(usage("--seed is required with --method swap"));
    }
    if a.restarts == 0 {
        return Err(usage("--restarts must be at least 1"));
    }
    let kind: CriterionKind = a.criterion.parse().map_err(|e: csskit::Error| usage(e.to_string()))?;
    let tol = Tolerances::default();
    let trace = sigma.trace();
    let mut spectrum = sigma.eigen()?.values;
    spectrum.sort_by(|x, y| y.total_cmp(x));
    let mut rows = Vec::with_capacity(ks.len());
    for &k in &ks {
        let criterion = Criterion::new(kind, p, k).map_err(|e| usage(e.to_string()))?;
        let config = SearchConfig::new(criterion)
            .with_restarts(a.restarts)
            .with_seed(a.seed.unwrap_or(0));
        let result = match a.method {
            Method::Greedy => greedy(&sigma, &config)?,
            Method::Swap => swap(&sigma, &config, SwapInit::Random)?,
            Method::Exhaustive => exhaustive(&sigma, &config)?,
        };
        let css = Criterion::new(CriterionKind::CssTrace, p, k)?
            .evaluate(&sigma, &result.subset, &tol)?
            .to_scalar();
        let top: f64 = spectrum.iter().take(k).map(|v| v.max(0.0)).sum();
        rows.push(SelectRow {
            k,
            criterion: kind.name(),
            method: a.method,
            subset: result.subset.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";"),
            objective: result.objective.to_scalar(),
            css_objective: css,
            avg_r2: 1.0 - css / trace,
            pca_r2: top / trace,
            sweeps_used: result.sweeps_used,
            converged: result.converged,
        });
    }
    clock.lap("select");
    let bytes = match a.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&mut buf, &rows)?;
            buf
        }
        Format::Json => json_bytes(&SelectReport {
            schema: "csskit.select.v1",
            p,
            trace,
            criterion: kind.name(),
            method: a.method,
            rows: &rows,
        })?,
    };
    emit(&a.out, &bytes)?;
    let seeds = a.seed.map(|s| BTreeMap::from([("seed", s)])).unwrap_or_default();
    write_manifest(
        ManifestInfo {
            command: "select",
            flags: a,
            explicit: &a.manifest,
            out: &a.out,
            seeds,
            threads,
            inputs: vec![input.digest],
            outputs: vec![a.out.clone()],
        },
        clock,
    )
}

#[derive(Serialize)]
struct CovestDiagnostics<'a> {
    schema: &'static str,
    n: usize,
    p: usize,
    missing: Missing,
    standardized: bool,
    #[serde(flatten)]
    diagnostics: &'a CovDiagnostics,
}

pub fn covest(a: &CovestArgs, threads: usize) -> Result<(), CliError> {
    let mut clock = Clock::start();
    let input = read_input(&a.data)?;
    let x = read_data(&input, a.header)?;
    let names = header_names(&input, a.header);
    clock.lap("load");
    let (mut sigma, diagnostics) = estimate(&x, a.missing)?;
    if a.standardize {
        sigma = to_correlation(&sigma)?;
    }
    clock.lap("estimate");
    let mut buf = Vec::new();
    write_cov_csv(&mut buf, &sigma, names.as_deref())?;
    emit(&a.out, &buf)?;
    let report = CovestDiagnostics {
        schema: "csskit.covest-diagnostics.v1",
        n: x.n(),
        p: x.p(),
        missing: a.missing,
        standardized: a.standardize,
        diagnostics: &diagnostics,
    };
    let diag_path = a.diagnostics.clone().or_else(|| a.out.as_deref().map(|o| sibling(o, "diagnostics.json")));
    match &diag_path {
        Some(path) => write_json(path, &report)?,
        None => eprint!("{}", String::from_utf8_lossy(&json_bytes(&report)?)),
    }
    write_manifest(
        ManifestInfo {
            command: "covest",
            flags: a,
            explicit: &a.manifest,
            out: &a.out,
            seeds: BTreeMap::new(),
            threads,
            inputs: vec![input.digest],
            outputs: vec![a.out.clone(), diag_path],
        },
        clock,
    )
}

#[derive(Serialize)]
struct ChooseKOutput<'a> {
    schema: &'static str,
    #[serde(flatten)]
    report: &'a csskit::sizesel::SizeSelectionReport,
}

pub fn choose_k(a: &ChooseKArgs, threads: usize) -> Result<(), CliError> {
    let mut clock = Clock::start();
    if !(a.alpha > 0.0 && a.alpha <= 1.0) {
        return Err(usage("--alpha must lie in (0, 1]"));
    }
    if a.restarts == 0 {
        return Err(usage("--restarts must be at least 1"));
    }
    let input = read_input(&a.data)?;
    let x = read_data(&input, a.header)?;
    let (mut sigma, _) = estimate(&x, a.missing)?;
    if a.standardize {
        sigma = to_correlation(&sigma)?;
    }
    clock.lap("load");
    let model = match a.model {
        Model::SubsetFactor => SizeModel::SubsetFactor,
        Model::Pcss => SizeModel::Pcss,
    };
    let mut config = ChooseKConfig::new(a.alpha, model)
        .with_seeds(a.seed, a.seed)
        .with_mc_samples(a.mc_samples)
        .with_restarts(a.restarts);
    config.max_k = a.max_k;
    let report = run_choose_k(&sigma, x.n(), &config)?;
    clock.lap("choose-k");
    let mut summary = format!(
        "chosen k = {} (model {}, alpha {}, n {}, p {})\nselected: {}\n  k  statistic  critical  reject\n",
        report.chosen_k, report.model, report.alpha, report.n, report.p, report.chosen_subset
    );
    for r in &report.records {
        summary.push_str(&format!(
            "{:>3}  {:>9.3}  {:>8.3}  {}\n",
            r.k,
            r.statistic,
            r.critical_value,
            if r.reject { "yes" } else { "no" }
        ));
    }
    let bytes = json_bytes(&ChooseKOutput {
        schema: "csskit.choose-k.v1",
        report: &report,
    })?;
    match &a.out {
        Some(path) => {
            write_file(path, &bytes)?;
            print!("{summary}");
        }
        None => {
            eprint!("{summary}");
            emit(&None, &bytes)?;
        }
    }
    write_manifest(
        ManifestInfo {
            command: "choose-k",
            flags: a,
            explicit: &a.manifest,
            out: &a.out,
            seeds: BTreeMap::from([("mc_seed", a.seed), ("search_seed", a.seed)]),
            threads,
            inputs: vec![input.digest],
            outputs: vec![a.out.clone()],
        },
        clock,
    )
}

#[derive(Serialize)]
struct SimulateSummary<T: Serialize> {
    schema: &'static str,
    trials: usize,
    #[serde(flatten)]
    summary: T,
}

pub fn simulate(a: &SimulateArgs, threads: usize) -> Result<(), CliError> {
    let mut clock = Clock::start();
    if a.trials == 0 || a.n == 0 {
        return Err(usage("--trials and --n must be at least 1"));
    }
    if a.restarts == Some(0) {
        return Err(usage("--restarts must be at least 1"));
    }
    if !(0.0..1.0).contains(&a.mar_prob) {
        return Err(usage("--mar-prob must lie in [0, 1)"));
    }
    if !(a.signal > 0.0 && a.signal.is_finite()) {
        return Err(usage("--signal must be positive"));
    }
    let (csv, summary) = match a.scenario {
        Scenario::MissingA1 => {
            let spec = preset_a1(a.mar_prob);
            let study = run_missing_study(&spec, a.trials, a.n, a.restarts.unwrap_or(10), a.seed)?;
            let mut buf = Vec::new();
            write_csv(&mut buf, &study.trials)?;
            let s = SimulateSummary {
                schema: "csskit.simulate.v1",
                trials: a.trials,
                summary: study.summary,
            };
            (buf, json_bytes(&s)?)
        }
        Scenario::SizeselA2 => {
            let factors = match a.factors {
                Factors::Gaussian => FactorSet::Gaussian,
                Factors::Mixed => FactorSet::Mixed,
            };
            let spec = preset_a2(a.signal, factors);
            if a.n <= spec.p {
                return Err(usage(format!("--n must exceed the {} variables of the scenario", spec.p)));
            }
            let config = ChooseKConfig::new(a.alpha, spec.model())
                .with_seeds(a.seed, a.seed)
                .with_mc_samples(a.mc_samples)
                .with_restarts(a.restarts.unwrap_or(5));
            let study = run_sizesel_study(&spec, a.trials, a.n, &config, a.seed)?;
            let mut buf = Vec::new();
            write_csv(&mut buf, &study.trials)?;
            let s = SimulateSummary {
                schema: "csskit.simulate.v1",
                trials: a.trials,
                summary: study.summary,
            };
            (buf, json_bytes(&s)?)
        }
    };
    clock.lap("study");
    emit(&a.out, &csv)?;
    let summary_path = a.summary.clone().or_else(|| a.out.as_deref().map(|o| sibling(o, "summary.json")));
    match &summary_path {
        Some(path) => write_file(path, &summary)?,
        None => eprint!("{}", String::from_utf8_lossy(&summary)),
    }
    write_manifest(
        ManifestInfo {
            command: "simulate",
            flags: a,
            explicit: &a.manifest,
            out: &a.out,
            seeds: BTreeMap::from([("seed", a.seed)]),
            threads,
            inputs: Vec::new(),
            outputs: vec![a.out.clone(), summary_path],
        },
        clock,
    )
}

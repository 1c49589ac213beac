//! CSV persistence. Floats are written with Rust's shortest round-trip
//! formatting, so reading a file back reproduces the values bit for bit.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::{CellRecord, CellResult, HarnessError, SweepOutcome, SweepSpec, CHUNK};
use crate::cycles::SpectrumEstimate;
use crate::fitting::{FitError, FitResult};

pub const SPECTRA_FILE: &str = "spectra.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const CHECKPOINT_DIR: &str = "cells";

const SPECTRA_HEADER: [&str; 8] = ["n", "lambda", "dist", "samples", "seed", "k", "P_k", "stderr_Pk"];
const SUMMARY_HEADER: [&str; 16] = [
    "n", "lambda", "nc_mean", "nc_err3", "cost_mean", "cost_err3", "q1", "q2", "q1_corr", "q2_corr",
    "dist", "samples", "seed", "cov_p1p2", "q1_err3", "q2_err3",
];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv { path: path.to_path_buf(), source }
}

fn parse_err(path: &Path, message: impl Into<String>) -> HarnessError {
    HarnessError::Parse { path: path.to_path_buf(), message: message.into() }
}

pub(super) fn create_dir(path: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(path).map_err(io_err(path))
}

pub(super) fn writer(path: &Path) -> Result<csv::Writer<fs::File>, HarnessError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    csv::Writer::from_path(path).map_err(csv_err(path))
}

pub(super) fn write_row<I, S>(w: &mut csv::Writer<fs::File>, path: &Path, row: I) -> Result<(), HarnessError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(row).map_err(csv_err(path))
}

pub(super) fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<(), HarnessError> {
    w.flush().map_err(io_err(path))
}

fn num(x: f64) -> String {
    x.to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn write_spectra(path: &Path, records: &[CellRecord]) -> Result<(), HarnessError> {
    let mut w = writer(path)?;
    write_row(&mut w, path, SPECTRA_HEADER)?;
    for r in records {
        let e = &r.estimate;
        for k in 1..=e.n {
            write_row(
                &mut w,
                path,
                [
                    e.n.to_string(),
                    num(e.lambda),
                    e.dist.clone(),
                    e.samples.to_string(),
                    r.seed.to_string(),
                    k.to_string(),
                    num(e.p(k)),
                    num(e.p_err(k)),
                ],
            )?;
        }
    }
    finish(w, path)
}

fn fit_fields(fit: &Result<FitResult, FitError>) -> (Option<f64>, Option<f64>) {
    match fit {
        Ok(f) => (Some(f.q.q1), Some(f.q.q2)),
        Err(_) => (None, None),
    }
}

pub(super) fn write_summary(path: &Path, cells: &[CellResult]) -> Result<(), HarnessError> {
    let mut w = writer(path)?;
    write_row(&mut w, path, SUMMARY_HEADER)?;
    for c in cells {
        let e = c.estimate();
        let (q1, q2) = fit_fields(&c.fit);
        let (q1c, q2c) = fit_fields(&c.fit_corrected);
        let (q1e, q2e) = match &c.fit {
            Ok(f) => (Some(3.0 * f.q_err.0), Some(3.0 * f.q_err.1)),
            Err(_) => (None, None),
        };
        write_row(
            &mut w,
            path,
            [
                e.n.to_string(),
                num(e.lambda),
                num(e.mean_nc),
                num(3.0 * e.stderr_nc),
                num(e.mean_cost),
                num(3.0 * e.stderr_cost),
                opt(q1),
                opt(q2),
                opt(q1c),
                opt(q2c),
                e.dist.clone(),
                e.samples.to_string(),
                c.record.seed.to_string(),
                num(e.cov_p1p2),
                opt(q1e),
                opt(q2e),
            ],
        )?;
    }
    finish(w, path)
}

pub(super) fn write_diagnostics(path: &Path, outcome: &SweepOutcome) -> Result<(), HarnessError> {
    let mut w = writer(path)?;
    write_row(&mut w, path, ["n", "lambda", "dist", "stage", "sample", "message"])?;
    for f in &outcome.failures {
        write_row(
            &mut w,
            path,
            [f.n.to_string(), num(f.lambda), f.dist.clone(), "solve".into(), f.sample.to_string(), f.message.clone()],
        )?;
    }
    for c in &outcome.cells {
        let e = c.estimate();
        for (stage, fit) in [("fit", &c.fit), ("fit_corrected", &c.fit_corrected)] {
            if let Err(err) = fit {
                write_row(
                    &mut w,
                    path,
                    [e.n.to_string(), num(e.lambda), e.dist.clone(), stage.into(), String::new(), err.to_string()],
                )?;
            }
        }
    }
    finish(w, path)
}

pub(super) fn write_manifest(
    path: &Path,
    spec: &SweepSpec,
    outcome: &SweepOutcome,
    wall_seconds: f64,
) -> Result<(), HarnessError> {
    let join = |v: Vec<String>| v.join(",");
    let mut lines = vec![
        format!("version = {}", env!("CARGO_PKG_VERSION")),
        format!("dist = {}", spec.dist.id()),
        format!("lambda_grid = {}", join(spec.lambda_grid.iter().map(|l| num(*l)).collect())),
        format!("n_list = {}", join(spec.n_list.iter().map(|n| n.to_string()).collect())),
        format!("samples = {}", spec.samples),
        format!("master_seed = {}", spec.master_seed),
        format!("workers = {}", spec.workers.map_or("all".to_string(), |w| w.to_string())),
        format!("parallel_feature = {}", crate::exec::Execution::is_parallel_available()),
        format!("chunk = {CHUNK}"),
        "errors = stderr columns are one standard error; *_err3 columns are three".to_string(),
        format!("cells = {}", outcome.cells.len()),
        format!("failed_cells = {}", outcome.failures.len()),
        format!("wall_seconds = {wall_seconds:.3}"),
    ];
    for c in &outcome.cells {
        let e = c.estimate();
        lines.push(format!(
            "cell.{}.n{}.l{} = seed {}, wall_seconds {:.3}, resumed {}",
            e.dist, e.n, num(e.lambda), c.record.seed, c.wall_seconds, c.resumed
        ));
    }
    lines.push(String::new());
    fs::write(path, lines.join("\n")).map_err(io_err(path))
}

pub(super) fn checkpoint_path(dir: &Path, dist: &str, n: usize, lambda: f64) -> PathBuf {
    dir.join(format!("{dist}_n{n}_l{}.csv", num(lambda)))
}

/// A cell checkpoint holds `field,k,value` rows.
pub(super) fn write_checkpoint(path: &Path, record: &CellRecord) -> Result<(), HarnessError> {
    let e = &record.estimate;
    let tmp = path.with_extension("csv.tmp");
    let mut w = writer(&tmp)?;
    write_row(&mut w, &tmp, ["field", "k", "value"])?;
    let scalars = [
        ("n", e.n.to_string()),
        ("lambda", num(e.lambda)),
        ("dist", e.dist.clone()),
        ("samples", e.samples.to_string()),
        ("seed", record.seed.to_string()),
        ("cov_p1p2", num(e.cov_p1p2)),
        ("nc_mean", num(e.mean_nc)),
        ("nc_stderr", num(e.stderr_nc)),
        ("cost_mean", num(e.mean_cost)),
        ("cost_stderr", num(e.stderr_cost)),
    ];
    for (field, value) in scalars {
        write_row(&mut w, &tmp, [field.to_string(), String::new(), value])?;
    }
    for k in 1..=e.n {
        write_row(&mut w, &tmp, ["P".to_string(), k.to_string(), num(e.p(k))])?;
        write_row(&mut w, &tmp, ["stderr".to_string(), k.to_string(), num(e.p_err(k))])?;
    }
    finish(w, &tmp)?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Loads a checkpoint if it exists and was produced by the same cell
/// parameters; otherwise returns `None`.
pub(super) fn read_checkpoint(
    path: &Path,
    n: usize,
    lambda: f64,
    dist: &str,
    samples: u64,
    seed: u64,
) -> Result<Option<CellRecord>, HarnessError> {
    if !path.exists() {
        return Ok(None);
    }
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut scalars: BTreeMap<String, String> = BTreeMap::new();
    let mut means = vec![f64::NAN; n];
    let mut errs = vec![f64::NAN; n];
    for row in r.records() {
        let row = row.map_err(csv_err(path))?;
        let (field, k, value) = (&row[0], &row[1], &row[2]);
        match field {
            "P" | "stderr" => {
                let k: usize = k.parse().map_err(|_| parse_err(path, format!("bad k {k}")))?;
                if k == 0 || k > n {
                    return Ok(None);
                }
                let v: f64 = value.parse().map_err(|_| parse_err(path, format!("bad value {value}")))?;
                if field == "P" { means[k - 1] = v } else { errs[k - 1] = v }
            }
            _ => {
                scalars.insert(field.to_string(), value.to_string());
            }
        }
    }
    let get = |key: &str| scalars.get(key).cloned().unwrap_or_default();
    let same = get("n") == n.to_string()
        && get("lambda") == num(lambda)
        && get("dist") == dist
        && get("samples") == samples.to_string()
        && get("seed") == seed.to_string();
    if !same || means.iter().chain(&errs).any(|v| v.is_nan()) {
        return Ok(None);
    }
    let float = |key: &str| -> Result<f64, HarnessError> {
        get(key).parse().map_err(|_| parse_err(path, format!("bad {key}")))
    };
    let mut estimate = SpectrumEstimate::from_means(n, lambda, dist, samples, means);
    estimate.stderr_pk = errs;
    estimate.cov_p1p2 = float("cov_p1p2")?;
    estimate.mean_nc = float("nc_mean")?;
    estimate.stderr_nc = float("nc_stderr")?;
    estimate.mean_cost = float("cost_mean")?;
    estimate.stderr_cost = float("cost_stderr")?;
    Ok(Some(CellRecord { estimate, seed }))
}

type CellKey = (String, usize, u64);

/// Reads `spectra.csv` from `dir`, filling cycle-count and cost summaries
/// from `summary.csv` when present.
pub fn read_records(dir: &Path) -> Result<Vec<CellRecord>, HarnessError> {
    let path = dir.join(SPECTRA_FILE);
    let mut r = csv::Reader::from_path(&path).map_err(csv_err(&path))?;
    let headers = r.headers().map_err(csv_err(&path))?.clone();
    if headers.iter().collect::<Vec<_>>() != SPECTRA_HEADER {
        return Err(parse_err(&path, "unexpected header"));
    }
    let mut cells: BTreeMap<CellKey, (u64, u64, Vec<(usize, f64, f64)>)> = BTreeMap::new();
    let mut order: Vec<CellKey> = Vec::new();
    for row in r.records() {
        let row = row.map_err(csv_err(&path))?;
        let bad = |what: &str| parse_err(&path, format!("bad {what} in {:?}", row.iter().collect::<Vec<_>>()));
        let n: usize = row[0].parse().map_err(|_| bad("n"))?;
        let lambda: f64 = row[1].parse().map_err(|_| bad("lambda"))?;
        let samples: u64 = row[3].parse().map_err(|_| bad("samples"))?;
        let seed: u64 = row[4].parse().map_err(|_| bad("seed"))?;
        let k: usize = row[5].parse().map_err(|_| bad("k"))?;
        let p: f64 = row[6].parse().map_err(|_| bad("P_k"))?;
        let err: f64 = row[7].parse().map_err(|_| bad("stderr_Pk"))?;
        let key = (row[2].to_string(), n, lambda.to_bits());
        let entry = cells.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            (samples, seed, Vec::new())
        });
        entry.2.push((k, p, err));
    }

    let summary = read_summary(&dir.join(SUMMARY_FILE))?;
    let mut out = Vec::with_capacity(order.len());
    for key in order {
        let (samples, seed, rows) = cells.remove(&key).expect("key recorded on insert");
        let (dist, n, bits) = key;
        let lambda = f64::from_bits(bits);
        let mut means = vec![f64::NAN; n];
        let mut errs = vec![f64::NAN; n];
        for (k, p, e) in rows {
            if k == 0 || k > n {
                return Err(parse_err(&path, format!("k = {k} outside 1..={n}")));
            }
            means[k - 1] = p;
            errs[k - 1] = e;
        }
        if means.iter().any(|v| v.is_nan()) {
            return Err(parse_err(&path, format!("cell ({dist}, {n}, {lambda}) lacks some k rows")));
        }
        let mut estimate = SpectrumEstimate::from_means(n, lambda, &dist, samples, means);
        estimate.stderr_pk = errs;
        if let Some(s) = summary.get(&(dist.clone(), n, bits)) {
            estimate.mean_nc = s.0;
            estimate.stderr_nc = s.1 / 3.0;
            estimate.mean_cost = s.2;
            estimate.stderr_cost = s.3 / 3.0;
            estimate.cov_p1p2 = s.4;
        }
        out.push(CellRecord { estimate, seed });
    }
    Ok(out)
}

fn read_summary(path: &Path) -> Result<BTreeMap<CellKey, (f64, f64, f64, f64, f64)>, HarnessError> {
    let mut out = BTreeMap::new();
    if !path.exists() {
        return Ok(out);
    }
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    for row in r.records() {
        let row = row.map_err(csv_err(path))?;
        let f = |i: usize| -> Result<f64, HarnessError> {
            row.get(i).unwrap_or("").parse().map_err(|_| parse_err(path, format!("bad column {i}")))
        };
        let n: usize = row[0].parse().map_err(|_| parse_err(path, "bad n"))?;
        let lambda = f(1)?;
        let dist = row.get(10).unwrap_or("").to_string();
        out.insert((dist, n, lambda.to_bits()), (f(2)?, f(3)?, f(4)?, f(5)?, f(13)?));
    }
    Ok(out)
}

/// Writes one row per fit.
pub fn write_fits(path: &Path, fits: &[(CellRecord, Result<FitResult, FitError>)]) -> Result<(), HarnessError> {
    let mut w = writer(path)?;
    write_row(
        &mut w,
        path,
        [
            "n", "lambda", "dist", "q1", "q1_err3", "q2", "q2_err3", "corrected", "p2_correction", "clamped",
            "iterations", "residual", "error",
        ],
    )?;
    for (rec, fit) in fits {
        let e = &rec.estimate;
        let mut row = vec![e.n.to_string(), num(e.lambda), e.dist.clone()];
        match fit {
            Ok(f) => row.extend([
                num(f.q.q1),
                num(3.0 * f.q_err.0),
                num(f.q.q2),
                num(3.0 * f.q_err.1),
                f.corrected.to_string(),
                num(f.p2_correction),
                f.clamped.to_string(),
                f.iterations.to_string(),
                num(f.residual),
                String::new(),
            ]),
            Err(err) => {
                row.extend(std::iter::repeat_n(String::new(), 9));
                row.push(err.to_string());
            }
        }
        write_row(&mut w, path, row)?;
    }
    finish(w, path)
}

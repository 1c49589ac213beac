//! Sweep driver: runs `(n, λ)` cells, persists them as CSV and derives
//! figure tables.
//!
//! A cell is sampled in fixed chunks of [`CHUNK`] instances. Chunks may run
//! on any number of workers but are merged in index order, so a cell's
//! statistics depend only on `(seed, n, λ, dist, samples)`.

mod figures;
mod io;
mod validate;

use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::cycles::{decompose, SpectrumAccumulator, SpectrumEstimate};
use crate::ensemble::{derive_seed, EnsembleConfig, EnsembleError, EntryDistribution, MatrixSampler};
use crate::exec::Execution;
use crate::fitting::{fit_corrected, fit_uncorrected, FitError, FitResult};
use crate::lap::LapSolver;

pub use figures::{emit_figure_data, FigureId};
pub use io::{read_records, write_fits, CHECKPOINT_DIR, DIAGNOSTICS_FILE, MANIFEST_FILE, SPECTRA_FILE, SUMMARY_FILE};
pub use validate::{validate_solver, ValidationReport, ValidationRow};

/// Instances per work unit.
pub const CHUNK: u64 = 64;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid sweep: {0}")]
    Spec(String),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv error on {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("malformed {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("figure {figure} lacks cells: {}", format_cells(.missing))]
    Coverage { figure: FigureId, missing: Vec<(String, usize, f64)> },
    #[error("figure {0} has no rows in its λ range")]
    EmptyFigure(FigureId),
    #[error("solver failed in {} cell(s), first: {}", .0.len(), .0[0])]
    Solver(Vec<CellFailure>),
}

fn format_cells(cells: &[(String, usize, f64)]) -> String {
    cells.iter().map(|(d, n, l)| format!("({d}, n={n}, λ={l})")).collect::<Vec<_>>().join(", ")
}

/// A λ/N grid for one entry distribution.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub lambda_grid: Vec<f64>,
    pub n_list: Vec<usize>,
    pub dist: EntryDistribution,
    pub samples: u64,
    pub master_seed: u64,
    /// `None` uses every available core.
    pub workers: Option<usize>,
    pub out_dir: PathBuf,
}

impl SweepSpec {
    /// λ ∈ {-1, -0.9, …, 1}, N ∈ {40, 100, 200}, 10⁴ samples.
    pub fn desk_default(dist: EntryDistribution, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            lambda_grid: (-10..=10).map(|i| i as f64 / 10.0).collect(),
            n_list: vec![40, 100, 200],
            dist,
            samples: 10_000,
            master_seed: 1,
            workers: None,
            out_dir: out_dir.into(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.lambda_grid.is_empty() || self.n_list.is_empty() {
            return Err(HarnessError::Spec("empty λ grid or n list".into()));
        }
        if let Some(l) = self.lambda_grid.iter().find(|l| !(-1.0..=1.0).contains(*l)) {
            return Err(HarnessError::Spec(format!("λ = {l} outside [-1, 1]")));
        }
        if self.n_list.contains(&0) {
            return Err(HarnessError::Spec("n must be at least 1".into()));
        }
        if self.samples == 0 {
            return Err(HarnessError::Spec("samples must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(HarnessError::Spec("workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn execution(&self) -> Execution {
        Execution::from_workers(self.workers)
    }
}

/// An instance on which the solver failed.
#[derive(Clone, Debug, PartialEq)]
pub struct CellFailure {
    pub n: usize,
    pub lambda: f64,
    pub dist: String,
    pub sample: u64,
    pub message: String,
}

impl std::fmt::Display for CellFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} n={} λ={} sample {}: {}", self.dist, self.n, self.lambda, self.sample, self.message)
    }
}

impl std::error::Error for CellFailure {}

/// Measured statistics of one cell together with the seed that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct CellRecord {
    pub estimate: SpectrumEstimate,
    pub seed: u64,
}

/// A finished cell with both fits.
#[derive(Clone, Debug)]
pub struct CellResult {
    pub record: CellRecord,
    pub fit: Result<FitResult, FitError>,
    pub fit_corrected: Result<FitResult, FitError>,
    pub wall_seconds: f64,
    /// Loaded from a checkpoint rather than sampled.
    pub resumed: bool,
}

impl CellResult {
    pub fn from_record(record: CellRecord, wall_seconds: f64, resumed: bool) -> Self {
        let fit = fit_uncorrected(&record.estimate);
        let fit_corrected = fit_corrected(&record.estimate);
        Self { record, fit, fit_corrected, wall_seconds, resumed }
    }

    pub fn estimate(&self) -> &SpectrumEstimate {
        &self.record.estimate
    }
}

#[derive(Clone, Debug, Default)]
pub struct SweepOutcome {
    pub cells: Vec<CellResult>,
    pub failures: Vec<CellFailure>,
}

/// Seed of the `(n, λ, dist)` cell. `-0.0` and `0.0` share a seed.
pub fn cell_seed(master: u64, n: usize, lambda: f64, dist: &EntryDistribution) -> u64 {
    let lambda = if lambda == 0.0 { 0.0 } else { lambda };
    let tag = dist
        .id()
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3));
    derive_seed(master, &[n as u64, lambda.to_bits(), tag])
}

/// Samples, solves and decomposes every instance of `config`.
pub fn run_cell(config: &EnsembleConfig, exec: Execution) -> Result<SpectrumEstimate, CellFailure> {
    let n = config.n();
    let samples = config.samples();
    let chunks = samples.div_ceil(CHUNK) as usize;
    let parts = exec.map(chunks, |c| {
        let start = c as u64 * CHUNK;
        let end = (start + CHUNK).min(samples);
        let mut sampler = MatrixSampler::new(n);
        let mut solver = LapSolver::new();
        let mut acc = SpectrumAccumulator::new(n);
        for index in start..end {
            let m = sampler.sample(config, index);
            let a = solver.solve(m).map_err(|e| (index, e.to_string()))?;
            acc.push(&decompose(&a.perm), a.cost).expect("spectrum size matches the cell");
        }
        Ok::<_, (u64, String)>(acc)
    });
    let failure = |sample, message| CellFailure {
        n,
        lambda: config.lambda(),
        dist: config.dist().id().to_string(),
        sample,
        message,
    };
    let mut total = SpectrumAccumulator::new(n);
    for part in parts {
        let part = part.map_err(|(i, m)| failure(i, m))?;
        total.merge(&part).expect("chunk size matches the cell");
    }
    Ok(total.finish(config.lambda(), config.dist().id()).expect("at least one sample"))
}

/// Builds the cell config and runs it.
pub fn run_point(
    n: usize,
    lambda: f64,
    dist: &EntryDistribution,
    samples: u64,
    master_seed: u64,
    exec: Execution,
) -> Result<Result<CellRecord, CellFailure>, HarnessError> {
    let seed = cell_seed(master_seed, n, lambda, dist);
    let config = EnsembleConfig::new(n, lambda, dist.clone(), samples, seed)?;
    Ok(run_cell(&config, exec).map(|estimate| CellRecord { estimate, seed }))
}

/// Runs every cell of `spec`, resuming from checkpoints in
/// `out_dir/cells`, and writes the spectra, summary, diagnostics and
/// manifest files. Solver failures are recorded, not fatal.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutcome, HarnessError> {
    spec.validate()?;
    let out = &spec.out_dir;
    let cells_dir = out.join(CHECKPOINT_DIR);
    io::create_dir(&cells_dir)?;
    let exec = spec.execution();
    let started = Instant::now();
    let mut outcome = SweepOutcome::default();

    for &n in &spec.n_list {
        for &lambda in &spec.lambda_grid {
            let seed = cell_seed(spec.master_seed, n, lambda, &spec.dist);
            let path = io::checkpoint_path(&cells_dir, spec.dist.id(), n, lambda);
            if let Some(record) = io::read_checkpoint(&path, n, lambda, spec.dist.id(), spec.samples, seed)? {
                outcome.cells.push(CellResult::from_record(record, 0.0, true));
                continue;
            }
            let t0 = Instant::now();
            match run_point(n, lambda, &spec.dist, spec.samples, spec.master_seed, exec)? {
                Ok(record) => {
                    io::write_checkpoint(&path, &record)?;
                    let wall = t0.elapsed().as_secs_f64();
                    outcome.cells.push(CellResult::from_record(record, wall, false));
                }
                Err(f) => outcome.failures.push(f),
            }
        }
    }

    let records: Vec<CellRecord> = outcome.cells.iter().map(|c| c.record.clone()).collect();
    io::write_spectra(&out.join(SPECTRA_FILE), &records)?;
    io::write_summary(&out.join(SUMMARY_FILE), &outcome.cells)?;
    io::write_diagnostics(&out.join(DIAGNOSTICS_FILE), &outcome)?;
    io::write_manifest(&out.join(MANIFEST_FILE), spec, &outcome, started.elapsed().as_secs_f64())?;
    Ok(outcome)
}

/// Re-reads a sweep directory written by [`run_sweep`].
pub fn load_sweep(dir: &Path) -> Result<Vec<CellResult>, HarnessError> {
    Ok(read_records(dir)?.into_iter().map(|r| CellResult::from_record(r, 0.0, true)).collect())
}

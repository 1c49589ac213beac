use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kcycles::ensemble::EntryDistribution;
use kcycles::fitting::{fit_corrected, fit_uncorrected};
use kcycles::harness::{
    emit_figure_data, load_sweep, read_records, run_sweep, validate_solver, write_fits, FigureId, HarnessError,
    SweepSpec,
};
use kcycles::Execution;

const EXIT_VALIDATION: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "kcycles", version, about = "Cycle statistics of optimal assignments on d_ij = R_ij + λ R_ji")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample every (n, λ) cell and write spectra.csv, summary.csv and manifest.txt.
    Sweep {
        /// Comma list (`-1,-0.5,0`) or range `start:stop:step`.
        #[arg(long, default_value = "-1:1:0.1", value_parser = parse_grid)]
        lambda_grid: Grid,
        #[arg(long, default_value = "40,100,200", value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long, default_value = "uniform")]
        dist: EntryDistribution,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Worker threads; all cores when omitted.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Derive figure tables from a sweep directory.
    Figures {
        /// Figure id, or `all`.
        #[arg(long, default_value = "all")]
        figure: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare mean optimal costs at λ = 0 with their exact values.
    Validate {
        #[arg(long, default_value = "exp")]
        dist: EntryDistribution,
        #[arg(long, default_value = "10,50,100", value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Fit (q1, q2) to every cell of a sweep directory.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        /// Remove two-cycles stemming from broken even cycles first.
        #[arg(long)]
        corrected: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Debug)]
struct Grid(Vec<f64>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    parse_values(s).map(Grid)
}

fn parse_values(s: &str) -> Result<Vec<f64>, String> {
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (parse(start)?, parse(stop)?, parse(step)?);
            if !(step > 0.0) || stop < start {
                return Err("range needs start <= stop and step > 0".into());
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect())
        }
        [_] => s.split(',').map(parse).collect(),
        _ => Err(format!("cannot parse grid {s:?}")),
    }
}

fn exit_code(err: &HarnessError) -> u8 {
    match err {
        HarnessError::Solver(_) => EXIT_SOLVER,
        HarnessError::Coverage { .. } | HarnessError::EmptyFigure(_) => EXIT_VALIDATION,
        _ => EXIT_IO,
    }
}

fn run(cli: Cli) -> Result<u8, HarnessError> {
    match cli.command {
        Command::Sweep { lambda_grid, n, dist, samples, seed, workers, out } => {
            let spec = SweepSpec { lambda_grid: lambda_grid.0, n_list: n, dist, samples, master_seed: seed, workers, out_dir: out };
            let outcome = run_sweep(&spec)?;
            let resumed = outcome.cells.iter().filter(|c| c.resumed).count();
            println!(
                "{} cells written to {} ({} resumed, {} failed)",
                outcome.cells.len(),
                spec.out_dir.display(),
                resumed,
                outcome.failures.len()
            );
            if !outcome.failures.is_empty() {
                return Err(HarnessError::Solver(outcome.failures));
            }
            Ok(0)
        }
        Command::Figures { figure, input, out } => {
            let ids = if figure == "all" {
                FigureId::ALL.to_vec()
            } else {
                vec![figure.parse().map_err(HarnessError::Spec)?]
            };
            let cells = load_sweep(&input)?;
            for id in ids {
                let path = emit_figure_data(&cells, id, &out)?;
                println!("{}", path.display());
            }
            Ok(0)
        }
        Command::Validate { dist, n, samples, seed, workers } => {
            let report = validate_solver(&dist, &n, samples, seed, Execution::from_workers(workers))?;
            println!("n,samples,mean_cost,stderr,exact,z_exact,expansion,z_expansion");
            let opt = |x: Option<f64>| x.map_or(String::from("-"), |v| format!("{v:.6}"));
            for r in &report.rows {
                if let Some(msg) = &r.failure {
                    println!("{},{},solver failure: {msg}", r.n, r.samples);
                    continue;
                }
                println!(
                    "{},{},{:.6},{:.6},{},{},{},{}",
                    r.n,
                    r.samples,
                    r.mean_cost,
                    r.stderr_cost,
                    opt(r.exact),
                    opt(r.exact_z),
                    opt(r.expansion),
                    opt(r.expansion_z)
                );
            }
            if report.solver_failed() {
                return Ok(EXIT_SOLVER);
            }
            Ok(if report.passed() { 0 } else { EXIT_VALIDATION })
        }
        Command::Fit { input, corrected, out } => {
            let fits: Vec<_> = read_records(&input)?
                .into_iter()
                .map(|r| {
                    let f = if corrected { fit_corrected(&r.estimate) } else { fit_uncorrected(&r.estimate) };
                    (r, f)
                })
                .collect();
            write_fits(&out, &fits)?;
            let failed = fits.iter().filter(|(_, f)| f.is_err()).count();
            println!("{} fits written to {} ({failed} failed)", fits.len(), out.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

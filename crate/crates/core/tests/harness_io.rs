use std::fs;

use kcycles::ensemble::EntryDistribution;
use kcycles::harness::{
    emit_figure_data, load_sweep, read_records, run_point, run_sweep, validate_solver, FigureId, HarnessError,
    SweepSpec, SPECTRA_FILE, SUMMARY_FILE,
};
use kcycles::Execution;

fn spec(dir: &std::path::Path, workers: Option<usize>) -> SweepSpec {
    SweepSpec {
        lambda_grid: vec![-1.0, 0.0, 1.0],
        n_list: vec![12, 20],
        dist: EntryDistribution::Uniform01,
        samples: 300,
        master_seed: 42,
        workers,
        out_dir: dir.to_path_buf(),
    }
}

#[test]
fn sweep_is_reproducible_and_resumable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run_sweep(&spec(a.path(), Some(1))).unwrap();
    assert!(first.failures.is_empty());
    assert_eq!(first.cells.len(), 6);
    run_sweep(&spec(b.path(), Some(3))).unwrap();
    for file in [SPECTRA_FILE, SUMMARY_FILE] {
        let x = fs::read(a.path().join(file)).unwrap();
        let y = fs::read(b.path().join(file)).unwrap();
        assert_eq!(x, y, "{file} differs between worker counts");
    }

    // A second run resumes every cell from its checkpoint.
    let before = fs::read(a.path().join(SPECTRA_FILE)).unwrap();
    let again = run_sweep(&spec(a.path(), None)).unwrap();
    assert!(again.cells.iter().all(|c| c.resumed));
    assert_eq!(before, fs::read(a.path().join(SPECTRA_FILE)).unwrap());

    // Changing the sample count invalidates checkpoints.
    let mut more = spec(a.path(), None);
    more.samples = 301;
    assert!(run_sweep(&more).unwrap().cells.iter().all(|c| !c.resumed));
}

#[test]
fn records_round_trip_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_sweep(&spec(dir.path(), None)).unwrap();
    let read = read_records(dir.path()).unwrap();
    assert_eq!(read.len(), outcome.cells.len());
    for (r, c) in read.iter().zip(&outcome.cells) {
        assert_eq!(r, &c.record);
    }
}

#[test]
fn uniform_point_and_symmetric_point() {
    let rec = run_point(40, 0.0, &EntryDistribution::Uniform01, 10_000, 7, Execution::Parallel)
        .unwrap()
        .unwrap();
    for k in 1..=10 {
        let (v, s) = rec.estimate.kpk(k);
        assert!((v - 1.0).abs() <= 3.0 * s, "k={k}: {v} ± {s}");
    }
    let rec = run_point(100, 1.0, &EntryDistribution::Exponential1, 200, 7, Execution::Parallel)
        .unwrap()
        .unwrap();
    for k in (4..=100).step_by(2) {
        assert_eq!(rec.estimate.p(k), 0.0);
    }
}

#[test]
fn figures_and_coverage() {
    let dir = tempfile::tempdir().unwrap();
    run_sweep(&spec(dir.path(), None)).unwrap();
    let cells = load_sweep(dir.path()).unwrap();
    let figs = dir.path().join("fig");
    for id in FigureId::ALL {
        let path = emit_figure_data(&cells, id, &figs).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.lines().count() > 1, "{id} is empty");
        assert!(figs.join(format!("{id}.cells.csv")).exists());
    }
    let p1 = fs::read_to_string(figs.join("p1.csv")).unwrap();
    let header: Vec<&str> = p1.lines().next().unwrap().split(',').collect();
    assert_eq!(header, ["n", "lambda", "dist", "P1", "P1_err3", "P1_over_sqrtN", "P1_over_sqrtN_err3"]);

    // Drop one cell: the grid is incomplete.
    let partial: Vec<_> = cells.into_iter().filter(|c| !(c.estimate().n == 20 && c.estimate().lambda == 0.0)).collect();
    match emit_figure_data(&partial, FigureId::Nc, &figs) {
        Err(HarnessError::Coverage { missing, .. }) => assert_eq!(missing, vec![("uniform".to_string(), 20, 0.0)]),
        other => panic!("expected a coverage error, got {other:?}"),
    }
}

#[test]
fn antisymmetric_long_cycle_column() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = spec(dir.path(), None);
    s.lambda_grid = vec![-1.0];
    s.n_list = vec![60];
    s.samples = 2000;
    run_sweep(&s).unwrap();
    let cells = load_sweep(dir.path()).unwrap();
    let path = emit_figure_data(&cells, FigureId::Pn, dir.path()).unwrap();
    let text = fs::read_to_string(path).unwrap();
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').skip(3).map(|v| v.parse().unwrap()).collect();
    let e32 = 1.5f64.exp();
    assert!((row[0] - e32).abs() <= row[1] + 0.05 * e32, "N P_N = {} ± {}", row[0], row[1]);
    assert!((row[2] - e32).abs() < 0.05 * e32, "model {}", row[2]);
}

#[test]
fn small_validation() {
    let r = validate_solver(&EntryDistribution::Exponential1, &[1, 2, 10], 4000, 5, Execution::Parallel).unwrap();
    assert!(r.passed(), "{r:?}");
    assert_eq!(r.rows[1].exact, Some(1.25));
    let u = validate_solver(&EntryDistribution::Uniform01, &[5], 100, 5, Execution::Sequential).unwrap();
    assert!(u.rows[0].exact.is_none());
    assert!(u.rows[0].expansion.is_some());
}

#[test]
fn invalid_specs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = spec(dir.path(), None);
    s.lambda_grid = vec![1.5];
    assert!(matches!(run_sweep(&s), Err(HarnessError::Spec(_))));
    let mut s = spec(dir.path(), None);
    s.samples = 0;
    assert!(matches!(run_sweep(&s), Err(HarnessError::Spec(_))));
}

use std::time::Instant;

use kcycles::ensemble::{sample_matrix, EnsembleConfig, EntryDistribution};
use kcycles::lap::{brute_force, solve, LapSolver};

fn dists() -> [EntryDistribution; 2] {
    [EntryDistribution::Uniform01, EntryDistribution::Exponential1]
}

#[test]
fn solver_agrees_with_enumeration() {
    for dist in dists() {
        for lambda in [-1.0, -0.3, 0.0, 0.6, 1.0] {
            for n in 2..=7 {
                let cfg = EnsembleConfig::new(n, lambda, dist.clone(), 150, 77 + n as u64).unwrap();
                for i in 0..cfg.samples() {
                    let m = sample_matrix(&cfg, i);
                    let a = solve(&m).unwrap();
                    let b = brute_force(&m).unwrap();
                    assert!((a.cost - b.cost).abs() < 1e-12, "{dist} λ={lambda} n={n} #{i}: {} vs {}", a.cost, b.cost);
                    // Permutations may differ only on ties, exact or within
                    // rounding (at λ = -1 every 2-cycle costs zero).
                    if a.perm != b.perm {
                        let alt = m.cost_of(a.perm.as_slice());
                        assert!(b.tied || (alt - b.cost).abs() < 1e-12, "{dist} λ={lambda} n={n} #{i}");
                    }
                }
            }
        }
    }
}

#[test]
fn certificates_hold_on_large_instances() {
    let mut solver = LapSolver::new();
    for dist in dists() {
        for lambda in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let cfg = EnsembleConfig::new(150, lambda, dist.clone(), 5, 3).unwrap();
            for i in 0..cfg.samples() {
                let m = sample_matrix(&cfg, i);
                let a = solver.solve(&m).unwrap();
                let duals = a.duals.as_ref().expect("solver returns duals");
                duals.verify(&m, &a.perm).unwrap();
                assert!((duals.objective() - a.cost).abs() <= 1e-9 * m.max_abs().max(1.0) * 150.0);
                assert!((m.cost_of(a.perm.as_slice()) - a.cost).abs() < 1e-12 * m.max_abs() * 150.0);
            }
        }
    }
}

#[test]
fn symmetric_optima_have_no_long_even_cycles() {
    for dist in dists() {
        let cfg = EnsembleConfig::new(60, 1.0, dist, 100, 5).unwrap();
        for i in 0..cfg.samples() {
            let a = solve(&sample_matrix(&cfg, i)).unwrap();
            let s = kcycles::cycles::decompose(&a.perm);
            assert!(!s.has_long_even_cycle(), "sample {i}");
        }
    }
}

#[test]
fn size_400_solves_quickly() {
    let cfg = EnsembleConfig::new(400, 0.0, EntryDistribution::Uniform01, 5, 9).unwrap();
    let mut solver = LapSolver::new();
    let mut times = Vec::new();
    for i in 0..cfg.samples() {
        let m = sample_matrix(&cfg, i);
        let t = Instant::now();
        solver.solve(&m).unwrap();
        times.push(t.elapsed().as_secs_f64());
    }
    times.sort_by(f64::total_cmp);
    let median = times[times.len() / 2];
    assert!(median < 0.05, "median solve took {:.1} ms", median * 1e3);
}

#![allow(dead_code)]

use kcycles::analytic::{predicted_pk, SeriesTable};
use kcycles::QPair;

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else { break };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).unwrap();
        p.swap(i - 1, j);
        p[i..].reverse();
    }
    out
}

/// `counts[k]` = number of `k`-cycles.
pub fn cycle_counts(p: &[usize]) -> Vec<u32> {
    let n = p.len();
    let mut counts = vec![0; n + 1];
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut len = 0;
        let mut i = s;
        while !seen[i] {
            seen[i] = true;
            i = p[i];
            len += 1;
        }
        counts[len] += 1;
    }
    counts
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 { 0.0 } else { (a - b).abs() / scale }
}

/// Largest relative disagreement between the series model and a weighted
/// sum over all of `S_n`, for `n ≤ n_max` and every `q` on `grid²`.
pub fn enumeration_max_error(n_max: usize, grid: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for n in 1..=n_max {
        let perms: Vec<Vec<u32>> = permutations(n).iter().map(|p| cycle_counts(p)).collect();
        let factorial: f64 = (1..=n).map(|m| m as f64).product();
        for &q1 in grid {
            for &q2 in grid {
                let q = QPair::new(q1, q2).unwrap();
                let mut omega = 0.0;
                let mut moments = vec![0.0; n + 1];
                for c in &perms {
                    let w = q1.powi(c[1] as i32) * if n >= 2 { q2.powi(c[2] as i32) } else { 1.0 };
                    omega += w;
                    for k in 1..=n {
                        moments[k] += w * c[k] as f64;
                    }
                }
                let series = factorial * SeriesTable::new(q, n).s(n);
                worst = worst.max(rel_err(series, omega));
                if omega == 0.0 {
                    continue;
                }
                for k in 1..=n {
                    let model = predicted_pk(q, n, k).unwrap();
                    worst = worst.max(rel_err(model, moments[k] / omega));
                }
            }
        }
    }
    worst
}

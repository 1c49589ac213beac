//! Dense linear assignment: Jonker–Volgenant shortest augmenting path
//! with an exhaustive oracle for small matrices.
//!
//! The solver runs on a copy of the costs shifted so the minimum entry is
//! zero (a constant shift leaves the optimal permutation unchanged), then
//! reports the cost and dual potentials of the original matrix.

use std::fmt;

use thiserror::Error;

use crate::ensemble::CostMatrix;

const NONE: usize = usize::MAX;

/// Largest size accepted by [`brute_force`].
pub const BRUTE_FORCE_MAX: usize = 10;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LapError {
    #[error("non-finite cost {value} at ({row}, {col})")]
    NonFinite { row: usize, col: usize, value: f64 },
    #[error("brute force limited to n <= {max}, got {n}")]
    SizeLimit { n: usize, max: usize },
    #[error("not a permutation: {0}")]
    InvalidPermutation(String),
    #[error("dual certificate violated by {violation:e} (tolerance {tolerance:e})")]
    Certificate { violation: f64, tolerance: f64 },
    #[error("augmenting path did not close after {0} steps")]
    Augmentation(usize),
}

/// A bijection on `0..n`, stored as `map[i] = σ(i)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    map: Vec<usize>,
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.map, f)
    }
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self, LapError> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &j in &map {
            if j >= n {
                return Err(LapError::InvalidPermutation(format!("image {j} out of range 0..{n}")));
            }
            if std::mem::replace(&mut seen[j], true) {
                return Err(LapError::InvalidPermutation(format!("image {j} repeated")));
            }
        }
        Ok(Self { map })
    }

    pub fn identity(n: usize) -> Self {
        Self { map: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.map
    }

    #[inline]
    pub fn image(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.map.len()];
        for (i, &j) in self.map.iter().enumerate() {
            inv[j] = i;
        }
        Permutation { map: inv }
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation { map: other.map.iter().map(|&j| self.map[j]).collect() }
    }
}

/// Row and column potentials with `u_i + v_j ≤ d_ij`, tight on the
/// assigned pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct DualCertificate {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl DualCertificate {
    /// Tolerance used by [`verify`](Self::verify).
    pub fn tolerance(m: &CostMatrix) -> f64 {
        1e-9 * m.max_abs().max(1.0)
    }

    /// Largest violation of feasibility or complementary slackness.
    pub fn max_violation(&self, m: &CostMatrix, perm: &Permutation) -> f64 {
        let n = m.n();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let row = m.row(i);
            for j in 0..n {
                worst = worst.max(self.u[i] + self.v[j] - row[j]);
            }
            let j = perm.image(i);
            worst = worst.max((row[j] - self.u[i] - self.v[j]).abs());
        }
        worst
    }

    pub fn verify(&self, m: &CostMatrix, perm: &Permutation) -> Result<(), LapError> {
        let violation = self.max_violation(m, perm);
        let tolerance = Self::tolerance(m);
        if violation <= tolerance {
            Ok(())
        } else {
            Err(LapError::Certificate { violation, tolerance })
        }
    }

    /// Dual objective `Σu + Σv`; equals the optimal cost.
    pub fn objective(&self) -> f64 {
        self.u.iter().sum::<f64>() + self.v.iter().sum::<f64>()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub perm: Permutation,
    /// Total cost `Σ_i d[i][σ(i)]`, accumulated in row order.
    pub cost: f64,
    /// Optimality certificate; `None` for brute-force results.
    pub duals: Option<DualCertificate>,
    /// Set by [`brute_force`] when another permutation attains the same cost.
    pub tied: bool,
}

/// Reusable scratch space for repeated solves of the same size.
///
/// Not shareable: one caller at a time. [`solve`] allocates a fresh one.
#[derive(Debug, Default)]
pub struct LapSolver {
    cost: Vec<f64>,
    v: Vec<f64>,
    rowsol: Vec<usize>,
    colsol: Vec<usize>,
    matches: Vec<u32>,
    free: Vec<usize>,
    collist: Vec<usize>,
    d: Vec<f64>,
    pred: Vec<usize>,
}

impl LapSolver {
    pub fn new() -> Self {
        Self::default()
    }

    fn reset(&mut self, n: usize) {
        self.cost.resize(n * n, 0.0);
        for buf in [&mut self.v, &mut self.d] {
            buf.clear();
            buf.resize(n, 0.0);
        }
        for buf in [&mut self.rowsol, &mut self.colsol] {
            buf.clear();
            buf.resize(n, NONE);
        }
        for buf in [&mut self.free, &mut self.collist, &mut self.pred] {
            buf.clear();
            buf.resize(n, 0);
        }
        self.matches.clear();
        self.matches.resize(n, 0);
    }

    pub fn solve(&mut self, m: &CostMatrix) -> Result<Assignment, LapError> {
        let n = m.n();
        let mut min = f64::INFINITY;
        for (idx, &x) in m.entries().iter().enumerate() {
            if !x.is_finite() {
                return Err(LapError::NonFinite { row: idx / n, col: idx % n, value: x });
            }
            min = min.min(x);
        }
        self.reset(n);
        for (dst, &src) in self.cost.iter_mut().zip(m.entries()) {
            *dst = src - min;
        }

        if n == 1 {
            self.rowsol[0] = 0;
            self.colsol[0] = 0;
            self.v[0] = self.cost[0];
        } else {
            let numfree = self.column_reduction(n);
            let mut numfree = numfree;
            for _ in 0..2 {
                if numfree == 0 {
                    break;
                }
                numfree = self.augmenting_row_reduction(n, numfree);
            }
            self.augment(n, numfree)?;
        }

        let perm = Permutation { map: self.rowsol.clone() };
        let v = self.v.clone();
        let u: Vec<f64> = (0..n).map(|i| m.get(i, perm.map[i]) - v[perm.map[i]]).collect();
        let cost = m.cost_of(&perm.map);
        let duals = DualCertificate { u, v };
        if cfg!(debug_assertions) {
            duals.verify(m, &perm)?;
        }
        Ok(Assignment { perm, cost, duals: Some(duals), tied: false })
    }

    /// Column reduction and reduction transfer. Returns the number of free rows.
    fn column_reduction(&mut self, n: usize) -> usize {
        let c = &self.cost;
        for j in (0..n).rev() {
            let mut min = c[j];
            let mut imin = 0;
            for i in 1..n {
                let h = c[i * n + j];
                if h < min {
                    min = h;
                    imin = i;
                }
            }
            self.v[j] = min;
            self.matches[imin] += 1;
            if self.matches[imin] == 1 {
                self.rowsol[imin] = j;
                self.colsol[j] = imin;
            } else if self.v[j] < self.v[self.rowsol[imin]] {
                let j1 = self.rowsol[imin];
                self.rowsol[imin] = j;
                self.colsol[j] = imin;
                self.colsol[j1] = NONE;
            } else {
                self.colsol[j] = NONE;
            }
        }

        let mut numfree = 0;
        for i in 0..n {
            match self.matches[i] {
                0 => {
                    self.free[numfree] = i;
                    numfree += 1;
                }
                1 => {
                    let j1 = self.rowsol[i];
                    let row = &c[i * n..(i + 1) * n];
                    let mut min = f64::INFINITY;
                    for j in 0..n {
                        if j != j1 {
                            min = min.min(row[j] - self.v[j]);
                        }
                    }
                    self.v[j1] -= min;
                }
                _ => {}
            }
        }
        numfree
    }

    /// One pass of augmenting row reduction over the free list.
    fn augmenting_row_reduction(&mut self, n: usize, prvnumfree: usize) -> usize {
        let c = &self.cost;
        let mut k = 0;
        let mut numfree = 0;
        let mut steps = 0usize;
        while k < prvnumfree {
            steps += 1;
            let i = self.free[k];
            k += 1;

            let row = &c[i * n..(i + 1) * n];
            let mut umin = row[0] - self.v[0];
            let mut j1 = 0;
            let mut usubmin = f64::INFINITY;
            let mut j2 = NONE;
            for j in 1..n {
                let h = row[j] - self.v[j];
                if h < usubmin {
                    if h >= umin {
                        usubmin = h;
                        j2 = j;
                    } else {
                        usubmin = umin;
                        umin = h;
                        j2 = j1;
                        j1 = j;
                    }
                }
            }

            let mut i0 = self.colsol[j1];
            let lowered = self.v[j1] - (usubmin - umin);
            // In floating point a positive gap can vanish in the subtraction;
            // treat that as a tie or the row would be re-queued forever.
            let lowers = lowered < self.v[j1];
            if steps < k * n {
                if lowers {
                    self.v[j1] = lowered;
                } else if i0 != NONE && j2 != NONE {
                    j1 = j2;
                    i0 = self.colsol[j2];
                }
                if i0 != NONE {
                    if lowers {
                        k -= 1;
                        self.free[k] = i0;
                    } else {
                        self.free[numfree] = i0;
                        numfree += 1;
                    }
                }
            } else if i0 != NONE {
                self.free[numfree] = i0;
                numfree += 1;
            }
            self.rowsol[i] = j1;
            self.colsol[j1] = i;
        }
        numfree
    }

    /// Dijkstra-style shortest augmenting paths from each remaining free row.
    fn augment(&mut self, n: usize, numfree: usize) -> Result<(), LapError> {
        let c = &self.cost;
        for f in 0..numfree {
            let freerow = self.free[f];
            let frow = &c[freerow * n..(freerow + 1) * n];
            for j in 0..n {
                self.d[j] = frow[j] - self.v[j];
                self.pred[j] = freerow;
                self.collist[j] = j;
            }

            let mut low = 0;
            let mut up = 0;
            let mut ready = 0;
            let mut min = 0.0;
            let mut endofpath = NONE;
            loop {
                if up == low {
                    // Everything before `low` is final; collect the columns at
                    // the new minimum distance into the scan window [low, up).
                    ready = low;
                    min = self.d[self.collist[up]];
                    up += 1;
                    for k in up..n {
                        let j = self.collist[k];
                        let h = self.d[j];
                        if h <= min {
                            if h < min {
                                up = low;
                                min = h;
                            }
                            self.collist[k] = self.collist[up];
                            self.collist[up] = j;
                            up += 1;
                        }
                    }
                    if let Some(&j) = self.collist[low..up].iter().find(|&&j| self.colsol[j] == NONE) {
                        endofpath = j;
                        break;
                    }
                }

                let j1 = self.collist[low];
                low += 1;
                let i = self.colsol[j1];
                let row = &c[i * n..(i + 1) * n];
                let h = row[j1] - self.v[j1] - min;
                for k in up..n {
                    let j = self.collist[k];
                    let v2 = row[j] - self.v[j] - h;
                    if v2 < self.d[j] {
                        self.pred[j] = i;
                        if v2 == min {
                            if self.colsol[j] == NONE {
                                endofpath = j;
                                break;
                            }
                            self.collist[k] = self.collist[up];
                            self.collist[up] = j;
                            up += 1;
                        }
                        self.d[j] = v2;
                    }
                }
                if endofpath != NONE {
                    break;
                }
            }

            for &j in &self.collist[..ready] {
                self.v[j] += self.d[j] - min;
            }

            let mut steps = 0;
            loop {
                let i = self.pred[endofpath];
                self.colsol[endofpath] = i;
                let next = self.rowsol[i];
                self.rowsol[i] = endofpath;
                endofpath = next;
                if i == freerow {
                    break;
                }
                steps += 1;
                if steps > n {
                    return Err(LapError::Augmentation(steps));
                }
            }
        }
        Ok(())
    }
}

/// Solves the assignment problem for `m` with a fresh workspace.
pub fn solve(m: &CostMatrix) -> Result<Assignment, LapError> {
    LapSolver::new().solve(m)
}

/// Exhaustive search over all `n!` permutations in lexicographic order.
///
/// Exact cost ties resolve to the lexicographically smallest permutation and
/// set [`Assignment::tied`].
pub fn brute_force(m: &CostMatrix) -> Result<Assignment, LapError> {
    let n = m.n();
    if n > BRUTE_FORCE_MAX {
        return Err(LapError::SizeLimit { n, max: BRUTE_FORCE_MAX });
    }
    if let Some(idx) = m.entries().iter().position(|x| !x.is_finite()) {
        return Err(LapError::NonFinite { row: idx / n, col: idx % n, value: m.entries()[idx] });
    }
    let mut p: Vec<usize> = (0..n).collect();
    let mut best = p.clone();
    let mut best_cost = m.cost_of(&p);
    let mut tied = false;
    while next_permutation(&mut p) {
        let cost = m.cost_of(&p);
        if cost < best_cost {
            best_cost = cost;
            best.copy_from_slice(&p);
            tied = false;
        } else if cost == best_cost {
            tied = true;
        }
    }
    Ok(Assignment { perm: Permutation { map: best }, cost: best_cost, duals: None, tied })
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::decompose;
    use crate::ensemble::{sample_matrix, transform_equivalence, EnsembleConfig, EntryDistribution};
    use proptest::prelude::*;

    fn mat(rows: &[&[f64]]) -> CostMatrix {
        CostMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn one_by_one() {
        let a = solve(&mat(&[&[5.0]])).unwrap();
        assert_eq!(a.perm.as_slice(), &[0]);
        assert_eq!(a.cost, 5.0);
        let b = brute_force(&mat(&[&[5.0]])).unwrap();
        assert_eq!(b.cost, 5.0);
        assert!(!b.tied);
    }

    #[test]
    fn two_by_two() {
        let m = mat(&[&[1.0, 2.0], &[3.0, 0.0]]);
        let a = solve(&m).unwrap();
        assert_eq!(a.perm.as_slice(), &[0, 1]);
        assert_eq!(a.cost, 1.0);
    }

    #[test]
    fn zero_diagonal_picks_identity() {
        let n = 6;
        let entries = (0..n * n).map(|k| if k / n == k % n { 0.0 } else { 1.0 }).collect();
        let m = CostMatrix::new(n, entries).unwrap();
        let b = brute_force(&m).unwrap();
        assert_eq!(b.perm, Permutation::identity(n));
        assert_eq!(b.cost, 0.0);
        assert_eq!(solve(&m).unwrap().cost, 0.0);
    }

    #[test]
    fn antisymmetric_three_cycle() {
        let m = mat(&[&[0.0, -1.0, 1.0], &[1.0, 0.0, -1.0], &[-1.0, 1.0, 0.0]]);
        let b = brute_force(&m).unwrap();
        assert_eq!(b.perm.as_slice(), &[1, 2, 0]);
        assert_eq!(b.cost, -3.0);
        assert!(!b.tied);
        let a = solve(&m).unwrap();
        assert_eq!(a.perm.as_slice(), &[1, 2, 0]);
        assert_eq!(a.cost, -3.0);
    }

    #[test]
    fn ties_flagged_and_lexicographic() {
        let m = mat(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let b = brute_force(&m).unwrap();
        assert!(b.tied);
        assert_eq!(b.perm.as_slice(), &[0, 1]);
        let a = solve(&m).unwrap();
        assert_eq!(a.cost, 2.0);
    }

    #[test]
    fn rejects_non_finite_and_oversize() {
        let m = mat(&[&[1.0, f64::NAN], &[0.0, 1.0]]);
        assert!(matches!(solve(&m), Err(LapError::NonFinite { row: 0, col: 1, .. })));
        assert!(matches!(brute_force(&m), Err(LapError::NonFinite { .. })));
        let big = CostMatrix::new(11, vec![0.0; 121]).unwrap();
        assert!(matches!(brute_force(&big), Err(LapError::SizeLimit { n: 11, .. })));
    }

    #[test]
    fn permutation_validation() {
        assert!(Permutation::new(vec![1, 0, 2]).is_ok());
        assert!(Permutation::new(vec![1, 1, 2]).is_err());
        assert!(Permutation::new(vec![0, 3, 1]).is_err());
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        assert_eq!(p.compose(&p.inverse()), Permutation::identity(3));
    }

    #[test]
    fn next_permutation_counts() {
        let mut p: Vec<usize> = (0..5).collect();
        let mut count = 1;
        while next_permutation(&mut p) {
            count += 1;
        }
        assert_eq!(count, 120);
    }

    #[test]
    fn workspace_reuse_across_sizes() {
        let mut solver = LapSolver::new();
        for n in [7, 3, 12, 1, 5] {
            let cfg = EnsembleConfig::new(n, 0.4, EntryDistribution::Uniform01, 1, n as u64).unwrap();
            let m = sample_matrix(&cfg, 0);
            let a = solver.solve(&m).unwrap();
            assert_eq!(a, solve(&m).unwrap());
        }
    }

    #[test]
    fn certificate_on_larger_instances() {
        let mut solver = LapSolver::new();
        for (k, &lambda) in [-1.0, -0.5, 0.0, 0.5, 1.0].iter().enumerate() {
            for dist in [EntryDistribution::Uniform01, EntryDistribution::Exponential1] {
                let cfg = EnsembleConfig::new(150, lambda, dist, 2, k as u64).unwrap();
                let m = sample_matrix(&cfg, 1);
                let a = solver.solve(&m).unwrap();
                let duals = a.duals.as_ref().unwrap();
                duals.verify(&m, &a.perm).unwrap();
                assert!((duals.objective() - a.cost).abs() < 1e-9 * 150.0);
            }
        }
    }

    fn arb_matrix() -> impl Strategy<Value = CostMatrix> {
        (1usize..=7).prop_flat_map(|n| {
            prop::collection::vec(-10.0f64..10.0, n * n)
                .prop_map(move |e| CostMatrix::new(n, e).unwrap())
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force(m in arb_matrix()) {
            let a = solve(&m).unwrap();
            let b = brute_force(&m).unwrap();
            prop_assert!((a.cost - b.cost).abs() < 1e-12, "{} vs {}", a.cost, b.cost);
            a.duals.unwrap().verify(&m, &a.perm).unwrap();
        }

        #[test]
        fn integer_costs_with_ties(n in 2usize..=7, seed in any::<u64>()) {
            // Small integer entries force many exact ties.
            let entries: Vec<f64> = (0..n * n)
                .map(|k| (crate::ensemble::derive_seed(seed, &[k as u64]) >> 61) as f64)
                .collect();
            let m = CostMatrix::new(n, entries).unwrap();
            let a = solve(&m).unwrap();
            let b = brute_force(&m).unwrap();
            prop_assert_eq!(a.cost, b.cost);
        }

        #[test]
        fn shift_scale_transpose_invariance(
            m in arb_matrix(),
            shift in -50.0f64..50.0,
            scale in 0.1f64..20.0,
        ) {
            let n = m.n();
            let base = solve(&m).unwrap();
            let id = Permutation::identity(n);
            let spectrum = decompose(&base.perm);

            let shifted = transform_equivalence(&m, 1.0, shift, &id, false).unwrap();
            let s = solve(&shifted).unwrap();
            prop_assert_eq!(&decompose(&s.perm), &spectrum);
            prop_assert!((s.cost - base.cost - n as f64 * shift).abs() < 1e-9 * (1.0 + shift.abs()) * n as f64);

            let scaled = transform_equivalence(&m, scale, 0.0, &id, false).unwrap();
            let sc = solve(&scaled).unwrap();
            prop_assert!((sc.cost - scale * base.cost).abs() < 1e-9 * scale * n as f64 * 10.0);

            let t = solve(&m.transpose()).unwrap();
            prop_assert!((t.cost - base.cost).abs() < 1e-9 * n as f64 * 10.0);
            prop_assert_eq!(&decompose(&t.perm), &spectrum);
        }

        #[test]
        fn relabelling_conjugates(m in arb_matrix(), seed in any::<u64>()) {
            let n = m.n();
            let mut map: Vec<usize> = (0..n).collect();
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                map.swap(i, (s >> 33) as usize % (i + 1));
            }
            let pi = Permutation::new(map).unwrap();
            let base = solve(&m).unwrap();
            let r = solve(&transform_equivalence(&m, 1.0, 0.0, &pi, false).unwrap()).unwrap();
            prop_assert!((r.cost - base.cost).abs() < 1e-9 * 10.0 * n as f64);
            prop_assert_eq!(decompose(&r.perm), decompose(&base.perm));
        }
    }
}

//! Cycle decomposition of permutations and ensemble statistics of the
//! cycle spectrum `p_k`.

use thiserror::Error;

use crate::lap::{LapError, Permutation};
use crate::stats::RunningStats;

/// Cycle lengths up to this bound are stored densely.
const DENSE_LIMIT: usize = 64;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CycleError {
    #[error("no samples accumulated")]
    Empty,
    #[error("spectrum size {got} does not match accumulator size {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Permutation(#[from] LapError),
}

/// Number of `k`-cycles of one permutation.
///
/// Counts for `k ≤ 64` are dense, longer cycles are kept as a sorted list
/// since a permutation has few of them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleSpectrum {
    n: usize,
    dense: Vec<u32>,
    sparse: Vec<(usize, u32)>,
}

impl CycleSpectrum {
    fn empty(n: usize) -> Self {
        Self { n, dense: vec![0; n.min(DENSE_LIMIT)], sparse: Vec::new() }
    }

    fn add_cycle(&mut self, len: usize) {
        if len <= DENSE_LIMIT {
            self.dense[len - 1] += 1;
        } else {
            match self.sparse.binary_search_by_key(&len, |&(k, _)| k) {
                Ok(pos) => self.sparse[pos].1 += 1,
                Err(pos) => self.sparse.insert(pos, (len, 1)),
            }
        }
    }

    /// Builds a spectrum from explicit `(k, p_k)` pairs, checking
    /// `Σ k p_k = n`.
    pub fn from_counts(n: usize, counts: &[(usize, u32)]) -> Option<Self> {
        let mut s = Self::empty(n);
        let mut total = 0usize;
        for &(k, c) in counts {
            if k == 0 || k > n {
                return None;
            }
            for _ in 0..c {
                s.add_cycle(k);
            }
            total += k * c as usize;
        }
        (total == n).then_some(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `p_k`; zero outside `1..=n`.
    pub fn count(&self, k: usize) -> u32 {
        if k == 0 || k > self.n {
            0
        } else if k <= DENSE_LIMIT {
            self.dense[k - 1]
        } else {
            self.sparse
                .binary_search_by_key(&k, |&(len, _)| len)
                .map(|pos| self.sparse[pos].1)
                .unwrap_or(0)
        }
    }

    /// Nonzero `(k, p_k)` pairs in increasing `k`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.dense
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i + 1, c))
            .chain(self.sparse.iter().copied())
    }

    /// Total number of cycles `n_c = Σ p_k`.
    pub fn num_cycles(&self) -> u32 {
        self.iter().map(|(_, c)| c).sum()
    }

    /// Whether any even cycle of length ≥ 4 is present.
    pub fn has_long_even_cycle(&self) -> bool {
        self.iter().any(|(k, _)| k >= 4 && k % 2 == 0)
    }
}

/// Orbit sizes of `perm`, visiting each element once.
pub fn decompose(perm: &Permutation) -> CycleSpectrum {
    let n = perm.len();
    let mut spectrum = CycleSpectrum::empty(n);
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm.image(i);
            len += 1;
        }
        spectrum.add_cycle(len);
    }
    spectrum
}

/// [`decompose`] for a raw map, rejecting non-bijections.
pub fn decompose_map(map: &[usize]) -> Result<CycleSpectrum, CycleError> {
    Ok(decompose(&Permutation::new(map.to_vec())?))
}

/// Streaming statistics of cycle spectra and optimal costs.
///
/// Cycle counts are integers, so their first and second moments are kept
/// as exact integer sums: merging is exactly associative and only the
/// final division rounds. Costs use Welford updates.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumAccumulator {
    n: usize,
    samples: u64,
    sum: Vec<u64>,
    sum_sq: Vec<u64>,
    sum_p1p2: u64,
    nc_sum: u64,
    nc_sum_sq: u64,
    cost: RunningStats,
}

impl SpectrumAccumulator {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            samples: 0,
            sum: vec![0; n + 1],
            sum_sq: vec![0; n + 1],
            sum_p1p2: 0,
            nc_sum: 0,
            nc_sum_sq: 0,
            cost: RunningStats::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn push(&mut self, spectrum: &CycleSpectrum, cost: f64) -> Result<(), CycleError> {
        if spectrum.n != self.n {
            return Err(CycleError::SizeMismatch { expected: self.n, got: spectrum.n });
        }
        let mut nc = 0u64;
        for (k, c) in spectrum.iter() {
            let c = c as u64;
            self.sum[k] += c;
            self.sum_sq[k] += c * c;
            nc += c;
        }
        self.sum_p1p2 += spectrum.count(1) as u64 * spectrum.count(2) as u64;
        self.nc_sum += nc;
        self.nc_sum_sq += nc * nc;
        self.cost.push(cost);
        self.samples += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &SpectrumAccumulator) -> Result<(), CycleError> {
        if other.n != self.n {
            return Err(CycleError::SizeMismatch { expected: self.n, got: other.n });
        }
        for k in 0..=self.n {
            self.sum[k] += other.sum[k];
            self.sum_sq[k] += other.sum_sq[k];
        }
        self.sum_p1p2 += other.sum_p1p2;
        self.nc_sum += other.nc_sum;
        self.nc_sum_sq += other.nc_sum_sq;
        self.cost.merge(&other.cost);
        self.samples += other.samples;
        Ok(())
    }

    pub fn finish(&self, lambda: f64, dist: &str) -> Result<SpectrumEstimate, CycleError> {
        if self.samples == 0 {
            return Err(CycleError::Empty);
        }
        let m = self.samples;
        let mf = m as f64;
        let mean_pk: Vec<f64> = self.sum[1..].iter().map(|&s| s as f64 / mf).collect();
        let stderr_pk: Vec<f64> = (1..=self.n)
            .map(|k| integer_stderr(self.sum[k], self.sum_sq[k], m))
            .collect();
        let cov_p1p2 = if m < 2 || self.n < 2 {
            0.0
        } else {
            let num = m as i128 * self.sum_p1p2 as i128 - self.sum[1] as i128 * self.sum[2] as i128;
            num as f64 / (mf * (mf - 1.0)) / mf
        };
        Ok(SpectrumEstimate {
            n: self.n,
            lambda,
            dist: dist.to_string(),
            samples: m,
            mean_pk,
            stderr_pk,
            cov_p1p2,
            mean_nc: self.nc_sum as f64 / mf,
            stderr_nc: integer_stderr(self.nc_sum, self.nc_sum_sq, m),
            mean_cost: self.cost.mean(),
            stderr_cost: self.cost.stderr(),
        })
    }
}

/// Standard error of the mean from exact integer moments.
fn integer_stderr(sum: u64, sum_sq: u64, m: u64) -> f64 {
    if m < 2 {
        return 0.0;
    }
    let num = m as u128 * sum_sq as u128 - sum as u128 * sum as u128;
    let mf = m as f64;
    let var = num as f64 / (mf * (mf - 1.0));
    (var / mf).sqrt()
}

/// Ensemble means `P_k = ⟨p_k⟩` with one-sigma standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumEstimate {
    pub n: usize,
    pub lambda: f64,
    pub dist: String,
    pub samples: u64,
    /// `mean_pk[k - 1] = P_k`.
    pub mean_pk: Vec<f64>,
    pub stderr_pk: Vec<f64>,
    /// Covariance of the estimators of `P_1` and `P_2`.
    pub cov_p1p2: f64,
    pub mean_nc: f64,
    pub stderr_nc: f64,
    pub mean_cost: f64,
    pub stderr_cost: f64,
}

impl SpectrumEstimate {
    /// Estimate built from known means, e.g. model predictions or data read
    /// back from CSV. Missing errors are zero.
    pub fn from_means(n: usize, lambda: f64, dist: &str, samples: u64, mean_pk: Vec<f64>) -> Self {
        assert_eq!(mean_pk.len(), n, "need one mean per cycle length");
        let mean_nc = mean_pk.iter().sum();
        Self {
            n,
            lambda,
            dist: dist.to_string(),
            samples,
            stderr_pk: vec![0.0; n],
            mean_pk,
            cov_p1p2: 0.0,
            mean_nc,
            stderr_nc: 0.0,
            mean_cost: f64::NAN,
            stderr_cost: 0.0,
        }
    }

    /// `P_k`, zero outside `1..=n`.
    pub fn p(&self, k: usize) -> f64 {
        if k == 0 || k > self.n {
            0.0
        } else {
            self.mean_pk[k - 1]
        }
    }

    pub fn p_err(&self, k: usize) -> f64 {
        if k == 0 || k > self.n {
            0.0
        } else {
            self.stderr_pk[k - 1]
        }
    }

    /// `k P_k` and its standard error.
    pub fn kpk(&self, k: usize) -> (f64, f64) {
        (k as f64 * self.p(k), k as f64 * self.p_err(k))
    }

    /// With a single sample the standard errors are reported as zero.
    pub fn has_errors(&self) -> bool {
        self.samples > 1
    }

    /// `Σ_k k P_k`; equals `n` up to rounding.
    pub fn partition_sum(&self) -> f64 {
        self.mean_pk.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum()
    }
}

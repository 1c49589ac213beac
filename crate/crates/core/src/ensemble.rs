//! Random cost matrices `d_ij = R_ij + λ R_ji` with i.i.d. base entries.
//!
//! Every matrix is addressed by `(master_seed, index)`: the base stream is a
//! ChaCha8 generator keyed by the master seed with the sample index as its
//! stream id, so sample `i` is the same no matter which worker draws it.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use thiserror::Error;

use crate::lap::Permutation;
use crate::quad::{self, Tolerance};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EnsembleError {
    #[error("matrix dimension must be at least 1")]
    EmptyDimension,
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("lambda = {0} outside [-1, 1]")]
    LambdaOutOfRange(f64),
    #[error("expected {expected} entries for an {n}x{n} matrix, got {got}")]
    ShapeMismatch { n: usize, expected: usize, got: usize },
    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("permutation of size {perm} applied to matrix of size {n}")]
    PermutationSize { n: usize, perm: usize },
    #[error("density integrates to {mass}, not 1")]
    NotNormalized { mass: f64 },
    #[error("invalid support [{lo}, {hi}]")]
    BadSupport { lo: f64, hi: f64 },
    #[error("density normalization check failed: {0}")]
    Quadrature(#[from] quad::QuadError),
    #[error("unknown distribution '{0}' (expected 'uniform' or 'exp')")]
    UnknownDistribution(String),
}

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied entry distribution: a density for the analytic side and
/// a quantile function that turns uniform variates into samples.
#[derive(Clone)]
pub struct CustomDistribution {
    name: String,
    support: (f64, f64),
    density: RealFn,
    quantile: RealFn,
    survival: Option<RealFn>,
    tail_moment: Option<RealFn>,
    mass: f64,
    edge_density: f64,
}

impl fmt::Debug for CustomDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomDistribution")
            .field("name", &self.name)
            .field("support", &self.support)
            .field("mass", &self.mass)
            .field("edge_density", &self.edge_density)
            .finish_non_exhaustive()
    }
}

impl CustomDistribution {
    /// Builds a distribution from its density and quantile function.
    ///
    /// The density must integrate to one over `support` within 1e-6.
    pub fn new(
        name: impl Into<String>,
        support: (f64, f64),
        density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        quantile: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, EnsembleError> {
        let (lo, hi) = support;
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(EnsembleError::BadSupport { lo, hi });
        }
        let density: RealFn = Arc::new(density);
        let mass = quad::integrate(|x| density(x), lo, hi, Tolerance::new(1e-12, 1e-10))?.value;
        if (mass - 1.0).abs() > 1e-6 {
            return Err(EnsembleError::NotNormalized { mass });
        }
        let edge_density = if lo.is_finite() {
            density(lo + 1e-9 * lo.abs().max(1.0))
        } else {
            0.0
        };
        Ok(Self {
            name: name.into(),
            support,
            density,
            quantile: Arc::new(quantile),
            survival: None,
            tail_moment: None,
            mass,
            edge_density,
        })
    }

    /// Supplies closed forms for `∫_x^∞ ρ` and `∫_x^∞ (z - x) ρ(z) dz`,
    /// which shortcut the nested quadrature of the slope coefficient.
    pub fn with_tails(
        mut self,
        survival: impl Fn(f64) -> f64 + Send + Sync + 'static,
        tail_moment: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.survival = Some(Arc::new(survival));
        self.tail_moment = Some(Arc::new(tail_moment));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Density integral measured at construction.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Density just above the lower end of the support.
    pub fn edge_density(&self) -> f64 {
        self.edge_density
    }
}

/// Distribution of the base entries `R_ij`.
#[derive(Clone, Debug)]
pub enum EntryDistribution {
    /// Uniform on `[0, 1]`.
    Uniform01,
    /// Density `e^{-x}` on `x ≥ 0`.
    Exponential1,
    Custom(CustomDistribution),
}

impl EntryDistribution {
    pub fn id(&self) -> &str {
        match self {
            EntryDistribution::Uniform01 => "uniform",
            EntryDistribution::Exponential1 => "exp",
            EntryDistribution::Custom(c) => &c.name,
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            EntryDistribution::Uniform01 => (0.0, 1.0),
            EntryDistribution::Exponential1 => (0.0, f64::INFINITY),
            EntryDistribution::Custom(c) => c.support,
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match self {
            EntryDistribution::Uniform01 => {
                if (0.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            EntryDistribution::Exponential1 => {
                if x >= 0.0 {
                    (-x).exp()
                } else {
                    0.0
                }
            }
            EntryDistribution::Custom(c) => (c.density)(x),
        }
    }

    /// `P(R > x)` when known in closed form.
    pub fn survival(&self, x: f64) -> Option<f64> {
        match self {
            EntryDistribution::Uniform01 => Some((1.0 - x).clamp(0.0, 1.0)),
            EntryDistribution::Exponential1 => Some(if x <= 0.0 { 1.0 } else { (-x).exp() }),
            EntryDistribution::Custom(c) => c.survival.as_ref().map(|s| s(x)),
        }
    }

    /// `∫_x^∞ (z - x) ρ(z) dz` when known in closed form.
    pub fn tail_moment(&self, x: f64) -> Option<f64> {
        match self {
            EntryDistribution::Uniform01 => {
                let r = (1.0 - x).clamp(0.0, 1.0);
                Some(if x < 0.0 { 0.5 - x } else { 0.5 * r * r })
            }
            EntryDistribution::Exponential1 => {
                Some(if x <= 0.0 { 1.0 - x } else { (-x).exp() })
            }
            EntryDistribution::Custom(c) => c.tail_moment.as_ref().map(|t| t(x)),
        }
    }

    /// Whether the density has a nonzero limit at the bottom of its support.
    /// Most large-N results assume it does; custom distributions that
    /// violate this are accepted but flagged.
    pub fn has_nonzero_edge(&self) -> bool {
        match self {
            EntryDistribution::Uniform01 | EntryDistribution::Exponential1 => true,
            EntryDistribution::Custom(c) => c.edge_density > 1e-6,
        }
    }

    /// The coefficient `a` in `ρ(r) = 1 - a r + O(r²)` near the bottom of the
    /// support, when the density starts at 0 with unit height.
    pub fn edge_slope(&self) -> Option<f64> {
        match self {
            EntryDistribution::Uniform01 => Some(0.0),
            EntryDistribution::Exponential1 => Some(1.0),
            EntryDistribution::Custom(c) => {
                let (lo, _) = c.support;
                if lo != 0.0 || (c.edge_density - 1.0).abs() > 1e-6 {
                    return None;
                }
                let h = 1e-5;
                let d1 = (c.density)(h);
                let d2 = (c.density)(2.0 * h);
                // one-sided second-order difference at 0
                let slope = (-3.0 * c.edge_density + 4.0 * d1 - d2) / (2.0 * h);
                Some(-slope)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            EntryDistribution::Uniform01 => rng.random::<f64>(),
            EntryDistribution::Exponential1 => Exp1.sample(rng),
            EntryDistribution::Custom(c) => (c.quantile)(rng.random::<f64>()),
        }
    }
}

impl FromStr for EntryDistribution {
    type Err = EnsembleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" | "uniform01" | "u" => Ok(EntryDistribution::Uniform01),
            "exp" | "exponential" | "exponential1" | "e" => Ok(EntryDistribution::Exponential1),
            _ => Err(EnsembleError::UnknownDistribution(s.to_string())),
        }
    }
}

impl fmt::Display for EntryDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Clone, Debug)]
pub struct EnsembleConfig {
    n: usize,
    lambda: f64,
    dist: EntryDistribution,
    samples: u64,
    master_seed: u64,
}

impl EnsembleConfig {
    pub fn new(
        n: usize,
        lambda: f64,
        dist: EntryDistribution,
        samples: u64,
        master_seed: u64,
    ) -> Result<Self, EnsembleError> {
        if n == 0 {
            return Err(EnsembleError::EmptyDimension);
        }
        if samples == 0 {
            return Err(EnsembleError::NoSamples);
        }
        if !(-1.0..=1.0).contains(&lambda) {
            return Err(EnsembleError::LambdaOutOfRange(lambda));
        }
        Ok(Self { n, lambda, dist, samples, master_seed })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn dist(&self) -> &EntryDistribution {
        &self.dist
    }
    pub fn samples(&self) -> u64 {
        self.samples
    }
    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }
}

/// Dense row-major square cost matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    n: usize,
    entries: Vec<f64>,
    lambda: Option<f64>,
}

impl CostMatrix {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self, EnsembleError> {
        if n == 0 {
            return Err(EnsembleError::EmptyDimension);
        }
        if entries.len() != n * n {
            return Err(EnsembleError::ShapeMismatch { n, expected: n * n, got: entries.len() });
        }
        Ok(Self { n, entries, lambda: None })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, EnsembleError> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for r in rows {
            let r = r.as_ref();
            if r.len() != n {
                return Err(EnsembleError::ShapeMismatch { n, expected: n * n, got: n * r.len() });
            }
            entries.extend_from_slice(r);
        }
        Self::new(n, entries)
    }

    fn zeros(n: usize) -> Self {
        Self { n, entries: vec![0.0; n * n], lambda: None }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Coupling the matrix was drawn with, if it came from an ensemble.
    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    pub fn transpose(&self) -> CostMatrix {
        let n = self.n;
        let mut out = CostMatrix::zeros(n);
        out.lambda = self.lambda;
        for i in 0..n {
            for j in 0..n {
                out.entries[j * n + i] = self.entries[i * n + j];
            }
        }
        out
    }

    /// Total cost of `perm`, summed in row order.
    pub fn cost_of(&self, perm: &[usize]) -> f64 {
        perm.iter().enumerate().map(|(i, &j)| self.get(i, j)).sum()
    }
}

/// Reusable buffers for drawing matrices from one ensemble.
#[derive(Debug)]
pub struct MatrixSampler {
    base: Vec<f64>,
    matrix: CostMatrix,
}

impl MatrixSampler {
    pub fn new(n: usize) -> Self {
        Self { base: vec![0.0; n * n], matrix: CostMatrix::zeros(n) }
    }

    /// Draws sample `index` of `config` into the internal buffer.
    pub fn sample(&mut self, config: &EnsembleConfig, index: u64) -> &CostMatrix {
        assert!(
            index < config.samples,
            "sample index {index} out of range for {} samples",
            config.samples
        );
        let n = config.n;
        if self.matrix.n != n {
            *self = MatrixSampler::new(n);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.master_seed);
        rng.set_stream(index);
        for r in self.base.iter_mut() {
            *r = config.dist.sample(&mut rng);
        }
        let lambda = config.lambda;
        let base = &self.base;
        let out = &mut self.matrix.entries;
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = if i == j {
                    (1.0 + lambda) * base[i * n + i]
                } else {
                    base[i * n + j] + lambda * base[j * n + i]
                };
            }
        }
        self.matrix.lambda = Some(lambda);
        &self.matrix
    }
}

/// Returns the `index`-th matrix of the ensemble stream.
pub fn sample_matrix(config: &EnsembleConfig, index: u64) -> CostMatrix {
    let mut sampler = MatrixSampler::new(config.n);
    sampler.sample(config, index).clone()
}

/// `α d_{π(i)π(j)} + c`, optionally transposed. Each of these maps the
/// optimal permutation to one of the same cycle type.
pub fn transform_equivalence(
    m: &CostMatrix,
    alpha: f64,
    c: f64,
    pi: &Permutation,
    transpose: bool,
) -> Result<CostMatrix, EnsembleError> {
    if !(alpha > 0.0) {
        return Err(EnsembleError::NonPositiveScale(alpha));
    }
    let n = m.n;
    if pi.len() != n {
        return Err(EnsembleError::PermutationSize { n, perm: pi.len() });
    }
    let p = pi.as_slice();
    let mut out = CostMatrix::zeros(n);
    out.lambda = m.lambda;
    for i in 0..n {
        for j in 0..n {
            let v = alpha * m.get(p[i], p[j]) + c;
            if transpose {
                out.entries[j * n + i] = v;
            } else {
                out.entries[i * n + j] = v;
            }
        }
    }
    Ok(out)
}

/// Mixes a master seed with extra words into an independent 64-bit seed.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    parts.iter().fold(splitmix(master), |acc, &p| splitmix(acc ^ splitmix(p)))
}

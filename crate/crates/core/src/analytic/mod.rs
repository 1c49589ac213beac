//! The two-parameter weighted-permutation model.
//!
//! A permutation with `p₁` fixed points and `p₂` transpositions gets weight
//! `q₁^{p₁} q₂^{p₂}` relative to the uniform measure. Everything here is
//! computed exactly at finite `N` through [`SeriesTable`]; the large-`N`
//! forms are separate `asymptotic_*` functions.

mod model;
mod series;
mod slope;

use std::fmt;

use thiserror::Error;

use crate::quad::QuadError;

pub use model::{
    asymptotic_long_cycles, asymptotic_omega_ratio, asymptotic_pk, nu_nk, predicted_long_cycles,
    predicted_pk, series_table, LongCycles, Model,
};
pub use series::{Scaled, SeriesTable};
pub use slope::{slope_alpha, slope_alpha_numeric, theta, theta_derivative};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AnalyticError {
    #[error("weights must be finite and non-negative, got ({q1}, {q2})")]
    InvalidWeights { q1: f64, q2: f64 },
    #[error("cycle length {k} outside 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("total weight vanishes for {q} at n = {n}")]
    Degenerate { q: QPair, n: usize },
    #[error("exact cycle counts need 1 <= k <= n <= 20, got n = {n}, k = {k}")]
    NuRange { n: usize, k: usize },
    #[error("long-cycle formulas need n >= 7, got {0}")]
    TooSmall(usize),
    #[error("slope integral failed: {0}")]
    Quadrature(#[from] QuadError),
}

/// Model weights for one- and two-cycles. `(1, 1)` is the uniform measure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QPair {
    pub q1: f64,
    pub q2: f64,
}

impl QPair {
    pub const UNIFORM: QPair = QPair { q1: 1.0, q2: 1.0 };

    pub fn new(q1: f64, q2: f64) -> Result<Self, AnalyticError> {
        if q1.is_finite() && q2.is_finite() && q1 >= 0.0 && q2 >= 0.0 {
            Ok(Self { q1, q2 })
        } else {
            Err(AnalyticError::InvalidWeights { q1, q2 })
        }
    }
}

impl fmt::Display for QPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(q1 = {}, q2 = {})", self.q1, self.q2)
    }
}

/// `H_n = Σ_{m≤n} 1/m`, the mean number of cycles of a uniform permutation.
pub fn harmonic(n: usize) -> f64 {
    (1..=n).rev().map(|m| 1.0 / m as f64).sum()
}

/// `Σ_{m≤n} 1/m²`, the mean optimal cost for i.i.d. unit exponentials.
pub fn parisi_sum(n: usize) -> f64 {
    (1..=n).rev().map(|m| 1.0 / (m as f64 * m as f64)).sum()
}

pub const ZETA2: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;
pub const ZETA3: f64 = 1.202_056_903_159_594_3;

/// Large-N mean optimal cost `ζ(2) - (2(1-a)ζ(3) + 1)/N` for a density
/// behaving as `1 - a r` near zero.
pub fn cost_expansion(n: usize, a: f64) -> f64 {
    ZETA2 - (2.0 * (1.0 - a) * ZETA3 + 1.0) / n as f64
}

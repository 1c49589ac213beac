//! Slope coefficient `α` of `q₁` at `λ = 0` and the four-entry probe `Θ(λ)`.

use std::cell::Cell;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::AnalyticError;
use crate::ensemble::EntryDistribution;
use crate::quad::{self, QuadError, Tolerance};
use crate::stats::{McEstimate, RunningStats};

const INNER_TOL: Tolerance = Tolerance::new(1e-14, 1e-12);
const OUTER_TOL: Tolerance = Tolerance::new(1e-13, 1e-10);

/// `α = 2 ∫ ρ(x)² S(x) T(x) dx` with `S(x) = ∫_x^∞ ρ` and
/// `T(x) = ∫_x^∞ (z - x) ρ(z) dz`.
///
/// Closed forms for the built-in distributions (`1/4` uniform, `1/2`
/// exponential); custom ones go through quadrature, using any tail
/// functions they supply.
pub fn slope_alpha(dist: &EntryDistribution) -> Result<f64, AnalyticError> {
    match dist {
        EntryDistribution::Uniform01 => Ok(0.25),
        EntryDistribution::Exponential1 => Ok(0.5),
        EntryDistribution::Custom(_) => slope_by_quadrature(dist, true),
    }
}

/// [`slope_alpha`] evaluated as a fully nested numerical integral,
/// whatever closed forms the distribution offers.
pub fn slope_alpha_numeric(dist: &EntryDistribution) -> Result<f64, AnalyticError> {
    slope_by_quadrature(dist, false)
}

fn slope_by_quadrature(dist: &EntryDistribution, use_tails: bool) -> Result<f64, AnalyticError> {
    let (lo, hi) = dist.support();
    let failure: Cell<Option<QuadError>> = Cell::new(None);
    let inner = |f: &dyn Fn(f64) -> f64, a: f64| -> f64 {
        match quad::integrate(f, a, hi, INNER_TOL) {
            Ok(r) => r.value,
            Err(e) => {
                failure.set(Some(e));
                f64::NAN
            }
        }
    };
    let integrand = |x: f64| {
        let rho = dist.density(x);
        if rho == 0.0 {
            return 0.0;
        }
        let survival = match (use_tails, dist.survival(x)) {
            (true, Some(s)) => s,
            _ => inner(&|z| dist.density(z), x),
        };
        let tail = match (use_tails, dist.tail_moment(x)) {
            (true, Some(t)) => t,
            _ => inner(&|z| (z - x) * dist.density(z), x),
        };
        rho * rho * survival * tail
    };
    let outer = quad::integrate(integrand, lo, hi, OUTER_TOL);
    if let Some(e) = failure.take() {
        return Err(e.into());
    }
    Ok(2.0 * outer?.value)
}

/// Whether the smaller diagonal entry exceeds the smaller of a transpose
/// pair, for base draws `(R_ij, R_ji, R_ii, R_jj)`.
fn diagonal_loses(lambda: f64, r: &[f64; 4]) -> bool {
    let d_ij = r[0] + lambda * r[1];
    let d_ji = r[1] + lambda * r[0];
    let d_ii = (1.0 + lambda) * r[2];
    let d_jj = (1.0 + lambda) * r[3];
    d_ii.min(d_jj) > d_ij.min(d_ji)
}

fn draw4(dist: &EntryDistribution, rng: &mut ChaCha8Rng) -> [f64; 4] {
    [dist.sample(rng), dist.sample(rng), dist.sample(rng), dist.sample(rng)]
}

/// Monte Carlo estimate of `Θ(λ) = ½ P(min(d_ii, d_jj) > min(d_ij, d_ji))`.
pub fn theta(lambda: f64, dist: &EntryDistribution, samples: u64, seed: u64) -> McEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stats: RunningStats = (0..samples)
        .map(|_| {
            let r = draw4(dist, &mut rng);
            if diagonal_loses(lambda, &r) { 0.5 } else { 0.0 }
        })
        .collect();
    McEstimate { value: stats.mean(), stderr: stats.stderr(), samples }
}

/// Central difference `(Θ(h) - Θ(-h)) / 2h` at `λ = 0`, with both sides
/// evaluated on the same draws. Its negative estimates `α`.
///
/// `Θ` carries a `λ|λ|` term, so the bias is `O(h)` rather than `O(h²)`;
/// for unit exponentials it is about `0.9 h`.
pub fn theta_derivative(dist: &EntryDistribution, h: f64, samples: u64, seed: u64) -> McEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stats: RunningStats = (0..samples)
        .map(|_| {
            let r = draw4(dist, &mut rng);
            let up = diagonal_loses(h, &r) as u8 as f64;
            let down = diagonal_loses(-h, &r) as u8 as f64;
            0.5 * (up - down) / (2.0 * h)
        })
        .collect();
    McEstimate { value: stats.mean(), stderr: stats.stderr(), samples }
}

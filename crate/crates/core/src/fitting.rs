//! Inversion of measured spectra into model weights `(q₁, q₂)`.
//!
//! The plain fit matches the exact model `P₁`, `P₂` to the measurement. The
//! corrected fit first removes from `P₂` the two-cycles that stem from
//! broken even cycles: every `2L`-cycle the model predicts but the data
//! lacks is counted as `L` extra two-cycles.

use thiserror::Error;

use crate::analytic::{AnalyticError, Model, QPair};
use crate::cycles::SpectrumEstimate;

/// Fixed-point damping for the `(q₁, q₂)` iteration.
const DAMPING: f64 = 0.5;
const MAX_INVERT_ITERATIONS: usize = 200;
const MAX_CORRECTION_ITERATIONS: usize = 100;
/// Residual below which a fit counts as converged.
pub const FIT_TOLERANCE: f64 = 1e-9;
const STEP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FitError {
    #[error("fit did not converge after {iterations} iterations (last {last}, residual {residual:e})")]
    NonConvergence { last: QPair, iterations: usize, residual: f64 },
    #[error("corrected fit oscillates between {a} and {b}")]
    Oscillation { a: QPair, b: QPair },
    #[error("need n >= 2 to fit one- and two-cycle weights, got {0}")]
    TooSmall(usize),
    #[error(transparent)]
    Model(#[from] AnalyticError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub n: usize,
    pub lambda: f64,
    pub q: QPair,
    /// One-sigma errors of `q₁`, `q₂` propagated from the measurement.
    pub q_err: (f64, f64),
    pub q_cov: f64,
    pub iterations: usize,
    /// `max(|P₁ model - P₁|, |2P₂ model - 2P₂'|)` at the solution.
    pub residual: f64,
    pub corrected: bool,
    /// Two-cycles attributed to broken even cycles (zero when uncorrected).
    pub p2_correction: f64,
    /// A slightly negative correction was clamped to zero.
    pub clamped: bool,
}

struct Inversion {
    q: QPair,
    iterations: usize,
    residual: f64,
}

/// Solves `q₁ S_{n-1}/S_n = p1`, `(q₂/2) S_{n-2}/S_n = p2` from the seed
/// `(p1, 2 p2)`.
///
/// Each step tries Newton with backtracking and falls back to the damped
/// fixed point `q ← ½ q + ½ (p1 / r₁, 2 p2 / r₂)` when Newton does not
/// reduce the residual. The fixed point alone crawls once `q₂ ≫ 1`.
fn invert(n: usize, p1: f64, p2: f64) -> Result<Inversion, FitError> {
    if n < 2 {
        return Err(FitError::TooSmall(n));
    }
    let p1 = p1.max(0.0);
    let p2 = p2.max(0.0);
    let target = (p1, 2.0 * p2);
    let resid = |q: QPair| -> Result<(f64, f64), FitError> {
        let (r1, r2) = Model::new(q, n)?.small_cycle_ratios();
        Ok((q.q1 * r1 - target.0, q.q2 * r2 - target.1))
    };
    let norm = |r: (f64, f64)| r.0.abs().max(r.1.abs());
    let scale = 1.0 + target.0.max(target.1);

    let mut q = QPair::new(target.0, target.1)?;
    let mut r = resid(q)?;
    for it in 1..=MAX_INVERT_ITERATIONS {
        if norm(r) <= 1e-13 * scale {
            return Ok(Inversion { q, iterations: it, residual: norm(r) });
        }
        let next = match newton_step(q, r, target, &resid)? {
            Some(step) if norm(step.1) < norm(r) => step,
            _ => {
                let (r1, r2) = Model::new(q, n)?.small_cycle_ratios();
                let fixed = QPair::new(
                    (1.0 - DAMPING) * q.q1 + DAMPING * target.0 / r1,
                    (1.0 - DAMPING) * q.q2 + DAMPING * target.1 / r2,
                )?;
                (fixed, resid(fixed)?)
            }
        };
        if next.0 == q {
            break;
        }
        (q, r) = next;
    }
    let residual = norm(r);
    if residual <= FIT_TOLERANCE {
        Ok(Inversion { q, iterations: MAX_INVERT_ITERATIONS, residual })
    } else {
        Err(FitError::NonConvergence { last: q, iterations: MAX_INVERT_ITERATIONS, residual })
    }
}

/// One Newton step on the residual with a finite-difference Jacobian,
/// halved until it lowers the residual. Components whose target is zero
/// stay pinned at zero.
fn newton_step(
    q: QPair,
    r: (f64, f64),
    target: (f64, f64),
    resid: &dyn Fn(QPair) -> Result<(f64, f64), FitError>,
) -> Result<Option<(QPair, (f64, f64))>, FitError> {
    let h1 = 1e-7 * q.q1.max(1e-3);
    let h2 = 1e-7 * q.q2.max(1e-3);
    let a = resid(QPair::new(q.q1 + h1, q.q2)?)?;
    let b = resid(QPair::new(q.q1, q.q2 + h2)?)?;
    let mut j = [[(a.0 - r.0) / h1, (b.0 - r.0) / h2], [(a.1 - r.1) / h1, (b.1 - r.1) / h2]];
    let mut rhs = [r.0, r.1];
    let pin = [target.0 == 0.0, target.1 == 0.0];
    for i in 0..2 {
        if pin[i] {
            j[i] = [0.0; 2];
            j[i][i] = 1.0;
            rhs[i] = [q.q1, q.q2][i];
        }
    }
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if det == 0.0 || !det.is_finite() {
        return Ok(None);
    }
    let d1 = (j[1][1] * rhs[0] - j[0][1] * rhs[1]) / det;
    let d2 = (j[0][0] * rhs[1] - j[1][0] * rhs[0]) / det;
    let norm = |r: (f64, f64)| r.0.abs().max(r.1.abs());
    let mut t = 1.0;
    for _ in 0..40 {
        let cand = (q.q1 - t * d1, q.q2 - t * d2);
        if cand.0 >= 0.0 && cand.1 >= 0.0 && cand.0.is_finite() && cand.1.is_finite() {
            let cq = QPair::new(cand.0, cand.1)?;
            if let Ok(cr) = resid(cq) {
                if norm(cr) < norm(r) {
                    return Ok(Some((cq, cr)));
                }
            }
        }
        t *= 0.5;
    }
    Ok(None)
}

/// Forward map `q ↦ (P₁, P₂)` of the exact model.
fn forward(q: QPair, n: usize) -> Result<(f64, f64), FitError> {
    let (r1, r2) = Model::new(q, n)?.small_cycle_ratios();
    Ok((q.q1 * r1, 0.5 * q.q2 * r2))
}

/// Propagates the covariance of `(P₁, P₂)` through the inverse map.
fn propagate(q: QPair, n: usize, var1: f64, var2: f64, cov12: f64) -> Result<((f64, f64), f64), FitError> {
    let step = |x: f64| 1e-6 * x.abs().max(1e-3);
    let (h1, h2) = (step(q.q1), step(q.q2));
    // Forward differences keep the weights non-negative at the boundary.
    let f0 = forward(q, n)?;
    let f1 = forward(QPair::new(q.q1 + h1, q.q2)?, n)?;
    let f2 = forward(QPair::new(q.q1, q.q2 + h2)?, n)?;
    let j = [[(f1.0 - f0.0) / h1, (f2.0 - f0.0) / h2], [(f1.1 - f0.1) / h1, (f2.1 - f0.1) / h2]];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if det == 0.0 || !det.is_finite() {
        return Ok(((f64::NAN, f64::NAN), f64::NAN));
    }
    let inv = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
    let c = [[var1, cov12], [cov12, var2]];
    let mut out = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[a][b] += inv[a][k] * c[k][l] * inv[b][l];
                }
            }
        }
    }
    Ok(((out[0][0].max(0.0).sqrt(), out[1][1].max(0.0).sqrt()), out[0][1]))
}

/// Fits `(q₁, q₂)` to the measured `P₁`, `P₂`.
pub fn fit_uncorrected(est: &SpectrumEstimate) -> Result<FitResult, FitError> {
    let inv = invert(est.n, est.p(1), est.p(2))?;
    let (q_err, q_cov) =
        propagate(inv.q, est.n, est.p_err(1).powi(2), est.p_err(2).powi(2), est.cov_p1p2)?;
    Ok(FitResult {
        n: est.n,
        lambda: est.lambda,
        q: inv.q,
        q_err,
        q_cov,
        iterations: inv.iterations,
        residual: inv.residual,
        corrected: false,
        p2_correction: 0.0,
        clamped: false,
    })
}

/// Fit with the even-cycle correction, iterated until `q` moves by less than
/// `1e-9`.
pub fn fit_corrected(est: &SpectrumEstimate) -> Result<FitResult, FitError> {
    let n = est.n;
    let p1 = est.p(1);
    let p2 = est.p(2);
    let even_err: f64 = (4..=n)
        .step_by(2)
        .map(|k| (0.5 * k as f64 * est.p_err(k)).powi(2))
        .sum::<f64>();
    let band = 2.0 * (est.p_err(2).powi(2) + even_err).sqrt();

    let mut p2_prime = p2;
    let mut history: Vec<QPair> = Vec::new();
    let mut iterations = 0;
    for it in 1..=MAX_CORRECTION_ITERATIONS {
        let inv = invert(n, p1, p2_prime)?;
        iterations += inv.iterations;
        let model = Model::new(inv.q, n)?;
        let mut correction: f64 = (4..=n)
            .step_by(2)
            .map(|k| 0.5 * k as f64 * (model.p(k).expect("k in range") - est.p(k)))
            .sum();
        let mut clamped = false;
        if correction < 0.0 && correction >= -band {
            correction = 0.0;
            clamped = true;
        }

        let q = inv.q;
        let moved = history.last().map_or(f64::INFINITY, |prev| step_size(*prev, q));
        if moved < STEP_TOLERANCE {
            let (q_err, q_cov) = propagate(q, n, est.p_err(1).powi(2), est.p_err(2).powi(2), est.cov_p1p2)?;
            return Ok(FitResult {
                n,
                lambda: est.lambda,
                q,
                q_err,
                q_cov,
                iterations: it,
                residual: inv.residual,
                corrected: true,
                p2_correction: correction,
                clamped,
            });
        }
        if history.len() >= 2 {
            let back2 = history[history.len() - 2];
            let back1 = history[history.len() - 1];
            if step_size(back2, q) < STEP_TOLERANCE && step_size(back1, q) > 1e3 * STEP_TOLERANCE {
                return Err(FitError::Oscillation { a: back1, b: q });
            }
        }
        history.push(q);
        p2_prime = (p2 - correction).max(0.0);
    }
    let last = *history.last().expect("at least one iteration ran");
    let (r1, r2) = Model::new(last, n)?.small_cycle_ratios();
    let residual = (last.q1 * r1 - p1).abs().max((last.q2 * r2 - 2.0 * p2_prime).abs());
    Err(FitError::NonConvergence { last, iterations, residual })
}

fn step_size(a: QPair, b: QPair) -> f64 {
    (a.q1 - b.q1).abs().max((a.q2 - b.q2).abs())
}

/// `F(q₁) = e^λ q₁ (q₁ - λ)`, the empirical `q₂` for `λ > 0`.
pub fn positive_relation(lambda: f64, q1: f64) -> f64 {
    lambda.exp() * q1 * (q1 - lambda)
}

/// Tangent of `q₁` at `λ = 0`: `1 + α N λ`.
pub fn tangent_q1(alpha: f64, lambda: f64, n: usize) -> f64 {
    1.0 + alpha * n as f64 * lambda
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelationRow {
    pub n: usize,
    pub lambda: f64,
    pub q1: f64,
    pub q2: f64,
    pub q2_err: f64,
    /// `q₁²` for `λ ≤ 0`, `F(q₁)` for `λ > 0`.
    pub predicted: f64,
    /// Standard error of `q₂ - predicted`.
    pub diff_err: f64,
}

impl RelationRow {
    pub fn deviation(&self) -> f64 {
        self.q2 - self.predicted
    }

    pub fn relative_deviation(&self) -> f64 {
        self.deviation().abs() / self.predicted.abs().max(self.q2.abs()).max(1e-12)
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct RelationReport {
    pub rows: Vec<RelationRow>,
    pub max_rel_dev_negative: f64,
    pub max_rel_dev_positive: f64,
}

/// Pairs each fit with its empirical relation: `q₂ = q₁²` below zero
/// coupling, `q₂ = F(q₁)` above. At `λ = 0` both give 1.
pub fn relation_check(fits: &[FitResult]) -> RelationReport {
    let mut report = RelationReport::default();
    for f in fits {
        let (q1, q2) = (f.q.q1, f.q.q2);
        let (predicted, slope) = if f.lambda <= 0.0 {
            (q1 * q1, 2.0 * q1)
        } else {
            let e = f.lambda.exp();
            (positive_relation(f.lambda, q1), e * (2.0 * q1 - f.lambda))
        };
        let var = f.q_err.1.powi(2) + slope * slope * f.q_err.0.powi(2) - 2.0 * slope * f.q_cov;
        let row = RelationRow {
            n: f.n,
            lambda: f.lambda,
            q1,
            q2,
            q2_err: f.q_err.1,
            predicted,
            diff_err: var.max(0.0).sqrt(),
        };
        let rel = row.relative_deviation();
        if f.lambda <= 0.0 {
            report.max_rel_dev_negative = report.max_rel_dev_negative.max(rel);
        }
        if f.lambda >= 0.0 {
            report.max_rel_dev_positive = report.max_rel_dev_positive.max(rel);
        }
        report.rows.push(row);
    }
    report
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    pub a: (f64, usize),
    pub b: (f64, usize),
    pub q1_a: f64,
    pub q1_b: f64,
    pub combined_err: f64,
    /// `λN` agrees between the two cells.
    pub consistent: bool,
}

impl ScalingRow {
    pub fn difference(&self) -> f64 {
        self.q1_a - self.q1_b
    }

    pub fn z(&self) -> f64 {
        if self.combined_err == 0.0 {
            if self.difference() == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            self.difference() / self.combined_err
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// `(λN, q₁, q₁ error)` for every fit involved.
    pub collapse: Vec<(f64, f64, f64)>,
}

/// Compares `q₁(λ, N)` with `q₁(μλ, N/μ)` for each pair of fits.
pub fn scaling_check(pairs: &[(FitResult, FitResult)]) -> ScalingReport {
    let mut report = ScalingReport::default();
    for (a, b) in pairs {
        let ln_a = a.lambda * a.n as f64;
        let ln_b = b.lambda * b.n as f64;
        report.rows.push(ScalingRow {
            a: (a.lambda, a.n),
            b: (b.lambda, b.n),
            q1_a: a.q.q1,
            q1_b: b.q.q1,
            combined_err: (a.q_err.0.powi(2) + b.q_err.0.powi(2)).sqrt(),
            consistent: (ln_a - ln_b).abs() <= 1e-9 * ln_a.abs().max(1.0),
        });
        for f in [a, b] {
            report.collapse.push((f.lambda * f.n as f64, f.q.q1, f.q_err.0));
        }
    }
    report
}

//! Figure tables. Every figure is one CSV with a header row; columns named
//! `*_err3` hold three standard errors. A sidecar `<id>.cells.csv` lists
//! the cells that went into it.
//!
//! | id | columns after `n,lambda,dist` |
//! |----|-------------------------------|
//! | `nc` | `nc, nc_err3` |
//! | `p1` | `P1, P1_err3, P1_over_sqrtN, P1_over_sqrtN_err3` |
//! | `p2` | `2P2, 2P2_err3, P2_over_N, P2_over_N_err3` |
//! | `p3` | `3P3, 3P3_err3` |
//! | `p4` | `4P4, 4P4_err3` |
//! | `pk_mid` | `k, kPk, kPk_err3` for every k |
//! | `pnm1` | `kPk, kPk_err3, model` at k = N-1 |
//! | `pn` | `kPk, kPk_err3, model` at k = N |
//! | `q1q2_neg` | `q1, q1_err3, q2, q2_err3, q1_squared` (λ ≤ 0) |
//! | `q1_scaling` | `lambda_n, q1, q1_err3, alpha, tangent` |
//! | `p3_fit` | `3P3, 3P3_err3, model, model_corrected` (λ ≥ 0) |
//! | `kpk_fit` | `k, kPk, kPk_err3, model, model_corrected` (λ ≥ 0) |
//! | `q1q2_pos` | `q1, q2, q2_err3, F_q1` from corrected fits (λ ≥ 0) |
//!
//! `model` columns use the exact finite-N model at the fitted weights;
//! long-cycle models in `pnm1`/`pn` use the uncorrected fit.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::io::{finish, write_row, writer};
use super::{CellResult, HarnessError};
use crate::analytic::{slope_alpha, Model};
use crate::ensemble::EntryDistribution;
use crate::fitting::{positive_relation, tangent_q1, FitResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FigureId {
    Nc,
    P1,
    P2,
    P3,
    P4,
    PkMid,
    Pnm1,
    Pn,
    Q1Q2Neg,
    Q1Scaling,
    P3Fit,
    KpkFit,
    Q1Q2Pos,
}

impl FigureId {
    pub const ALL: [FigureId; 13] = [
        FigureId::Nc,
        FigureId::P1,
        FigureId::P2,
        FigureId::P3,
        FigureId::P4,
        FigureId::PkMid,
        FigureId::Pnm1,
        FigureId::Pn,
        FigureId::Q1Q2Neg,
        FigureId::Q1Scaling,
        FigureId::P3Fit,
        FigureId::KpkFit,
        FigureId::Q1Q2Pos,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::Nc => "nc",
            FigureId::P1 => "p1",
            FigureId::P2 => "p2",
            FigureId::P3 => "p3",
            FigureId::P4 => "p4",
            FigureId::PkMid => "pk_mid",
            FigureId::Pnm1 => "pnm1",
            FigureId::Pn => "pn",
            FigureId::Q1Q2Neg => "q1q2_neg",
            FigureId::Q1Scaling => "q1_scaling",
            FigureId::P3Fit => "p3_fit",
            FigureId::KpkFit => "kpk_fit",
            FigureId::Q1Q2Pos => "q1q2_pos",
        }
    }

    fn columns(self) -> &'static [&'static str] {
        match self {
            FigureId::Nc => &["nc", "nc_err3"],
            FigureId::P1 => &["P1", "P1_err3", "P1_over_sqrtN", "P1_over_sqrtN_err3"],
            FigureId::P2 => &["2P2", "2P2_err3", "P2_over_N", "P2_over_N_err3"],
            FigureId::P3 => &["3P3", "3P3_err3"],
            FigureId::P4 => &["4P4", "4P4_err3"],
            FigureId::PkMid => &["k", "kPk", "kPk_err3"],
            FigureId::Pnm1 | FigureId::Pn => &["kPk", "kPk_err3", "model"],
            FigureId::Q1Q2Neg => &["q1", "q1_err3", "q2", "q2_err3", "q1_squared"],
            FigureId::Q1Scaling => &["lambda_n", "q1", "q1_err3", "alpha", "tangent"],
            FigureId::P3Fit => &["3P3", "3P3_err3", "model", "model_corrected"],
            FigureId::KpkFit => &["k", "kPk", "kPk_err3", "model", "model_corrected"],
            FigureId::Q1Q2Pos => &["q1", "q2", "q2_err3", "F_q1"],
        }
    }

    fn accepts(self, lambda: f64) -> bool {
        match self {
            FigureId::Q1Q2Neg => lambda <= 0.0,
            FigureId::P3Fit | FigureId::KpkFit | FigureId::Q1Q2Pos => lambda >= 0.0,
            _ => true,
        }
    }

    fn min_n(self) -> usize {
        match self {
            FigureId::P2 | FigureId::Pnm1 | FigureId::Q1Q2Neg | FigureId::Q1Scaling | FigureId::Q1Q2Pos => 2,
            FigureId::P3 | FigureId::P3Fit => 3,
            FigureId::P4 => 4,
            _ => 1,
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown figure id {s:?}"))
    }
}

fn num(x: f64) -> String {
    x.to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn model_p(fit: &Option<&FitResult>, n: usize, k: usize) -> Option<f64> {
    let f = (*fit)?;
    Model::new(f.q, n).ok()?.p(k).ok()
}

/// Cells in the figure's λ range for each distribution must form a full
/// `n × λ` grid; absent cells are reported.
fn coverage(cells: &[&CellResult], figure: FigureId) -> Result<(), HarnessError> {
    if cells.is_empty() {
        return Err(HarnessError::EmptyFigure(figure));
    }
    let mut missing = Vec::new();
    let dists: BTreeSet<&str> = cells.iter().map(|c| c.estimate().dist.as_str()).collect();
    for dist in dists {
        let mine: Vec<_> = cells.iter().filter(|c| c.estimate().dist == dist).collect();
        let ns: BTreeSet<usize> = mine.iter().map(|c| c.estimate().n).collect();
        let lambdas: BTreeSet<u64> = mine.iter().map(|c| c.estimate().lambda.to_bits()).collect();
        let present: BTreeSet<(usize, u64)> =
            mine.iter().map(|c| (c.estimate().n, c.estimate().lambda.to_bits())).collect();
        for &n in &ns {
            for &l in &lambdas {
                if !present.contains(&(n, l)) {
                    missing.push((dist.to_string(), n, f64::from_bits(l)));
                }
            }
        }
        for &n in ns.iter().filter(|&&n| n < figure.min_n()) {
            for &l in &lambdas {
                missing.push((format!("{dist} (n ≥ {})", figure.min_n()), n, f64::from_bits(l)));
            }
        }
    }
    if missing.is_empty() {
        Ok(())
    } else {
        Err(HarnessError::Coverage { figure, missing })
    }
}

/// Writes `<out_dir>/<id>.csv` and its `.cells.csv` sidecar.
pub fn emit_figure_data(cells: &[CellResult], figure: FigureId, out_dir: &Path) -> Result<PathBuf, HarnessError> {
    let mut selected: Vec<&CellResult> = cells.iter().filter(|c| figure.accepts(c.estimate().lambda)).collect();
    selected.sort_by(|a, b| {
        let (x, y) = (a.estimate(), b.estimate());
        (&x.dist, x.n).cmp(&(&y.dist, y.n)).then(x.lambda.total_cmp(&y.lambda))
    });
    coverage(&selected, figure)?;

    let path = out_dir.join(format!("{}.csv", figure.name()));
    let mut w = writer(&path)?;
    let header: Vec<&str> = ["n", "lambda", "dist"].into_iter().chain(figure.columns().iter().copied()).collect();
    write_row(&mut w, &path, &header)?;

    for c in &selected {
        let e = c.estimate();
        let n = e.n;
        let nf = n as f64;
        let head = [n.to_string(), num(e.lambda), e.dist.clone()];
        let fit = c.fit.as_ref().ok();
        let fit_c = c.fit_corrected.as_ref().ok();
        let mut rows: Vec<Vec<String>> = Vec::new();
        match figure {
            FigureId::Nc => rows.push(vec![num(e.mean_nc), num(3.0 * e.stderr_nc)]),
            FigureId::P1 => {
                let (p, s) = (e.p(1), e.p_err(1));
                rows.push(vec![num(p), num(3.0 * s), num(p / nf.sqrt()), num(3.0 * s / nf.sqrt())]);
            }
            FigureId::P2 => {
                let (p, s) = (e.p(2), e.p_err(2));
                rows.push(vec![num(2.0 * p), num(6.0 * s), num(p / nf), num(3.0 * s / nf)]);
            }
            FigureId::P3 | FigureId::P4 => {
                let k = if figure == FigureId::P3 { 3 } else { 4 };
                let (v, s) = e.kpk(k);
                rows.push(vec![num(v), num(3.0 * s)]);
            }
            FigureId::PkMid => {
                for k in 1..=n {
                    let (v, s) = e.kpk(k);
                    rows.push(vec![k.to_string(), num(v), num(3.0 * s)]);
                }
            }
            FigureId::Pnm1 | FigureId::Pn => {
                let k = if figure == FigureId::Pn { n } else { n - 1 };
                let (v, s) = e.kpk(k);
                rows.push(vec![num(v), num(3.0 * s), opt(model_p(&fit, n, k).map(|p| k as f64 * p))]);
            }
            FigureId::Q1Q2Neg => rows.push(match fit {
                Some(f) => vec![
                    num(f.q.q1),
                    num(3.0 * f.q_err.0),
                    num(f.q.q2),
                    num(3.0 * f.q_err.1),
                    num(f.q.q1 * f.q.q1),
                ],
                None => vec![String::new(); 5],
            }),
            FigureId::Q1Scaling => {
                let alpha = e.dist.parse::<EntryDistribution>().ok().and_then(|d| slope_alpha(&d).ok());
                rows.push(vec![
                    num(e.lambda * nf),
                    opt(fit.map(|f| f.q.q1)),
                    opt(fit.map(|f| 3.0 * f.q_err.0)),
                    opt(alpha),
                    opt(alpha.map(|a| tangent_q1(a, e.lambda, n))),
                ]);
            }
            FigureId::P3Fit => {
                let (v, s) = e.kpk(3);
                rows.push(vec![
                    num(v),
                    num(3.0 * s),
                    opt(model_p(&fit, n, 3).map(|p| 3.0 * p)),
                    opt(model_p(&fit_c, n, 3).map(|p| 3.0 * p)),
                ]);
            }
            FigureId::KpkFit => {
                let m = fit.and_then(|f| Model::new(f.q, n).ok());
                let mc = fit_c.and_then(|f| Model::new(f.q, n).ok());
                for k in 1..=n {
                    let (v, s) = e.kpk(k);
                    rows.push(vec![
                        k.to_string(),
                        num(v),
                        num(3.0 * s),
                        opt(m.as_ref().and_then(|m| m.kpk(k).ok())),
                        opt(mc.as_ref().and_then(|m| m.kpk(k).ok())),
                    ]);
                }
            }
            FigureId::Q1Q2Pos => rows.push(match fit_c {
                Some(f) => vec![
                    num(f.q.q1),
                    num(f.q.q2),
                    num(3.0 * f.q_err.1),
                    num(positive_relation(e.lambda, f.q.q1)),
                ],
                None => vec![String::new(); 4],
            }),
        }
        for row in rows {
            write_row(&mut w, &path, head.iter().cloned().chain(row))?;
        }
    }
    finish(w, &path)?;

    let side = out_dir.join(format!("{}.cells.csv", figure.name()));
    let mut w = writer(&side)?;
    write_row(&mut w, &side, ["n", "lambda", "dist", "samples", "seed"])?;
    for c in &selected {
        let e = c.estimate();
        write_row(
            &mut w,
            &side,
            [e.n.to_string(), num(e.lambda), e.dist.clone(), e.samples.to_string(), c.record.seed.to_string()],
        )?;
    }
    finish(w, &side)?;
    Ok(path)
}

use super::{AnalyticError, QPair, SeriesTable};

pub fn series_table(q: QPair, n_max: usize) -> SeriesTable {
    SeriesTable::new(q, n_max)
}

/// Exact model spectrum at size `n`.
#[derive(Clone, Debug)]
pub struct Model {
    n: usize,
    table: SeriesTable,
}

impl Model {
    pub fn new(q: QPair, n: usize) -> Result<Self, AnalyticError> {
        let table = SeriesTable::new(q, n);
        if n == 0 || !table.s_scaled(n).is_positive() {
            return Err(AnalyticError::Degenerate { q, n });
        }
        Ok(Self { n, table })
    }

    pub fn q(&self) -> QPair {
        self.table.q()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &SeriesTable {
        &self.table
    }

    /// Expected number of `k`-cycles under the weighted measure:
    /// `c_k S_{n-k} / (k S_n)` with `c₁ = q₁`, `c₂ = q₂`, otherwise 1.
    pub fn p(&self, k: usize) -> Result<f64, AnalyticError> {
        if k == 0 || k > self.n {
            return Err(AnalyticError::KOutOfRange { k, n: self.n });
        }
        let q = self.table.q();
        let weight = match k {
            1 => q.q1,
            2 => q.q2,
            _ => 1.0,
        };
        Ok(weight / k as f64 * self.table.s_ratio(self.n - k, self.n))
    }

    /// `k P_k`.
    pub fn kpk(&self, k: usize) -> Result<f64, AnalyticError> {
        Ok(k as f64 * self.p(k)?)
    }

    /// `P_k` for `k = 1..=n`.
    pub fn spectrum(&self) -> Vec<f64> {
        (1..=self.n).map(|k| self.p(k).expect("k in range")).collect()
    }

    /// `S_{n-1}/S_n` and `S_{n-2}/S_n`, the factors linking `P₁, P₂` to `q`.
    pub fn small_cycle_ratios(&self) -> (f64, f64) {
        let r1 = self.table.s_ratio(self.n - 1, self.n);
        let r2 = if self.n >= 2 { self.table.s_ratio(self.n - 2, self.n) } else { 0.0 };
        (r1, r2)
    }
}

/// Model prediction for `P_k` at size `n`.
pub fn predicted_pk(q: QPair, n: usize, k: usize) -> Result<f64, AnalyticError> {
    if k == 0 || k > n {
        return Err(AnalyticError::KOutOfRange { k, n });
    }
    Model::new(q, n)?.p(k)
}

/// `k P_k` for the four longest cycles `k = n, n-1, n-2, n-3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LongCycles {
    pub n: usize,
    /// Finite-`n` values `S_{n-k}`-weighted over `S_n`.
    pub exact: [f64; 4],
    /// Large-`n` forms with `S_n` replaced by its limit `e^{q₁+q₂/2-3/2}`.
    pub asymptotic: [f64; 4],
}

impl LongCycles {
    pub fn lengths(&self) -> [usize; 4] {
        [self.n, self.n - 1, self.n - 2, self.n - 3]
    }
}

pub fn predicted_long_cycles(q: QPair, n: usize) -> Result<LongCycles, AnalyticError> {
    if n < 7 {
        return Err(AnalyticError::TooSmall(n));
    }
    let model = Model::new(q, n)?;
    let mut exact = [0.0; 4];
    for (slot, d) in exact.iter_mut().zip(0..4) {
        *slot = model.kpk(n - d)?;
    }
    Ok(LongCycles { n, exact, asymptotic: asymptotic_long_cycles(q) })
}

/// Limit of `S_N` as `N → ∞`: `e^{q₁ + q₂/2 - 3/2}`.
pub fn asymptotic_omega_ratio(q: QPair) -> f64 {
    (q.q1 + 0.5 * q.q2 - 1.5).exp()
}

/// Large-`N` `P_k` for `k` small compared with `N`: `q₁`, `q₂/2`, `1/k`.
pub fn asymptotic_pk(q: QPair, k: usize) -> f64 {
    match k {
        0 => 0.0,
        1 => q.q1,
        2 => 0.5 * q.q2,
        _ => 1.0 / k as f64,
    }
}

/// Large-`N` forms of `k P_k` for `k = N, N-1, N-2, N-3`.
pub fn asymptotic_long_cycles(q: QPair) -> [f64; 4] {
    let e = 1.0 / asymptotic_omega_ratio(q);
    let (q1, q2) = (q.q1, q.q2);
    [
        e,
        q1 * e,
        (0.5 * q2 + 0.5 * q1 * q1) * e,
        (1.0 / 3.0 + 0.5 * q1 * q2 + q1 * q1 * q1 / 6.0) * e,
    ]
}

/// Number of `k`-cycles summed over all of `S_n`, by the insertion
/// recursion `ν_N(k) = (N-k+δ_{k1}) ν_{N-1}(k) + (k-1) ν_{N-1}(k-1)`.
pub fn nu_nk(n: usize, k: usize) -> Result<u64, AnalyticError> {
    if k == 0 || k > n || n > 20 {
        return Err(AnalyticError::NuRange { n, k });
    }
    // row[j] = ν_m(j) for the current m; index 0 unused.
    let mut row = vec![0u128; n + 2];
    row[1] = 1;
    for m in 2..=n {
        let prev = row.clone();
        for j in 1..=m {
            let stay = (m - j) as u128 + u128::from(j == 1);
            row[j] = stay * prev[j] + (j as u128 - 1) * prev[j - 1];
        }
    }
    let factorial: u128 = (1..=n as u128).product();
    assert_eq!(row[k] * k as u128, factorial, "ν_{n}({k}) must equal {n}!/{k}");
    Ok(row[k] as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(q1: f64, q2: f64) -> QPair {
        QPair::new(q1, q2).unwrap()
    }

    #[test]
    fn uniform_point_gives_harmonic_spectrum() {
        for n in [1, 2, 5, 40, 300] {
            let m = Model::new(QPair::UNIFORM, n).unwrap();
            for k in 1..=n {
                assert_eq!(m.p(k).unwrap(), 1.0 / k as f64);
            }
        }
    }

    #[test]
    fn three_cycles_only_at_zero_weights() {
        assert_eq!(predicted_pk(q(0.0, 0.0), 3, 3).unwrap(), 1.0);
        assert_eq!(predicted_pk(q(0.0, 0.0), 3, 1).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_weights_rejected() {
        // No permutation of two elements avoids both fixed points and transpositions.
        assert!(matches!(Model::new(q(0.0, 0.0), 2), Err(AnalyticError::Degenerate { .. })));
        assert!(matches!(Model::new(q(0.0, 0.0), 1), Err(AnalyticError::Degenerate { .. })));
        assert!(matches!(predicted_pk(q(1.0, 1.0), 3, 4), Err(AnalyticError::KOutOfRange { .. })));
    }

    #[test]
    fn n3_weight_polynomial() {
        for &(q1, q2) in &[(0.0, 0.0), (0.3, 1.7), (2.0, 5.0)] {
            let t = SeriesTable::new(q(q1, q2), 3);
            let omega = 6.0 * t.s(3);
            let expect = q1.powi(3) + 3.0 * q1 * q2 + 2.0;
            assert!((omega - expect).abs() < 1e-12 * expect.max(1.0));
        }
    }

    #[test]
    fn zero_weights_long_cycle_limit() {
        let e32 = 1.5f64.exp();
        let m = Model::new(q(0.0, 0.0), 400).unwrap();
        assert!((m.kpk(400).unwrap() - e32).abs() < 1e-12);
        let t = SeriesTable::new(q(0.0, 0.0), 200);
        assert!((t.s(200) - (-1.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn long_cycle_forms() {
        let e32 = 1.5f64.exp();
        let lc = predicted_long_cycles(q(0.0, 0.0), 50).unwrap();
        let expect = [e32, 0.0, 0.0, e32 / 3.0];
        for i in 0..4 {
            assert!((lc.asymptotic[i] - expect[i]).abs() < 1e-14);
            assert!((lc.exact[i] - expect[i]).abs() < 1e-12);
        }
        let lc = predicted_long_cycles(QPair::UNIFORM, 9).unwrap();
        assert_eq!(lc.exact, [1.0; 4]);
        for v in lc.asymptotic {
            assert!((v - 1.0).abs() < 1e-15);
        }
        assert_eq!(lc.lengths(), [9, 8, 7, 6]);
        assert!(matches!(predicted_long_cycles(QPair::UNIFORM, 6), Err(AnalyticError::TooSmall(6))));
    }

    #[test]
    fn long_cycle_exact_matches_small_partial_sums() {
        // (n-d) P_{n-d} = S_d / S_n with S_2 = (q₁² + q₂)/2, S_3 = (q₁³ + 3q₁q₂ + 2)/6.
        let qq = q(0.7, 0.4);
        let n = 30;
        let lc = predicted_long_cycles(qq, n).unwrap();
        let sn = SeriesTable::new(qq, n).s(n);
        let s = [1.0, qq.q1, 0.5 * (qq.q1 * qq.q1 + qq.q2), (qq.q1.powi(3) + 3.0 * qq.q1 * qq.q2 + 2.0) / 6.0];
        for i in 0..4 {
            assert!((lc.exact[i] - s[i] / sn).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_approaches_asymptotic() {
        for &(q1, q2) in &[(0.0, 0.0), (0.5, 0.25), (1.0, 0.0), (0.2, 1.0), (1.0, 1.0)] {
            let qq = q(q1, q2);
            let m = Model::new(qq, 200).unwrap();
            for k in 1..=10 {
                assert!((m.kpk(k).unwrap() - k as f64 * asymptotic_pk(qq, k)).abs() < 1e-6);
            }
            let lc = predicted_long_cycles(qq, 200).unwrap();
            for i in 0..4 {
                assert!((lc.exact[i] - lc.asymptotic[i]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn nu_values() {
        assert_eq!(nu_nk(3, 3).unwrap(), 2);
        assert_eq!(nu_nk(1, 1).unwrap(), 1);
        assert_eq!(nu_nk(10, 4).unwrap(), 907_200);
        assert_eq!(nu_nk(20, 1).unwrap(), 2_432_902_008_176_640_000);
        for n in 1..=20 {
            for k in 1..=n {
                nu_nk(n, k).unwrap();
            }
        }
        assert!(nu_nk(21, 3).is_err());
        assert!(nu_nk(5, 0).is_err());
        assert!(nu_nk(5, 6).is_err());
    }
}

//! Taylor coefficients of `exp((q₁-1)x + (q₂-1)x²/2)` and their partial
//! sums, i.e. the total ansatz weight `Ω(N)/N!`.

use std::ops::{Add, Mul};

use super::QPair;

/// A real number `mantissa · 2^exponent` with an unbounded exponent.
///
/// For large weights the partial sums exceed the `f64` range long before
/// their ratios do.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled {
    mantissa: f64,
    exponent: i64,
}

const RESCALE: i32 = 256;

impl Scaled {
    pub const ZERO: Scaled = Scaled { mantissa: 0.0, exponent: 0 };

    pub fn new(x: f64) -> Self {
        Scaled { mantissa: x, exponent: 0 }.normalized()
    }

    fn normalized(mut self) -> Self {
        if self.mantissa == 0.0 || !self.mantissa.is_finite() {
            self.exponent = 0;
            return self;
        }
        let big = 2f64.powi(RESCALE);
        while self.mantissa.abs() > big {
            self.mantissa /= big;
            self.exponent += RESCALE as i64;
        }
        while self.mantissa.abs() < 1.0 / big {
            self.mantissa *= big;
            self.exponent -= RESCALE as i64;
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0.0
    }

    pub fn is_positive(&self) -> bool {
        self.mantissa > 0.0
    }

    /// Nearest `f64`, saturating to ±∞ or 0.
    pub fn to_f64(self) -> f64 {
        scale_by_pow2(self.mantissa, self.exponent)
    }

    /// `self / other` as an ordinary float.
    pub fn ratio(self, other: Scaled) -> f64 {
        scale_by_pow2(self.mantissa / other.mantissa, self.exponent - other.exponent)
    }

    pub fn div_f64(self, d: f64) -> Self {
        Scaled { mantissa: self.mantissa / d, exponent: self.exponent }.normalized()
    }
}

fn scale_by_pow2(x: f64, e: i64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let e = e.clamp(-4000, 4000) as i32;
    // Split so each factor stays representable.
    let half = e / 2;
    x * 2f64.powi(half) * 2f64.powi(e - half)
}

impl Add for Scaled {
    type Output = Scaled;

    fn add(self, rhs: Scaled) -> Scaled {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (hi, lo) = if self.exponent >= rhs.exponent { (self, rhs) } else { (rhs, self) };
        let shift = lo.exponent - hi.exponent;
        Scaled { mantissa: hi.mantissa + scale_by_pow2(lo.mantissa, shift), exponent: hi.exponent }
            .normalized()
    }
}

impl Mul<f64> for Scaled {
    type Output = Scaled;

    fn mul(self, rhs: f64) -> Scaled {
        Scaled { mantissa: self.mantissa * rhs, exponent: self.exponent }.normalized()
    }
}

/// Coefficients `a_m` of `exp((q₁-1)x + (q₂-1)x²/2)` and partial sums
/// `S_m = Σ_{j≤m} a_j`, so that `Ω_{q₁,q₂}(N) = N! S_N`.
///
/// Built from `m a_m = (q₁-1) a_{m-1} + (q₂-1) a_{m-2}`; the `1/m` factors
/// keep everything normalised by `N!`.
#[derive(Clone, Debug)]
pub struct SeriesTable {
    q: QPair,
    a: Vec<Scaled>,
    s: Vec<Scaled>,
}

impl SeriesTable {
    pub fn new(q: QPair, n_max: usize) -> Self {
        let c1 = q.q1 - 1.0;
        let c2 = q.q2 - 1.0;
        let mut a = Vec::with_capacity(n_max + 1);
        let mut s = Vec::with_capacity(n_max + 1);
        a.push(Scaled::new(1.0));
        s.push(Scaled::new(1.0));
        for m in 1..=n_max {
            let mut next = a[m - 1] * c1;
            if m >= 2 {
                next = next + a[m - 2] * c2;
            }
            let next = next.div_f64(m as f64);
            s.push(s[m - 1] + next);
            a.push(next);
        }
        Self { q, a, s }
    }

    pub fn q(&self) -> QPair {
        self.q
    }

    pub fn n_max(&self) -> usize {
        self.a.len() - 1
    }

    /// `a_m` as a float (may saturate for huge weights).
    pub fn a(&self, m: usize) -> f64 {
        self.a[m].to_f64()
    }

    /// `S_m = Ω(m)/m!` as a float (may saturate for huge weights).
    pub fn s(&self, m: usize) -> f64 {
        self.s[m].to_f64()
    }

    pub fn a_scaled(&self, m: usize) -> Scaled {
        self.a[m]
    }

    pub fn s_scaled(&self, m: usize) -> Scaled {
        self.s[m]
    }

    /// `S_num / S_den`, computed without overflow.
    pub fn s_ratio(&self, num: usize, den: usize) -> f64 {
        self.s[num].ratio(self.s[den])
    }

    /// Largest relative residual of the defining recurrence.
    pub fn recurrence_residual(&self) -> f64 {
        let c1 = self.q.q1 - 1.0;
        let c2 = self.q.q2 - 1.0;
        let mut worst: f64 = 0.0;
        for m in 1..=self.n_max() {
            let lhs = self.a[m] * m as f64;
            let mut rhs = self.a[m - 1] * c1;
            if m >= 2 {
                rhs = rhs + self.a[m - 2] * c2;
            }
            let scale = (self.a[m - 1] * c1).to_f64().abs()
                + if m >= 2 { (self.a[m - 2] * c2).to_f64().abs() } else { 0.0 };
            if scale == 0.0 || !scale.is_finite() {
                continue;
            }
            let diff = (lhs + rhs * -1.0).to_f64().abs();
            worst = worst.max(diff / scale);
        }
        worst
    }
}

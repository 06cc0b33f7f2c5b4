//! Exact unimodular phases `e^{iπ r}` with rational `r` taken mod 2.
//!
//! Every Weyl phase is a root of unity, so products, inverses and roots can be
//! carried out on the rational exponent without any rounding. Floating point
//! only enters through [`ExactPhase::to_complex`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Mul, MulAssign};

use num_complex::Complex64;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

/// The unimodular number `e^{iπ·num/den}`.
///
/// Stored in lowest terms with `den > 0` and `0 <= num < 2·den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExactPhase {
    num: i64,
    den: i64,
}

impl ExactPhase {
    pub const ONE: ExactPhase = ExactPhase { num: 0, den: 1 };

    /// `e^{iπ·num/den}`. Panics if `den == 0`.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "phase denominator must be nonzero");
        Self::from_wide(num as i128, den as i128)
    }

    fn from_wide(num: i128, den: i128) -> Self {
        let (mut num, mut den) = if den < 0 { (-num, -den) } else { (num, den) };
        num = num.rem_euclid(2 * den);
        let g = num.gcd(&den);
        if g > 1 {
            num /= g;
            den /= g;
        }
        let num = i64::try_from(num).expect("phase numerator overflows i64");
        let den = i64::try_from(den).expect("phase denominator overflows i64");
        ExactPhase { num, den }
    }

    /// `e_N(k) = e^{2πik/N}`.
    pub fn e_n(k: i64, n: i64) -> Self {
        Self::from_wide(2 * k as i128, n as i128)
    }

    /// `e_N(k/2) = e^{iπk/N}`.
    pub fn e_n_half(k: i64, n: i64) -> Self {
        Self::new(k, n)
    }

    pub fn numer(&self) -> i64 {
        self.num
    }

    pub fn denom(&self) -> i64 {
        self.den
    }

    pub fn is_one(&self) -> bool {
        self.num == 0
    }

    pub fn conj(&self) -> Self {
        Self::from_wide(-(self.num as i128), self.den as i128)
    }

    pub fn pow(&self, k: i64) -> Self {
        Self::from_wide(self.num as i128 * k as i128, self.den as i128)
    }

    /// The `count` distinct solutions `z` of `z^count = self`, in increasing angle
    /// order starting from the principal root.
    pub fn roots(&self, count: usize) -> Vec<ExactPhase> {
        assert!(count > 0);
        let l = count as i128;
        let (num, den) = (self.num as i128, self.den as i128);
        (0..l)
            .map(|k| Self::from_wide(num + 2 * k * den, l * den))
            .collect()
    }

    /// Angle divided by 2π, in `[0, 1)`.
    pub fn turns(&self) -> f64 {
        self.num as f64 / (2.0 * self.den as f64)
    }

    pub fn to_complex(&self) -> Complex64 {
        // quarter turns are returned exactly
        if (4 * self.num as i128) % (2 * self.den as i128) == 0 {
            return match (2 * self.num / self.den) % 4 {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, 1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, -1.0),
            };
        }
        // reduce to (-1, 1] before scaling by π
        let mut x = self.num as f64 / self.den as f64;
        if x > 1.0 {
            x -= 2.0;
        }
        let (s, c) = (std::f64::consts::PI * x).sin_cos();
        Complex64::new(c, s)
    }
}

impl Default for ExactPhase {
    fn default() -> Self {
        Self::ONE
    }
}

impl Mul for ExactPhase {
    type Output = ExactPhase;

    fn mul(self, rhs: ExactPhase) -> ExactPhase {
        let (a, b) = (self.num as i128, self.den as i128);
        let (c, d) = (rhs.num as i128, rhs.den as i128);
        let l = b.lcm(&d);
        ExactPhase::from_wide(a * (l / b) + c * (l / d), l)
    }
}

impl MulAssign for ExactPhase {
    fn mul_assign(&mut self, rhs: ExactPhase) {
        *self = *self * rhs;
    }
}

/// Orders phases by angle in `[0, 2π)`.
impl Ord for ExactPhase {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as i128 * other.den as i128).cmp(&(other.num as i128 * self.den as i128))
    }
}

impl PartialOrd for ExactPhase {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ExactPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.num == 0 {
            write!(f, "1")
        } else {
            write!(f, "e^(iπ·{}/{})", self.num, self.den)
        }
    }
}

/// Table of the `2N`-th roots of unity `e^{iπj/N}`, `j = 0..2N`.
#[derive(Clone, Debug)]
pub struct RootTable {
    n: usize,
    roots: Vec<Complex64>,
}

impl RootTable {
    pub fn new(n: usize) -> Self {
        let roots = (0..2 * n as i64)
            .map(|j| ExactPhase::new(j, n as i64).to_complex())
            .collect();
        RootTable { n, roots }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `e^{iπj/N}` for any integer `j`.
    #[inline]
    pub fn half(&self, j: i64) -> Complex64 {
        self.roots[j.rem_euclid(2 * self.n as i64) as usize]
    }

    /// Evaluates a phase exactly representable over this table, falling back to
    /// [`ExactPhase::to_complex`] otherwise.
    pub fn eval(&self, phase: ExactPhase) -> Complex64 {
        let n = self.n as i64;
        if n % phase.den == 0 {
            self.half(phase.num * (n / phase.den))
        } else {
            phase.to_complex()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normal_form() {
        assert_eq!(ExactPhase::new(4, 2), ExactPhase::ONE);
        assert_eq!(ExactPhase::new(3, 2), ExactPhase::new(-1, 2));
        assert_eq!(ExactPhase::new(2, -4), ExactPhase::new(3, 2));
        assert_eq!(ExactPhase::e_n(1, 4).to_complex(), Complex64::new(0.0, 1.0));
    }

    #[test]
    fn roots_multiply_back() {
        let p = ExactPhase::new(3, 7);
        let rs = p.roots(5);
        assert_eq!(rs.len(), 5);
        for r in &rs {
            assert_eq!(r.pow(5), p);
        }
        let mut sorted = rs.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 5);
    }

    #[test]
    fn ordering_is_by_angle() {
        let mut v = vec![
            ExactPhase::new(3, 2),
            ExactPhase::new(1, 3),
            ExactPhase::ONE,
        ];
        v.sort();
        assert_eq!(
            v,
            vec![
                ExactPhase::ONE,
                ExactPhase::new(1, 3),
                ExactPhase::new(3, 2)
            ]
        );
    }

    proptest! {
        #[test]
        fn product_adds_exponents(a in -500i64..500, b in 1i64..60, c in -500i64..500, d in 1i64..60) {
            let p = ExactPhase::new(a, b) * ExactPhase::new(c, d);
            prop_assert_eq!(p, ExactPhase::new(a * d + c * b, b * d));
            let z = ExactPhase::new(a, b).to_complex() * ExactPhase::new(c, d).to_complex();
            prop_assert!((p.to_complex() - z).norm() < 1e-13);
        }

        #[test]
        fn unimodular(a in -10_000i64..10_000, b in 1i64..10_000) {
            prop_assert!((ExactPhase::new(a, b).to_complex().norm() - 1.0).abs() < 1e-15);
        }

        #[test]
        fn conj_is_inverse(a in -1000i64..1000, b in 1i64..200) {
            let p = ExactPhase::new(a, b);
            prop_assert!((p * p.conj()).is_one());
        }
    }
}

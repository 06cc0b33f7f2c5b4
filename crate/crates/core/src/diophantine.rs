//! Continued fractions, rational approximation and diophantine scans.
//!
//! Real targets are kept in exact closed form: rationals, quadratic irrationals
//! `(p + q√d)/r`, and eventually periodic continued fractions (converted to one
//! of the former). Floors, partial quotients and dyadic evaluations are computed
//! with exact integer arithmetic, so no working precision has to be chosen.
//!
//! Continued fractions are written `[b₁; b₂, b₃, …] = b₁ + 1/(b₂ + 1/(b₃ + …))`
//! with convergents `c_n/d_n` from `c_n = b_n c_{n−1} + c_{n−2}`,
//! `d_n = b_n d_{n−1} + d_{n−2}` and `(c₀, d₀) = (1, 0)`, `(c₋₁, d₋₁) = (0, 1)`.
//! Denominators increase strictly from `d₂` on; `d₁ = d₂ = 1` when `b₂ = 1`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weyl::WeylIndex;

/// An exactly specified real number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RealTarget {
    Rational(BigRational),
    /// `(p + q√d)/r` with `d > 0` not a perfect square, `q ≠ 0`, `r > 0`.
    Quadratic {
        p: BigInt,
        q: BigInt,
        d: BigInt,
        r: BigInt,
    },
    /// `[prefix…; period, period, …]`; an empty period means a finite expansion.
    ContinuedFraction {
        prefix: Vec<BigInt>,
        period: Vec<BigInt>,
    },
}

/// A convergent `c/d` of index `n ≥ 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convergent {
    pub index: usize,
    #[serde(with = "decimal")]
    pub c: BigInt,
    #[serde(with = "decimal")]
    pub d: BigInt,
}

/// Big integers serialize as decimal strings.
pub mod decimal {
    use num_bigint::BigInt;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

impl RealTarget {
    pub fn rational(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        Ok(RealTarget::Rational(BigRational::new(
            num.into(),
            den.into(),
        )))
    }

    pub fn integer(k: i64) -> Self {
        RealTarget::Rational(BigRational::from_integer(k.into()))
    }

    /// `√d`.
    pub fn sqrt(d: u64) -> Self {
        Self::quadratic(0.into(), 1.into(), d.into(), 1.into()).expect("valid quadratic data")
    }

    /// `(p + q√d)/r`, collapsing to a rational when `q = 0` or `d` is a square.
    pub fn quadratic(p: BigInt, q: BigInt, d: BigInt, r: BigInt) -> Result<Self> {
        if r.is_zero() || d.is_negative() {
            return Err(Error::InvalidArgument(
                "quadratic target needs r != 0 and d >= 0".into(),
            ));
        }
        let root = d.sqrt();
        if q.is_zero() || &root * &root == d {
            return Ok(RealTarget::Rational(BigRational::new(p + q * root, r)));
        }
        let (p, q, r) = if r.is_negative() {
            (-p, -q, -r)
        } else {
            (p, q, r)
        };
        let g = p.gcd(&q).gcd(&r);
        Ok(RealTarget::Quadratic {
            p: p / &g,
            q: q / &g,
            d,
            r: r / &g,
        })
    }

    /// An eventually periodic continued fraction. Every quotient after the
    /// first must be positive.
    pub fn continued_fraction(prefix: Vec<BigInt>, period: Vec<BigInt>) -> Result<Self> {
        if prefix.is_empty() && period.is_empty() {
            return Err(Error::InvalidArgument("empty continued fraction".into()));
        }
        let skip = usize::from(!prefix.is_empty());
        if prefix
            .iter()
            .skip(1)
            .chain(period.iter().skip(1 - skip))
            .any(|b| !b.is_positive())
        {
            return Err(Error::InvalidArgument(
                "partial quotients after the first must be positive".into(),
            ));
        }
        Ok(RealTarget::ContinuedFraction { prefix, period })
    }

    pub fn is_rational(&self) -> bool {
        matches!(self.closed_form(), RealTarget::Rational(_))
    }

    /// The value as a rational or quadratic irrational.
    pub fn closed_form(&self) -> RealTarget {
        match self {
            RealTarget::ContinuedFraction { prefix, period } => cf_closed_form(prefix, period),
            other => other.clone(),
        }
    }

    /// `⌊x⌋`.
    pub fn floor(&self) -> BigInt {
        self.scaled_floor(&BigInt::one(), &BigInt::one())
    }

    // ⌊x·num/den⌋ for den > 0
    fn scaled_floor(&self, num: &BigInt, den: &BigInt) -> BigInt {
        match self.closed_form() {
            RealTarget::Rational(x) => (x * BigRational::new(num.clone(), den.clone()))
                .floor()
                .to_integer(),
            RealTarget::Quadratic { p, q, d, r } => {
                quadratic_floor(&(p * num), &(q * num), &d, &(r * den))
            }
            RealTarget::ContinuedFraction { .. } => {
                unreachable!("closed form never returns a continued fraction")
            }
        }
    }

    /// `⌊x·2^bits⌋/2^bits`, so that `0 ≤ x − evaluate(bits) < 2^{−bits}`.
    pub fn evaluate(&self, bits: u32) -> BigRational {
        let scale = BigInt::one() << bits;
        BigRational::new(self.scaled_floor(&scale, &BigInt::one()), scale)
    }

    pub fn to_f64(&self) -> f64 {
        self.evaluate(96).to_f64().unwrap_or(f64::NAN)
    }

    /// Nearest integer to `N·x`, ties to even.
    pub fn round_times(&self, n: i64) -> BigInt {
        let nb = BigInt::from(n);
        let twice = self.scaled_floor(&(&nb * 2), &BigInt::one());
        let base = twice.div_floor(&BigInt::from(2));
        if twice.is_even() {
            return base;
        }
        // frac(Nx) ≥ 1/2; a tie only happens for rationals with 2Nx integral
        let tie = match self.closed_form() {
            RealTarget::Rational(x) => (x * BigRational::from_integer(&nb * 2)).is_integer(),
            _ => false,
        };
        if tie && base.is_even() {
            base
        } else {
            base + 1
        }
    }

    /// The first `count` partial quotients, fewer if the expansion terminates.
    pub fn partial_quotients(&self, count: usize) -> Vec<BigInt> {
        match self {
            RealTarget::ContinuedFraction { prefix, period } => {
                let mut out: Vec<BigInt> = prefix.iter().take(count).cloned().collect();
                if !period.is_empty() {
                    out.extend(period.iter().cycle().take(count - out.len()).cloned());
                }
                out
            }
            RealTarget::Rational(x) => {
                let (mut a, mut b) = (x.numer().clone(), x.denom().clone());
                let mut out = Vec::new();
                while !b.is_zero() && out.len() < count {
                    let (q, r) = a.div_mod_floor(&b);
                    out.push(q);
                    a = std::mem::replace(&mut b, r);
                }
                out
            }
            RealTarget::Quadratic { p, q, d, r } => {
                // complete quotients (P + √D)/Q with Q | D − P²
                let rr = r.abs();
                let sign = if q.is_negative() {
                    -BigInt::one()
                } else {
                    BigInt::one()
                };
                let big_d = q * q * d * &rr * &rr;
                let mut pp = &sign * p * &rr;
                let mut qq = &sign * r * &rr;
                let root = big_d.sqrt();
                let mut out = Vec::with_capacity(count);
                while out.len() < count {
                    let a = if qq.is_positive() {
                        (&pp + &root).div_floor(&qq)
                    } else {
                        (&pp + &root + BigInt::one()).div_floor(&qq)
                    };
                    pp = &a * &qq - &pp;
                    qq = (&big_d - &pp * &pp) / &qq;
                    out.push(a);
                }
                out
            }
        }
    }

    /// The first `count` convergents (fewer for a terminating expansion).
    pub fn convergents(&self, count: usize) -> Vec<Convergent> {
        convergents_from_quotients(&self.partial_quotients(count))
    }
}

impl fmt::Display for RealTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RealTarget::Rational(x) => write!(f, "{x}"),
            RealTarget::Quadratic { p, q, d, r } => write!(f, "({p} + {q}·√{d})/{r}"),
            RealTarget::ContinuedFraction { prefix, period } => {
                let join = |v: &[BigInt]| {
                    v.iter()
                        .map(|b| b.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                };
                write!(f, "[{}", join(prefix))?;
                if !period.is_empty() {
                    write!(f, ",({})", join(period))?;
                }
                write!(f, "]")
            }
        }
    }
}

// ⌊(p + q√d)/r⌋ for r > 0 and nonsquare d
fn quadratic_floor(p: &BigInt, q: &BigInt, d: &BigInt, r: &BigInt) -> BigInt {
    let s = (q * q * d).sqrt();
    let t = if q.is_negative() { -s - 1 } else { s };
    (p + t).div_floor(r)
}

pub fn convergents_from_quotients(quotients: &[BigInt]) -> Vec<Convergent> {
    let (mut c_prev, mut c) = (BigInt::zero(), BigInt::one());
    let (mut d_prev, mut d) = (BigInt::one(), BigInt::zero());
    quotients
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let c_next = b * &c + &c_prev;
            let d_next = b * &d + &d_prev;
            c_prev = std::mem::replace(&mut c, c_next);
            d_prev = std::mem::replace(&mut d, d_next);
            Convergent {
                index: i + 1,
                c: c.clone(),
                d: d.clone(),
            }
        })
        .collect()
}

fn cf_closed_form(prefix: &[BigInt], period: &[BigInt]) -> RealTarget {
    // Möbius matrix [[P, P'], [Q, Q']] of a quotient list: x = (P y + P')/(Q y + Q')
    let mobius = |qs: &[BigInt]| {
        let (mut p, mut pp, mut q, mut qp) =
            (BigInt::one(), BigInt::zero(), BigInt::zero(), BigInt::one());
        for b in qs {
            let np = b * &p + &pp;
            let nq = b * &q + &qp;
            pp = std::mem::replace(&mut p, np);
            qp = std::mem::replace(&mut q, nq);
        }
        (p, pp, q, qp)
    };
    let (a, a1, b, b1) = mobius(prefix);
    if period.is_empty() {
        return RealTarget::Rational(BigRational::new(a, b));
    }
    // y = [period; period, …] solves Q y² + (Q' − P) y − P' = 0, positive root
    let (p, pp, q, qp) = mobius(period);
    let disc = (&qp - &p) * (&qp - &p) + BigInt::from(4) * &q * &pp;
    let (u, v) = (&p - &qp, BigInt::from(2) * &q);
    // x = (a y + a1)/(b y + b1) with y = (u + √disc)/v
    let num0 = &a * &u + &a1 * &v;
    let den0 = &b * &u + &b1 * &v;
    let p_out = &num0 * &den0 - &a * &b * &disc;
    let q_out = &a * &den0 - &num0 * &b;
    let r_out = &den0 * &den0 - &b * &b * &disc;
    RealTarget::quadratic(p_out, q_out, disc, r_out).expect("period yields a valid quadratic")
}

/// Componentwise nearest integer to `N·α`, ties to even.
pub fn best_approx(alpha: &(RealTarget, RealTarget), n: i64) -> Result<WeylIndex> {
    if n < 1 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    let conv = |x: BigInt| {
        x.to_i64()
            .ok_or_else(|| Error::Overflow("approximation numerator exceeds i64".into()))
    };
    Ok(WeylIndex::new(
        conv(alpha.0.round_times(n))?,
        conv(alpha.1.round_times(n))?,
    ))
}

/// Outcome of a finite diophantine scan with `‖n‖_∞` as the norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophantineReport {
    pub gamma: f64,
    pub n_max: i64,
    /// `min |n₁α₁ + n₂α₂ + k|·‖n‖_∞^γ` over `0 < ‖n‖_∞ ≤ n_max`.
    pub c_estimate: f64,
    /// `(n₁, n₂, k)` attaining the minimum (first in scan order).
    pub worst_witness: (i64, i64, i64),
    /// `|n₁α₁ + n₂α₂ + k|` at the witness.
    pub gap: f64,
}

const SCAN_BITS: u32 = 100;

enum Coord {
    // exact value num/den
    Exact(i128, i128),
    // ⌊x·2^SCAN_BITS⌋
    Fixed(i128),
}

/// Scans `0 < ‖n‖_∞ ≤ n_max` for the smallest normalized gap. Coordinates that
/// are rational with small denominators are handled exactly, so a rational pair
/// reports `c_estimate = 0`.
pub fn diophantine_scan(
    alpha: &(RealTarget, RealTarget),
    gamma: f64,
    n_max: i64,
) -> Result<DiophantineReport> {
    if !(gamma > 0.0) || n_max < 1 {
        return Err(Error::InvalidArgument(
            "diophantine_scan needs gamma > 0 and n_max >= 1".into(),
        ));
    }
    let coord = |x: &RealTarget| -> Result<Coord> {
        let bound = x.floor().abs().to_i64().unwrap_or(i64::MAX);
        if (bound as i128 + 1) * (n_max as i128) >= 1 << 24 {
            return Err(Error::Overflow(
                "scan range times |alpha| exceeds the fixed-point range".into(),
            ));
        }
        if let RealTarget::Rational(r) = x.closed_form() {
            if let (Some(a), Some(b)) = (r.numer().to_i128(), r.denom().to_i128()) {
                if b < 1 << 40 {
                    return Ok(Coord::Exact(a, b));
                }
            }
        }
        x.scaled_floor(&(BigInt::one() << SCAN_BITS), &BigInt::one())
            .to_i128()
            .map(Coord::Fixed)
            .ok_or_else(|| Error::Overflow("fixed-point coordinate".into()))
    };
    let coords = [coord(&alpha.0)?, coord(&alpha.1)?];
    let one: i128 = 1 << SCAN_BITS;

    let mut best: Option<(f64, (i64, i64, i64), f64)> = None;
    for n1 in -n_max..=n_max {
        for n2 in -n_max..=n_max {
            if n1 == 0 && n2 == 0 {
                continue;
            }
            let ns = [n1 as i128, n2 as i128];
            // exact part as a fraction over lcm of denominators, fixed part separately
            let (mut num, mut den, mut fixed, mut any_fixed) = (0i128, 1i128, 0i128, false);
            for (c, &k) in coords.iter().zip(&ns) {
                match *c {
                    Coord::Exact(a, b) => {
                        let l = Integer::lcm(&den, &b);
                        num = num * (l / den) + k * a * (l / b);
                        den = l;
                    }
                    Coord::Fixed(x) => {
                        if k != 0 {
                            any_fixed = true;
                        }
                        fixed += k * x;
                    }
                }
            }
            // (gap, nearest integer)
            let (gap, nearest) = if !any_fixed {
                let m = Integer::div_floor(&num, &den);
                let rem = num - m * den;
                if 2 * rem <= den {
                    (rem as f64 / den as f64, m)
                } else {
                    ((den - rem) as f64 / den as f64, m + 1)
                }
            } else {
                let total = fixed
                    + Integer::div_floor(&num, &den) * one
                    + (Integer::mod_floor(&num, &den) << SCAN_BITS) / den;
                let m = total >> SCAN_BITS;
                let rem = total - (m << SCAN_BITS);
                if 2 * rem <= one {
                    (rem as f64 / one as f64, m)
                } else {
                    ((one - rem) as f64 / one as f64, m + 1)
                }
            };
            let norm = n1.abs().max(n2.abs()) as f64;
            let value = gap * norm.powf(gamma);
            if best.as_ref().is_none_or(|b| value < b.0) {
                best = Some((value, (n1, n2, -(nearest as i64)), gap));
            }
        }
    }
    let (c_estimate, worst_witness, gap) = best.expect("scan range is nonempty");
    Ok(DiophantineReport {
        gamma,
        n_max,
        c_estimate,
        worst_witness,
        gap,
    })
}

/// Growth functions `g` for the slow-convergence construction, with
/// `F = G⁻¹` for `G = log g` taken as the least integer `x ≥ 1` with `G(x) ≥ y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    /// `g(x) = x^k`, so `F(y) = ⌈e^{y/k}⌉`.
    Power(u32),
    /// `g(x) = e^x`, so `F(y) = max(1, y)`.
    Exp,
}

impl Growth {
    pub fn inverse_log(&self, y: &BigInt) -> BigInt {
        match *self {
            Growth::Power(k) => ceil_exp_ratio(y, k),
            Growth::Exp => y.max(&BigInt::one()).clone(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Growth::Power(k) => x.powi(k as i32),
            Growth::Exp => x.exp(),
        }
    }

    /// `d ≤ log g(N)`, decided exactly.
    pub fn log_dominates(&self, n: &BigInt, d: &BigInt) -> bool {
        // log g(N) ≥ d  ⇔  N ≥ F(d) since F is the least such integer
        n >= &self.inverse_log(d)
    }
}

/// `⌈e^{y/k}⌉` for `y ≥ 0`, certified with interval fixed-point arithmetic.
pub fn ceil_exp_ratio(y: &BigInt, k: u32) -> BigInt {
    assert!(k >= 1, "k must be positive");
    if !y.is_positive() {
        return BigInt::one();
    }
    let mut prec = 64u32;
    loop {
        let (lo, hi) = exp_bounds(y, k, prec);
        let c_lo = ceil_shift(&lo, prec);
        if c_lo == ceil_shift(&hi, prec) {
            return c_lo;
        }
        prec *= 2;
    }
}

fn ceil_shift(x: &BigInt, bits: u32) -> BigInt {
    -((-x) >> bits)
}

// lo ≤ e^{y/k}·2^w ≤ hi. Reduces t = y/(k·2^s) < 1/2, sums Taylor terms with
// floor/ceil rounding plus a tail bound, then squares s times.
fn exp_bounds(y: &BigInt, k: u32, w: u32) -> (BigInt, BigInt) {
    let kb = BigInt::from(k);
    let s = (y.bits() as u32).saturating_sub((k as f64).log2().floor() as u32) + 2;
    let den = &kb << s;
    let one = BigInt::one() << w;
    // term_j ≈ t^j/j!·2^w
    let (mut lo, mut hi) = (one.clone(), one.clone());
    let (mut tl, mut th) = (one.clone(), one.clone());
    let mut j = 1u64;
    loop {
        tl = (&tl * y).div_floor(&(&den * j));
        th = -((-(&th * y)).div_floor(&(&den * j)));
        lo += &tl;
        hi += &th;
        if th.is_zero() || (th.bits() as i64) < 2 {
            // remaining terms sum to at most 2·(next term) ≤ 2·th since t < 1/2
            hi += &th * 2 + 2;
            break;
        }
        j += 1;
    }
    for _ in 0..s {
        lo = (&lo * &lo) >> w;
        hi = ceil_shift(&(&hi * &hi), w);
    }
    (lo, hi)
}

/// One level of the construction: `N = b_{n+1}d_n²` and `b = b_{n+1}c_n d_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BetaLevel {
    pub n: usize,
    #[serde(with = "decimal")]
    pub c: BigInt,
    #[serde(with = "decimal")]
    pub d: BigInt,
    #[serde(with = "decimal")]
    pub d_next: BigInt,
    #[serde(with = "decimal")]
    pub b_next: BigInt,
    #[serde(with = "decimal")]
    pub f_of_d: BigInt,
    #[serde(with = "decimal")]
    pub big_n: BigInt,
    #[serde(with = "decimal")]
    pub shift_b: BigInt,
}

/// Output of [`construct_beta`].
#[derive(Clone, Debug)]
pub struct BetaConstruction {
    /// `β = [b₁; b₂, …, b_{L+1}, 1, 1, …]`.
    pub target: RealTarget,
    pub quotients: Vec<BigInt>,
    pub convergents: Vec<Convergent>,
    pub levels: Vec<BetaLevel>,
}

/// Builds `β` whose convergents satisfy `F(d_n) ≤ b_{n+1}d_n²` and
/// `|β − c_n/d_n| < 1/F(d_n)` for `n = 1..levels`, with `b₁ = 1` and
/// `b_{n+1} = max(1, ⌈F(d_n)/d_n²⌉)`. Both inequalities are checked exactly
/// before returning.
pub fn construct_beta<F>(f: F, levels: usize) -> Result<BetaConstruction>
where
    F: Fn(&BigInt) -> BigInt,
{
    if levels == 0 {
        return Err(Error::InvalidArgument(
            "construct_beta needs at least one level".into(),
        ));
    }
    let mut quotients = vec![BigInt::one()];
    let mut f_values = Vec::with_capacity(levels);
    for n in 0..levels {
        let conv = convergents_from_quotients(&quotients);
        let d = &conv[n].d;
        let fd = f(d);
        if !fd.is_positive() {
            return Err(Error::InvalidArgument("F must be positive".into()));
        }
        let d2 = d * d;
        let b = fd.div_ceil(&d2).max(BigInt::one());
        f_values.push(fd);
        quotients.push(b);
    }
    let convergents = convergents_from_quotients(&quotients);
    let target = RealTarget::continued_fraction(quotients.clone(), vec![BigInt::one()])?;

    let mut out = Vec::with_capacity(levels);
    for n in 0..levels {
        let (cv, next) = (&convergents[n], &convergents[n + 1]);
        let b_next = quotients[n + 1].clone();
        let fd = f_values[n].clone();
        let big_n = &b_next * &cv.d * &cv.d;
        if fd > big_n {
            return Err(Error::Numerical(format!(
                "level {}: F(d_n) > b_(n+1) d_n^2",
                n + 1
            )));
        }
        if !approximation_certified(&target, cv, &fd, &next.d) {
            return Err(Error::Numerical(format!(
                "level {}: |beta - c_n/d_n| >= 1/F(d_n)",
                n + 1
            )));
        }
        out.push(BetaLevel {
            n: n + 1,
            shift_b: &b_next * &cv.c * &cv.d,
            c: cv.c.clone(),
            d: cv.d.clone(),
            d_next: next.d.clone(),
            b_next,
            f_of_d: fd,
            big_n,
        });
    }
    Ok(BetaConstruction {
        target,
        quotients,
        convergents,
        levels: out,
    })
}

/// Checks `|β − c/d| < min(1/F, 1/(d·d_next))` using dyadic enclosures of β
/// refined until the comparison is decided.
pub fn approximation_certified(
    beta: &RealTarget,
    cv: &Convergent,
    f_of_d: &BigInt,
    d_next: &BigInt,
) -> bool {
    let bound = BigRational::new(BigInt::one(), f_of_d.clone())
        .min(BigRational::new(BigInt::one(), &cv.d * d_next));
    let x = BigRational::new(cv.c.clone(), cv.d.clone());
    let mut bits = 4 * (d_next.bits() as u32).max(16);
    loop {
        let lo = beta.evaluate(bits);
        let hi = &lo + BigRational::new(BigInt::one(), BigInt::one() << bits);
        // |β − x| ≤ max(|lo − x|, |hi − x|)
        let upper = (&lo - &x).abs().max((&hi - &x).abs());
        if upper < bound {
            return true;
        }
        let lower = if lo <= x && x <= hi {
            BigRational::zero()
        } else {
            (&lo - &x).abs().min((&hi - &x).abs())
        };
        if lower >= bound || bits > 1 << 16 {
            return false;
        }
        bits *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bi(x: i64) -> BigInt {
        BigInt::from(x)
    }

    fn pair(c: &Convergent) -> (i64, i64) {
        (c.c.to_i64().unwrap(), c.d.to_i64().unwrap())
    }

    #[test]
    fn sqrt2_convergents() {
        let r2 = RealTarget::sqrt(2);
        let cs: Vec<_> = r2.convergents(4).iter().map(pair).collect();
        assert_eq!(cs, vec![(1, 1), (3, 2), (7, 5), (17, 12)]);
        for (c, d) in cs {
            assert!((2.0f64.sqrt() - c as f64 / d as f64).abs() < 1.0 / (d * d) as f64);
        }
        assert_eq!(r2.partial_quotients(6), [1, 2, 2, 2, 2, 2].map(bi).to_vec());
    }

    #[test]
    fn rational_expansion_terminates() {
        let x = RealTarget::rational(7, 5).unwrap();
        assert_eq!(x.partial_quotients(10), [1, 2, 2].map(bi).to_vec());
        let cs = x.convergents(10);
        assert_eq!(pair(cs.last().unwrap()), (7, 5));
        assert_eq!(
            RealTarget::rational(-7, 5).unwrap().partial_quotients(9),
            [-2, 1, 1, 2].map(bi).to_vec()
        );
    }

    #[test]
    fn golden_convergents_are_fibonacci() {
        let phi = RealTarget::continued_fraction(vec![], vec![bi(1)]).unwrap();
        let cs: Vec<_> = phi.convergents(10).iter().map(pair).collect();
        let mut fib = vec![1i64, 1];
        while fib.len() < 12 {
            fib.push(fib[fib.len() - 1] + fib[fib.len() - 2]);
        }
        for (i, &(c, d)) in cs.iter().enumerate() {
            assert_eq!((c, d), (fib[i + 1], fib[i]));
        }
        let cf = phi.closed_form();
        assert!((cf.to_f64() - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn closed_forms_of_periodic_expansions() {
        let r2 = RealTarget::continued_fraction(vec![bi(1)], vec![bi(2)]).unwrap();
        assert!((r2.to_f64() - 2f64.sqrt()).abs() < 1e-15);
        let r3 = RealTarget::continued_fraction(vec![bi(1)], vec![bi(1), bi(2)]).unwrap();
        assert!((r3.to_f64() - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(
            RealTarget::sqrt(3).partial_quotients(7),
            r3.partial_quotients(7)
        );
        let fin = RealTarget::continued_fraction(vec![bi(1), bi(2), bi(2)], vec![]).unwrap();
        assert_eq!(fin.closed_form(), RealTarget::rational(7, 5).unwrap());
        assert!(RealTarget::continued_fraction(vec![bi(1), bi(0)], vec![]).is_err());
    }

    #[test]
    fn quadratic_quotients_match_float_expansion() {
        // (1 + √5)/2, (3 − √7)/2, √(13)
        let cases = [
            (
                RealTarget::quadratic(bi(1), bi(1), bi(5), bi(2)).unwrap(),
                (1.0 + 5f64.sqrt()) / 2.0,
            ),
            (
                RealTarget::quadratic(bi(3), bi(-1), bi(7), bi(2)).unwrap(),
                (3.0 - 7f64.sqrt()) / 2.0,
            ),
            (RealTarget::sqrt(13), 13f64.sqrt()),
        ];
        for (t, x) in cases {
            let mut y = x;
            let exact = t.partial_quotients(8);
            for b in exact {
                assert_eq!(b, bi(y.floor() as i64));
                y = 1.0 / (y - y.floor());
            }
        }
        assert_eq!(
            RealTarget::quadratic(bi(1), bi(2), bi(9), bi(7)).unwrap(),
            RealTarget::integer(1)
        );
    }

    #[test]
    fn evaluate_is_a_consistent_enclosure() {
        let r2 = RealTarget::sqrt(2);
        for bits in [8u32, 30, 64, 200] {
            let a = r2.evaluate(bits);
            let b = r2.evaluate(2 * bits);
            let diff = (&a - &b).abs();
            assert!(diff < BigRational::new(bi(4), BigInt::one() << bits));
            assert!(&a * &a < BigRational::from_integer(bi(2)));
            let hi = &a + BigRational::new(bi(1), BigInt::one() << bits);
            assert!(&hi * &hi > BigRational::from_integer(bi(2)));
        }
    }

    #[test]
    fn best_approx_examples() {
        let third = RealTarget::rational(1, 3).unwrap();
        assert_eq!(
            best_approx(&(third.clone(), third), 3).unwrap(),
            WeylIndex::new(1, 1)
        );
        let a = best_approx(&(RealTarget::sqrt(2), RealTarget::sqrt(3)), 10).unwrap();
        assert_eq!(a, WeylIndex::new(14, 17));
        let half = RealTarget::rational(1, 2).unwrap();
        assert_eq!(half.round_times(1), bi(0));
        assert_eq!(half.round_times(3), bi(2));
        assert_eq!(RealTarget::rational(-1, 2).unwrap().round_times(1), bi(0));
        assert!(best_approx(&(half.clone(), half), 0).is_err());
    }

    #[test]
    fn best_approx_rounding_bound() {
        let alpha = (RealTarget::sqrt(2), RealTarget::sqrt(3));
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let n = rng.random_range(1..100_000i64);
            let a = best_approx(&alpha, n).unwrap();
            assert!((2f64.sqrt() - a.n1 as f64 / n as f64).abs() <= 0.5 / n as f64 + 1e-15);
            assert!((3f64.sqrt() - a.n2 as f64 / n as f64).abs() <= 0.5 / n as f64 + 1e-15);
        }
    }

    #[test]
    fn scan_of_rational_pair_hits_zero() {
        let alpha = (
            RealTarget::rational(1, 3).unwrap(),
            RealTarget::rational(2, 5).unwrap(),
        );
        let r = diophantine_scan(&alpha, 2.0, 10).unwrap();
        assert_eq!(r.c_estimate, 0.0);
        let (n1, n2, k) = r.worst_witness;
        assert_eq!((n1 * 5 + n2 * 6 + k * 15), 0);
        // mixed pair: n = (0, 3) annihilates the rational coordinate exactly
        let mixed = (RealTarget::sqrt(2), RealTarget::rational(1, 3).unwrap());
        assert_eq!(diophantine_scan(&mixed, 1.0, 5).unwrap().c_estimate, 0.0);
    }

    #[test]
    fn scan_regression_and_monotonicity() {
        let alpha = (RealTarget::sqrt(2), RealTarget::sqrt(3));
        let r = diophantine_scan(&alpha, 4.0, 200).unwrap();
        assert!((r.c_estimate - 0.146264369941972342).abs() < 1e-12);
        assert_eq!(r.worst_witness, (-1, -1, 3));
        let mut last = f64::INFINITY;
        for n_max in [1, 3, 10, 30, 60] {
            let c = diophantine_scan(&alpha, 1.5, n_max).unwrap().c_estimate;
            assert!(c > 0.0 && c <= last);
            last = c;
        }
    }

    #[test]
    fn ceil_exp_values() {
        for (y, k) in [(1, 1), (3, 1), (10, 1), (20, 2), (7, 3), (50, 1)] {
            let want = ((y as f64) / k as f64).exp().ceil();
            assert_eq!(
                ceil_exp_ratio(&bi(y), k).to_f64().unwrap(),
                want,
                "y={y} k={k}"
            );
        }
        assert_eq!(ceil_exp_ratio(&bi(0), 1), bi(1));
        // e^100 = 2.688117141816135448e43
        let big = ceil_exp_ratio(&bi(100), 1);
        assert_eq!(
            big.to_string(),
            "26881171418161354484126255515800135873611119"
        );
    }

    #[test]
    fn construct_with_square_is_golden() {
        let c = construct_beta(|d: &BigInt| d * d, 6).unwrap();
        assert!(c.quotients.iter().all(|b| b == &bi(1)));
    }

    #[test]
    fn construct_for_linear_growth() {
        let g = Growth::Power(1);
        let c = construct_beta(|y: &BigInt| g.inverse_log(y), 3).unwrap();
        assert_eq!(c.quotients, [1, 3, 3, 221].map(bi).to_vec());
        let ds: Vec<_> = c
            .convergents
            .iter()
            .map(|cv| cv.d.to_i64().unwrap())
            .collect();
        assert_eq!(ds, vec![1, 3, 10, 2213]);
        let ns: Vec<_> = c.levels.iter().map(|l| l.big_n.to_i64().unwrap()).collect();
        assert_eq!(ns, vec![3, 27, 22100]);
        for (i, lvl) in c.levels.iter().enumerate() {
            // F(d_n) ≤ b_{n+1} d_n², d_n b = c_n N, d_{n+1} = b_{n+1} d_n + d_{n−1}
            assert!(lvl.f_of_d <= &lvl.b_next * &lvl.d * &lvl.d);
            assert_eq!(&lvl.d * &lvl.shift_b, &lvl.c * &lvl.big_n);
            let d_prev = if i == 0 {
                bi(0)
            } else {
                c.convergents[i - 1].d.clone()
            };
            assert_eq!(lvl.d_next, &lvl.b_next * &lvl.d + d_prev);
            assert!(g.log_dominates(&lvl.big_n, &lvl.d));
            assert!(approximation_certified(
                &c.target,
                &c.convergents[i],
                &lvl.f_of_d,
                &lvl.d_next
            ));
        }
        assert!(!c.target.is_rational());
        assert_eq!(
            c.target.partial_quotients(7),
            [1, 3, 3, 221, 1, 1, 1].map(bi).to_vec()
        );
    }

    #[test]
    fn construct_for_exponential_growth() {
        let f = |y: &BigInt| ceil_exp_ratio(y, 1);
        let c = construct_beta(f, 3).unwrap();
        for lvl in &c.levels {
            assert!(lvl.f_of_d <= lvl.big_n);
        }
        let e = construct_beta(|y: &BigInt| Growth::Exp.inverse_log(y), 4).unwrap();
        assert!(e
            .levels
            .iter()
            .all(|l| Growth::Exp.log_dominates(&l.big_n, &l.d)));
    }

    #[test]
    fn best_approx_recovers_convergents() {
        let c = construct_beta(|y: &BigInt| Growth::Power(1).inverse_log(y), 3).unwrap();
        for cv in &c.convergents[1..] {
            let n = cv.d.to_i64().unwrap();
            let a = best_approx(&(RealTarget::sqrt(2), c.target.clone()), n).unwrap();
            assert_eq!(bi(a.n2), cv.c);
        }
    }

    #[test]
    fn liouville_pair_scan_collapses() {
        let c = construct_beta(|y: &BigInt| ceil_exp_ratio(&(y * 4), 1), 2).unwrap();
        let alpha = (RealTarget::sqrt(2), c.target.clone());
        let d2 = c.convergents[1].d.to_i64().unwrap();
        let before = diophantine_scan(&alpha, 2.0, d2 - 1).unwrap().c_estimate;
        let after = diophantine_scan(&alpha, 2.0, d2).unwrap().c_estimate;
        assert!(after < 0.1 * before, "{before} -> {after}");
    }
}

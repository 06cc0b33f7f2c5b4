//! Classical observables as trigonometric polynomials on `T² = {(p, q)}` and
//! their Weyl quantization `Op_N(f) = Σ f̂(n) T_N(n)`.
//!
//! Conventions: `f(p, q) = Σ f̂(n) e(n₁p + n₂q)` and the Poisson bracket is
//! `{f, g} = f_p g_q − g_p f_q`, so on Fourier modes
//! `{e_m, e_n} = −4π² ω(m, n) e_{m+n}`. The `−4π²` comes from the `e(x) = e^{2πix}`
//! normalization. The quantization satisfies `Op_N({f,g}) ≈ 2πiN [Op_N f, Op_N g]`.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::hilbert::StateVector;
use crate::phase::{ExactPhase, RootTable};
use crate::weyl::WeylIndex;

/// Default bound on `‖n‖_∞` accepted by [`quantize`].
pub const DEFAULT_MAX_FREQUENCY: i64 = 64;

/// Coefficients smaller than this are dropped by numerical re-expansions.
pub const DROP_TOL: f64 = 1e-14;

/// `e(x) = e^{2πix}`.
pub fn e(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * x)
}

/// A finite Fourier series `f(p, q) = Σ f̂(n) e(n·(p, q))`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "BTreeMap<String, [f64; 2]>",
    into = "BTreeMap<String, [f64; 2]>"
)]
pub struct TrigPolynomial {
    coeffs: BTreeMap<WeylIndex, Complex64>,
}

impl TrigPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex64) -> Self {
        Self::from_terms([(WeylIndex::ZERO, c)])
    }

    /// The character `e_n`.
    pub fn monomial(n: WeylIndex) -> Self {
        Self::from_terms([(n, Complex64::new(1.0, 0.0))])
    }

    /// Sums repeated frequencies and drops exact zeros.
    pub fn from_terms<I: IntoIterator<Item = (WeylIndex, Complex64)>>(terms: I) -> Self {
        let mut f = Self::zero();
        for (n, c) in terms {
            f.add_term(n, c);
        }
        f
    }

    /// A function of `p` alone from `k ↦ V̂(k)`.
    pub fn from_p_coeffs<I: IntoIterator<Item = (i64, Complex64)>>(terms: I) -> Self {
        Self::from_terms(terms.into_iter().map(|(k, c)| (WeylIndex::new(k, 0), c)))
    }

    /// `c·cos(2πkp)`.
    pub fn cosine(k: i64, c: f64) -> Self {
        Self::from_p_coeffs([
            (k, Complex64::new(c / 2.0, 0.0)),
            (-k, Complex64::new(c / 2.0, 0.0)),
        ])
    }

    pub fn add_term(&mut self, n: WeylIndex, c: Complex64) {
        let slot = self.coeffs.entry(n).or_insert(Complex64::new(0.0, 0.0));
        *slot += c;
        if *slot == Complex64::new(0.0, 0.0) {
            self.coeffs.remove(&n);
        }
    }

    pub fn coeff(&self, n: WeylIndex) -> Complex64 {
        self.coeffs.get(&n).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (WeylIndex, Complex64)> + '_ {
        self.coeffs.iter().map(|(&n, &c)| (n, c))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `∫_{T²} f = f̂(0, 0)`.
    pub fn mean(&self) -> Complex64 {
        self.coeff(WeylIndex::ZERO)
    }

    /// Largest `‖n‖_∞` in the support (0 for the empty polynomial).
    pub fn support_radius(&self) -> i64 {
        self.coeffs.keys().map(|n| n.sup_norm()).max().unwrap_or(0)
    }

    /// `Σ |f̂(n)|`, an upper bound for `sup |f|` and `‖Op_N(f)‖`.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    /// True when `f` depends on `p` only.
    pub fn is_p_only(&self) -> bool {
        self.coeffs.keys().all(|n| n.n2 == 0)
    }

    /// `f̂(−n) = conj f̂(n)` up to `tol`.
    pub fn is_real(&self, tol: f64) -> bool {
        self.coeffs
            .iter()
            .all(|(&n, &c)| (self.coeff(-n) - c.conj()).norm() <= tol)
    }

    /// The complex conjugate function `f̄`.
    pub fn conj(&self) -> Self {
        TrigPolynomial {
            coeffs: self.coeffs.iter().map(|(&n, c)| (-n, c.conj())).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_terms(self.terms().map(|(n, c)| (n, c * s)))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(self.terms().chain(other.terms()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_terms(self.terms().chain(other.terms().map(|(n, c)| (n, -c))))
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (m, a) in self.terms() {
            for (n, b) in other.terms() {
                out.add_term(m + n, a * b);
            }
        }
        out
    }

    pub fn evaluate(&self, p: f64, q: f64) -> Complex64 {
        self.terms()
            .map(|(n, c)| c * e(n.n1 as f64 * p + n.n2 as f64 * q))
            .sum()
    }

    /// Mean-zero antiderivative in `p` of a function of `p` alone.
    pub fn antiderivative_p(&self) -> Result<Self> {
        if !self.is_p_only() {
            return Err(Error::InvalidObservable(
                "antiderivative needs a function of p alone".into(),
            ));
        }
        if self.mean().norm() > DROP_TOL {
            return Err(Error::InvalidObservable(
                "antiderivative needs a mean-zero profile".into(),
            ));
        }
        Ok(Self::from_terms(
            self.terms()
                .filter(|(n, _)| n.n1 != 0)
                .map(|(n, c)| (n, c / Complex64::new(0.0, 2.0 * PI * n.n1 as f64))),
        ))
    }

    /// Largest coefficient difference against another polynomial.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        self.sub(other)
            .terms()
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<BTreeMap<String, [f64; 2]>> for TrigPolynomial {
    type Error = String;

    fn try_from(map: BTreeMap<String, [f64; 2]>) -> std::result::Result<Self, String> {
        let mut coeffs = BTreeMap::new();
        for (key, [re, im]) in map {
            let (a, b) = key
                .split_once(',')
                .ok_or_else(|| format!("bad frequency key `{key}`"))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<i64>()
                    .map_err(|_| format!("bad frequency key `{key}`"))
            };
            coeffs.insert(WeylIndex::new(parse(a)?, parse(b)?), Complex64::new(re, im));
        }
        Ok(TrigPolynomial { coeffs })
    }
}

impl From<TrigPolynomial> for BTreeMap<String, [f64; 2]> {
    fn from(f: TrigPolynomial) -> Self {
        f.coeffs
            .into_iter()
            .map(|(n, c)| (format!("{},{}", n.n1, n.n2), [c.re, c.im]))
            .collect()
    }
}

/// A truncated series with a certified bound on the discarded coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothTruncation {
    pub poly: TrigPolynomial,
    pub radius: i64,
    /// Upper bound for `Σ |f̂(n)|` over the discarded frequencies.
    pub tail_bound: f64,
}

impl From<TrigPolynomial> for SmoothTruncation {
    fn from(poly: TrigPolynomial) -> Self {
        let radius = poly.support_radius();
        SmoothTruncation {
            poly,
            radius,
            tail_bound: 0.0,
        }
    }
}

/// `f̂(n) = e^{−decay·‖n − center‖_∞}` truncated at `‖n − center‖_∞ ≤ radius`.
///
/// There are `8k` lattice points at sup-distance `k ≥ 1`, so the tail is
/// `Σ_{k>R} 8k x^k = 8x^{R+1}((R+1) − Rx)/(1−x)²` with `x = e^{−decay}`.
pub fn gaussian_family(center: WeylIndex, decay: f64, radius: i64) -> Result<SmoothTruncation> {
    if !(decay > 0.0) || radius < 0 {
        return Err(Error::InvalidArgument(
            "gaussian_family needs decay > 0 and radius >= 0".into(),
        ));
    }
    let poly = TrigPolynomial::from_terms(WeylIndex::ball(radius).map(|d| {
        (
            center + d,
            Complex64::new((-decay * d.sup_norm() as f64).exp(), 0.0),
        )
    }));
    Ok(SmoothTruncation {
        poly,
        radius,
        tail_bound: sup_ball_tail(decay, radius),
    })
}

pub(crate) fn sup_ball_tail(decay: f64, radius: i64) -> f64 {
    let x = (-decay).exp();
    let r = radius as f64;
    8.0 * x.powf(r + 1.0) * ((r + 1.0) - r * x) / (1.0 - x).powi(2)
}

/// `f(p, q) = Σ_n e^{−d_n} e(d_n q)` over the given denominators.
///
/// Repeated denominators are merged. The tail bound assumes the omitted
/// denominators are distinct integers larger than the last one supplied,
/// which holds for the convergent denominators of the construction.
pub fn slow_convergence_observable(ds: &[u64]) -> SmoothTruncation {
    let mut seen = std::collections::BTreeSet::new();
    let poly = TrigPolynomial::from_terms(ds.iter().filter(|&&d| seen.insert(d)).map(|&d| {
        (
            WeylIndex::new(0, d as i64),
            Complex64::new((-(d as f64)).exp(), 0.0),
        )
    }));
    let last = ds.iter().copied().max().unwrap_or(0) as f64;
    let tail_bound = (-(last + 1.0)).exp() / (1.0 - (-1.0f64).exp());
    let radius = poly.support_radius();
    SmoothTruncation {
        poly,
        radius,
        tail_bound,
    }
}

/// `f ∘ τ_{a/N}`: each `f̂(n)` picks up the exact phase `e_N(n·a)`.
pub fn compose_translation_rational(
    f: &TrigPolynomial,
    a: WeylIndex,
    dim: usize,
) -> TrigPolynomial {
    TrigPolynomial::from_terms(
        f.terms()
            .map(|(n, c)| (n, c * ExactPhase::e_n(n.dot(a), dim as i64).to_complex())),
    )
}

/// `f ∘ τ_α` for a real shift `α`.
pub fn compose_translation_real(f: &TrigPolynomial, alpha: (f64, f64)) -> TrigPolynomial {
    TrigPolynomial::from_terms(
        f.terms()
            .map(|(n, c)| (n, c * e(n.n1 as f64 * alpha.0 + n.n2 as f64 * alpha.1))),
    )
}

/// Fourier coefficients of `f(p, q + h(p))` for `h` a function of `p`.
///
/// For each `n₂` the factor `e(n₂h(p))·Σ_{n₁} f̂(n₁,n₂)e(n₁p)` is sampled on a
/// `K`-point grid and re-expanded. Coefficients below [`DROP_TOL`] are dropped;
/// the tail bound collects them together with an aliasing estimate taken from
/// the difference against a `2K`-point expansion.
pub fn compose_shear(f: &TrigPolynomial, h: &TrigPolynomial, k: usize) -> Result<SmoothTruncation> {
    if !h.is_p_only() {
        return Err(Error::InvalidObservable(
            "shear profile must depend on p only".into(),
        ));
    }
    if !k.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "sampling size {k} is not a power of two"
        )));
    }
    let max_freq = f
        .terms()
        .map(|(n, _)| n.n1.abs())
        .chain([h.support_radius()])
        .max()
        .unwrap_or(0);
    if (k as i64) < 4 * max_freq.max(1) {
        return Err(Error::InvalidArgument(format!(
            "sampling size {k} is below 4x the frequency {max_freq}"
        )));
    }
    if h.is_empty() {
        return Ok(f.clone().into());
    }

    let mut rows: BTreeMap<i64, Vec<(i64, Complex64)>> = BTreeMap::new();
    for (n, c) in f.terms() {
        rows.entry(n.n2).or_default().push((n.n1, c));
    }
    let mut out = TrigPolynomial::zero();
    let mut tail = 0.0;
    for (n2, row) in rows {
        let coarse = reexpand(&row, h, n2, k);
        let fine = reexpand(&row, h, n2, 2 * k);
        for (&m, &c_fine) in &fine {
            let c = coarse.get(&m).copied().unwrap_or_default();
            tail += (c_fine - c).norm();
            if c.norm() < DROP_TOL {
                tail += c.norm();
            } else {
                out.add_term(WeylIndex::new(m, n2), c);
            }
        }
    }
    let radius = out.support_radius();
    Ok(SmoothTruncation {
        poly: out,
        radius,
        tail_bound: tail,
    })
}

// Coefficients m in [-K/2, K/2) of p ↦ e(n₂h(p)) Σ c e(n₁p).
fn reexpand(
    row: &[(i64, Complex64)],
    h: &TrigPolynomial,
    n2: i64,
    k: usize,
) -> BTreeMap<i64, Complex64> {
    let samples: Vec<Complex64> = (0..k)
        .map(|j| {
            let p = j as f64 / k as f64;
            let base: Complex64 = row.iter().map(|&(n1, c)| c * e(n1 as f64 * p)).sum();
            let hp = h.evaluate(p, 0.0);
            // e(n₂h) for complex h: exp(2πi n₂ h)
            base * (Complex64::new(0.0, 2.0 * PI * n2 as f64) * hp).exp()
        })
        .collect();
    let twiddle: Vec<Complex64> = (0..k as i64)
        .map(|j| ExactPhase::e_n(-j, k as i64).to_complex())
        .collect();
    let half = (k / 2) as i64;
    (-half..half)
        .map(|m| {
            let step = m.rem_euclid(k as i64) as usize;
            let mut idx = 0usize;
            let mut acc = Complex64::new(0.0, 0.0);
            for s in &samples {
                acc += s * twiddle[idx];
                idx = (idx + step) % k;
            }
            (m, acc / k as f64)
        })
        .collect()
}

/// `f^T = (1/T) Σ_{t<T} f ∘ τ_{a/N}^t`, computed coefficientwise and exactly
/// for the annihilated frequencies.
pub fn time_average(
    f: &TrigPolynomial,
    a: WeylIndex,
    dim: usize,
    t: u64,
) -> Result<TrigPolynomial> {
    if t == 0 {
        return Err(Error::InvalidArgument("time average needs T >= 1".into()));
    }
    let nn = dim as i64;
    Ok(TrigPolynomial::from_terms(f.terms().filter_map(
        |(n, c)| {
            let r = n.dot(a).rem_euclid(nn);
            if r == 0 {
                return Some((n, c));
            }
            if (r as i128 * t as i128) % nn as i128 == 0 {
                return None;
            }
            let step = ExactPhase::e_n(r, nn);
            let mut acc = Complex64::new(0.0, 0.0);
            let mut ph = ExactPhase::ONE;
            for _ in 0..t {
                acc += ph.to_complex();
                ph *= step;
            }
            Some((n, c * acc / t as f64))
        },
    )))
}

/// `{f, g} = f_p g_q − g_p f_q`.
pub fn poisson_bracket(f: &TrigPolynomial, g: &TrigPolynomial) -> TrigPolynomial {
    let mut out = TrigPolynomial::zero();
    for (m, a) in f.terms() {
        for (n, b) in g.terms() {
            let w = m.omega(n);
            if w != 0 {
                out.add_term(m + n, a * b * (-4.0 * PI * PI * w as f64));
            }
        }
    }
    out
}

/// `Op_N(f)` stored as `Σ_s D_s t₁^s`, where `D_s` is diagonal: grouping the
/// Weyl terms by `n₁ mod N` turns each group into one shifted diagonal.
#[derive(Clone, Debug)]
pub struct QuantizedObservable {
    dim: usize,
    terms: Vec<(Complex64, WeylIndex)>,
    mean: Complex64,
    tail_bound: f64,
    // (shift, diagonal g_s(Q)): (Op ψ)(Q) = Σ_s g_s(Q) ψ(Q + s)
    rows: Vec<(usize, Vec<Complex64>)>,
}

/// `Op_N(f)`, rejecting supports beyond [`DEFAULT_MAX_FREQUENCY`].
pub fn quantize(f: &TrigPolynomial, dim: usize) -> Result<QuantizedObservable> {
    quantize_with_limit(f, dim, DEFAULT_MAX_FREQUENCY)
}

pub fn quantize_with_limit(
    f: &TrigPolynomial,
    dim: usize,
    max_frequency: i64,
) -> Result<QuantizedObservable> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    let r = f.support_radius();
    if r > max_frequency {
        return Err(Error::InvalidObservable(format!(
            "frequency support {r} exceeds the limit {max_frequency}; pass a larger limit explicitly"
        )));
    }
    let table = RootTable::new(dim);
    let nn = dim as i64;
    let two_n = 2 * nn;
    let mut groups: HashMap<usize, Vec<Complex64>> = HashMap::new();
    for (n, c) in f.terms() {
        let s = n.n1.rem_euclid(nn) as usize;
        let diag = groups
            .entry(s)
            .or_insert_with(|| vec![Complex64::new(0.0, 0.0); dim]);
        let step = (2 * n.n2).rem_euclid(two_n);
        let mut idx = (n.n1 * n.n2).rem_euclid(two_n);
        for slot in diag.iter_mut() {
            *slot += c * table.half(idx);
            idx += step;
            if idx >= two_n {
                idx -= two_n;
            }
        }
    }
    let mut rows: Vec<(usize, Vec<Complex64>)> = groups.into_iter().collect();
    rows.sort_by_key(|(s, _)| *s);
    Ok(QuantizedObservable {
        dim,
        terms: f.terms().map(|(n, c)| (c, n)).collect(),
        mean: f.mean(),
        tail_bound: 0.0,
        rows,
    })
}

/// Quantizes a truncation, carrying its tail bound along.
pub fn quantize_truncation(
    f: &SmoothTruncation,
    dim: usize,
    max_frequency: i64,
) -> Result<QuantizedObservable> {
    let mut op = quantize_with_limit(&f.poly, dim, max_frequency)?;
    op.tail_bound = f.tail_bound;
    Ok(op)
}

impl QuantizedObservable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The `(f̂(n), n)` pairs of the sum.
    pub fn terms(&self) -> &[(Complex64, WeylIndex)] {
        &self.terms
    }

    /// `∫ f = f̂(0,0)` of the quantized symbol.
    pub fn mean(&self) -> Complex64 {
        self.mean
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        check_dim(self.dim, psi.dim())?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        for (s, diag) in &self.rows {
            for (q, slot) in out.iter_mut().enumerate() {
                let src = if q + s >= self.dim {
                    q + s - self.dim
                } else {
                    q + s
                };
                *slot += diag[q] * psi[src];
            }
        }
        StateVector::new(out)
    }

    /// `⟨Op_N(f)ψ, ψ⟩` without normalization checks.
    pub(crate) fn expectation_unchecked(&self, psi: &[Complex64]) -> Complex64 {
        let n = self.dim;
        let mut acc = Complex64::new(0.0, 0.0);
        for (s, diag) in &self.rows {
            let mut src = *s;
            for q in 0..n {
                acc += diag[q] * psi[src] * psi[q].conj();
                src += 1;
                if src == n {
                    src = 0;
                }
            }
        }
        acc / n as f64
    }
}

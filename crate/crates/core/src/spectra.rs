//! Matrix elements `⟨Op_N(f)ψ, ψ⟩`, remainders against the phase-space mean,
//! resonance counting and log-log rate fits.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::hilbert::StateVector;
use crate::observables::{quantize_truncation, QuantizedObservable, SmoothTruncation};
use crate::weyl::{EigenBasis, WeylIndex};

/// Values below this are reported as exact zeros.
pub const ZERO_CLAMP: f64 = 1e-12;

/// `⟨Op_N(f)ψ, ψ⟩` for a normalized `ψ`, summed over the Weyl terms without
/// forming a matrix.
pub fn matrix_element(op: &QuantizedObservable, psi: &StateVector) -> Result<Complex64> {
    check_dim(op.dim(), psi.dim())?;
    let n2 = psi.norm_sq();
    if (n2 - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(n2));
    }
    Ok(op.expectation_unchecked(psi.entries()))
}

/// Summary of `|⟨Op_N(f)ψ_j, ψ_j⟩ − ∫f|` over a basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Remainder {
    /// Maximum plus the truncation tail, clamped to 0 below [`ZERO_CLAMP`].
    pub max: f64,
    pub mean: f64,
    pub exact_zero: bool,
    /// Unclamped maximum, without the tail.
    pub raw_max: f64,
}

/// `max_j |⟨Op_N(f)ψ_j, ψ_j⟩ − f̂(0,0)|` over `basis`, plus the tail bound of `f`.
pub fn que_remainder(
    basis: &EigenBasis,
    f: &SmoothTruncation,
    max_frequency: i64,
) -> Result<Remainder> {
    let op = quantize_truncation(f, basis.dim(), max_frequency)?;
    remainder_with(basis, &op)
}

pub(crate) fn remainder_with(basis: &EigenBasis, op: &QuantizedObservable) -> Result<Remainder> {
    let mean = op.mean();
    let values = basis
        .vectors
        .par_iter()
        .map(|psi| Ok((matrix_element(op, psi)? - mean).norm()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(summarize(&values, op.tail_bound()))
}

pub(crate) fn summarize(values: &[f64], tail: f64) -> Remainder {
    let raw_max = values.iter().copied().fold(0.0, f64::max);
    let raw_mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
    let clamp = |x: f64| if x < ZERO_CLAMP { 0.0 } else { x };
    let max = clamp(raw_max + tail);
    Remainder {
        max,
        mean: clamp(raw_mean + tail),
        exact_zero: max == 0.0,
        raw_max,
    }
}

/// All `n` with `‖n‖_∞ ≤ radius` and `n₁a₁ + n₂a₂ ≡ 0 (mod N)`.
pub fn resonant_set(a: WeylIndex, dim: usize, radius: i64, include_zero: bool) -> Vec<WeylIndex> {
    WeylIndex::ball(radius)
        .filter(|n| (include_zero || !n.is_zero()) && n.dot(a).rem_euclid(dim as i64) == 0)
        .collect()
}

/// Nonzero frequencies of `f` that are resonant at level `N`.
pub fn resonant_count(f: &SmoothTruncation, a: WeylIndex, dim: usize) -> usize {
    f.poly
        .terms()
        .filter(|(n, _)| !n.is_zero() && n.dot(a).rem_euclid(dim as i64) == 0)
        .count()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub a1: i64,
    pub a2: i64,
    pub remainder_max: f64,
    pub remainder_mean: f64,
    pub exact_zero: bool,
    pub resonant_count: usize,
    pub seconds: f64,
    /// Unclamped maximum remainder.
    pub raw_max: f64,
}

/// Rows of a remainder sweep over `N`, sorted by `N`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MatrixElementSweep {
    pub alpha: String,
    pub observable: String,
    /// Lines written as `#` comments ahead of the CSV header.
    pub provenance: Vec<String>,
    pub rows: Vec<SweepRow>,
}

pub const CSV_HEADER: &str =
    "N,a1,a2,remainder_max,remainder_mean,exact_zero,resonant_count,seconds";

impl MatrixElementSweep {
    pub fn sort(&mut self) {
        self.rows.sort_by_key(|r| r.n);
    }

    /// CSV text; the `seconds` column is 0 unless `timing` is set, so that
    /// repeated runs are byte-identical.
    pub fn to_csv(&self, timing: bool) -> String {
        let mut out = String::new();
        for line in &self.provenance {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "{CSV_HEADER}");
        for r in &self.rows {
            let secs = if timing { r.seconds } else { 0.0 };
            let _ = writeln!(
                out,
                "{},{},{},{:e},{:e},{},{},{:.6}",
                r.n,
                r.a1,
                r.a2,
                r.remainder_max,
                r.remainder_mean,
                r.exact_zero,
                r.resonant_count,
                secs
            );
        }
        out
    }

    /// Smallest `N₀` in the sweep with every row at `N ≥ N₀` exactly zero.
    pub fn zero_threshold(&self) -> Option<usize> {
        let mut threshold = None;
        for r in self.rows.iter().rev() {
            if !r.exact_zero {
                break;
            }
            threshold = Some(r.n);
        }
        threshold
    }
}

/// Least-squares fit of `log y` against `log x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fits the points with positive `y`; `None` with fewer than two.
pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> Option<LogLogFit> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let m = pts.len();
    if m < 2 {
        return None;
    }
    let mf = m as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / mf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / mf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Some(LogLogFit {
        slope,
        intercept,
        r_squared,
        points: m,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateOutcome {
    Fit {
        fit: LogLogFit,
        exact_zero_count: usize,
    },
    ExactVanishing {
        count: usize,
    },
}

/// Fits `remainder_max` against `N` over the rows with nonzero remainder.
pub fn rate_fit(sweep: &MatrixElementSweep) -> Result<RateOutcome> {
    let zeros = sweep.rows.iter().filter(|r| r.exact_zero).count();
    if zeros == sweep.rows.len() {
        return Ok(RateOutcome::ExactVanishing { count: zeros });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = sweep
        .rows
        .iter()
        .filter(|r| !r.exact_zero)
        .map(|r| (r.n as f64, r.remainder_max))
        .unzip();
    if xs.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs 4 nonzero rows, found {}",
            xs.len()
        )));
    }
    let fit =
        fit_log_log(&xs, &ys).ok_or_else(|| Error::Numerical("degenerate rate fit".into()))?;
    Ok(RateOutcome::Fit {
        fit,
        exact_zero_count: zeros,
    })
}

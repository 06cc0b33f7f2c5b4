//! Quantum propagators for the Kronecker map, shears and the perturbed map.
//!
//! * Kronecker: `U_τ = T_N(−a₂, a₁)` with `a = best_approx(α, N)`. It satisfies
//!   exact Egorov, `U_τ⁻¹ T_N(n) U_τ = e_N(n·a) T_N(n)`.
//! * Shear: `S(W, s) = F⁻¹ diag(e(s·N·W(P/N))) F`, diagonal in momentum, where
//!   `W` is the mean-zero antiderivative of the shear profile. The sign `s`
//!   is fixed by [`calibrate_sign`] so that `S⁻¹ Op_N(f) S ≈ Op_N(f ∘ Φ_w)`
//!   with an `O(N⁻²)` matrix-element defect.
//! * Perturbed: `U_N = U_h⁻¹ U_τ U_h` with `U_h = S(W_h, s)⁻¹` for the calibrated
//!   sign, which quantizes `Φ_h ∘ τ_α ∘ Φ_h⁻¹`. Its eigenbasis is the Kronecker
//!   eigenbasis transported by `U_h⁻¹`.

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diophantine::{best_approx, RealTarget};
use crate::error::{check_dim, Error, Result};
use crate::hilbert::{Dft, StateVector};
use crate::observables::{
    compose_shear, e, quantize_truncation, SmoothTruncation, TrigPolynomial, DROP_TOL,
};
use crate::oracle;
use crate::spectra::fit_log_log;
use crate::weyl::{eigenbasis_monomial, weyl_operator, EigenBasis, MonomialOperator, WeylIndex};

/// A unitary given by its action and the action of its inverse.
pub trait Propagator: Send + Sync {
    fn dim(&self) -> usize;
    fn apply(&self, psi: &StateVector) -> Result<StateVector>;
    fn apply_inverse(&self, psi: &StateVector) -> Result<StateVector>;
}

impl Propagator for MonomialOperator {
    fn dim(&self) -> usize {
        MonomialOperator::dim(self)
    }

    fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        MonomialOperator::apply(self, psi)
    }

    fn apply_inverse(&self, psi: &StateVector) -> Result<StateVector> {
        self.adjoint().apply(psi)
    }
}

/// The inverse of a borrowed propagator.
pub struct Inverse<'a>(pub &'a dyn Propagator);

impl Propagator for Inverse<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        self.0.apply_inverse(psi)
    }

    fn apply_inverse(&self, psi: &StateVector) -> Result<StateVector> {
        self.0.apply(psi)
    }
}

#[derive(Clone, Debug)]
pub struct KroneckerPropagator {
    pub a: WeylIndex,
    pub operator: MonomialOperator,
}

/// `U_N(τ_α) = T_N(−a₂, a₁)` with `a = best_approx(α, N)`.
pub fn kronecker(alpha: &(RealTarget, RealTarget), dim: usize) -> Result<KroneckerPropagator> {
    Ok(KroneckerPropagator::from_numerators(
        best_approx(alpha, dim as i64)?,
        dim,
    ))
}

impl KroneckerPropagator {
    pub fn from_numerators(a: WeylIndex, dim: usize) -> Self {
        KroneckerPropagator {
            a,
            operator: weyl_operator(WeylIndex::new(-a.n2, a.n1), dim),
        }
    }

    pub fn eigenbasis(&self) -> EigenBasis {
        eigenbasis_monomial(&self.operator)
    }
}

impl Propagator for KroneckerPropagator {
    fn dim(&self) -> usize {
        self.operator.dim()
    }

    fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        self.operator.apply(psi)
    }

    fn apply_inverse(&self, psi: &StateVector) -> Result<StateVector> {
        self.operator.apply_inverse(psi)
    }
}

/// Solution of the cocycle equation `h(p + α₁) − h(p) = V(p)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HSeries {
    pub h: TrigPolynomial,
    /// `Σ |V̂(k)|` over the frequencies dropped by the truncation.
    pub residual_bound: f64,
}

/// `h = Σ_{0<|k|≤K} V̂(k) e(kp)/(e(kα₁) − 1)`; `K` defaults to the support of `V`.
///
/// Each divisor uses `frac(kα₁)` taken from an exact dyadic enclosure and the
/// stable form `e(t) − 1 = 2i·sin(πt)·e^{iπt}`.
pub fn h_series(v: &TrigPolynomial, alpha1: &RealTarget, k: Option<i64>) -> Result<HSeries> {
    if !v.is_p_only() {
        return Err(Error::InvalidObservable("V must depend on p only".into()));
    }
    if v.mean().norm() > DROP_TOL {
        return Err(Error::InvalidObservable("V must have mean zero".into()));
    }
    if alpha1.is_rational() {
        return Err(Error::InvalidArgument(
            "alpha_1 is rational; some divisor e(k alpha_1) - 1 vanishes".into(),
        ));
    }
    let cutoff = k.unwrap_or_else(|| v.support_radius());
    let enclosure = alpha1.evaluate(160);
    let mut h = TrigPolynomial::zero();
    let mut residual_bound = 0.0;
    for (n, c) in v.terms() {
        if n.n1 == 0 {
            continue;
        }
        if n.n1.abs() > cutoff {
            residual_bound += c.norm();
            continue;
        }
        let x = &enclosure * num_bigint::BigInt::from(n.n1);
        let t = (&x - x.floor()).to_f64().unwrap_or(0.0);
        let divisor = Complex64::new(0.0, 2.0 * (std::f64::consts::PI * t).sin()) * e(t / 2.0);
        h.add_term(n, c / divisor);
    }
    Ok(HSeries { h, residual_bound })
}

/// `F⁻¹ diag(e(s·N·W(P/N))) F`.
#[derive(Clone, Debug)]
pub struct ShearPropagator {
    pub w: TrigPolynomial,
    pub sign: i32,
    diag: Vec<Complex64>,
    dft: Dft,
}

/// The momentum-diagonal shear unitary built on a mean-zero `W(p)`.
pub fn shear(w: &TrigPolynomial, dim: usize, sign: i32) -> Result<ShearPropagator> {
    if !w.is_p_only() || w.mean().norm() > DROP_TOL || !w.is_real(1e-12) {
        return Err(Error::InvalidObservable(
            "shear needs a real mean-zero function of p".into(),
        ));
    }
    if sign.abs() != 1 {
        return Err(Error::InvalidArgument("shear sign must be +1 or -1".into()));
    }
    let nf = dim as f64;
    let diag = (0..dim)
        .map(|p| e(sign as f64 * nf * w.evaluate(p as f64 / nf, 0.0).re))
        .collect();
    Ok(ShearPropagator {
        w: w.clone(),
        sign,
        diag,
        dft: Dft::new(dim),
    })
}

/// [`shear`] applied to the antiderivative of the profile `v`.
pub fn shear_from_profile(v: &TrigPolynomial, dim: usize, sign: i32) -> Result<ShearPropagator> {
    shear(&v.antiderivative_p()?, dim, sign)
}

impl ShearPropagator {
    fn apply_diag(&self, psi: &StateVector, inverse: bool) -> Result<StateVector> {
        if self.w.is_empty() {
            check_dim(self.dft.dim(), psi.dim())?;
            return Ok(psi.clone());
        }
        let mut hat = self.dft.forward(psi)?;
        for (x, d) in hat.entries_mut().iter_mut().zip(&self.diag) {
            *x *= if inverse { d.conj() } else { *d };
        }
        self.dft.inverse(&hat)
    }

    /// The diagonal in the momentum representation.
    pub fn momentum_diagonal(&self) -> &[Complex64] {
        &self.diag
    }
}

impl Propagator for ShearPropagator {
    fn dim(&self) -> usize {
        self.dft.dim()
    }

    fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        self.apply_diag(psi, false)
    }

    fn apply_inverse(&self, psi: &StateVector) -> Result<StateVector> {
        self.apply_diag(psi, true)
    }
}

/// Defects of `U⁻¹ Op_N(f) U` against `Op_N(f_∘)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DefectRecord {
    pub operator_norm: Option<f64>,
    pub matrix_element: Option<f64>,
    /// Truncation tails of `f` and `f_∘`, bounding their contribution to either defect.
    pub budget: f64,
}

/// Frequency limit used when quantizing observables produced by re-expansion.
const WIDE_LIMIT: i64 = 4096;

/// Egorov defect of `U` for `f ↦ f_∘`: the dense operator norm (when
/// `with_norm`, subject to `max_dense`) and the largest matrix-element defect
/// over `basis`.
pub fn egorov_defect(
    u: &dyn Propagator,
    f: &SmoothTruncation,
    fcirc: &SmoothTruncation,
    basis: Option<&EigenBasis>,
    with_norm: bool,
    max_dense: usize,
) -> Result<DefectRecord> {
    let n = u.dim();
    let op_f = quantize_truncation(f, n, WIDE_LIMIT)?;
    let op_g = quantize_truncation(fcirc, n, WIDE_LIMIT)?;
    let mut rec = DefectRecord {
        budget: f.tail_bound + fcirc.tail_bound,
        ..Default::default()
    };
    if let Some(b) = basis {
        check_dim(n, b.dim())?;
        let worst = b
            .vectors
            .par_iter()
            .map(|psi| -> Result<f64> {
                let phi = u.apply(psi)?;
                let lhs = op_f.expectation_unchecked(phi.entries());
                let rhs = op_g.expectation_unchecked(psi.entries());
                Ok((lhs - rhs).norm())
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        rec.matrix_element = Some(worst);
    }
    if with_norm {
        let du = oracle::materialize_propagator(u, max_dense)?;
        let df = oracle::materialize_observable(&op_f, max_dense)?;
        let dg = oracle::materialize_observable(&op_g, max_dense)?;
        let diff = du.adjoint() * df * &du - dg;
        rec.operator_norm = Some(oracle::operator_norm(&diff));
    }
    Ok(rec)
}

/// Result of [`calibrate_sign`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignCalibration {
    pub sign: i32,
    /// Set when the profile vanishes and the choice is conventional.
    pub warning: bool,
    pub dims: Vec<usize>,
    pub defects_plus: Vec<f64>,
    pub defects_minus: Vec<f64>,
    pub slope_plus: f64,
    pub slope_minus: f64,
}

/// Slope a sign must reach to count as an `N⁻²` fit.
pub const CALIBRATION_SLOPE: f64 = -1.5;

/// Matrix-element defect of the shear with profile `v` in the eigenbasis of
/// `T_N(1,1)`, measured with the probe `f`.
pub fn shear_defect(
    v: &TrigPolynomial,
    probe: &TrigPolynomial,
    dim: usize,
    sign: i32,
) -> Result<DefectRecord> {
    let u = shear_from_profile(v, dim, sign)?;
    let k = sampling_size(probe, v);
    let fcirc = compose_shear(probe, v, k)?;
    let basis = eigenbasis_monomial(&weyl_operator(WeylIndex::new(1, 1), dim));
    egorov_defect(&u, &probe.clone().into(), &fcirc, Some(&basis), false, 0)
}

pub(crate) fn sampling_size(f: &TrigPolynomial, h: &TrigPolynomial) -> usize {
    let max_freq = f
        .terms()
        .map(|(n, _)| n.n1.abs())
        .chain([h.support_radius()])
        .max()
        .unwrap_or(0);
    let max_n2 = f.terms().map(|(n, _)| n.n2.abs()).max().unwrap_or(0);
    // e(n₂h) has effective bandwidth ≈ |n₂|·‖h‖₁·2π beyond the support of h
    let spread = (max_n2 as f64 * h.l1_norm() * 2.0 * std::f64::consts::PI + 40.0) as usize;
    (4 * (max_freq.max(1) as usize))
        .max(2 * (max_freq as usize + spread))
        .next_power_of_two()
        .max(64)
}

/// Chooses the shear sign whose Egorov defect decays like `N⁻²`.
///
/// Errors if the probe does not depend on `q`, or unless exactly one sign
/// reaches [`CALIBRATION_SLOPE`]. A vanishing profile returns `+1` with the
/// warning flag set.
pub fn calibrate_sign(
    v: &TrigPolynomial,
    probe: &TrigPolynomial,
    dims: &[usize],
) -> Result<SignCalibration> {
    if probe.terms().all(|(n, _)| n.n2 == 0) {
        return Err(Error::Calibration("the probe must depend on q".into()));
    }
    if dims.len() < 2 {
        return Err(Error::Calibration("need at least two dimensions".into()));
    }
    if v.is_empty() {
        return Ok(SignCalibration {
            sign: 1,
            warning: true,
            dims: dims.to_vec(),
            defects_plus: vec![0.0; dims.len()],
            defects_minus: vec![0.0; dims.len()],
            slope_plus: f64::NEG_INFINITY,
            slope_minus: f64::NEG_INFINITY,
        });
    }
    let measure = |sign: i32| -> Result<Vec<f64>> {
        dims.iter()
            .map(|&n| {
                Ok(shear_defect(v, probe, n, sign)?
                    .matrix_element
                    .unwrap_or(0.0))
            })
            .collect()
    };
    let (plus, minus) = (measure(1)?, measure(-1)?);
    let xs: Vec<f64> = dims.iter().map(|&n| n as f64).collect();
    let slope = |ys: &[f64]| fit_log_log(&xs, ys).map_or(f64::NEG_INFINITY, |f| f.slope);
    let (sp, sm) = (slope(&plus), slope(&minus));
    let sign = match (sp <= CALIBRATION_SLOPE, sm <= CALIBRATION_SLOPE) {
        (true, false) => 1,
        (false, true) => -1,
        _ => {
            return Err(Error::Calibration(format!(
                "slopes {sp:.3} (+1) and {sm:.3} (-1) do not single out a sign"
            )))
        }
    };
    Ok(SignCalibration {
        sign,
        warning: false,
        dims: dims.to_vec(),
        defects_plus: plus,
        defects_minus: minus,
        slope_plus: sp,
        slope_minus: sm,
    })
}

/// `U_N = U_h⁻¹ U_τ U_h`.
#[derive(Clone, Debug)]
pub struct PerturbedPropagator {
    pub kron: KroneckerPropagator,
    pub h: HSeries,
    /// `U_h`, the inverse of the calibrated shear along `h`.
    pub conj: ShearPropagator,
}

/// Builds the perturbed propagator from the calibrated shear sign.
pub fn perturbed(
    alpha: &(RealTarget, RealTarget),
    v: &TrigPolynomial,
    dim: usize,
    calibrated_sign: i32,
) -> Result<PerturbedPropagator> {
    let kron = kronecker(alpha, dim)?;
    let h = h_series(v, &alpha.0, None)?;
    let conj = shear_from_profile(&h.h, dim, -calibrated_sign)?;
    Ok(PerturbedPropagator { kron, h, conj })
}

impl PerturbedPropagator {
    /// `ψ_j = U_h⁻¹ ψ^τ_j`, with the Kronecker eigenvalues.
    pub fn eigenbasis(&self) -> Result<EigenBasis> {
        self.transport(self.kron.eigenbasis())
    }

    /// Maps every vector of a basis through `U_h⁻¹`.
    pub fn transport(&self, basis: EigenBasis) -> Result<EigenBasis> {
        let vectors = basis
            .vectors
            .par_iter()
            .map(|v| self.conj.apply_inverse(v))
            .collect::<Result<Vec<_>>>()?;
        Ok(EigenBasis { vectors, ..basis })
    }
}

impl Propagator for PerturbedPropagator {
    fn dim(&self) -> usize {
        self.kron.dim()
    }

    fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        self.conj
            .apply_inverse(&self.kron.apply(&self.conj.apply(psi)?)?)
    }

    fn apply_inverse(&self, psi: &StateVector) -> Result<StateVector> {
        self.conj
            .apply_inverse(&self.kron.apply_inverse(&self.conj.apply(psi)?)?)
    }
}

/// `max |h(p+α₁) − h(p) − V(p)|` over a uniform grid of `points` nodes.
pub fn cocycle_residual(v: &TrigPolynomial, h: &TrigPolynomial, alpha1: f64, points: usize) -> f64 {
    (0..points)
        .map(|j| {
            let p = j as f64 / points as f64;
            (h.evaluate(p + alpha1, 0.0) - h.evaluate(p, 0.0) - v.evaluate(p, 0.0)).norm()
        })
        .fold(0.0, f64::max)
}

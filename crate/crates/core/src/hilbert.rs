//! The state space `H_N = L²(Z/NZ)` with the `1/N`-weighted inner product and
//! the unitary discrete Fourier transform.
//!
//! Sign convention: `dft` uses the kernel `e_N(-QP)` and `inverse_dft` the
//! kernel `e_N(PQ)`, both with a `1/√N` prefactor. With this convention the
//! Fourier conjugation identities of the translation operators read
//! `F t₁ F⁻¹ = t₂` and `F t₂ F⁻¹ = t₁⁻¹`; the form `F t₁ F` equals `t₂`
//! composed with the parity `ψ(Q) ↦ ψ(-Q)`.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::phase::ExactPhase;

/// Tolerance used for "normalized" throughout the crate.
pub const NORM_TOL: f64 = 1e-12;

/// A vector in `H_N`, `ψ(Q)` for `Q = 0..N-1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    entries: Vec<Complex64>,
}

impl StateVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument(
                "state dimension must be at least 1".into(),
            ));
        }
        Ok(StateVector { entries })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0);
        StateVector {
            entries: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    /// The constant function `ψ ≡ 1`, which has unit norm.
    pub fn ones(dim: usize) -> Self {
        assert!(dim > 0);
        StateVector {
            entries: vec![Complex64::new(1.0, 0.0); dim],
        }
    }

    /// Normalized position eigenstate `√N·δ_{Q,index}`.
    pub fn position(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.entries[index % dim] = Complex64::new((dim as f64).sqrt(), 0.0);
        v
    }

    /// The character `Q ↦ e_N(kQ)`.
    pub fn character(dim: usize, k: i64) -> Self {
        let n = dim as i64;
        let entries = (0..n)
            .map(|q| ExactPhase::e_n(k * q, n).to_complex())
            .collect();
        StateVector { entries }
    }

    /// A normalized state with independent Gaussian-like entries.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let entries = (0..dim)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let mut v = StateVector { entries };
        v.normalize();
        v
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [Complex64] {
        &mut self.entries
    }

    pub fn into_entries(self) -> Vec<Complex64> {
        self.entries
    }

    /// `‖ψ‖² = (1/N) Σ |ψ(Q)|²`.
    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.dim() as f64
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sq() - 1.0).abs() <= NORM_TOL
    }

    pub fn normalize(&mut self) {
        let s = 1.0 / self.norm();
        self.entries.iter_mut().for_each(|z| *z *= s);
    }

    pub fn scale(&self, c: Complex64) -> StateVector {
        StateVector {
            entries: self.entries.iter().map(|z| z * c).collect(),
        }
    }

    /// `self - other`, for residual computations.
    pub fn sub(&self, other: &StateVector) -> Result<StateVector> {
        check_dim(self.dim(), other.dim())?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(StateVector { entries })
    }

    /// The parity image `Q ↦ ψ(-Q)`.
    pub fn parity(&self) -> StateVector {
        let n = self.dim();
        StateVector {
            entries: (0..n).map(|q| self.entries[(n - q) % n]).collect(),
        }
    }
}

impl Index<usize> for StateVector {
    type Output = Complex64;

    fn index(&self, q: usize) -> &Complex64 {
        &self.entries[q]
    }
}

impl IndexMut<usize> for StateVector {
    fn index_mut(&mut self, q: usize) -> &mut Complex64 {
        &mut self.entries[q]
    }
}

/// `⟨ψ, φ⟩ = (1/N) Σ ψ(Q) conj(φ(Q))`.
pub fn inner(psi: &StateVector, phi: &StateVector) -> Result<Complex64> {
    check_dim(psi.dim(), phi.dim())?;
    Ok(inner_unchecked(psi.entries(), phi.entries()))
}

pub(crate) fn inner_unchecked(psi: &[Complex64], phi: &[Complex64]) -> Complex64 {
    let s: Complex64 = psi.iter().zip(phi).map(|(a, b)| a * b.conj()).sum();
    s / psi.len() as f64
}

/// Precomputed direct-summation DFT of a fixed size.
#[derive(Clone, Debug)]
pub struct Dft {
    n: usize,
    // e_N(-k) for k = 0..N
    twiddle: Vec<Complex64>,
    scale: f64,
}

impl Dft {
    pub fn new(n: usize) -> Self {
        assert!(n > 0);
        let twiddle = (0..n as i64)
            .map(|k| ExactPhase::e_n(-k, n as i64).to_complex())
            .collect();
        Dft {
            n,
            twiddle,
            scale: 1.0 / (n as f64).sqrt(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn transform(&self, input: &[Complex64], forward: bool) -> Vec<Complex64> {
        let n = self.n;
        (0..n)
            .map(|p| {
                let mut acc = Complex64::new(0.0, 0.0);
                let mut k = 0usize;
                for x in input {
                    let w = self.twiddle[k];
                    acc += x * if forward { w } else { w.conj() };
                    k += p;
                    if k >= n {
                        k -= n;
                    }
                }
                acc * self.scale
            })
            .collect()
    }

    /// `ψ̂(P) = N^{-1/2} Σ_Q ψ(Q) e_N(-QP)`.
    pub fn forward(&self, psi: &StateVector) -> Result<StateVector> {
        check_dim(self.n, psi.dim())?;
        Ok(StateVector {
            entries: self.transform(psi.entries(), true),
        })
    }

    /// `ψ(Q) = N^{-1/2} Σ_P ψ̂(P) e_N(PQ)`.
    pub fn inverse(&self, psihat: &StateVector) -> Result<StateVector> {
        check_dim(self.n, psihat.dim())?;
        Ok(StateVector {
            entries: self.transform(psihat.entries(), false),
        })
    }
}

pub fn dft(psi: &StateVector) -> StateVector {
    Dft::new(psi.dim())
        .forward(psi)
        .expect("plan built for this dimension")
}

pub fn inverse_dft(psihat: &StateVector) -> StateVector {
    Dft::new(psihat.dim())
        .inverse(psihat)
        .expect("plan built for this dimension")
}

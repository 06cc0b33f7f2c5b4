//! Fixtures shared by the kernel benchmarks.

use qtorus::diophantine::RealTarget;
use qtorus::observables::gaussian_family;
use qtorus::propagators::{kronecker, KroneckerPropagator};
use qtorus::{SmoothTruncation, WeylIndex};

/// Kronecker propagator for `α = (√2, √3)`.
pub fn kronecker_fixture(dim: usize) -> KroneckerPropagator {
    kronecker(&(RealTarget::sqrt(2), RealTarget::sqrt(3)), dim).expect("valid dimension")
}

/// Smooth observable with coefficients `e^{−‖n‖_∞}` up to radius 12.
pub fn smooth_fixture() -> SmoothTruncation {
    gaussian_family(WeylIndex::new(0, 0), 1.0, 12).expect("valid parameters")
}

//! Dense reference implementations used by tests and calibration only.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::StateVector;
use crate::observables::{
    poisson_bracket, quantize_with_limit, QuantizedObservable, TrigPolynomial,
};
use crate::propagators::Propagator;
use crate::weyl::{weyl_operator, EigenBasis, MonomialOperator};

pub type DenseOperator = DMatrix<Complex64>;

/// Default largest dimension materialized densely.
pub const DEFAULT_MAX_DENSE: usize = 512;

fn guard(dim: usize, limit: usize) -> Result<()> {
    if dim > limit {
        Err(Error::DenseGuard { dim, limit })
    } else {
        Ok(())
    }
}

pub fn materialize_monomial(op: &MonomialOperator, limit: usize) -> Result<DenseOperator> {
    guard(op.dim(), limit)?;
    let n = op.dim();
    let mut m = DenseOperator::zeros(n, n);
    for q in 0..n {
        m[(q, op.target()[q])] = op.phases()[q].to_complex();
    }
    Ok(m)
}

/// `Σ f̂(n)·dense(T_N(n))`, summed term by term.
pub fn materialize_observable(op: &QuantizedObservable, limit: usize) -> Result<DenseOperator> {
    guard(op.dim(), limit)?;
    let n = op.dim();
    let mut m = DenseOperator::zeros(n, n);
    for &(c, idx) in op.terms() {
        let t = weyl_operator(idx, n);
        for q in 0..n {
            m[(q, t.target()[q])] += c * t.phases()[q].to_complex();
        }
    }
    Ok(m)
}

/// Columns are the images of the standard basis vectors.
pub fn materialize_propagator(u: &dyn Propagator, limit: usize) -> Result<DenseOperator> {
    let n = u.dim();
    guard(n, limit)?;
    let mut m = DenseOperator::zeros(n, n);
    for j in 0..n {
        let mut e = StateVector::zeros(n);
        e[j] = Complex64::new(1.0, 0.0);
        let col = u.apply(&e)?;
        for i in 0..n {
            m[(i, j)] = col[i];
        }
    }
    Ok(m)
}

/// `max |(A*A − I)_{ij}|`.
pub fn unitarity_defect(a: &DenseOperator) -> f64 {
    let n = a.nrows();
    let g = a.adjoint() * a - DenseOperator::identity(n, n);
    g.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn angle(z: Complex64) -> f64 {
    let t = z.arg().rem_euclid(2.0 * std::f64::consts::PI);
    if 2.0 * std::f64::consts::PI - t < 1e-12 {
        0.0
    } else {
        t
    }
}

/// Spectral decomposition of a normal matrix.
///
/// Writes `A = H₁ + iH₂` with commuting Hermitian parts and diagonalizes the
/// Hermitian pencil `H₁ + t·H₂` for a fixed irrational `t`; eigenvalues are
/// recovered as Rayleigh quotients. Vectors are scaled to unit norm under the
/// `1/N` inner product and sorted by eigenvalue angle in `[0, 2π)`.
pub fn dense_eig(a: &DenseOperator) -> Result<EigenBasis> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::InvalidArgument(
            "dense_eig needs a nonempty square matrix".into(),
        ));
    }
    let scale = a.norm().max(1.0);
    let comm = (a * a.adjoint() - a.adjoint() * a).norm() / (scale * scale);
    if comm > 1e-8 {
        return Err(Error::NotNormal(comm));
    }
    const PENCIL: f64 = 0.577_215_664_901_532_9;
    let half = Complex64::new(0.5, 0.0);
    let h1 = (a + a.adjoint()) * half;
    let h2 = (a - a.adjoint()) * Complex64::new(0.0, -0.5);
    let pencil = h1 + h2 * Complex64::new(PENCIL, 0.0);
    let eig = nalgebra::SymmetricEigen::try_new(pencil, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("Hermitian eigen iteration did not converge".into()))?;
    let q = eig.eigenvectors;
    let lambdas: Vec<Complex64> = (0..n)
        .map(|i| {
            let v = q.column(i);
            (v.adjoint() * a * v)[(0, 0)]
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| angle(lambdas[i]).total_cmp(&angle(lambdas[j])));
    let root = (n as f64).sqrt();
    let mut vectors = Vec::with_capacity(n);
    let mut eigenvalues = Vec::with_capacity(n);
    for i in order {
        let v: Vec<Complex64> = q.column(i).iter().map(|x| x * root).collect();
        vectors.push(StateVector::new(v)?);
        eigenvalues.push(lambdas[i]);
    }
    let basis = EigenBasis {
        vectors,
        eigenvalues,
        exact: None,
        secondary: None,
    };
    let res = basis.residual(|v| StateVector::new((a * as_column(v)).iter().copied().collect()))?;
    if res > 1e-8 {
        return Err(Error::Numerical(format!(
            "eigen-residual {res:.3e} exceeds 1e-8"
        )));
    }
    Ok(basis)
}

fn as_column(v: &StateVector) -> nalgebra::DVector<Complex64> {
    nalgebra::DVector::from_column_slice(v.entries())
}

/// Largest singular value by power iteration on `A*A` from a seeded start,
/// repeated once from a second start.
pub fn operator_norm(a: &DenseOperator) -> f64 {
    let n = a.ncols();
    if n == 0 || a.iter().all(|x| *x == Complex64::new(0.0, 0.0)) {
        return 0.0;
    }
    let aha = a.adjoint() * a;
    let run = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = nalgebra::DVector::from_fn(n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        v /= Complex64::new(v.norm(), 0.0);
        let mut lambda = 0.0;
        for _ in 0..20_000 {
            let w = &aha * &v;
            let next = w.norm();
            if next == 0.0 {
                return 0.0;
            }
            v = w / Complex64::new(next, 0.0);
            if (next - lambda).abs() <= 1e-12 * next {
                lambda = next;
                break;
            }
            lambda = next;
        }
        lambda.sqrt()
    };
    run(0x5eed).max(run(0x5eed + 1))
}

/// Distances between a structured and a dense eigendecomposition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisComparison {
    /// Largest eigenvalue difference after sorting both spectra by angle.
    pub spectrum: f64,
    /// Largest operator-norm difference between matching eigenprojectors.
    pub projectors: f64,
}

/// Groups eigenvalues into clusters within `tol` and compares the spectral
/// projectors `P = (1/N) Σ v v*` cluster by cluster.
pub fn compare_bases(
    structured: &EigenBasis,
    dense: &EigenBasis,
    tol: f64,
) -> Result<BasisComparison> {
    let n = structured.dim();
    if dense.dim() != n || structured.len() != dense.len() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: dense.dim(),
        });
    }
    let spectrum = structured
        .eigenvalues
        .iter()
        .zip(&dense.eigenvalues)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);

    let clusters = |b: &EigenBasis| {
        let mut out: Vec<(Complex64, Vec<usize>)> = Vec::new();
        for (i, &lam) in b.eigenvalues.iter().enumerate() {
            match out.iter_mut().find(|(c, _)| (c - lam).norm() < tol) {
                Some((_, members)) => members.push(i),
                None => out.push((lam, vec![i])),
            }
        }
        out
    };
    let projector = |b: &EigenBasis, members: &[usize]| {
        let mut p = DenseOperator::zeros(n, n);
        for &i in members {
            let v = nalgebra::DVector::from_column_slice(b.vectors[i].entries());
            p += &v * v.adjoint();
        }
        p / Complex64::new(n as f64, 0.0)
    };
    let ds = clusters(dense);
    let mut projectors = 0.0f64;
    for (lam, members) in clusters(structured) {
        let p = projector(structured, &members);
        let q = match ds.iter().find(|(c, _)| (c - lam).norm() < tol) {
            Some((_, dm)) => projector(dense, dm),
            None => DenseOperator::zeros(n, n),
        };
        projectors = projectors.max(operator_norm(&(p - q)));
    }
    Ok(BasisComparison {
        spectrum,
        projectors,
    })
}

/// Dense checks of the three quantization axioms for a pair `f, g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomDefects {
    /// `max |Op(f̄) − Op(f)*|` entrywise.
    pub adjoint: f64,
    /// `‖Op(f)Op(g) − Op(fg)‖`.
    pub product: f64,
    /// `‖2πiN [Op(f), Op(g)] − Op({f,g})‖`.
    pub bracket: f64,
    /// `‖(2πiN)⁻¹ [Op(f), Op(g)] − Op({f,g})‖`, for comparison.
    pub bracket_inverse_scaling: f64,
}

pub fn axiom_defects(
    f: &TrigPolynomial,
    g: &TrigPolynomial,
    dim: usize,
    limit: usize,
) -> Result<AxiomDefects> {
    let wide = 4 * (f.support_radius() + g.support_radius()).max(1);
    let dense =
        |h: &TrigPolynomial| materialize_observable(&quantize_with_limit(h, dim, wide)?, limit);
    let (a, b) = (dense(f)?, dense(g)?);
    let adjoint = (dense(&f.conj())? - a.adjoint())
        .iter()
        .map(|x| x.norm())
        .fold(0.0, f64::max);
    let product = operator_norm(&(&a * &b - dense(&f.mul(g))?));
    let comm = &a * &b - &b * &a;
    let pb = dense(&poisson_bracket(f, g))?;
    let s = Complex64::new(0.0, 2.0 * std::f64::consts::PI * dim as f64);
    let bracket = operator_norm(&(&comm * s - &pb));
    let bracket_inverse_scaling = operator_norm(&(&comm / s - &pb));
    Ok(AxiomDefects {
        adjoint,
        product,
        bracket,
        bracket_inverse_scaling,
    })
}

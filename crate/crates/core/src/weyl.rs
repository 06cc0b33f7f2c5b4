//! Weyl–Heisenberg translation operators on `H_N` and monomial operator algebra.
//!
//! `T_N(n)ψ(Q) = e^{iπ n₁n₂/N} e_N(n₂Q) ψ(Q+n₁)`, with `t₁ = T_N(1,0)` the
//! cyclic shift and `t₂ = T_N(0,1)` multiplication by `e_N(Q)`. They satisfy
//! `T_N(m)T_N(n) = e_N(ω(m,n)/2) T_N(m+n)` with `ω(m,n) = m₁n₂ − m₂n₁`.
//!
//! Every product of Weyl operators is monomial (one unimodular entry per row
//! and column). Monomial operators are stored as a permutation plus a table of
//! [`ExactPhase`]s, so composition, adjoints and eigendecompositions are exact.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::hilbert::{inner_unchecked, StateVector};
use crate::phase::{ExactPhase, RootTable};

/// A frequency / translation vector `n = (n₁, n₂) ∈ Z²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WeylIndex {
    pub n1: i64,
    pub n2: i64,
}

impl WeylIndex {
    pub const ZERO: WeylIndex = WeylIndex { n1: 0, n2: 0 };

    pub const fn new(n1: i64, n2: i64) -> Self {
        WeylIndex { n1, n2 }
    }

    /// Symplectic form `ω(m, n) = m₁n₂ − m₂n₁`.
    pub fn omega(self, other: WeylIndex) -> i64 {
        self.n1 * other.n2 - self.n2 * other.n1
    }

    pub fn dot(self, other: WeylIndex) -> i64 {
        self.n1 * other.n1 + self.n2 * other.n2
    }

    /// `‖n‖_∞`.
    pub fn sup_norm(self) -> i64 {
        self.n1.abs().max(self.n2.abs())
    }

    pub fn euclid_norm(self) -> f64 {
        ((self.n1 * self.n1 + self.n2 * self.n2) as f64).sqrt()
    }

    pub fn is_zero(self) -> bool {
        self.n1 == 0 && self.n2 == 0
    }

    /// All indices with `‖n‖_∞ ≤ radius`, in lexicographic order.
    pub fn ball(radius: i64) -> impl Iterator<Item = WeylIndex> {
        (-radius..=radius).flat_map(move |a| (-radius..=radius).map(move |b| WeylIndex::new(a, b)))
    }
}

impl Add for WeylIndex {
    type Output = WeylIndex;
    fn add(self, o: WeylIndex) -> WeylIndex {
        WeylIndex::new(self.n1 + o.n1, self.n2 + o.n2)
    }
}

impl Sub for WeylIndex {
    type Output = WeylIndex;
    fn sub(self, o: WeylIndex) -> WeylIndex {
        WeylIndex::new(self.n1 - o.n1, self.n2 - o.n2)
    }
}

impl Neg for WeylIndex {
    type Output = WeylIndex;
    fn neg(self) -> WeylIndex {
        WeylIndex::new(-self.n1, -self.n2)
    }
}

impl fmt::Display for WeylIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.n1, self.n2)
    }
}

/// `(Aψ)(Q) = phase[Q]·ψ(target[Q])`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialOperator {
    target: Vec<usize>,
    phase: Vec<ExactPhase>,
}

impl MonomialOperator {
    pub fn new(target: Vec<usize>, phase: Vec<ExactPhase>) -> Result<Self> {
        if target.is_empty() {
            return Err(Error::InvalidArgument(
                "monomial operator needs dimension >= 1".into(),
            ));
        }
        check_dim(target.len(), phase.len())?;
        let mut seen = vec![false; target.len()];
        for &t in &target {
            if t >= target.len() || std::mem::replace(&mut seen[t], true) {
                return Err(Error::InvalidArgument(
                    "target table is not a permutation".into(),
                ));
            }
        }
        Ok(MonomialOperator { target, phase })
    }

    pub fn identity(dim: usize) -> Self {
        MonomialOperator {
            target: (0..dim).collect(),
            phase: vec![ExactPhase::ONE; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.target.len()
    }

    pub fn target(&self) -> &[usize] {
        &self.target
    }

    pub fn phases(&self) -> &[ExactPhase] {
        &self.phase
    }

    pub fn is_identity(&self) -> bool {
        self.target.iter().enumerate().all(|(q, &t)| q == t)
            && self.phase.iter().all(|p| p.is_one())
    }

    /// `c·A` for a unimodular constant `c`.
    pub fn scaled(&self, c: ExactPhase) -> Self {
        MonomialOperator {
            target: self.target.clone(),
            phase: self.phase.iter().map(|&p| p * c).collect(),
        }
    }

    /// `A ∘ B`, i.e. `(A∘B)ψ = A(Bψ)`.
    pub fn compose(&self, other: &MonomialOperator) -> Result<MonomialOperator> {
        check_dim(self.dim(), other.dim())?;
        let (target, phase) = (0..self.dim())
            .map(|q| {
                let s = self.target[q];
                (other.target[s], self.phase[q] * other.phase[s])
            })
            .unzip();
        Ok(MonomialOperator { target, phase })
    }

    pub fn adjoint(&self) -> MonomialOperator {
        let n = self.dim();
        let mut target = vec![0; n];
        let mut phase = vec![ExactPhase::ONE; n];
        for q in 0..n {
            let s = self.target[q];
            target[s] = q;
            phase[s] = self.phase[q].conj();
        }
        MonomialOperator { target, phase }
    }

    pub fn commutes_with(&self, other: &MonomialOperator) -> Result<bool> {
        Ok(self.compose(other)? == other.compose(self)?)
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        check_dim(self.dim(), psi.dim())?;
        let entries = self
            .target
            .iter()
            .zip(&self.phase)
            .map(|(&t, p)| p.to_complex() * psi[t])
            .collect();
        StateVector::new(entries)
    }

    /// Cycles of the target permutation, each starting at its smallest index.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.dim()];
        let mut out = Vec::new();
        for start in 0..self.dim() {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut q = self.target[start];
            while q != start {
                seen[q] = true;
                cycle.push(q);
                q = self.target[q];
            }
            out.push(cycle);
        }
        out
    }
}

/// `T_N(n)`.
pub fn weyl_operator(n: WeylIndex, dim: usize) -> MonomialOperator {
    assert!(dim > 0);
    let nn = dim as i64;
    let target = (0..nn)
        .map(|q| (q + n.n1).rem_euclid(nn) as usize)
        .collect();
    let phase = (0..nn)
        .map(|q| ExactPhase::new(n.n1 * n.n2 + 2 * n.n2 * q, nn))
        .collect();
    MonomialOperator { target, phase }
}

/// `e_N(ω(m,n)/2)`, the phase in `T(m)T(n) = e_N(ω(m,n)/2) T(m+n)`.
pub fn composition_phase(m: WeylIndex, n: WeylIndex, dim: usize) -> ExactPhase {
    ExactPhase::e_n_half(m.omega(n), dim as i64)
}

/// `⟨T_N(n)ψ, ψ⟩` evaluated directly from the action formula.
pub fn weyl_expectation(n: WeylIndex, psi: &[Complex64], table: &RootTable) -> Complex64 {
    let nn = psi.len();
    debug_assert_eq!(nn, table.dim());
    let two_n = 2 * nn as i64;
    let shift = n.n1.rem_euclid(nn as i64) as usize;
    let step = (2 * n.n2).rem_euclid(two_n);
    let mut idx = (n.n1 * n.n2).rem_euclid(two_n);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut src = shift;
    for x in psi {
        acc += table.half(idx) * psi[src] * x.conj();
        idx += step;
        if idx >= two_n {
            idx -= two_n;
        }
        src += 1;
        if src == nn {
            src = 0;
        }
    }
    acc / nn as f64
}

/// An orthonormal eigenbasis, with eigenvalues sorted by angle in `[0, 2π)`.
#[derive(Clone, Debug)]
pub struct EigenBasis {
    pub vectors: Vec<StateVector>,
    pub eigenvalues: Vec<Complex64>,
    /// Exact eigenvalues, when the basis came from the structured algorithm.
    pub exact: Option<Vec<ExactPhase>>,
    /// Eigenvalues of the second operator of a joint decomposition.
    pub secondary: Option<Vec<ExactPhase>>,
}

impl EigenBasis {
    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.dim())
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, u) in self.vectors.iter().enumerate() {
            for (j, v) in self.vectors.iter().enumerate().skip(i) {
                let g = inner_unchecked(u.entries(), v.entries());
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - want).norm());
            }
        }
        worst
    }

    /// `max_j ‖Aψ_j − λ_jψ_j‖` for an operator given by its action.
    pub fn residual<F>(&self, apply: F) -> Result<f64>
    where
        F: Fn(&StateVector) -> Result<StateVector>,
    {
        let mut worst = 0.0f64;
        for (v, &lam) in self.vectors.iter().zip(&self.eigenvalues) {
            let r = apply(v)?.sub(&v.scale(lam))?;
            worst = worst.max(r.norm());
        }
        Ok(worst)
    }
}

/// Exact eigendecomposition of a monomial operator through its cycle structure.
///
/// On a cycle of length `L` with phase product `Π`, the eigenvalues are the
/// `L`-th roots of `Π` and the eigenvectors are supported on the cycle.
pub fn eigenbasis_monomial(a: &MonomialOperator) -> EigenBasis {
    let id = MonomialOperator::identity(a.dim());
    let mut basis = joint_decomposition(a, &id);
    basis.secondary = None;
    basis
}

/// An orthonormal basis diagonalizing two commuting monomial operators.
///
/// Fails with [`Error::NotCommuting`] unless `A∘B = B∘A` exactly.
pub fn joint_eigenbasis(a: &MonomialOperator, b: &MonomialOperator) -> Result<EigenBasis> {
    if !a.commutes_with(b)? {
        return Err(Error::NotCommuting("A∘B ≠ B∘A".into()));
    }
    Ok(joint_decomposition(a, b))
}

struct JointVector {
    lambda: ExactPhase,
    base: usize,
    mu: ExactPhase,
    values: Vec<(usize, ExactPhase)>,
    support: usize,
}

// Orbit-by-orbit construction. The abelian group generated by the two
// permutations acts freely on each orbit modulo a common stabilizer, so the
// orbit of `x0` is `{σ_A^i σ_B^j x0 : i < ℓ, j < m}` where ℓ is the A-cycle
// length and m the number of A-cycles in the orbit. An eigenvector is fixed by
// its value at `x0` and the relations `v(σ_A Q) = λ v(Q)/φ_A(Q)`,
// `v(σ_B Q) = μ v(Q)/φ_B(Q)`; closing the two loops gives `λ^ℓ = Π_A` and
// `μ^m = λ^t Π_B / Π_A(t)`.
fn joint_decomposition(a: &MonomialOperator, b: &MonomialOperator) -> EigenBasis {
    let n = a.dim();
    let mut visited = vec![false; n];
    let mut found: Vec<JointVector> = Vec::with_capacity(n);
    let mut cycle_pos: HashMap<usize, usize> = HashMap::new();

    for x0 in 0..n {
        if visited[x0] {
            continue;
        }
        // the A-cycle through each y_j, with prefix phase products
        let walk_a = |start: usize| -> (Vec<usize>, Vec<ExactPhase>) {
            let mut pts = vec![start];
            let mut pref = vec![ExactPhase::ONE];
            let mut q = start;
            loop {
                let acc = *pref.last().unwrap() * a.phase[q];
                q = a.target[q];
                if q == start {
                    pref.push(acc);
                    break;
                }
                pts.push(q);
                pref.push(acc);
            }
            (pts, pref)
        };

        let (cycle0, pref0) = walk_a(x0);
        let ell = cycle0.len();
        let pi_a = pref0[ell];
        cycle_pos.clear();
        for (i, &q) in cycle0.iter().enumerate() {
            cycle_pos.insert(q, i);
        }

        // y_j = σ_B^j x0 until it re-enters the A-cycle of x0
        let mut ys = vec![x0];
        let mut pref_b = vec![ExactPhase::ONE];
        let (m, t) = loop {
            let y = *ys.last().unwrap();
            let acc = *pref_b.last().unwrap() * b.phase[y];
            let next = b.target[y];
            pref_b.push(acc);
            if let Some(&pos) = cycle_pos.get(&next) {
                break (ys.len(), pos);
            }
            ys.push(next);
        };
        let pi_b = pref_b[m];

        let cycles: Vec<(Vec<usize>, Vec<ExactPhase>)> = ys
            .iter()
            .map(|&y| {
                if y == x0 {
                    (cycle0.clone(), pref0.clone())
                } else {
                    walk_a(y)
                }
            })
            .collect();
        for (pts, _) in &cycles {
            for &q in pts {
                visited[q] = true;
            }
        }
        let support = ell * m;

        for lambda in pi_a.roots(ell) {
            let target_mu = lambda.pow(t as i64) * pi_b * pref0[t].conj();
            for mu in target_mu.roots(m) {
                let mut values = Vec::with_capacity(support);
                for (j, (pts, pref)) in cycles.iter().enumerate() {
                    let base = mu.pow(j as i64) * pref_b[j].conj();
                    for (i, &q) in pts.iter().enumerate() {
                        values.push((q, base * lambda.pow(i as i64) * pref[i].conj()));
                    }
                }
                found.push(JointVector {
                    lambda,
                    base: x0,
                    mu,
                    values,
                    support,
                });
            }
        }
    }

    found.sort_by(|u, v| {
        u.lambda
            .cmp(&v.lambda)
            .then(u.base.cmp(&v.base))
            .then(u.mu.cmp(&v.mu))
    });

    let mut vectors = Vec::with_capacity(n);
    let mut eigenvalues = Vec::with_capacity(n);
    let mut exact = Vec::with_capacity(n);
    let mut secondary = Vec::with_capacity(n);
    for jv in found {
        let scale = (n as f64 / jv.support as f64).sqrt();
        let mut v = StateVector::zeros(n);
        for (q, p) in jv.values {
            v[q] = p.to_complex() * scale;
        }
        vectors.push(v);
        eigenvalues.push(jv.lambda.to_complex());
        exact.push(jv.lambda);
        secondary.push(jv.mu);
    }
    EigenBasis {
        vectors,
        eigenvalues,
        exact: Some(exact),
        secondary: Some(secondary),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{dft, inner, inverse_dft};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type Mat = Vec<Vec<Complex64>>;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // dense oracle written directly from the action formula with f64 angles
    fn dense_weyl(n: WeylIndex, dim: usize) -> Mat {
        let nf = dim as f64;
        let mut m = vec![vec![c(0.0, 0.0); dim]; dim];
        for q in 0..dim {
            let ang = std::f64::consts::PI * (n.n1 * n.n2) as f64 / nf
                + 2.0 * std::f64::consts::PI * (n.n2 * q as i64) as f64 / nf;
            let col = (q as i64 + n.n1).rem_euclid(dim as i64) as usize;
            m[q][col] = c(ang.cos(), ang.sin());
        }
        m
    }

    fn dense_of(a: &MonomialOperator) -> Mat {
        let n = a.dim();
        let mut m = vec![vec![c(0.0, 0.0); n]; n];
        for q in 0..n {
            m[q][a.target()[q]] = a.phases()[q].to_complex();
        }
        m
    }

    fn matmul(a: &Mat, b: &Mat) -> Mat {
        let n = a.len();
        let mut out = vec![vec![c(0.0, 0.0); n]; n];
        for i in 0..n {
            for k in 0..n {
                if a[i][k] == c(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        out
    }

    fn max_diff(a: &Mat, b: &Mat) -> f64 {
        a.iter()
            .zip(b)
            .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }

    fn dense_apply_op<F: Fn(&StateVector) -> StateVector>(f: F, n: usize) -> Mat {
        // column j = f(e_j) with unnormalized unit vectors
        let mut m = vec![vec![c(0.0, 0.0); n]; n];
        for j in 0..n {
            let mut e = StateVector::zeros(n);
            e[j] = c(1.0, 0.0);
            let col = f(&e);
            for i in 0..n {
                m[i][j] = col[i];
            }
        }
        m
    }

    fn random_monomial(rng: &mut ChaCha8Rng, n: usize) -> MonomialOperator {
        let mut target: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            target.swap(i, j);
        }
        let phase = (0..n)
            .map(|_| ExactPhase::new(rng.random_range(0..40), rng.random_range(1..13)))
            .collect();
        MonomialOperator::new(target, phase).unwrap()
    }

    #[test]
    fn weyl_basic_shapes() {
        assert!(weyl_operator(WeylIndex::ZERO, 7).is_identity());
        let t1 = weyl_operator(WeylIndex::new(1, 0), 4);
        assert_eq!(t1.target(), &[1, 2, 3, 0]);
        assert!(t1.phases().iter().all(|p| p.is_one()));
        let psi =
            StateVector::new(vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]).unwrap();
        let out = t1.apply(&psi).unwrap();
        assert_eq!(
            out.entries(),
            &[c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0), c(1.0, 0.0)]
        );

        // T_2(1,1)ψ(Q) = i(-1)^Q ψ(Q+1)
        let t = weyl_operator(WeylIndex::new(1, 1), 2);
        assert_eq!(t.target(), &[1, 0]);
        assert_eq!(t.phases()[0].to_complex(), c(0.0, 1.0));
        assert_eq!(t.phases()[1].to_complex(), c(0.0, -1.0));
    }

    #[test]
    fn weyl_matches_dense_formula() {
        for dim in [1, 2, 5, 12] {
            for n in WeylIndex::ball(4) {
                assert!(max_diff(&dense_of(&weyl_operator(n, dim)), &dense_weyl(n, dim)) < 1e-13);
            }
        }
    }

    #[test]
    fn composition_law_example() {
        let m = WeylIndex::new(1, 0);
        let n = WeylIndex::new(0, 1);
        let lhs = weyl_operator(m, 5).compose(&weyl_operator(n, 5)).unwrap();
        let rhs = weyl_operator(WeylIndex::new(1, 1), 5).scaled(ExactPhase::new(1, 5));
        assert_eq!(lhs, rhs);
        let sq = weyl_operator(WeylIndex::new(2, 3), 9);
        assert_eq!(
            sq.compose(&sq).unwrap(),
            weyl_operator(WeylIndex::new(4, 6), 9)
        );
    }

    #[test]
    fn composition_law_exact_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for _ in 0..100 {
            let dim = rng.random_range(1..40usize);
            let m = WeylIndex::new(rng.random_range(-30..30), rng.random_range(-30..30));
            let n = WeylIndex::new(rng.random_range(-30..30), rng.random_range(-30..30));
            let lhs = weyl_operator(m, dim)
                .compose(&weyl_operator(n, dim))
                .unwrap();
            let rhs = weyl_operator(m + n, dim).scaled(composition_phase(m, n, dim));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn compose_matches_dense_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let m = WeylIndex::new(rng.random_range(-9..9), rng.random_range(-9..9));
            let n = WeylIndex::new(rng.random_range(-9..9), rng.random_range(-9..9));
            let (a, b) = (weyl_operator(m, 8), weyl_operator(n, 8));
            let prod = dense_of(&a.compose(&b).unwrap());
            assert!(max_diff(&prod, &matmul(&dense_of(&a), &dense_of(&b))) < 1e-12);
        }
        let a = random_monomial(&mut rng, 8);
        let b = random_monomial(&mut rng, 8);
        assert!(
            max_diff(
                &dense_of(&a.compose(&b).unwrap()),
                &matmul(&dense_of(&a), &dense_of(&b))
            ) < 1e-12
        );
    }

    #[test]
    fn compose_rejects_mismatch() {
        assert!(weyl_operator(WeylIndex::ZERO, 3)
            .compose(&weyl_operator(WeylIndex::ZERO, 4))
            .is_err());
    }

    #[test]
    fn adjoint_properties() {
        assert_eq!(
            weyl_operator(WeylIndex::new(1, 0), 4).adjoint(),
            weyl_operator(WeylIndex::new(-1, 0), 4)
        );
        assert!(MonomialOperator::identity(5).adjoint().is_identity());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_monomial(&mut rng, 9);
        assert!(a.adjoint().compose(&a).unwrap().is_identity());
        let d = dense_of(&a);
        let da = dense_of(&a.adjoint());
        for i in 0..9 {
            for j in 0..9 {
                assert!((da[i][j] - d[j][i].conj()).norm() < 1e-15);
            }
        }
        for n in WeylIndex::ball(3) {
            assert_eq!(weyl_operator(n, 6).adjoint(), weyl_operator(-n, 6));
        }
    }

    #[test]
    fn apply_matches_dense_and_preserves_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let psi = StateVector::random(16, &mut rng);
        assert_eq!(MonomialOperator::identity(16).apply(&psi).unwrap(), psi);
        let a = random_monomial(&mut rng, 16);
        let out = a.apply(&psi).unwrap();
        let d = dense_of(&a);
        for i in 0..16 {
            let want: Complex64 = (0..16).map(|j| d[i][j] * psi[j]).sum();
            assert!((out[i] - want).norm() < 1e-14);
        }
        assert!((out.norm_sq() - psi.norm_sq()).abs() < 1e-12);
        assert!(a.apply(&StateVector::ones(3)).is_err());
    }

    #[test]
    fn heisenberg_relation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let dim = rng.random_range(1..=16usize);
            let (a, b) = (rng.random_range(-20..20i64), rng.random_range(-20..20i64));
            let t1a = weyl_operator(WeylIndex::new(1, 0), dim);
            let t2b = weyl_operator(WeylIndex::new(0, 1), dim);
            let pow = |op: &MonomialOperator, k: i64| {
                let base = if k < 0 { op.adjoint() } else { op.clone() };
                (0..k.abs()).fold(MonomialOperator::identity(dim), |acc, _| {
                    acc.compose(&base).unwrap()
                })
            };
            let lhs = dense_of(&pow(&t1a, a).compose(&pow(&t2b, b)).unwrap());
            let rhs = dense_of(
                &pow(&t2b, b)
                    .compose(&pow(&t1a, a))
                    .unwrap()
                    .scaled(ExactPhase::e_n(a * b, dim as i64)),
            );
            assert!(max_diff(&lhs, &rhs) < 1e-12);
        }
    }

    #[test]
    fn fourier_conjugation() {
        for dim in [1usize, 2, 3, 8, 13, 16] {
            let t1 = weyl_operator(WeylIndex::new(1, 0), dim);
            let t2 = weyl_operator(WeylIndex::new(0, 1), dim);
            let t1_inv = t1.adjoint();
            // F t₁ F⁻¹ = t₂ and F t₂ F⁻¹ = t₁⁻¹
            let lhs1 = dense_apply_op(|v| dft(&t1.apply(&inverse_dft(v)).unwrap()), dim);
            assert!(max_diff(&lhs1, &dense_of(&t2)) < 1e-12);
            let lhs2 = dense_apply_op(|v| dft(&t2.apply(&inverse_dft(v)).unwrap()), dim);
            assert!(max_diff(&lhs2, &dense_of(&t1_inv)) < 1e-12);
            // the form without an inverse picks up the parity map
            let lit = dense_apply_op(|v| dft(&t1.apply(&dft(v)).unwrap()), dim);
            let t2_parity = dense_apply_op(|v| t2.apply(&v.parity()).unwrap(), dim);
            assert!(max_diff(&lit, &t2_parity) < 1e-12);
        }
    }

    fn check_basis(a: &MonomialOperator, basis: &EigenBasis, tol: f64) {
        assert_eq!(basis.len(), a.dim());
        assert!(basis.orthonormality_defect() < tol);
        assert!(basis.residual(|v| a.apply(v)).unwrap() < tol);
    }

    #[test]
    fn shift_eigenbasis_is_fourier() {
        let dim = 6;
        let b = eigenbasis_monomial(&weyl_operator(WeylIndex::new(1, 0), dim));
        check_basis(&weyl_operator(WeylIndex::new(1, 0), dim), &b, 1e-12);
        for (p, (v, lam)) in b.vectors.iter().zip(&b.eigenvalues).enumerate() {
            assert!((lam - ExactPhase::e_n(p as i64, dim as i64).to_complex()).norm() < 1e-14);
            let ch = StateVector::character(dim, p as i64);
            assert!((inner(v, &ch).unwrap().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn modulation_eigenbasis_is_position() {
        let dim = 5;
        let t2 = weyl_operator(WeylIndex::new(0, 1), dim);
        let b = eigenbasis_monomial(&t2);
        check_basis(&t2, &b, 1e-12);
        for (q, (v, lam)) in b.vectors.iter().zip(&b.eigenvalues).enumerate() {
            assert!((lam - ExactPhase::e_n(q as i64, dim as i64).to_complex()).norm() < 1e-14);
            assert!((v[q].norm() - (dim as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenvalues_sorted_by_angle() {
        let b = eigenbasis_monomial(&weyl_operator(WeylIndex::new(-17, 14), 60));
        let ex = b.exact.as_ref().unwrap();
        assert!(ex.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn completeness_of_monomial_eigenbasis() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for dim in [1usize, 2, 9, 30, 64, 128] {
            let n = WeylIndex::new(rng.random_range(-50..50), rng.random_range(-50..50));
            let a = weyl_operator(n, dim);
            let b = eigenbasis_monomial(&a);
            check_basis(&a, &b, 1e-10);
            // Σ_j |v_j⟩⟨v_j| / N = I, tested on random vectors
            for _ in 0..3 {
                let psi = StateVector::random(dim, &mut rng);
                let mut recon = StateVector::zeros(dim);
                for v in &b.vectors {
                    let coef = inner(&psi, v).unwrap();
                    for q in 0..dim {
                        recon[q] += coef * v[q];
                    }
                }
                assert!(recon.sub(&psi).unwrap().norm() < 1e-10);
            }
        }
    }

    #[test]
    fn random_monomials_diagonalize() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for dim in [3usize, 8, 17] {
            let a = random_monomial(&mut rng, dim);
            check_basis(&a, &eigenbasis_monomial(&a), 1e-10);
        }
    }

    #[test]
    fn joint_basis_cases() {
        let a = weyl_operator(WeylIndex::new(2, 3), 12);
        let single = eigenbasis_monomial(&a);
        let joint = joint_eigenbasis(&a, &a).unwrap();
        assert_eq!(single.exact, joint.exact);
        assert_eq!(joint.exact, joint.secondary);

        let dim = 10;
        let t1 = weyl_operator(WeylIndex::new(1, 0), dim);
        let t12 = weyl_operator(WeylIndex::new(2, 0), dim);
        let jb = joint_eigenbasis(&t1, &t12).unwrap();
        check_basis(&t1, &jb, 1e-12);
        for (v, mu) in jb.vectors.iter().zip(jb.secondary.as_ref().unwrap()) {
            let r = t12
                .apply(v)
                .unwrap()
                .sub(&v.scale(mu.to_complex()))
                .unwrap();
            assert!(r.norm() < 1e-12);
        }
    }

    #[test]
    fn joint_basis_of_commuting_weyl_pairs() {
        // ω(m,n) ≡ 0 mod N makes T(m), T(n) commute
        let cases = [
            (3usize, (0, 1), (-3, 4)),
            (27, (0, 3), (-9, 38)),
            (24, (2, 4), (3, 6)),
            (36, (0, 6), (-6, 7)),
        ];
        for (dim, m, n) in cases {
            let (m, n) = (WeylIndex::new(m.0, m.1), WeylIndex::new(n.0, n.1));
            assert_eq!(m.omega(n).rem_euclid(dim as i64), 0);
            let a = weyl_operator(m, dim);
            let b = weyl_operator(n, dim);
            let jb = joint_eigenbasis(&a, &b).unwrap();
            check_basis(&a, &jb, 1e-10);
            let mut sec = jb.clone();
            sec.eigenvalues = jb
                .secondary
                .as_ref()
                .unwrap()
                .iter()
                .map(|p| p.to_complex())
                .collect();
            assert!(sec.residual(|v| b.apply(v)).unwrap() < 1e-10);
        }
    }

    #[test]
    fn joint_basis_rejects_noncommuting() {
        let a = weyl_operator(WeylIndex::new(1, 0), 5);
        let b = weyl_operator(WeylIndex::new(0, 1), 5);
        assert!(matches!(
            joint_eigenbasis(&a, &b),
            Err(Error::NotCommuting(_))
        ));
    }

    #[test]
    fn expectation_matches_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for dim in [1usize, 4, 11] {
            let table = RootTable::new(dim);
            let psi = StateVector::random(dim, &mut rng);
            for n in WeylIndex::ball(13) {
                let fast = weyl_expectation(n, psi.entries(), &table);
                let slow = inner(&weyl_operator(n, dim).apply(&psi).unwrap(), &psi).unwrap();
                assert!((fast - slow).norm() < 1e-13);
            }
        }
    }

    proptest! {
        #[test]
        fn composition_law_holds(dim in 1usize..64, a in -40i64..40, b in -40i64..40, x in -40i64..40, y in -40i64..40) {
            let (m, n) = (WeylIndex::new(a, b), WeylIndex::new(x, y));
            let lhs = weyl_operator(m, dim).compose(&weyl_operator(n, dim)).unwrap();
            prop_assert_eq!(lhs, weyl_operator(m + n, dim).scaled(composition_phase(m, n, dim)));
        }
    }
}

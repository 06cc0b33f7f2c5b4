use qtorus_bench::{kronecker_fixture, smooth_fixture};

#[test]
fn fixtures_are_consistent() {
    let u = kronecker_fixture(64);
    let basis = u.eigenbasis();
    assert_eq!(basis.len(), 64);
    assert!(basis.orthonormality_defect() < 1e-12);
    let f = smooth_fixture();
    assert_eq!(f.radius, 12);
    assert!(f.tail_bound > 0.0 && f.tail_bound < 1e-3);
}

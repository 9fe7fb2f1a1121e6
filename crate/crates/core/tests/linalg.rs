use proptest::prelude::*;
use timeopt_core::fixtures;
use timeopt_core::linalg::{eigenvalues, kalman_decompose, krylov_chain, mat_exp, numerical_rank, Matrix};
use timeopt_core::structure::{self, StructureFacts};

fn close(a: &Matrix, b: &Matrix, tol: f64) -> bool {
    a.sub(b).max_abs() <= tol * b.max_abs().max(1.0)
}

fn sorted_spectrum(m: &Matrix) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = eigenvalues(m).unwrap().eigenvalues.iter().map(|l| (l.re, l.im)).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    v
}

#[test]
fn exponential_of_the_two_frequency_rotation() {
    let a = fixtures::a4(fixtures::A4_DEFAULT_XI).unwrap().a;
    for t in [0.3f64, 1.7, 5.0, 12.5] {
        let (c1, s1, c2, s2) = (t.cos(), t.sin(), (2.0 * t).cos(), (2.0 * t).sin());
        let expect = Matrix::from_rows(&[&[c1, s1, 0.0, 0.0], &[-s1, c1, 0.0, 0.0], &[0.0, 0.0, c2, s2], &[0.0, 0.0, -s2, c2]]);
        assert!(close(&mat_exp(&a, t).unwrap(), &expect, 1e-12), "t = {t}");
    }
}

#[test]
fn exponential_at_zero_time() {
    let m = Matrix::from_rows(&[&[0.3, -2.0, 1.0], &[4.0, 0.0, 0.5], &[-1.0, 1.0, 2.0]]);
    assert_eq!(mat_exp(&m, 0.0).unwrap(), Matrix::identity(3));
}

#[test]
fn fixture_spectra() {
    let s = sorted_spectrum(&fixtures::a2().a);
    assert_eq!(s.len(), 2);
    assert!((s[0].0).abs() < 1e-12 && (s[0].1 + 1.0).abs() < 1e-12);
    assert!((s[1].0).abs() < 1e-12 && (s[1].1 - 1.0).abs() < 1e-12);

    let s = sorted_spectrum(&fixtures::a3().a);
    let expect = [(-1.0, 0.0), (0.0, -1.0), (0.0, 1.0)];
    for (got, want) in s.iter().zip(expect) {
        assert!((got.0 - want.0).abs() < 1e-12 && (got.1 - want.1).abs() < 1e-12, "{got:?} vs {want:?}");
    }

    let s = sorted_spectrum(&Matrix::identity(3));
    assert!(s.iter().all(|l| (l.0 - 1.0).abs() < 1e-14 && l.1 == 0.0));
}

#[test]
fn rotation_pair_is_controllable_in_three_steps() {
    let f = fixtures::a3();
    let k = Matrix::hstack(&[&f.b, &f.a.matmul(&f.b), &f.a.matmul(&f.a).matmul(&f.b)]);
    assert_eq!(numerical_rank(&k, 1e-10).rank, 3);
    let kf = kalman_decompose(&f.a, &f.b, 1e-10);
    assert_eq!(kf.k, 3);
    assert!(kf.a3.is_empty());
}

#[test]
fn diagonal_pair_with_one_input() {
    let a = Matrix::diag(&[1.0, 2.0]);
    let b = Matrix::from_rows(&[&[1.0], &[0.0]]);
    let kf = kalman_decompose(&a, &b, 1e-10);
    assert_eq!(kf.k, 1);
    assert!((kf.a1[(0, 0)] - 1.0).abs() < 1e-14);
    assert!((kf.a3[(0, 0)] - 2.0).abs() < 1e-14);
}

#[test]
fn structural_constants_of_the_fixtures() {
    let pi = std::f64::consts::PI;
    let a2 = fixtures::a2();
    assert!((structure::spectral_gap(&a2.a, 1e-9).unwrap() - pi).abs() < 1e-9);
    assert_eq!(structure::q_ab(&a2.a, &a2.b, 1e-10), 2);

    let a4 = fixtures::a4(fixtures::A4_DEFAULT_XI).unwrap();
    assert!((structure::spectral_gap(&a4.a, 1e-9).unwrap() - pi / 2.0).abs() < 1e-9);

    for n in 1..=4 {
        let (a, b) = (Matrix::zeros(n, n), Matrix::identity(n));
        assert_eq!(structure::q_ab(&a, &b, 1e-10), 1);
        assert_eq!(structure::q_tilde_ab(&a, &b, 1e-10), 1);
        assert_eq!(structure::spectral_gap(&a, 1e-9).unwrap(), f64::INFINITY);
        assert!(structure::admissibility_for_all_x0(&a, &b, 1e-10, 1e-9).unwrap());
    }

    let unstable = Matrix::from_rows(&[&[1.0]]);
    assert!(!structure::admissibility_for_all_x0(&unstable, &unstable, 1e-10, 1e-9).unwrap());
}

// The single-input example with a double zero: its Krylov vectors all have
// equal first and third entries, so the pair is not controllable. The new
// direction space at depth two is still a line.
#[test]
fn single_input_chain_has_a_one_dimensional_second_level() {
    let f = fixtures::proper_subset().unwrap();
    let chain = krylov_chain(&f.a, &f.b, 1e-10);
    let dims: Vec<usize> = chain.iter().map(|h| h.cols()).collect();
    assert_eq!(dims[..3], [1, 1, 1]);
    assert_eq!(dims.iter().sum::<usize>(), 3);
    let facts = StructureFacts::compute(&f.a, &f.b, 1e-10, 1e-9).unwrap();
    assert_eq!(facts.h[2].cols(), 1);
    assert_eq!(facts.controllability_rank, 3);
    assert_eq!(facts.q_ab, facts.q_tilde_ab);
    for v in krylov_vectors(&f.a, &f.b, 4) {
        assert!((v[0] - v[2]).abs() < 1e-12, "{v:?}");
    }
}

fn krylov_vectors(a: &Matrix, b: &Matrix, count: usize) -> Vec<Vec<f64>> {
    let mut v = b.column(0);
    let mut out = Vec::new();
    for _ in 0..count {
        out.push(v.clone());
        v = a.mul_vec(&v);
    }
    out
}

fn matrix(n: usize, range: f64) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-range..range, n * n).prop_map(move |d| Matrix::new(n, n, d).unwrap())
}

fn pair() -> impl Strategy<Value = (Matrix, Matrix)> {
    (1usize..=4, 1usize..=3).prop_flat_map(|(n, m)| {
        let m = m.min(n);
        (matrix(n, 2.0), prop::collection::vec(-1.0..1.0f64, n * m).prop_map(move |d| Matrix::new(n, m, d).unwrap()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exponential_semigroup(m in (1usize..=4).prop_flat_map(|n| matrix(n, 1.5)), s in 0.0..2.0f64, t in 0.0..2.0f64) {
        let lhs = mat_exp(&m, s + t).unwrap();
        let rhs = mat_exp(&m, s).unwrap().matmul(&mat_exp(&m, t).unwrap());
        prop_assert!(close(&lhs, &rhs, 1e-11));
    }

    #[test]
    fn exponential_inverse(m in (1usize..=4).prop_flat_map(|n| matrix(n, 1.5)), t in 0.0..3.0f64) {
        let prod = mat_exp(&m, t).unwrap().matmul(&mat_exp(&m, -t).unwrap());
        prop_assert!(close(&prod, &Matrix::identity(m.rows()), 1e-10));
    }

    #[test]
    fn real_spectrum_is_closed_under_conjugation(m in (1usize..=5).prop_flat_map(|n| matrix(n, 3.0))) {
        let spec = eigenvalues(&m).unwrap();
        prop_assert_eq!(spec.len(), m.rows());
        let scale = m.norm_fro().max(1.0);
        for l in &spec.eigenvalues {
            let found = spec.eigenvalues.iter().any(|c| (c.re - l.re).abs() < 1e-8 * scale && (c.im + l.im).abs() < 1e-8 * scale);
            prop_assert!(found, "{:?} lacks the conjugate of {:?}", spec.eigenvalues, l);
        }
        let trace: f64 = (0..m.rows()).map(|i| m[(i, i)]).sum();
        let sum: f64 = spec.eigenvalues.iter().map(|l| l.re).sum();
        prop_assert!((trace - sum).abs() < 1e-9 * scale);
    }

    #[test]
    fn kalman_form_reassembles((a, b) in pair()) {
        let kf = kalman_decompose(&a, &b, 1e-10);
        let p = &kf.p;
        prop_assert!(close(&p.matmul(&p.transpose()), &Matrix::identity(a.rows()), 1e-12));
        let back = p.transpose().matmul(&kf.block_form()).matmul(p);
        prop_assert!(close(&back, &a, 1e-9));
        let pb = p.matmul(&b);
        for i in kf.k..a.rows() {
            for j in 0..b.cols() {
                prop_assert!(pb[(i, j)].abs() < 1e-9, "input leaks into the uncontrollable block");
            }
        }
    }
}

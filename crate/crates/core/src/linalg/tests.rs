use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_matrix(rng: &mut impl Rng, r: usize, k: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(r, k, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn random_hpd(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    let a = random_matrix(rng, n, n);
    let mut g = &a * &a.adjoint();
    for i in 0..n {
        g[(i, i)] += c(0.5, 0.0);
    }
    g
}

fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).max_abs()
}

fn steer(n: usize, cos: f64) -> Vec<C64> {
    (0..n)
        .map(|k| C64::from_polar(1.0, std::f64::consts::PI * k as f64 * cos))
        .collect()
}

#[test]
fn kron_with_scalar_identity_is_identity_map() {
    let b = ComplexMatrix::from_real_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
    assert_eq!(kron(&ComplexMatrix::identity(1), &b), b);
}

#[test]
fn kron_scalar_scaling() {
    let a = ComplexMatrix::from_real_rows(&[vec![2.0]]);
    let b = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0]]);
    assert_eq!(kron(&a, &b), ComplexMatrix::from_real_rows(&[vec![0.0, 2.0]]));
}

#[test]
fn kron_of_steering_vectors() {
    let a = ComplexMatrix::from_real_rows(&[vec![1.0], vec![-1.0]]);
    let b = ComplexMatrix::from_real_rows(&[vec![1.0], vec![1.0]]);
    let k = kron(&a, &b);
    let want = ComplexMatrix::from_real_rows(&[vec![1.0], vec![1.0], vec![-1.0], vec![-1.0]]);
    assert!(max_diff(&k, &want) < 1e-15);
}

#[test]
fn khatri_rao_of_identities() {
    let k = khatri_rao(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2)).unwrap();
    assert_eq!(k.shape(), (4, 2));
    assert_eq!(k.column(0), vec![c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]);
    assert_eq!(k.column(1), vec![c(0., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]);
}

#[test]
fn khatri_rao_single_column_is_kron() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_matrix(&mut rng, 3, 1);
    let b = random_matrix(&mut rng, 4, 1);
    assert!(max_diff(&khatri_rao(&a, &b).unwrap(), &kron(&a, &b)) < 1e-15);
}

#[test]
fn khatri_rao_rejects_mismatch() {
    let err = khatri_rao(&ComplexMatrix::zeros(2, 2), &ComplexMatrix::zeros(2, 3));
    assert!(matches!(err, Err(LinalgError::DimensionMismatch(_))));
}

#[test]
fn vec_identity_for_triple_products() {
    // vec(A X Bᵀ) = (B ⊗ A) vec(X)
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let a = random_matrix(&mut rng, 3, 4);
        let x = random_matrix(&mut rng, 4, 2);
        let b = random_matrix(&mut rng, 5, 2);
        let lhs = (&(&a * &x) * &b.transpose()).vec();
        let rhs = kron(&b, &a).matvec(&x.vec());
        for (l, r) in lhs.iter().zip(&rhs) {
            assert!((l - r).norm() < 1e-12);
        }
    }
}

#[test]
fn eig_of_diagonal() {
    let a = ComplexMatrix::from_real_diag(&[1.0, 3.0]);
    let (l, v) = hermitian_eig(&a).unwrap();
    assert!((l[0] - 3.0).abs() < 1e-14 && (l[1] - 1.0).abs() < 1e-14);
    assert!((v[(1, 0)].norm() - 1.0).abs() < 1e-14);
    assert!((v[(0, 1)].norm() - 1.0).abs() < 1e-14);
}

#[test]
fn eig_of_rank_one() {
    let a = steer(6, 0.37);
    let col = ComplexMatrix::column_vector(&a);
    let m = (&col * &col.adjoint()).scale_real(2.5);
    let l = hermitian_eigenvalues(&m).unwrap();
    assert!((l[0] - 2.5 * 6.0).abs() < 1e-12);
    for x in &l[1..] {
        assert!(x.abs() < 1e-12);
    }
}

#[test]
fn eig_reconstructs_random_hermitian() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [1, 2, 5, 17, 33] {
        let a = random_matrix(&mut rng, n, n).hermitian_part();
        let (l, v) = hermitian_eig(&a).unwrap();
        let rec = &(&v * &ComplexMatrix::from_real_diag(&l)) * &v.adjoint();
        let scale = l.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(max_diff(&rec, &a) <= 1e-10 * scale.max(1e-300));
        let gram = &v.adjoint() * &v;
        assert!(max_diff(&gram, &ComplexMatrix::identity(n)) < 1e-12);
        assert!(l.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn eig_rejects_non_hermitian() {
    let a = ComplexMatrix::from_real_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]);
    assert_eq!(hermitian_eig(&a).unwrap_err(), LinalgError::NotHermitian);
}

#[test]
fn gram_eigenvalues_nonnegative() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let a = random_matrix(&mut rng, 8, 3);
        let g = &a * &a.adjoint();
        let tr = g.trace().re;
        for x in hermitian_eigenvalues(&g).unwrap() {
            assert!(x >= -1e-10 * tr);
        }
    }
}

#[test]
fn polynomial_roots_small_cases() {
    let mut r = polynomial_roots(&[c(1., 0.), c(0., 0.), c(-1., 0.)]).unwrap();
    r.sort_by(|a, b| a.re.total_cmp(&b.re));
    assert!((r[0] - c(-1., 0.)).norm() < 1e-12 && (r[1] - c(1., 0.)).norm() < 1e-12);
    let z = c(0.3, -0.7);
    let r = polynomial_roots(&[c(1., 0.), -z]).unwrap();
    assert!((r[0] - z).norm() < 1e-14);
    assert_eq!(polynomial_roots(&[c(0., 0.)]).unwrap_err(), LinalgError::ZeroPolynomial);
}

fn poly_from_roots(roots: &[C64]) -> Vec<C64> {
    let mut p = vec![c(1., 0.)];
    for &r in roots {
        let mut q = vec![c(0., 0.); p.len() + 1];
        for (i, &a) in p.iter().enumerate() {
            q[i] += a;
            q[i + 1] -= a * r;
        }
        p = q;
    }
    p
}

#[test]
fn polynomial_roots_recovers_planted_roots() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let truth: Vec<C64> = (0..6)
            .map(|_| C64::from_polar(rng.random_range(0.3..1.5), rng.random_range(0.0..6.28)))
            .collect();
        let found = polynomial_roots(&poly_from_roots(&truth)).unwrap();
        assert_eq!(found.len(), 6);
        for t in &truth {
            let best = found.iter().map(|f| (f - t).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-8, "root {t} missed by {best}");
        }
    }
}

#[test]
fn polynomial_roots_have_small_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let p: Vec<C64> = (0..25).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let norm = vec_norm(&p);
        for r in polynomial_roots(&p).unwrap() {
            let v = p.iter().fold(c(0., 0.), |acc, &x| acc * r + x);
            let scale = norm * r.norm().max(1.0).powi(24);
            assert!(v.norm() <= 1e-8 * scale);
        }
    }
}

#[test]
fn conjugate_reciprocal_polynomial_roots_pair_up() {
    // p(z) = Σ_k d_k z^{k+n}, d_{-k} = conj(d_k): roots come in (z, 1/z̄) pairs.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 6;
    let half: Vec<C64> = (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let mut coeffs = vec![c(0., 0.); 2 * n - 1];
    for k in 0..n {
        coeffs[n - 1 + k] = half[k];
        coeffs[n - 1 - k] = half[k].conj();
    }
    coeffs[n - 1] = c(half[0].re + 3.0, 0.0);
    let roots = polynomial_roots(&coeffs).unwrap();
    for r in &roots {
        let mirror = C64::new(1.0, 0.0) / r.conj();
        let best = roots.iter().map(|q| (q - mirror).norm()).fold(f64::INFINITY, f64::min);
        assert!(best < 1e-8);
    }
}

#[test]
fn solve_hermitian_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let b = random_matrix(&mut rng, 4, 3);
    assert!(max_diff(&solve_hermitian(&ComplexMatrix::identity(4), &b).unwrap(), &b) < 1e-15);
    let two = ComplexMatrix::identity(3).scale_real(2.0);
    let x = solve_hermitian(&two, &ComplexMatrix::identity(3)).unwrap();
    assert!(max_diff(&x, &ComplexMatrix::identity(3).scale_real(0.5)) < 1e-15);
    for n in [2, 7, 20] {
        let a = random_hpd(&mut rng, n);
        let b = random_matrix(&mut rng, n, 2);
        let x = solve_hermitian(&a, &b).unwrap();
        assert!((&(&a * &x) - &b).frobenius_norm() <= 1e-10 * b.frobenius_norm());
    }
    let indefinite = ComplexMatrix::from_real_diag(&[1.0, -1.0]);
    assert_eq!(
        solve_hermitian(&indefinite, &ComplexMatrix::identity(2)).unwrap_err(),
        LinalgError::NotPositiveDefinite
    );
}

#[test]
fn svd_reconstructs() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let a = random_matrix(&mut rng, 6, 6);
    let (u, s, v) = svd(&a).unwrap();
    let rec = &(&u * &ComplexMatrix::from_real_diag(&s)) * &v.adjoint();
    assert!(max_diff(&rec, &a) < 1e-12);
    assert!(s.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn lower_triangular_inverse_is_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let l = cholesky(&random_hpd(&mut rng, 9)).unwrap();
    let prod = &l * &lower_triangular_inverse(&l);
    assert!(max_diff(&prod, &ComplexMatrix::identity(9)) < 1e-12);
}

#[test]
fn real_cholesky_solves() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [1, 3, 10, 41] {
        let g: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = (0..n).map(|k| g[i * n + k] * g[j * n + k]).sum::<f64>();
            }
            a[i * n + i] += 1.0;
        }
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ch = RealCholesky::factor(&a, n).unwrap();
        let mut x = b.clone();
        ch.solve_in_place(&mut x);
        for i in 0..n {
            let r: f64 = (0..n).map(|j| a[i * n + j] * x[j]).sum::<f64>() - b[i];
            assert!(r.abs() < 1e-10);
        }
    }
    assert!(RealCholesky::factor(&[1.0, 2.0, 2.0, 1.0], 2).is_err());
}

fn arb_matrix(r: usize, k: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), r * k)
        .prop_map(move |v| ComplexMatrix::new(r, k, v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap())
}

proptest! {
    #[test]
    fn kron_is_associative(a in arb_matrix(2, 2), b in arb_matrix(2, 1), m in arb_matrix(1, 3)) {
        let l = kron(&kron(&a, &b), &m);
        let r = kron(&a, &kron(&b, &m));
        prop_assert!(max_diff(&l, &r) <= 1e-12);
    }

    #[test]
    fn kron_is_bilinear(a in arb_matrix(2, 3), a2 in arb_matrix(2, 3), b in arb_matrix(3, 2), s in -3.0f64..3.0) {
        let sum = &a + &a2.scale_real(s);
        let l = kron(&sum, &b);
        let r = &kron(&a, &b) + &kron(&a2, &b).scale_real(s);
        prop_assert!(max_diff(&l, &r) <= 1e-12);
    }

    #[test]
    fn khatri_rao_columns_are_krons(a in arb_matrix(3, 2), b in arb_matrix(2, 2)) {
        let k = khatri_rao(&a, &b).unwrap();
        for j in 0..2 {
            prop_assert_eq!(k.column(j), kron_vec(&a.column(j), &b.column(j)));
        }
    }
}

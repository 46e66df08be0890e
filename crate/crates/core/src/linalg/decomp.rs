use nalgebra::linalg::{Schur, SymmetricEigen, SVD};
use nalgebra::DMatrix;

use super::{ComplexMatrix, LinalgError, C64};

/// Relative Hermitian-ness tolerance accepted by the decompositions.
pub const HERMITIAN_TOL: f64 = 1e-10;

const EIG_MAX_ITERS: usize = 10_000;

fn check_hermitian(a: &ComplexMatrix) -> Result<(), LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_hermitian(HERMITIAN_TOL) {
        return Err(LinalgError::NotHermitian);
    }
    Ok(())
}

fn symmetric_eigen(a: &ComplexMatrix) -> Result<SymmetricEigen<C64, nalgebra::Dyn>, LinalgError> {
    check_hermitian(a)?;
    let m = a.hermitian_part().to_nalgebra();
    SymmetricEigen::try_new(m, f64::EPSILON, EIG_MAX_ITERS).ok_or(LinalgError::NoConvergence)
}

/// Eigen-decomposition of a Hermitian matrix.
///
/// Eigenvalues are returned in descending order with matching orthonormal
/// eigenvector columns.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix), LinalgError> {
    let n = a.rows();
    if n == 0 {
        return Ok((Vec::new(), ComplexMatrix::zeros(0, 0)));
    }
    let eig = symmetric_eigen(a)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Eigenvalues of a Hermitian matrix in descending order.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>, LinalgError> {
    if a.rows() == 0 {
        return Ok(Vec::new());
    }
    check_hermitian(a)?;
    let m = a.hermitian_part().to_nalgebra();
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(LinalgError::NoConvergence);
    }
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᴴ`.
pub fn cholesky(a: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    check_hermitian(a)?;
    let n = a.rows();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(LinalgError::NotPositiveDefinite);
        }
        let djj = d.sqrt();
        l[(j, j)] = C64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `A X = B` for Hermitian positive definite `A`.
pub fn solve_hermitian(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    if a.rows() != b.rows() {
        return Err(LinalgError::DimensionMismatch(format!(
            "A has {} rows, B has {}",
            a.rows(),
            b.rows()
        )));
    }
    let l = cholesky(a)?;
    let n = a.rows();
    let mut x = b.clone();
    for c in 0..b.cols() {
        // forward: L y = b
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)].re;
        }
        // backward: Lᴴ x = y
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in i + 1..n {
                s -= l[(k, i)].conj() * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)].re;
        }
    }
    Ok(x)
}

/// Inverse of a Hermitian positive definite matrix, symmetrized.
pub fn inverse_hermitian_pd(a: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    let inv = solve_hermitian(a, &ComplexMatrix::identity(a.rows()))?;
    Ok(inv.hermitian_part())
}

/// Inverse of a lower-triangular matrix with nonzero diagonal.
pub fn lower_triangular_inverse(l: &ComplexMatrix) -> ComplexMatrix {
    let n = l.rows();
    let mut inv = ComplexMatrix::zeros(n, n);
    for c in 0..n {
        inv[(c, c)] = C64::new(1.0, 0.0) / l[(c, c)];
        for i in c + 1..n {
            let mut s = C64::new(0.0, 0.0);
            for k in c..i {
                s -= l[(i, k)] * inv[(k, c)];
            }
            inv[(i, c)] = s / l[(i, i)];
        }
    }
    inv
}

/// Thin SVD `A = U diag(σ) Vᴴ` with singular values in descending order.
pub fn svd(a: &ComplexMatrix) -> Result<(ComplexMatrix, Vec<f64>, ComplexMatrix), LinalgError> {
    let m: DMatrix<C64> = a.to_nalgebra();
    let dec = SVD::try_new(m, true, true, f64::EPSILON, EIG_MAX_ITERS).ok_or(LinalgError::NoConvergence)?;
    let u = dec.u.ok_or(LinalgError::NoConvergence)?;
    let vt = dec.v_t.ok_or(LinalgError::NoConvergence)?;
    let k = dec.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| dec.singular_values[j].total_cmp(&dec.singular_values[i]));
    let sv = order.iter().map(|&i| dec.singular_values[i]).collect();
    let uu = ComplexMatrix::from_fn(u.nrows(), k, |r, c| u[(r, order[c])]);
    let vv = ComplexMatrix::from_fn(vt.ncols(), k, |r, c| vt[(order[c], r)].conj());
    Ok((uu, sv, vv))
}

fn horner(coeffs: &[C64], z: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &c in coeffs {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Roots of `c[0] zⁿ + c[1] zⁿ⁻¹ + … + c[n]` (highest degree first).
///
/// Leading zero coefficients are dropped. Roots come from the eigenvalues of
/// the companion matrix and are then polished by a few Newton steps.
pub fn polynomial_roots(coeffs: &[C64]) -> Result<Vec<C64>, LinalgError> {
    let start = coeffs
        .iter()
        .position(|c| c.norm() > 0.0)
        .ok_or(LinalgError::ZeroPolynomial)?;
    let p = &coeffs[start..];
    let n = p.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = p[0];
    let monic: Vec<C64> = p.iter().map(|&c| c / lead).collect();
    let mut comp = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        comp[(0, j)] = -monic[j + 1];
    }
    for i in 1..n {
        comp[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    let schur = Schur::try_new(comp, f64::EPSILON, EIG_MAX_ITERS).ok_or(LinalgError::NoConvergence)?;
    let eig = schur.eigenvalues().ok_or(LinalgError::NoConvergence)?;
    let mut roots: Vec<C64> = eig.iter().copied().collect();
    for r in roots.iter_mut() {
        for _ in 0..4 {
            let (v, dv) = horner(&monic, *r);
            if dv.norm() == 0.0 || v.norm() == 0.0 {
                break;
            }
            let step = v / dv;
            let cand = *r - step;
            if horner(&monic, cand).0.norm() < v.norm() {
                *r = cand;
            } else {
                break;
            }
        }
    }
    Ok(roots)
}

/// Cholesky factorization of a dense real symmetric positive definite matrix.
///
/// The factor is stored row-major so that every inner product runs over
/// contiguous memory.
#[derive(Debug, Clone)]
pub struct RealCholesky {
    n: usize,
    l: Vec<f64>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

impl RealCholesky {
    /// Factors the row-major `n × n` matrix `a`; only the lower triangle is read.
    pub fn factor(a: &[f64], n: usize) -> Result<Self, LinalgError> {
        if a.len() != n * n {
            return Err(LinalgError::DimensionMismatch(format!(
                "{} entries for a {n}x{n} matrix",
                a.len()
            )));
        }
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let rowj = &mut l[j * n..(j + 1) * n];
            let d = a[j * n + j] - dot(&rowj[..j], &rowj[..j]);
            if !(d > 0.0) || !d.is_finite() {
                return Err(LinalgError::NotPositiveDefinite);
            }
            rowj[j] = d.sqrt();
            let djj = rowj[j];
            for i in j + 1..n {
                let (upper, lower) = l.split_at_mut(i * n);
                let rj = &upper[j * n..j * n + j];
                let ri = &mut lower[..n];
                let s = a[i * n + j] - dot(&ri[..j], rj);
                ri[j] = s / djj;
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n, "rhs length mismatch");
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            b[i] = (b[i] - dot(row, &b[..i])) / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let bi = b[i] / self.l[i * n + i];
            b[i] = bi;
            let row = &self.l[i * n..i * n + i];
            for (bk, &lk) in b[..i].iter_mut().zip(row) {
                *bk -= lk * bi;
            }
        }
    }
}

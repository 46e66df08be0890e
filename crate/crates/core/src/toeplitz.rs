//! Multi-level Toeplitz matrices, their adjoint, PSD clean-up and 1-level
//! Vandermonde decomposition by root-MUSIC.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{hermitian_eig, inner, polynomial_roots, ComplexMatrix, LinalgError, RealCholesky, C64};

/// Default relative eigenvalue threshold for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ToeplitzError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix is full rank ({0}); no Vandermonde decomposition")]
    FullRank(usize),
    #[error("recovered weight {0} is negative beyond tolerance")]
    NegativeWeight(f64),
    #[error("eigenvalue {0} is below the PSD floor")]
    NotPsd(f64),
    #[error("matrix deviates from Toeplitz structure by {0}")]
    NotToeplitz(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Generating tensor of a multi-level Toeplitz matrix.
///
/// `data` has shape `(2N₁−1) × … × (2N_D−1)` flattened row-major. The realized
/// matrix has entry `M[(i₁…i_D),(j₁…j_D)] = data[N₁−1+j₁−i₁, …, N_D−1+j_D−i_D]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLevelToeplitzGenerator {
    dims: Vec<usize>,
    data: Vec<C64>,
}

fn generator_len(dims: &[usize]) -> usize {
    dims.iter().map(|&n| 2 * n - 1).product()
}

impl MultiLevelToeplitzGenerator {
    pub fn new(dims: Vec<usize>, data: Vec<C64>) -> Result<Self, ToeplitzError> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(ToeplitzError::ShapeMismatch(format!("invalid level sizes {dims:?}")));
        }
        let want = generator_len(&dims);
        if data.len() != want {
            return Err(ToeplitzError::ShapeMismatch(format!(
                "levels {dims:?} need {want} generator entries, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self, ToeplitzError> {
        let n = if dims.is_empty() || dims.contains(&0) { 0 } else { generator_len(&dims) };
        Self::new(dims, vec![C64::new(0.0, 0.0); n])
    }

    /// Builds a Hermitian generator from its real parametrization (see [`real_param_count`]).
    pub fn from_real_params(dims: Vec<usize>, params: &[f64]) -> Result<Self, ToeplitzError> {
        let g = Self::zeros(dims)?;
        let total = g.data.len();
        if params.len() != total {
            return Err(ToeplitzError::ShapeMismatch(format!(
                "expected {total} real parameters, got {}",
                params.len()
            )));
        }
        let c = g.center();
        let mut data = g.data;
        data[c] = C64::new(params[0], 0.0);
        for k in c + 1..total {
            let z = C64::new(params[2 * (k - c) - 1], params[2 * (k - c)]);
            data[k] = z;
            data[total - 1 - k] = z.conj();
        }
        Self::new(g.dims, data)
    }

    /// Inverse of [`Self::from_real_params`] applied to the Hermitian part of the generator.
    pub fn to_real_params(&self) -> Vec<f64> {
        let h = self.hermitian_symmetrized();
        let c = h.center();
        let mut out = vec![h.data[c].re];
        for k in c + 1..h.data.len() {
            out.push(h.data[k].re);
            out.push(h.data[k].im);
        }
        out
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    /// Side length `∏ Nᵢ` of the realized matrix.
    pub fn size(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn center(&self) -> usize {
        (self.data.len() - 1) / 2
    }

    /// Flat index of the entry reflected about the center in every level.
    pub fn mirror(&self, k: usize) -> usize {
        self.data.len() - 1 - k
    }

    /// Multi-index value at the given per-level offsets `N_d − 1 + δ_d`.
    pub fn get(&self, idx: &[usize]) -> C64 {
        let mut flat = 0;
        for (&i, &n) in idx.iter().zip(&self.dims) {
            flat = flat * (2 * n - 1) + i;
        }
        self.data[flat]
    }

    pub fn is_conjugate_symmetric(&self, tol: f64) -> bool {
        (0..self.data.len()).all(|k| (self.data[k] - self.data[self.mirror(k)].conj()).norm() <= tol)
    }

    /// `(g + mirror(conj g))/2`, whose realization is the Hermitian part.
    pub fn hermitian_symmetrized(&self) -> Self {
        let data = (0..self.data.len())
            .map(|k| (self.data[k] + self.data[self.mirror(k)].conj()) * 0.5)
            .collect();
        Self {
            dims: self.dims.clone(),
            data,
        }
    }

    pub fn scale(&self, a: C64) -> Self {
        Self {
            dims: self.dims.clone(),
            data: self.data.iter().map(|&z| z * a).collect(),
        }
    }

    pub fn realize(&self) -> ComplexMatrix {
        let map = index_map(&self.dims);
        let n = self.size();
        let mut m = ComplexMatrix::zeros(n, n);
        for (slot, &g) in m.data_mut().iter_mut().zip(&map) {
            *slot = self.data[g];
        }
        m
    }
}

/// Number of real parameters of a Hermitian generator, `∏(2Nᵢ−1)`.
pub fn real_param_count(dims: &[usize]) -> usize {
    generator_len(dims)
}

/// Generator index of every realized-matrix entry, row-major.
pub fn index_map(dims: &[usize]) -> Vec<usize> {
    let n: usize = dims.iter().product();
    let mut multi = vec![vec![0usize; dims.len()]; n];
    for (i, m) in multi.iter_mut().enumerate() {
        let mut rest = i;
        for d in (0..dims.len()).rev() {
            m[d] = rest % dims[d];
            rest /= dims[d];
        }
    }
    let mut out = Vec::with_capacity(n * n);
    for mi in &multi {
        for mj in &multi {
            let mut flat = 0;
            for d in 0..dims.len() {
                flat = flat * (2 * dims[d] - 1) + (dims[d] - 1 + mj[d] - mi[d]);
            }
            out.push(flat);
        }
    }
    out
}

/// One nonzero entry of a sparse Hermitian basis matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisEntry {
    pub row: usize,
    pub col: usize,
    pub value: C64,
}

/// Sparse realization of every real parameter: `realize(from_real_params(p)) = Σ p_v B_v`.
pub fn real_param_basis(dims: &[usize]) -> Vec<Vec<BasisEntry>> {
    let total = generator_len(dims);
    let c = (total - 1) / 2;
    let n: usize = dims.iter().product();
    let map = index_map(dims);
    let mut basis = vec![Vec::new(); total];
    for (pos, &g) in map.iter().enumerate() {
        let (row, col) = (pos / n, pos % n);
        if g == c {
            basis[0].push(BasisEntry {
                row,
                col,
                value: C64::new(1.0, 0.0),
            });
        } else {
            let (k, sign) = if g > c { (g, 1.0) } else { (total - 1 - g, -1.0) };
            let re = 2 * (k - c) - 1;
            basis[re].push(BasisEntry {
                row,
                col,
                value: C64::new(1.0, 0.0),
            });
            basis[re + 1].push(BasisEntry {
                row,
                col,
                value: C64::new(0.0, sign),
            });
        }
    }
    basis
}

/// Adjoint of [`MultiLevelToeplitzGenerator::realize`] under `Re tr(Aᴴ B)`:
/// sums `M` along each multi-level diagonal.
pub fn adjoint(m: &ComplexMatrix, dims: &[usize]) -> Result<MultiLevelToeplitzGenerator, ToeplitzError> {
    let n: usize = dims.iter().product();
    if dims.is_empty() || m.shape() != (n, n) {
        return Err(ToeplitzError::ShapeMismatch(format!(
            "{}x{} matrix for levels {dims:?}",
            m.rows(),
            m.cols()
        )));
    }
    let mut g = MultiLevelToeplitzGenerator::zeros(dims.to_vec())?;
    for (&v, &k) in m.data().iter().zip(&index_map(dims)) {
        g.data[k] += v;
    }
    Ok(g)
}

/// Clips negative eigenvalues of a Hermitian matrix to zero.
///
/// Fails when an eigenvalue lies below `−floor_tol·λ_max`.
pub fn psd_floor(m: &ComplexMatrix, floor_tol: f64) -> Result<ComplexMatrix, ToeplitzError> {
    let (vals, vecs) = hermitian_eig(m)?;
    let lmax = vals.first().copied().unwrap_or(0.0).max(0.0);
    let lmin = vals.last().copied().unwrap_or(0.0);
    if lmin >= 0.0 {
        return Ok(m.clone());
    }
    if lmin < -floor_tol * lmax {
        return Err(ToeplitzError::NotPsd(lmin));
    }
    let clipped: Vec<f64> = vals.iter().map(|&x| x.max(0.0)).collect();
    Ok((&(&vecs * &ComplexMatrix::from_real_diag(&clipped)) * &vecs.adjoint()).hermitian_part())
}

/// Result of a 1-level Vandermonde decomposition `T = Σ pₗ a(ψₗ) aᴴ(ψₗ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VandermondeDecomposition {
    /// Angles in `[0, π]`.
    pub psi: Vec<f64>,
    pub weights: Vec<f64>,
    pub rank: usize,
}

impl VandermondeDecomposition {
    pub fn cosines(&self) -> Vec<f64> {
        self.psi.iter().map(|p| p.cos()).collect()
    }
}

/// Null-spectrum coefficients `d_k = Σ_m C[m, m+k]`, `k = 0..N−1`, of `C = E Eᴴ`.
fn null_spectrum_coeffs(noise: &ComplexMatrix) -> Vec<C64> {
    let c = noise * &noise.adjoint();
    let n = c.rows();
    (0..n).map(|k| (0..n - k).map(|m| c[(m, m + k)]).sum()).collect()
}

/// `f(x) = aᴴ(x) C a(x)` and its first two derivatives in `x = cos ψ`.
fn null_spectrum(d: &[C64], x: f64) -> (f64, f64, f64) {
    let mut f = d[0].re;
    let (mut f1, mut f2) = (0.0, 0.0);
    for (k, &dk) in d.iter().enumerate().skip(1) {
        let w = PI * k as f64;
        let e = dk * C64::from_polar(1.0, w * x);
        f += 2.0 * e.re;
        f1 += -2.0 * w * e.im;
        f2 += -2.0 * w * w * e.re;
    }
    (f, f1, f2)
}

fn wrapped_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0);
    d.min(2.0 - d)
}

/// Root-MUSIC on a noise subspace (columns of `noise`, `N` rows).
///
/// Returns `count` cosines `x = cos ψ` sorted ascending. Candidates are the
/// polynomial roots closest to the unit circle with distinct angles; each is
/// then refined by Newton steps on the derivative of the null spectrum.
pub fn root_music(noise: &ComplexMatrix, count: usize) -> Result<Vec<f64>, ToeplitzError> {
    let n = noise.rows();
    if count == 0 {
        return Ok(Vec::new());
    }
    if count >= n {
        return Err(ToeplitzError::FullRank(count));
    }
    let d = null_spectrum_coeffs(noise);
    // z^{N-1} Σ_k d_k z^k, highest degree first: d_{N-1}, …, d_0, …, d_{-(N-1)}.
    let mut coeffs = Vec::with_capacity(2 * n - 1);
    for k in (1..n).rev() {
        coeffs.push(d[k]);
    }
    coeffs.push(d[0]);
    for k in 1..n {
        coeffs.push(d[k].conj());
    }
    let mut roots = polynomial_roots(&coeffs)?;
    roots.sort_by(|a, b| (a.norm() - 1.0).abs().total_cmp(&(b.norm() - 1.0).abs()));
    let mut picked: Vec<f64> = Vec::with_capacity(count);
    for z in roots {
        if picked.len() == count {
            break;
        }
        let x0 = z.arg() / PI;
        if picked.iter().any(|&p| wrapped_distance(p, x0) < 1e-6) {
            continue;
        }
        picked.push(x0);
    }
    let mut out: Vec<f64> = picked.into_iter().map(|x| refine(&d, x)).collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

fn refine(d: &[C64], x0: f64) -> f64 {
    let mut x = x0;
    for _ in 0..30 {
        let (_, f1, f2) = null_spectrum(d, x);
        if !(f2 > 0.0) {
            break;
        }
        let step = f1 / f2;
        if step.abs() > 0.05 {
            break;
        }
        x -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    let x = if wrapped_distance(x, x0) > 0.05 { x0 } else { x };
    // back into (−1, 1]
    let w = crate::channel::wrap_cos(x);
    w.clamp(-1.0, 1.0)
}

/// Least-squares weights of `T ≈ Σ pₗ a(xₗ) aᴴ(xₗ)`, small negatives clipped to 0.
pub fn fit_weights(t: &ComplexMatrix, cosines: &[f64]) -> Result<Vec<f64>, ToeplitzError> {
    let n = t.rows();
    let l = cosines.len();
    if l == 0 {
        return Ok(Vec::new());
    }
    let atoms: Vec<Vec<C64>> = cosines
        .iter()
        .map(|&x| crate::channel::steering_vector_cos(n, x))
        .collect();
    let mut gram = vec![0.0; l * l];
    let mut rhs = vec![0.0; l];
    for i in 0..l {
        for j in 0..l {
            gram[i * l + j] = inner(&atoms[i], &atoms[j]).norm_sqr();
        }
        rhs[i] = inner(&atoms[i], &t.matvec(&atoms[i])).re;
    }
    let chol = RealCholesky::factor(&gram, l).map_err(ToeplitzError::Linalg)?;
    chol.solve_in_place(&mut rhs);
    let pmax = rhs.iter().fold(0.0f64, |m, &p| m.max(p.abs()));
    for p in rhs.iter_mut() {
        if *p < 0.0 {
            if *p < -1e-8 * pmax {
                return Err(ToeplitzError::NegativeWeight(*p));
            }
            *p = 0.0;
        }
    }
    Ok(rhs)
}

/// Vandermonde decomposition of a low-rank PSD 1-level Toeplitz matrix.
pub fn vandermonde_decompose_1level(t: &ComplexMatrix, rank_tol: f64) -> Result<VandermondeDecomposition, ToeplitzError> {
    if !t.is_square() {
        return Err(ToeplitzError::ShapeMismatch(format!("{}x{} is not square", t.rows(), t.cols())));
    }
    let n = t.rows();
    let scale = t.max_abs();
    let mut dev = 0.0f64;
    for i in 1..n {
        for j in 1..n {
            dev = dev.max((t[(i, j)] - t[(i - 1, j - 1)]).norm());
        }
    }
    if dev > 1e-8 * scale.max(f64::MIN_POSITIVE) {
        return Err(ToeplitzError::NotToeplitz(dev));
    }
    let (vals, vecs) = hermitian_eig(t)?;
    let lmax = vals.first().copied().unwrap_or(0.0);
    if !(lmax > 0.0) {
        if vals.iter().any(|&v| v < -rank_tol * scale) {
            return Err(ToeplitzError::NotPsd(vals[n - 1]));
        }
        return Ok(VandermondeDecomposition {
            psi: Vec::new(),
            weights: Vec::new(),
            rank: 0,
        });
    }
    if vals[n - 1] < -rank_tol * lmax {
        return Err(ToeplitzError::NotPsd(vals[n - 1]));
    }
    let rank = vals.iter().filter(|&&v| v > rank_tol * lmax).count();
    if rank == n {
        return Err(ToeplitzError::FullRank(n));
    }
    let noise = vecs.submatrix(0, rank, n, n - rank);
    let cosines = root_music(&noise, rank)?;
    let weights = fit_weights(t, &cosines)?;
    Ok(VandermondeDecomposition {
        psi: cosines.iter().map(|x| x.acos()).collect(),
        weights,
        rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::steering_vector_cos;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn low_rank_toeplitz(n: usize, cos: &[f64], p: &[f64]) -> ComplexMatrix {
        let mut t = ComplexMatrix::zeros(n, n);
        for (&x, &w) in cos.iter().zip(p) {
            let a = ComplexMatrix::column_vector(&steering_vector_cos(n, x));
            t = &t + &(&a * &a.adjoint()).scale_real(w);
        }
        t
    }

    #[test]
    fn one_level_layout() {
        let g = MultiLevelToeplitzGenerator::new(vec![2], vec![c(1., 0.), c(2., 0.), c(3., 0.)]).unwrap();
        let m = g.realize();
        assert_eq!(m, ComplexMatrix::from_real_rows(&[vec![2., 3.], vec![1., 2.]]));
    }

    #[test]
    fn all_ones_generator() {
        let g = MultiLevelToeplitzGenerator::new(vec![2, 3], vec![c(1., 0.); 15]).unwrap();
        assert!(g.realize().data().iter().all(|&z| z == c(1., 0.)));
    }

    #[test]
    fn two_level_matches_index_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data: Vec<C64> = (0..9).map(|_| c(rng.random(), rng.random())).collect();
        let g = MultiLevelToeplitzGenerator::new(vec![2, 2], data.clone()).unwrap();
        let m = g.realize();
        for i1 in 0..2 {
            for i2 in 0..2 {
                for j1 in 0..2 {
                    for j2 in 0..2 {
                        let want = data[(1 + j1 - i1) * 3 + (1 + j2 - i2)];
                        assert_eq!(m[(i1 * 2 + i2, j1 * 2 + j2)], want);
                    }
                }
            }
        }
    }

    #[test]
    fn shape_errors() {
        assert!(MultiLevelToeplitzGenerator::new(vec![2], vec![c(0., 0.); 4]).is_err());
        assert!(MultiLevelToeplitzGenerator::new(vec![], vec![]).is_err());
        assert!(adjoint(&ComplexMatrix::zeros(3, 3), &[2]).is_err());
    }

    #[test]
    fn adjoint_of_identity() {
        let g = adjoint(&ComplexMatrix::identity(2), &[2]).unwrap();
        assert_eq!(g.data(), &[c(0., 0.), c(2., 0.), c(0., 0.)]);
    }

    #[test]
    fn adjoint_recovers_diagonal_multiplicities() {
        let dims = vec![3, 2];
        let total = real_param_count(&dims);
        for k in 0..total {
            let mut data = vec![c(0., 0.); total];
            data[k] = c(1., 0.);
            let g = MultiLevelToeplitzGenerator::new(dims.clone(), data).unwrap();
            let back = adjoint(&g.realize(), &dims).unwrap();
            // multiplicity of offset δ in a level of size N is N − |δ|
            let (k1, k2) = (k / 3, k % 3);
            let mult = (3 - (k1 as i64 - 2).unsigned_abs() as usize) * (2 - (k2 as i64 - 1).unsigned_abs() as usize);
            for (j, &v) in back.data().iter().enumerate() {
                let want = if j == k { mult as f64 } else { 0.0 };
                assert_eq!(v, c(want, 0.));
            }
        }
    }

    #[test]
    fn real_basis_reproduces_realization() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for dims in [vec![4], vec![2, 3], vec![2, 2, 2]] {
            let total = real_param_count(&dims);
            let p: Vec<f64> = (0..total).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g = MultiLevelToeplitzGenerator::from_real_params(dims.clone(), &p).unwrap();
            let m = g.realize();
            assert!(m.is_hermitian(1e-15));
            let n = g.size();
            let mut acc = ComplexMatrix::zeros(n, n);
            for (v, entries) in real_param_basis(&dims).iter().enumerate() {
                for e in entries {
                    acc[(e.row, e.col)] += e.value * p[v];
                }
            }
            assert!((&acc - &m).max_abs() < 1e-15);
            let back = g.to_real_params();
            assert!(back.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-15));
        }
    }

    #[test]
    fn three_level_size() {
        let g = MultiLevelToeplitzGenerator::zeros(vec![4, 2, 3]).unwrap();
        assert_eq!(g.realize().shape(), (24, 24));
    }

    #[test]
    fn psd_floor_examples() {
        let m = ComplexMatrix::from_real_diag(&[2.0, 1.0]);
        assert_eq!(psd_floor(&m, 1e-9).unwrap(), m);
        let m = ComplexMatrix::from_real_diag(&[1.0, -1e-12]);
        let f = psd_floor(&m, 1e-9).unwrap();
        assert!((&f - &ComplexMatrix::from_real_diag(&[1.0, 0.0])).max_abs() < 1e-15);
        assert!(psd_floor(&ComplexMatrix::from_real_diag(&[1.0, -0.1]), 1e-9).is_err());
    }

    #[test]
    fn psd_floor_random_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 8;
        let a = ComplexMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let mut g = &a * &a.adjoint();
        for i in 0..n {
            g[(i, i)] -= c(1e-9, 0.0);
        }
        let g = g.hermitian_part();
        let (vals, _) = hermitian_eig(&g).unwrap();
        let neg = vals.last().unwrap().min(0.0);
        let f = psd_floor(&g, 1e-6).unwrap();
        let (fv, _) = hermitian_eig(&f).unwrap();
        assert!(*fv.last().unwrap() >= -1e-12);
        assert!((&f - &g).frobenius_norm() <= neg.abs() * (n as f64).sqrt() + 1e-12);
    }

    #[test]
    fn rank_one_decomposition() {
        let t = low_rank_toeplitz(8, &[0.4], &[2.0]);
        let d = vandermonde_decompose_1level(&t, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(d.rank, 1);
        assert!((d.psi[0] - 0.4f64.acos()).abs() < 1e-10);
        assert!((d.weights[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let d = vandermonde_decompose_1level(&ComplexMatrix::zeros(5, 5), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(d.rank, 0);
        assert!(d.psi.is_empty() && d.weights.is_empty());
    }

    #[test]
    fn two_source_decomposition() {
        let t = low_rank_toeplitz(16, &[-0.5, 0.3], &[1.0, 2.5]);
        let d = vandermonde_decompose_1level(&t, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(d.rank, 2);
        let cs = d.cosines();
        assert!((cs[0] + 0.5).abs() < 1e-8 && (cs[1] - 0.3).abs() < 1e-8);
        assert!((d.weights[0] - 1.0).abs() < 1e-6 && (d.weights[1] - 2.5).abs() < 1e-6);
        let rebuilt = low_rank_toeplitz(16, &cs, &d.weights);
        assert!((&rebuilt - &t).frobenius_norm() <= 1e-6 * t.frobenius_norm());
    }

    #[test]
    fn full_rank_is_rejected() {
        let t = ComplexMatrix::identity(4);
        assert_eq!(vandermonde_decompose_1level(&t, DEFAULT_RANK_TOL).unwrap_err(), ToeplitzError::FullRank(4));
    }

    #[test]
    fn non_toeplitz_is_rejected() {
        let t = ComplexMatrix::from_real_diag(&[1.0, 2.0]);
        assert!(matches!(
            vandermonde_decompose_1level(&t, DEFAULT_RANK_TOL),
            Err(ToeplitzError::NotToeplitz(_))
        ));
    }

    #[test]
    fn wrapped_sources_near_the_seam() {
        let t = low_rank_toeplitz(12, &[0.97, -0.8], &[1.0, 1.0]);
        let d = vandermonde_decompose_1level(&t, DEFAULT_RANK_TOL).unwrap();
        let cs = d.cosines();
        assert!((cs[0] + 0.8).abs() < 1e-8 && (cs[1] - 0.97).abs() < 1e-8);
    }

    fn arb_generator(dims: Vec<usize>) -> impl Strategy<Value = MultiLevelToeplitzGenerator> {
        let total = real_param_count(&dims);
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), total).prop_map(move |v| {
            MultiLevelToeplitzGenerator::new(dims.clone(), v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn realize_is_linear(g1 in arb_generator(vec![3, 2]), g2 in arb_generator(vec![3, 2]), a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let combo = MultiLevelToeplitzGenerator::new(
                vec![3, 2],
                g1.data().iter().zip(g2.data()).map(|(x, y)| x * a + y * b).collect(),
            ).unwrap();
            let lhs = combo.realize();
            let rhs = &g1.realize().scale_real(a) + &g2.realize().scale_real(b);
            prop_assert!((&lhs - &rhs).max_abs() <= 1e-12);
        }

        #[test]
        fn adjoint_inner_product_identity(g in arb_generator(vec![2, 3]), seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = ComplexMatrix::from_fn(6, 6, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let lhs = g.realize().inner_real(&m);
            let adj = adjoint(&m, &[2, 3]).unwrap();
            let rhs: f64 = g.data().iter().zip(adj.data()).map(|(x, y)| x.re * y.re + x.im * y.im).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn symmetric_generators_realize_hermitian(g in arb_generator(vec![2, 2, 2])) {
            let h = g.hermitian_symmetrized();
            prop_assert!(h.is_conjugate_symmetric(1e-15));
            prop_assert!(h.realize().is_hermitian(1e-14));
        }

        #[test]
        fn root_music_is_scale_invariant(x1 in -0.9f64..-0.1, x2 in 0.1f64..0.9, s in 0.01f64..100.0) {
            let t = low_rank_toeplitz(10, &[x1, x2], &[1.0, 1.5]);
            let a = vandermonde_decompose_1level(&t, DEFAULT_RANK_TOL).unwrap();
            let b = vandermonde_decompose_1level(&t.scale_real(s), DEFAULT_RANK_TOL).unwrap();
            prop_assert_eq!(a.rank, b.rank);
            for (p, q) in a.psi.iter().zip(&b.psi) {
                prop_assert!((p - q).abs() < 1e-9);
            }
        }
    }
}

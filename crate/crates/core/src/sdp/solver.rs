//! Primal-dual interior-point method for
//!
//! ```text
//! minimize   cᵀx
//! subject to s = F0 + F x,  s ∈ K
//! ```
//!
//! where `K` is a product of Hermitian PSD cones and second-order cones. The
//! dual is `maximize −⟨F0, z⟩` subject to `Fᵀz = c`, `z ∈ K`. Iterates are
//! kept in Nesterov–Todd scaled coordinates; each iteration factors the dense
//! normal matrix `Fᵀ(WᵀW)⁻¹F` once and takes a Mehrotra predictor-corrector
//! step.

use std::time::Instant;

use crate::linalg::{cholesky, hermitian_eigenvalues, svd, ComplexMatrix, RealCholesky, C64};

use super::problem::{dense_from_entries, ConicProblem};
use super::{ConicSolution, IterationRecord, SdpError, SolveStatus, SolverOptions};

/// Cone-space vector: one Hermitian matrix per PSD cone, one real vector per ball.
#[derive(Debug, Clone)]
pub(crate) struct ConeVec {
    pub psd: Vec<ComplexMatrix>,
    pub soc: Vec<Vec<f64>>,
}

impl ConeVec {
    fn dot(&self, other: &ConeVec) -> f64 {
        let a: f64 = self.psd.iter().zip(&other.psd).map(|(x, y)| x.inner_real(y)).sum();
        let b: f64 = self
            .soc
            .iter()
            .zip(&other.soc)
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
            .sum();
        a + b
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    fn add(&self, other: &ConeVec, a: f64) -> ConeVec {
        ConeVec {
            psd: self
                .psd
                .iter()
                .zip(&other.psd)
                .map(|(x, y)| x + &y.scale_real(a))
                .collect(),
            soc: self
                .soc
                .iter()
                .zip(&other.soc)
                .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + a * q).collect())
                .collect(),
        }
    }
}

/// Nesterov–Todd scaling of one PSD cone: `W(z) = Rᴴ z R` with `Rti = R⁻ᴴ`,
/// scaled point `λ = diag(Λ)`. Only `Rti` is needed by the iteration.
#[derive(Debug, Clone)]
struct PsdScaling {
    rti: ComplexMatrix,
    lambda: Vec<f64>,
}

/// Nesterov–Todd scaling of one second-order cone: `W = β(2vvᵀ − J)`.
#[derive(Debug, Clone)]
struct SocScaling {
    beta: f64,
    v: Vec<f64>,
    lambda: Vec<f64>,
}

fn jdot(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[0] - a[1..].iter().zip(&b[1..]).map(|(x, y)| x * y).sum::<f64>()
}

fn soc_det(x: &[f64]) -> f64 {
    let n1 = x[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
    (x[0] - n1) * (x[0] + n1)
}

impl SocScaling {
    fn from_points(s: &[f64], z: &[f64]) -> Option<Self> {
        let ds = soc_det(s);
        let dz = soc_det(z);
        if !(ds > 0.0 && dz > 0.0 && s[0] > 0.0 && z[0] > 0.0) {
            return None;
        }
        let a = ds.sqrt();
        let b = dz.sqrt();
        let beta = (a / b).sqrt();
        let sb: Vec<f64> = s.iter().map(|x| x / a).collect();
        let zb: Vec<f64> = z.iter().map(|x| x / b).collect();
        let dotsz: f64 = sb.iter().zip(&zb).map(|(p, q)| p * q).sum();
        let gamma = ((1.0 + dotsz) / 2.0).sqrt();
        let mut w: Vec<f64> = sb.iter().zip(&zb).map(|(p, q)| -q + p).collect();
        w[0] = sb[0] + zb[0];
        for x in w.iter_mut() {
            *x /= 2.0 * gamma;
        }
        let denom = (2.0 * (w[0] + 1.0)).sqrt();
        let mut v = w;
        v[0] += 1.0;
        for x in v.iter_mut() {
            *x /= denom;
        }
        let mut sc = SocScaling {
            beta,
            v,
            lambda: Vec::new(),
        };
        sc.lambda = sc.apply(z);
        Some(sc)
    }

    /// `W x = β(2v(vᵀx) − Jx)`.
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let vx: f64 = self.v.iter().zip(x).map(|(a, b)| a * b).sum();
        let mut out: Vec<f64> = self.v.iter().zip(x).map(|(a, b)| self.beta * (2.0 * vx * a + b)).collect();
        out[0] = self.beta * (2.0 * vx * self.v[0] - x[0]);
        out
    }

    /// `W⁻¹ x = (1/β)(2Jv(vᵀJx) − Jx)`; equals `W⁻ᵀ x` since `W` is symmetric.
    fn apply_inv(&self, x: &[f64]) -> Vec<f64> {
        let vjx = jdot(&self.v, x);
        let mut out: Vec<f64> = self.v.iter().zip(x).map(|(a, b)| (-2.0 * vjx * a + b) / self.beta).collect();
        out[0] = (2.0 * vjx * self.v[0] - x[0]) / self.beta;
        out
    }
}

fn soc_jordan(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    out[0] = x.iter().zip(y).map(|(a, b)| a * b).sum();
    for i in 1..x.len() {
        out[i] = x[0] * y[i] + y[0] * x[i];
    }
    out
}

/// Solves `λ ∘ x = y` in the second-order cone algebra.
fn soc_jordan_div(l: &[f64], y: &[f64]) -> Vec<f64> {
    let l1y1: f64 = l[1..].iter().zip(&y[1..]).map(|(a, b)| a * b).sum();
    let x0 = (l[0] * y[0] - l1y1) / soc_det(l);
    let mut out = vec![0.0; l.len()];
    out[0] = x0;
    for i in 1..l.len() {
        out[i] = (y[i] - x0 * l[i]) / l[0];
    }
    out
}

/// Largest `α ≥ 0` with `λ + α d` in the second-order cone (`∞` when unbounded).
fn soc_max_step(l: &[f64], d: &[f64]) -> f64 {
    let a = soc_det(d);
    let b = jdot(l, d);
    let c = soc_det(l);
    let disc = b * b - a * c;
    if a > 0.0 {
        if b >= 0.0 || disc < 0.0 {
            f64::INFINITY
        } else {
            c / (-b + disc.sqrt())
        }
    } else if a < 0.0 {
        let sq = disc.max(0.0).sqrt();
        if b > 0.0 {
            (b + sq) / -a
        } else {
            c / (sq - b)
        }
    } else if b < 0.0 {
        -c / (2.0 * b)
    } else {
        f64::INFINITY
    }
}

/// Largest `α ≥ 0` with `Λ + α D ⪰ 0`.
fn psd_max_step(lambda: &[f64], d: &ComplexMatrix) -> Result<f64, SdpError> {
    let n = lambda.len();
    let isq: Vec<f64> = lambda.iter().map(|l| 1.0 / l.sqrt()).collect();
    let m = ComplexMatrix::from_fn(n, n, |i, j| d[(i, j)] * (isq[i] * isq[j])).hermitian_part();
    let ev = hermitian_eigenvalues(&m).map_err(|e| SdpError::Numerical(e.to_string()))?;
    let lmin = ev[n - 1];
    Ok(if lmin < 0.0 { -1.0 / lmin } else { f64::INFINITY })
}

fn psd_jordan(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    (&(a * b) + &(b * a)).scale_real(0.5)
}

fn psd_jordan_div(lambda: &[f64], d: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(lambda.len(), lambda.len(), |i, j| d[(i, j)] * (2.0 / (lambda[i] + lambda[j])))
}

struct BallData {
    radius: f64,
    center: Vec<f64>,
    /// Sorted distinct variables touching the ball.
    vars: Vec<usize>,
    /// `(row, coefficient)` lists aligned with `vars`.
    cols: Vec<Vec<(usize, f64)>>,
    /// Dense `AᵀA` over `vars`.
    ata: Vec<f64>,
}

struct PsdData {
    size: usize,
    constant: ComplexMatrix,
    terms: Vec<(usize, Vec<(usize, usize, C64)>)>,
}

struct Prepared {
    m: usize,
    c: Vec<f64>,
    psd: Vec<PsdData>,
    balls: Vec<BallData>,
}

impl Prepared {
    fn new(p: &ConicProblem) -> Self {
        let psd = p
            .psd
            .iter()
            .map(|k| PsdData {
                size: k.size,
                constant: dense_from_entries(k.size, &k.constant),
                terms: k
                    .terms
                    .iter()
                    .map(|t| (t.var, t.entries.iter().map(|e| (e.row, e.col, e.value)).collect()))
                    .collect(),
            })
            .collect();
        let balls = p
            .balls
            .iter()
            .map(|b| {
                let mut cols: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
                for t in &b.terms {
                    match cols.iter_mut().find(|(v, _)| *v == t.var) {
                        Some((_, e)) => e.extend_from_slice(&t.entries),
                        None => cols.push((t.var, t.entries.clone())),
                    }
                }
                cols.sort_by_key(|(v, _)| *v);
                let d = b.center.len();
                let k = cols.len();
                // dense columns for AᵀA
                let mut dense = vec![0.0; k * d];
                for (j, (_, e)) in cols.iter().enumerate() {
                    for &(r, a) in e {
                        dense[j * d + r] += a;
                    }
                }
                let mut ata = vec![0.0; k * k];
                for i in 0..k {
                    for j in 0..=i {
                        let s: f64 = dense[i * d..(i + 1) * d]
                            .iter()
                            .zip(&dense[j * d..(j + 1) * d])
                            .map(|(x, y)| x * y)
                            .sum();
                        ata[i * k + j] = s;
                        ata[j * k + i] = s;
                    }
                }
                BallData {
                    radius: b.radius,
                    center: b.center.clone(),
                    vars: cols.iter().map(|(v, _)| *v).collect(),
                    cols: cols.into_iter().map(|(_, e)| e).collect(),
                    ata,
                }
            })
            .collect();
        Prepared {
            m: p.num_vars,
            c: p.objective.clone(),
            psd,
            balls,
        }
    }

    /// `F x` (linear part only).
    fn apply_f(&self, x: &[f64]) -> ConeVec {
        let psd = self
            .psd
            .iter()
            .map(|k| {
                let mut m = ComplexMatrix::zeros(k.size, k.size);
                for (v, entries) in &k.terms {
                    let xv = x[*v];
                    if xv != 0.0 {
                        for &(r, c, a) in entries {
                            m[(r, c)] += a * xv;
                        }
                    }
                }
                m
            })
            .collect();
        let soc = self
            .balls
            .iter()
            .map(|b| {
                let mut u = vec![0.0; 1 + b.center.len()];
                for (&v, col) in b.vars.iter().zip(&b.cols) {
                    let xv = x[v];
                    for &(r, a) in col {
                        u[1 + r] += a * xv;
                    }
                }
                u
            })
            .collect();
        ConeVec { psd, soc }
    }

    /// `F0`.
    fn constant(&self) -> ConeVec {
        ConeVec {
            psd: self.psd.iter().map(|k| k.constant.clone()).collect(),
            soc: self
                .balls
                .iter()
                .map(|b| {
                    let mut u = vec![b.radius];
                    u.extend_from_slice(&b.center);
                    u
                })
                .collect(),
        }
    }

    /// `Fᵀ z`.
    fn apply_ft(&self, z: &ConeVec) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (k, zk) in self.psd.iter().zip(&z.psd) {
            for (v, entries) in &k.terms {
                let mut s = 0.0;
                for &(r, c, a) in entries {
                    let w = zk[(r, c)];
                    s += a.re * w.re + a.im * w.im;
                }
                out[*v] += s;
            }
        }
        for (b, zb) in self.balls.iter().zip(&z.soc) {
            for (&v, col) in b.vars.iter().zip(&b.cols) {
                out[v] += col.iter().map(|&(r, a)| a * zb[1 + r]).sum::<f64>();
            }
        }
        out
    }
}

impl PsdScaling {
    /// NT scaling of the pair `(s, z)`: with `L_s`, `L_z` Cholesky factors and
    /// `L_zᴴ L_s = U Σ Vᴴ`, `R = L_s V Σ^{-1/2}`, `Rti = L_z U Σ^{-1/2}` and `λ = Σ`.
    fn from_points(s: &ComplexMatrix, z: &ComplexMatrix) -> Option<Self> {
        let l1 = cholesky(s).ok()?;
        let l2 = cholesky(z).ok()?;
        let (u, sigma, _) = svd(&(&l2.adjoint() * &l1)).ok()?;
        if sigma.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return None;
        }
        let isq: Vec<C64> = sigma.iter().map(|x| C64::new(1.0 / x.sqrt(), 0.0)).collect();
        let d = ComplexMatrix::from_diag(&isq);
        Some(PsdScaling {
            rti: &(&l2 * &u) * &d,
            lambda: sigma,
        })
    }
}

/// Primal-dual point in unscaled coordinates.
#[derive(Clone)]
struct Iterate {
    x: Vec<f64>,
    s: ConeVec,
    z: ConeVec,
}

/// Nesterov–Todd scalings of all cones at one iterate.
struct State {
    psd: Vec<PsdScaling>,
    soc: Vec<SocScaling>,
}

impl State {
    fn at(it: &Iterate) -> Option<Self> {
        let psd = it
            .s
            .psd
            .iter()
            .zip(&it.z.psd)
            .map(|(s, z)| PsdScaling::from_points(s, z))
            .collect::<Option<Vec<_>>>()?;
        let soc = it
            .s
            .soc
            .iter()
            .zip(&it.z.soc)
            .map(|(s, z)| SocScaling::from_points(s, z))
            .collect::<Option<Vec<_>>>()?;
        Some(State { psd, soc })
    }

    fn lambda(&self) -> ConeVec {
        ConeVec {
            psd: self.psd.iter().map(|s| ComplexMatrix::from_real_diag(&s.lambda)).collect(),
            soc: self.soc.iter().map(|s| s.lambda.clone()).collect(),
        }
    }

    /// `W⁻ᵀ y`: `Rtiᴴ y Rti` on PSD cones.
    fn w_inv_t(&self, y: &ConeVec) -> ConeVec {
        ConeVec {
            psd: self
                .psd
                .iter()
                .zip(&y.psd)
                .map(|(s, m)| (&(&s.rti.adjoint() * m) * &s.rti).hermitian_part())
                .collect(),
            soc: self.soc.iter().zip(&y.soc).map(|(s, v)| s.apply_inv(v)).collect(),
        }
    }

    /// `W⁻¹ y`: `Rti y Rtiᴴ` on PSD cones.
    fn w_inv(&self, y: &ConeVec) -> ConeVec {
        ConeVec {
            psd: self
                .psd
                .iter()
                .zip(&y.psd)
                .map(|(s, m)| (&(&s.rti * m) * &s.rti.adjoint()).hermitian_part())
                .collect(),
            soc: self.soc.iter().zip(&y.soc).map(|(s, v)| s.apply_inv(v)).collect(),
        }
    }
}

/// Dense normal matrix `Fᵀ(WᵀW)⁻¹F`, row-major.
fn normal_matrix(prep: &Prepared, st: &State) -> Vec<f64> {
    let m = prep.m;
    let mut out = vec![0.0; m * m];
    for (k, sc) in prep.psd.iter().zip(&st.psd) {
        let n = k.size;
        let v = &sc.rti * &sc.rti.adjoint();
        let vd = v.data();
        let mut u = vec![C64::new(0.0, 0.0); n * n];
        for (vj, ej) in &k.terms {
            u.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
            for &(a, b, g) in ej {
                let rowb = &vd[b * n..(b + 1) * n];
                for r in 0..n {
                    let s = g * vd[r * n + a];
                    let urow = &mut u[r * n..(r + 1) * n];
                    for (dst, &w) in urow.iter_mut().zip(rowb) {
                        *dst += s * w;
                    }
                }
            }
            for (vi, ei) in &k.terms {
                let mut s = 0.0;
                for &(r, c, h) in ei {
                    let w = u[c * n + r];
                    s += h.re * w.re - h.im * w.im;
                }
                out[vi * m + vj] += s;
            }
        }
    }
    for (b, sc) in prep.balls.iter().zip(&st.soc) {
        let k = b.vars.len();
        let inv_b2 = 1.0 / (sc.beta * sc.beta);
        let vnorm2: f64 = sc.v.iter().map(|x| x * x).sum();
        let coef = 4.0 * (1.0 + vnorm2);
        let g: Vec<f64> = b
            .cols
            .iter()
            .map(|col| col.iter().map(|&(r, a)| a * sc.v[1 + r]).sum())
            .collect();
        for i in 0..k {
            let vi = b.vars[i];
            for j in 0..k {
                let vj = b.vars[j];
                out[vi * m + vj] += inv_b2 * (b.ata[i * k + j] + coef * g[i] * g[j]);
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            let s = 0.5 * (out[i * m + j] + out[j * m + i]);
            out[i * m + j] = s;
            out[j * m + i] = s;
        }
    }
    out
}

struct Factored {
    m: usize,
    mat: Vec<f64>,
    chol: RealCholesky,
}

impl Factored {
    fn new(mat: Vec<f64>, m: usize) -> Result<Self, SdpError> {
        if let Ok(chol) = RealCholesky::factor(&mat, m) {
            return Ok(Self { m, mat, chol });
        }
        let dmax = (0..m).map(|i| mat[i * m + i].abs()).fold(0.0f64, f64::max).max(1e-300);
        for reg in [1e-14, 1e-12, 1e-10] {
            let mut shifted = mat.clone();
            for i in 0..m {
                shifted[i * m + i] += reg * dmax;
            }
            if let Ok(chol) = RealCholesky::factor(&shifted, m) {
                return Ok(Self { m, mat, chol });
            }
        }
        Err(SdpError::Numerical("normal matrix is not positive definite".into()))
    }

    /// Solves with one step of iterative refinement against the unregularized matrix.
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut x = rhs.to_vec();
        self.chol.solve_in_place(&mut x);
        let mut r: Vec<f64> = (0..m)
            .map(|i| rhs[i] - self.mat[i * m..(i + 1) * m].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        self.chol.solve_in_place(&mut r);
        for (xi, ri) in x.iter_mut().zip(&r) {
            *xi += ri;
        }
        x
    }
}

struct Direction {
    dx: Vec<f64>,
    ds: ConeVec,
    dz: ConeVec,
}

fn newton(prep: &Prepared, st: &State, fac: &Factored, q: &ConeVec, rp: &ConeVec, rd: &[f64]) -> Direction {
    let t = q.add(&st.w_inv_t(rp), -1.0);
    let u = st.w_inv(&t);
    let ftu = prep.apply_ft(&u);
    let rhs: Vec<f64> = ftu.iter().zip(rd).map(|(a, b)| a - b).collect();
    let dx = fac.solve(&rhs);
    let fdx = prep.apply_f(&dx);
    let ds = st.w_inv_t(&rp.add(&fdx, 1.0));
    let dz = q.add(&ds, -1.0);
    Direction { dx, ds, dz }
}

fn max_step(st: &State, d: &ConeVec) -> Result<f64, SdpError> {
    let mut a = f64::INFINITY;
    for (s, m) in st.psd.iter().zip(&d.psd) {
        a = a.min(psd_max_step(&s.lambda, m)?);
    }
    for (s, v) in st.soc.iter().zip(&d.soc) {
        a = a.min(soc_max_step(&s.lambda, v));
    }
    Ok(a)
}

fn hermitian_parts(v: ConeVec) -> ConeVec {
    ConeVec {
        psd: v.psd.iter().map(|m| m.hermitian_part()).collect(),
        soc: v.soc,
    }
}

#[derive(Clone, Copy)]
struct Metrics {
    pcost: f64,
    dcost: f64,
    gap: f64,
    rel_gap: f64,
    pres: f64,
    dres: f64,
}

impl Metrics {
    /// Distance from optimality in units of the tolerances.
    fn merit(&self, opts: &SolverOptions) -> f64 {
        (self.pres / opts.feas_tol)
            .max(self.dres / opts.feas_tol)
            .max(self.rel_gap / opts.gap_tol)
    }

    fn is_optimal(&self, opts: &SolverOptions) -> bool {
        self.pres <= opts.feas_tol && self.dres <= opts.feas_tol && self.rel_gap <= opts.gap_tol
    }
}

struct Evaluator<'a> {
    prep: &'a Prepared,
    problem: &'a ConicProblem,
    f0: ConeVec,
    f0_norm: f64,
    c_norm: f64,
}

impl Evaluator<'_> {
    fn eval(&self, it: &Iterate) -> (Metrics, ConeVec, Vec<f64>) {
        let fx = self.prep.apply_f(&it.x);
        let rp = self.f0.add(&fx, 1.0).add(&it.s, -1.0);
        let ftz = self.prep.apply_ft(&it.z);
        let rd: Vec<f64> = self.prep.c.iter().zip(&ftz).map(|(a, b)| a - b).collect();
        let pcost = self.problem.objective_value(&it.x);
        let dcost = self.problem.objective_offset - self.f0.dot(&it.z);
        let gap = it.s.dot(&it.z);
        let rel_gap = gap.abs().max((pcost - dcost).abs()) / (1.0 + pcost.abs());
        let pres = rp.norm() / self.f0_norm.max(1.0);
        let dres = rd.iter().map(|v| v * v).sum::<f64>().sqrt() / self.c_norm.max(1.0);
        (
            Metrics {
                pcost,
                dcost,
                gap,
                rel_gap,
                pres,
                dres,
            },
            rp,
            rd,
        )
    }
}

/// Solves a conic problem; see the module documentation for the method.
///
/// When the iteration stops without meeting the tolerances, the iterate
/// closest to optimality (in units of the tolerances) is returned.
pub fn solve(problem: &ConicProblem, opts: &SolverOptions) -> Result<ConicSolution, SdpError> {
    problem.validate()?;
    opts.validate()?;
    let start = Instant::now();
    let prep = Prepared::new(problem);
    let alpha0 = problem.init_scale;
    let identity = ConeVec {
        psd: prep
            .psd
            .iter()
            .map(|k| ComplexMatrix::identity(k.size).scale_real(alpha0))
            .collect(),
        soc: prep
            .balls
            .iter()
            .map(|b| {
                let mut e = vec![0.0; 1 + b.center.len()];
                e[0] = alpha0;
                e
            })
            .collect(),
    };
    let mut it = Iterate {
        x: vec![0.0; problem.num_vars],
        s: identity.clone(),
        z: identity,
    };
    let f0 = prep.constant();
    let ev = Evaluator {
        prep: &prep,
        problem,
        f0_norm: f0.norm(),
        f0,
        c_norm: prep.c.iter().map(|v| v * v).sum::<f64>().sqrt(),
    };
    let degree = problem.degree().max(1) as f64;
    let mut st = State::at(&it).ok_or_else(|| SdpError::Numerical("initial point is not interior".into()))?;
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut best: Option<(Iterate, Metrics)> = None;
    let mut status = SolveStatus::MaxIterations;
    let mut iter = 0;
    loop {
        let (m, rp, rd) = ev.eval(&it);
        history.push(IterationRecord {
            iteration: iter,
            primal_objective: m.pcost,
            dual_objective: m.dcost,
            gap: m.gap,
            primal_residual: m.pres,
            dual_residual: m.dres,
            step: 0.0,
        });
        if best.as_ref().is_none_or(|(_, b)| m.merit(opts) < b.merit(opts)) {
            best = Some((it.clone(), m));
        }
        if m.is_optimal(opts) {
            status = SolveStatus::Optimal;
            break;
        }
        if iter >= opts.max_iters {
            break;
        }
        let mu = m.gap / degree;
        let fac = match Factored::new(normal_matrix(&prep, &st), prep.m) {
            Ok(f) => f,
            Err(_) => {
                status = SolveStatus::NumericalFailure;
                break;
            }
        };
        let lam = st.lambda();
        // predictor: λ∘(Δs + Δz) = −λ∘λ, so q = −λ
        let q_aff = ConeVec {
            psd: lam.psd.iter().map(|m| m.scale_real(-1.0)).collect(),
            soc: lam.soc.iter().map(|v| v.iter().map(|x| -x).collect()).collect(),
        };
        let aff = newton(&prep, &st, &fac, &q_aff, &rp, &rd);
        let a_aff = match (max_step(&st, &aff.ds), max_step(&st, &aff.dz)) {
            (Ok(a), Ok(b)) => a.min(b).min(1.0),
            _ => {
                status = SolveStatus::NumericalFailure;
                break;
            }
        };
        let sigma = (1.0 - a_aff).powi(3);
        // corrector
        let q = ConeVec {
            psd: st
                .psd
                .iter()
                .enumerate()
                .map(|(k, sc)| {
                    let n = sc.lambda.len();
                    let mut d = psd_jordan(&aff.ds.psd[k], &aff.dz.psd[k]).scale_real(-1.0);
                    for i in 0..n {
                        d[(i, i)] += C64::new(-sc.lambda[i] * sc.lambda[i] + sigma * mu, 0.0);
                    }
                    psd_jordan_div(&sc.lambda, &d)
                })
                .collect(),
            soc: st
                .soc
                .iter()
                .enumerate()
                .map(|(k, sc)| {
                    let ll = soc_jordan(&sc.lambda, &sc.lambda);
                    let dd = soc_jordan(&aff.ds.soc[k], &aff.dz.soc[k]);
                    let mut d: Vec<f64> = ll.iter().zip(&dd).map(|(a, b)| -a - b).collect();
                    d[0] += sigma * mu;
                    soc_jordan_div(&sc.lambda, &d)
                })
                .collect(),
        };
        let dir = newton(&prep, &st, &fac, &q, &rp, &rd);
        let a_max = match (max_step(&st, &dir.ds), max_step(&st, &dir.dz)) {
            (Ok(a), Ok(b)) => a.min(b),
            _ => {
                status = SolveStatus::NumericalFailure;
                break;
            }
        };
        // unscaled directions; the primal one satisfies the linearized equation exactly
        let ds = rp.add(&prep.apply_f(&dir.dx), 1.0);
        let dz = st.w_inv(&dir.dz);
        let mut alpha = (opts.step_fraction * a_max).min(1.0);
        let mut next = None;
        for _ in 0..8 {
            if !(alpha > 1e-12) {
                break;
            }
            let cand = Iterate {
                x: it.x.iter().zip(&dir.dx).map(|(x, d)| x + alpha * d).collect(),
                s: hermitian_parts(it.s.add(&ds, alpha)),
                z: hermitian_parts(it.z.add(&dz, alpha)),
            };
            if let Some(ns) = State::at(&cand) {
                next = Some((cand, ns));
                break;
            }
            alpha *= 0.5;
        }
        match next {
            Some((cand, ns)) => {
                if let Some(h) = history.last_mut() {
                    h.step = alpha;
                }
                it = cand;
                st = ns;
            }
            None => {
                status = SolveStatus::NumericalFailure;
                break;
            }
        }
        iter += 1;
    }
    let (fin, m) = if status == SolveStatus::Optimal {
        best.filter(|(_, b)| b.is_optimal(opts))
            .expect("the optimal iterate is the best one")
    } else {
        best.expect("at least one iterate is evaluated")
    };
    Ok(ConicSolution {
        x: fin.x,
        blocks: problem.blocks.clone(),
        psd_slacks: fin.s.psd,
        psd_duals: fin.z.psd,
        ball_slacks: fin.s.soc,
        ball_duals: fin.z.soc,
        primal_objective: m.pcost,
        dual_objective: m.dcost,
        gap: m.gap,
        relative_gap: m.rel_gap,
        primal_residual: m.pres,
        dual_residual: m.dres,
        status,
        iterations: iter,
        wall_time: start.elapsed(),
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_soc_point(rng: &mut impl Rng, d: usize) -> Vec<f64> {
        let mut x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n1 = x[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        x[0] = n1 + rng.random_range(0.1..2.0);
        x
    }

    #[test]
    fn soc_scaling_maps_s_and_z_to_the_same_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let s = random_soc_point(&mut rng, 6);
            let z = random_soc_point(&mut rng, 6);
            let sc = SocScaling::from_points(&s, &z).unwrap();
            let wz = sc.apply(&z);
            let winv_s = sc.apply_inv(&s);
            for (a, b) in wz.iter().zip(&winv_s) {
                assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
            }
            let back = sc.apply_inv(&sc.apply(&s));
            for (a, b) in back.iter().zip(&s) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn soc_inverse_square_has_rank_one_tail() {
        // lower-right block of W⁻² is (1/β²)[I + 4(1+‖v‖²) v₁v₁ᵀ]
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = 5;
        let sc = SocScaling::from_points(&random_soc_point(&mut rng, d), &random_soc_point(&mut rng, d)).unwrap();
        let vn: f64 = sc.v.iter().map(|x| x * x).sum();
        for j in 1..d {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            let col = sc.apply_inv(&sc.apply_inv(&e));
            for i in 1..d {
                let want = (if i == j { 1.0 } else { 0.0 } + 4.0 * (1.0 + vn) * sc.v[i] * sc.v[j]) / (sc.beta * sc.beta);
                assert!((col[i] - want).abs() < 1e-10 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn soc_jordan_division_inverts_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let l = random_soc_point(&mut rng, 4);
        let y: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = soc_jordan_div(&l, &y);
        let back = soc_jordan(&l, &x);
        for (a, b) in back.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn soc_step_hits_the_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let l = random_soc_point(&mut rng, 4);
            let d: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            let a = soc_max_step(&l, &d);
            if a.is_finite() {
                let p: Vec<f64> = l.iter().zip(&d).map(|(x, y)| x + a * y).collect();
                assert!(soc_det(&p).abs() < 1e-8 * (1.0 + p[0] * p[0]));
                let inner: Vec<f64> = l.iter().zip(&d).map(|(x, y)| x + 0.99 * a * y).collect();
                assert!(soc_det(&inner) > 0.0 && inner[0] > 0.0);
            } else {
                let p: Vec<f64> = l.iter().zip(&d).map(|(x, y)| x + 1e3 * y).collect();
                assert!(soc_det(&p) >= -1e-9 * p[0] * p[0] && p[0] > 0.0);
            }
        }
    }

    #[test]
    fn psd_step_hits_the_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let lambda = vec![2.0, 1.0, 0.5];
        let d = ComplexMatrix::from_fn(3, 3, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .hermitian_part();
        let a = psd_max_step(&lambda, &d).unwrap();
        let p = &ComplexMatrix::from_real_diag(&lambda) + &d.scale_real(a);
        let ev = hermitian_eigenvalues(&p).unwrap();
        assert!(ev[2].abs() < 1e-10);
    }

    #[test]
    fn psd_jordan_division_inverts_product() {
        let lambda = vec![3.0, 1.0, 0.25];
        let y = ComplexMatrix::from_fn(3, 3, |i, j| C64::new((i + 2 * j) as f64, i as f64 - j as f64)).hermitian_part();
        let x = psd_jordan_div(&lambda, &y);
        let back = psd_jordan(&ComplexMatrix::from_real_diag(&lambda), &x);
        assert!((&back - &y).max_abs() < 1e-12);
    }
}

use crate::channel::PhaseControlMatrix;
use crate::linalg::{ComplexMatrix, C64};
use crate::toeplitz::{real_param_basis, BasisEntry};

use super::problem::{hermitian_offdiag_index, BallConstraint, BallTerm, BlockKind, ConicProblem, PsdConstraint, PsdTerm};
use super::SdpError;

/// Variable name of the RIS-side Toeplitz generator.
pub const VAR_T_R: &str = "t";
/// Variable name of the BS/UE-side Toeplitz generator (2- or 3-level).
pub const VAR_T_BU: &str = "T";
/// Variable name of the channel matrix.
pub const VAR_H: &str = "H";
/// Variable name of a free Hermitian block.
pub const VAR_Q: &str = "Q";
/// Variable name of the scalar in the 3D problem.
pub const VAR_U: &str = "u";

/// Default cap on `N_B·N_U·N_R` for the 3D problem.
pub const ANM3D_DEFAULT_CAP: usize = 128;

fn entry(row: usize, col: usize, value: C64) -> BasisEntry {
    BasisEntry { row, col, value }
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// Places a Toeplitz block at `(at, at)`; returns the variable offset.
fn add_toeplitz(p: &mut ConicProblem, psd: &mut PsdConstraint, name: &str, dims: &[usize], at: usize) -> usize {
    let off = p.add_block(name, BlockKind::Toeplitz { dims: dims.to_vec() });
    for (v, basis) in real_param_basis(dims).into_iter().enumerate() {
        psd.terms.push(PsdTerm {
            var: off + v,
            entries: basis
                .into_iter()
                .map(|e| entry(e.row + at, e.col + at, e.value))
                .collect(),
        });
    }
    off
}

/// Places a free Hermitian block at `(at, at)`.
fn add_hermitian(p: &mut ConicProblem, psd: &mut PsdConstraint, name: &str, n: usize, at: usize) -> usize {
    let off = p.add_block(name, BlockKind::Hermitian { n });
    for i in 0..n {
        psd.terms.push(PsdTerm {
            var: off + i,
            entries: vec![entry(at + i, at + i, one())],
        });
    }
    for i in 0..n {
        for j in i + 1..n {
            let k = off + hermitian_offdiag_index(n, i, j);
            psd.terms.push(PsdTerm {
                var: k,
                entries: vec![entry(at + i, at + j, one()), entry(at + j, at + i, one())],
            });
            psd.terms.push(PsdTerm {
                var: k + 1,
                entries: vec![
                    entry(at + i, at + j, C64::new(0.0, 1.0)),
                    entry(at + j, at + i, C64::new(0.0, -1.0)),
                ],
            });
        }
    }
    off
}

/// Places a variable matrix `X` (`rows × cols`) at `(r0, c0)` and `Xᴴ` mirrored.
fn add_offdiag_matrix(
    p: &mut ConicProblem,
    psd: &mut PsdConstraint,
    rows: usize,
    cols: usize,
    r0: usize,
    c0: usize,
) -> usize {
    let off = p.add_block(VAR_H, BlockKind::Complex { rows, cols });
    for i in 0..rows {
        for j in 0..cols {
            let k = off + 2 * (i * cols + j);
            psd.terms.push(PsdTerm {
                var: k,
                entries: vec![entry(r0 + i, c0 + j, one()), entry(c0 + j, r0 + i, one())],
            });
            psd.terms.push(PsdTerm {
                var: k + 1,
                entries: vec![
                    entry(r0 + i, c0 + j, C64::new(0.0, 1.0)),
                    entry(c0 + j, r0 + i, C64::new(0.0, -1.0)),
                ],
            });
        }
    }
    off
}

/// Constant matrix `X` at `(r0, c0)` with `Xᴴ` mirrored.
fn constant_offdiag(psd: &mut PsdConstraint, x: &ComplexMatrix, r0: usize, c0: usize) {
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            let v = x[(i, j)];
            if v != C64::new(0.0, 0.0) {
                psd.constant.push(entry(r0 + i, c0 + j, v));
                psd.constant.push(entry(c0 + j, r0 + i, v.conj()));
            }
        }
    }
}

/// `½ Re tr(W B_v)` for every parameter of a Toeplitz block.
fn weighted_trace_objective(p: &mut ConicProblem, off: usize, dims: &[usize], w: &ComplexMatrix) {
    for (v, basis) in real_param_basis(dims).into_iter().enumerate() {
        let s: f64 = basis.iter().map(|e| (w[(e.col, e.row)] * e.value).re).sum();
        p.objective[off + v] += 0.5 * s;
    }
}

fn scaled_identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n).scale_real(1.0 / n as f64)
}

fn check_bu(h_rows: usize, n_b: usize, n_u: usize) -> Result<(), SdpError> {
    if n_b * n_u != h_rows || n_b == 0 || n_u == 0 {
        return Err(SdpError::InvalidProblem(format!(
            "N_B·N_U = {}·{} does not match {} channel rows",
            n_b, n_u, h_rows
        )));
    }
    Ok(())
}

fn check_weight(w: &ComplexMatrix, n: usize, name: &str) -> Result<(), SdpError> {
    if w.shape() != (n, n) {
        return Err(SdpError::InvalidProblem(format!("{name} must be {n}x{n}")));
    }
    match crate::linalg::cholesky(w) {
        Ok(_) => Ok(()),
        Err(_) => Err(SdpError::InvalidProblem(format!("{name} is not Hermitian positive definite"))),
    }
}

/// Data-fit ball `‖Y − H Ω‖_F ≤ √η` with `H` at variable offset `h_off`.
fn add_data_fit(p: &mut ConicProblem, h_off: usize, y: &ComplexMatrix, omega: &ComplexMatrix, eta: f64) {
    let (rows, b) = y.shape();
    let n_r = omega.rows();
    let mut center = Vec::with_capacity(2 * rows * b);
    for z in y.data() {
        center.push(z.re);
        center.push(z.im);
    }
    let mut terms = Vec::with_capacity(2 * rows * n_r);
    for i in 0..rows {
        for q in 0..n_r {
            let k = h_off + 2 * (i * n_r + q);
            let mut re = Vec::with_capacity(2 * b);
            let mut im = Vec::with_capacity(2 * b);
            for col in 0..b {
                let w = omega[(q, col)];
                let r = 2 * (i * b + col);
                re.push((r, -w.re));
                re.push((r + 1, -w.im));
                im.push((r, w.im));
                im.push((r + 1, -w.re));
            }
            terms.push(BallTerm { var: k, entries: re });
            terms.push(BallTerm { var: k + 1, entries: im });
        }
    }
    p.balls.push(BallConstraint {
        name: "data_fit".into(),
        radius: eta.sqrt(),
        center,
        terms,
    });
}

fn check_data(y: &ComplexMatrix, omega: &PhaseControlMatrix, eta: f64) -> Result<(), SdpError> {
    if y.cols() != omega.slots() {
        return Err(SdpError::InvalidProblem(format!(
            "Y has {} columns but Omega has {} slots",
            y.cols(),
            omega.slots()
        )));
    }
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(SdpError::InvalidProblem(format!("eta must be positive, got {eta}")));
    }
    Ok(())
}

/// Value problem of the partially decoupled atomic norm of a fixed `H`:
/// `min (1/2N_R) tr T_NR(t) + (1/2N_BN_U) tr T_[NB,NU](T)` subject to
/// `[[T_NR(t), Hᴴ], [H, T_[NB,NU](T)]] ⪰ 0`.
pub fn build_pdan_value(h: &ComplexMatrix, n_b: usize, n_u: usize) -> Result<ConicProblem, SdpError> {
    check_bu(h.rows(), n_b, n_u)?;
    let n_r = h.cols();
    let n_bu = h.rows();
    let mut p = ConicProblem::new();
    let mut psd = PsdConstraint {
        name: "pdan".into(),
        size: n_r + n_bu,
        constant: Vec::new(),
        terms: Vec::new(),
    };
    let t_off = add_toeplitz(&mut p, &mut psd, VAR_T_R, &[n_r], 0);
    let tt_off = add_toeplitz(&mut p, &mut psd, VAR_T_BU, &[n_b, n_u], n_r);
    constant_offdiag(&mut psd, h, n_r, 0);
    weighted_trace_objective(&mut p, t_off, &[n_r], &scaled_identity(n_r));
    weighted_trace_objective(&mut p, tt_off, &[n_b, n_u], &scaled_identity(n_bu));
    p.psd.push(psd);
    p.init_scale = 1.0 + h.frobenius_norm();
    Ok(p)
}

/// Weighted PDANM problem: objective `½tr(W_R T_NR(t)) + ½tr(W_BU T_[NB,NU](T))`
/// over `(t, T, H)` with the PSD coupling and `‖Y − HΩ‖_F ≤ √η`.
pub fn build_wpdanm(
    y: &ComplexMatrix,
    omega: &PhaseControlMatrix,
    eta: f64,
    n_b: usize,
    n_u: usize,
    w_r: &ComplexMatrix,
    w_bu: &ComplexMatrix,
) -> Result<ConicProblem, SdpError> {
    check_bu(y.rows(), n_b, n_u)?;
    check_data(y, omega, eta)?;
    let n_r = omega.n_r();
    let n_bu = y.rows();
    check_weight(w_r, n_r, "W_R")?;
    check_weight(w_bu, n_bu, "W_BU")?;
    let mut p = ConicProblem::new();
    let mut psd = PsdConstraint {
        name: "pdan".into(),
        size: n_r + n_bu,
        constant: Vec::new(),
        terms: Vec::new(),
    };
    let t_off = add_toeplitz(&mut p, &mut psd, VAR_T_R, &[n_r], 0);
    let tt_off = add_toeplitz(&mut p, &mut psd, VAR_T_BU, &[n_b, n_u], n_r);
    let h_off = add_offdiag_matrix(&mut p, &mut psd, n_bu, n_r, n_r, 0);
    weighted_trace_objective(&mut p, t_off, &[n_r], w_r);
    weighted_trace_objective(&mut p, tt_off, &[n_b, n_u], w_bu);
    p.psd.push(psd);
    add_data_fit(&mut p, h_off, y, omega.matrix(), eta);
    p.init_scale = 1.0 + y.frobenius_norm();
    Ok(p)
}

/// PDANM problem: [`build_wpdanm`] with `W_R = I/N_R`, `W_BU = I/(N_B N_U)`.
pub fn build_pdanm(
    y: &ComplexMatrix,
    omega: &PhaseControlMatrix,
    eta: f64,
    n_b: usize,
    n_u: usize,
) -> Result<ConicProblem, SdpError> {
    let n_r = omega.n_r();
    build_wpdanm(y, omega, eta, n_b, n_u, &scaled_identity(n_r), &scaled_identity(y.rows()))
}

/// 2D atomic norm problem:
/// `min (1/2N_BN_U) tr T_[NB,NU](T) + ½ tr Q` subject to
/// `[[T_[NB,NU](T), H], [Hᴴ, Q]] ⪰ 0` and the data-fit ball.
pub fn build_anm2d(
    y: &ComplexMatrix,
    omega: &PhaseControlMatrix,
    eta: f64,
    n_b: usize,
    n_u: usize,
) -> Result<ConicProblem, SdpError> {
    check_bu(y.rows(), n_b, n_u)?;
    check_data(y, omega, eta)?;
    let n_r = omega.n_r();
    let n_bu = y.rows();
    let mut p = ConicProblem::new();
    let mut psd = PsdConstraint {
        name: "anm2d".into(),
        size: n_bu + n_r,
        constant: Vec::new(),
        terms: Vec::new(),
    };
    let tt_off = add_toeplitz(&mut p, &mut psd, VAR_T_BU, &[n_b, n_u], 0);
    let h_off = add_offdiag_matrix(&mut p, &mut psd, n_bu, n_r, 0, n_bu);
    let q_off = add_hermitian(&mut p, &mut psd, VAR_Q, n_r, n_bu);
    weighted_trace_objective(&mut p, tt_off, &[n_b, n_u], &scaled_identity(n_bu));
    for i in 0..n_r {
        p.objective[q_off + i] = 0.5;
    }
    p.psd.push(psd);
    add_data_fit(&mut p, h_off, y, omega.matrix(), eta);
    p.init_scale = 1.0 + y.frobenius_norm();
    Ok(p)
}

/// 3D atomic norm problem:
/// `min ½u + (1/2N_RN_BN_U) tr T_[NR,NB,NU](T)` subject to
/// `[[u, vec(H)ᴴ], [vec(H), T_[NR,NB,NU](T)]] ⪰ 0` and the data-fit ball.
/// `vec` stacks columns, so its index is `n_r·N_BN_U + (n_b·N_U + n_u)`.
#[allow(clippy::too_many_arguments)]
pub fn build_anm3d(
    y: &ComplexMatrix,
    omega: &PhaseControlMatrix,
    eta: f64,
    n_b: usize,
    n_u: usize,
    size_cap: usize,
) -> Result<ConicProblem, SdpError> {
    check_bu(y.rows(), n_b, n_u)?;
    check_data(y, omega, eta)?;
    let n_r = omega.n_r();
    let n_bu = y.rows();
    let total = n_bu * n_r;
    if total > size_cap {
        return Err(SdpError::SizeCapExceeded { size: total, cap: size_cap });
    }
    let mut p = ConicProblem::new();
    let mut psd = PsdConstraint {
        name: "anm3d".into(),
        size: 1 + total,
        constant: Vec::new(),
        terms: Vec::new(),
    };
    let u_off = p.add_block(VAR_U, BlockKind::Scalar);
    psd.terms.push(PsdTerm {
        var: u_off,
        entries: vec![entry(0, 0, one())],
    });
    let dims = [n_r, n_b, n_u];
    let tt_off = add_toeplitz(&mut p, &mut psd, VAR_T_BU, &dims, 1);
    let h_off = p.add_block(VAR_H, BlockKind::Complex { rows: n_bu, cols: n_r });
    for i in 0..n_bu {
        for j in 0..n_r {
            let k = h_off + 2 * (i * n_r + j);
            let pos = 1 + j * n_bu + i;
            psd.terms.push(PsdTerm {
                var: k,
                entries: vec![entry(pos, 0, one()), entry(0, pos, one())],
            });
            psd.terms.push(PsdTerm {
                var: k + 1,
                entries: vec![entry(pos, 0, C64::new(0.0, 1.0)), entry(0, pos, C64::new(0.0, -1.0))],
            });
        }
    }
    p.objective[u_off] = 0.5;
    weighted_trace_objective(&mut p, tt_off, &dims, &scaled_identity(total));
    p.psd.push(psd);
    add_data_fit(&mut p, h_off, y, omega.matrix(), eta);
    p.init_scale = 1.0 + y.frobenius_norm();
    Ok(p)
}

/// 1D relaxation of the PDAN value problem: the BS/UE block is a free Hermitian `Q`.
pub fn build_an1d_value(h: &ComplexMatrix) -> Result<ConicProblem, SdpError> {
    let n_r = h.cols();
    let n_bu = h.rows();
    if n_r == 0 || n_bu == 0 {
        return Err(SdpError::InvalidProblem("empty channel matrix".into()));
    }
    let mut p = ConicProblem::new();
    let mut psd = PsdConstraint {
        name: "an1d".into(),
        size: n_r + n_bu,
        constant: Vec::new(),
        terms: Vec::new(),
    };
    let t_off = add_toeplitz(&mut p, &mut psd, VAR_T_R, &[n_r], 0);
    let q_off = add_hermitian(&mut p, &mut psd, VAR_Q, n_bu, n_r);
    constant_offdiag(&mut psd, h, n_r, 0);
    weighted_trace_objective(&mut p, t_off, &[n_r], &scaled_identity(n_r));
    for i in 0..n_bu {
        p.objective[q_off + i] = 0.5 / n_bu as f64;
    }
    p.psd.push(psd);
    p.init_scale = 1.0 + h.frobenius_norm();
    Ok(p)
}

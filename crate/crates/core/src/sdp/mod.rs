//! Conic programs for the atomic-norm estimators and the interior-point solver.

mod builders;
mod problem;
mod solver;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{hermitian_eigenvalues, ComplexMatrix, LinalgError};
use crate::toeplitz::MultiLevelToeplitzGenerator;

pub use builders::{
    build_an1d_value, build_anm2d, build_anm3d, build_pdan_value, build_pdanm, build_wpdanm, ANM3D_DEFAULT_CAP,
    VAR_H, VAR_Q, VAR_T_BU, VAR_T_R, VAR_U,
};
pub use problem::{
    decode_complex, decode_hermitian, decode_toeplitz, BallConstraint, BallTerm, BlockKind, ConicProblem,
    PsdConstraint, PsdTerm, VarBlock,
};
pub use solver::solve;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("missing or mistyped variable block: {0}")]
    MissingBlock(String),
    #[error("problem size {size} exceeds the cap {cap}")]
    SizeCapExceeded { size: usize, cap: usize },
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Interior-point stopping rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Bound on `max(⟨s,z⟩, |pcost − dcost|) / (1 + |pcost|)`.
    pub gap_tol: f64,
    /// Bound on the relative primal and dual residuals.
    pub feas_tol: f64,
    pub max_iters: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-7,
            feas_tol: 1e-7,
            max_iters: 100,
            step_fraction: 0.98,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), SdpError> {
        if !(self.gap_tol > 0.0 && self.feas_tol > 0.0) {
            return Err(SdpError::InvalidOptions("tolerances must be positive".into()));
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return Err(SdpError::InvalidOptions("step_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    NumericalFailure,
}

/// Progress of one interior-point iteration, measured before its step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Step length taken from this iterate (0 for the final one).
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub x: Vec<f64>,
    pub blocks: Vec<VarBlock>,
    pub psd_slacks: Vec<ComplexMatrix>,
    pub psd_duals: Vec<ComplexMatrix>,
    pub ball_slacks: Vec<Vec<f64>>,
    pub ball_duals: Vec<Vec<f64>>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Complementarity `⟨s, z⟩`.
    pub gap: f64,
    pub relative_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub wall_time: Duration,
    pub history: Vec<IterationRecord>,
}

impl ConicSolution {
    fn block(&self, name: &str) -> Result<&VarBlock, SdpError> {
        self.blocks
            .iter()
            .find(|b| b.name == name)
            .ok_or_else(|| SdpError::MissingBlock(name.to_string()))
    }

    pub fn toeplitz(&self, name: &str) -> Result<MultiLevelToeplitzGenerator, SdpError> {
        decode_toeplitz(self.block(name)?, &self.x)
    }

    pub fn complex(&self, name: &str) -> Result<ComplexMatrix, SdpError> {
        decode_complex(self.block(name)?, &self.x)
    }

    pub fn hermitian(&self, name: &str) -> Result<ComplexMatrix, SdpError> {
        decode_hermitian(self.block(name)?, &self.x)
    }

    pub fn scalar(&self, name: &str) -> Result<f64, SdpError> {
        let b = self.block(name)?;
        match b.kind {
            BlockKind::Scalar => Ok(self.x[b.offset]),
            _ => Err(SdpError::MissingBlock(format!("{name} is not a scalar block"))),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Estimate triple of a PDANM solve: the RIS generator `t`, the BS/UE
/// generator `T` and the channel `H`.
pub fn extract_pdanm(
    sol: &ConicSolution,
) -> Result<(MultiLevelToeplitzGenerator, MultiLevelToeplitzGenerator, ComplexMatrix), SdpError> {
    Ok((sol.toeplitz(VAR_T_R)?, sol.toeplitz(VAR_T_BU)?, sol.complex(VAR_H)?))
}

/// Optimality conditions recomputed from a problem and a returned solution,
/// independently of the solver's internal bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// `‖F0 + Fx − s‖ / max(1, ‖F0‖)`.
    pub primal_residual: f64,
    /// `‖c − Fᵀz‖ / max(1, ‖c‖)`.
    pub dual_residual: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `|pcost − dcost| / (1 + |pcost|)`.
    pub relative_gap: f64,
    /// Most negative eigenvalue (or cone margin) over all slacks, relative to their scale.
    pub min_slack_margin: f64,
    /// Most negative eigenvalue (or cone margin) over all duals, relative to their scale.
    pub min_dual_margin: f64,
}

/// Recomputes residuals, objectives and cone membership of `sol` for `p`.
pub fn kkt_residuals(p: &ConicProblem, sol: &ConicSolution) -> Result<KktReport, SdpError> {
    if sol.x.len() != p.num_vars || sol.psd_slacks.len() != p.psd.len() || sol.ball_slacks.len() != p.balls.len() {
        return Err(SdpError::InvalidProblem("solution does not match the problem".into()));
    }
    let mut rp2 = 0.0;
    let mut f0n2 = 0.0;
    let mut dual_cost = p.objective_offset;
    let mut ftz = vec![0.0; p.num_vars];
    let mut slack_margin = f64::INFINITY;
    let mut dual_margin = f64::INFINITY;
    for (k, c) in p.psd.iter().enumerate() {
        let fx = p.psd_value(k, &sol.x);
        let f0 = problem::dense_from_entries(c.size, &c.constant);
        let z = &sol.psd_duals[k];
        rp2 += (&fx - &sol.psd_slacks[k]).frobenius_norm().powi(2);
        f0n2 += f0.frobenius_norm().powi(2);
        dual_cost -= f0.inner_real(z);
        for t in &c.terms {
            ftz[t.var] += t.entries.iter().map(|e| (e.value.conj() * z[(e.row, e.col)]).re).sum::<f64>();
        }
        let es = hermitian_eigenvalues(&sol.psd_slacks[k].hermitian_part())?;
        let ez = hermitian_eigenvalues(&z.hermitian_part())?;
        slack_margin = slack_margin.min(es[es.len() - 1] / es[0].abs().max(1.0));
        dual_margin = dual_margin.min(ez[ez.len() - 1] / ez[0].abs().max(1.0));
    }
    for (k, b) in p.balls.iter().enumerate() {
        let u = p.ball_value(k, &sol.x);
        let s = &sol.ball_slacks[k];
        let z = &sol.ball_duals[k];
        rp2 += (b.radius - s[0]).powi(2) + u.iter().zip(&s[1..]).map(|(a, c)| (a - c).powi(2)).sum::<f64>();
        f0n2 += b.radius.powi(2) + b.center.iter().map(|v| v * v).sum::<f64>();
        dual_cost -= b.radius * z[0] + b.center.iter().zip(&z[1..]).map(|(a, c)| a * c).sum::<f64>();
        for t in &b.terms {
            ftz[t.var] += t.entries.iter().map(|&(r, a)| a * z[1 + r]).sum::<f64>();
        }
        let margin = |v: &[f64]| (v[0] - v[1..].iter().map(|x| x * x).sum::<f64>().sqrt()) / v[0].abs().max(1.0);
        slack_margin = slack_margin.min(margin(s));
        dual_margin = dual_margin.min(margin(z));
    }
    let rd = p.objective.iter().zip(&ftz).map(|(c, f)| (c - f).powi(2)).sum::<f64>().sqrt();
    let cn = p.objective.iter().map(|v| v * v).sum::<f64>().sqrt();
    let pcost = p.objective_value(&sol.x);
    Ok(KktReport {
        primal_residual: rp2.sqrt() / f0n2.sqrt().max(1.0),
        dual_residual: rd / cn.max(1.0),
        primal_objective: pcost,
        dual_objective: dual_cost,
        relative_gap: (pcost - dual_cost).abs() / (1.0 + pcost.abs()),
        min_slack_margin: slack_margin,
        min_dual_margin: dual_margin,
    })
}

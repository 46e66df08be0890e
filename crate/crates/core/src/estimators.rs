//! Channel estimators built on the conic programs of [`crate::sdp`]:
//! PDANM, reweighted PDANM, reweighted PDANM with adaptive phase control,
//! and the 2D/3D atomic-norm baselines.

use std::hash::{DefaultHasher, Hash, Hasher};
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{
    complex_gaussian, nmse, random_phase_matrix, steering_vector_cos, ChannelError, PhaseControlMatrix, SystemConfig,
};
use crate::linalg::{hermitian_eig, inverse_hermitian_pd, ComplexMatrix, LinalgError};
use crate::sdp::{
    build_anm2d, build_anm3d, build_pdanm, build_wpdanm, extract_pdanm, solve, ConicProblem, ConicSolution, SdpError, SolveStatus,
    SolverOptions, ANM3D_DEFAULT_CAP, VAR_H,
};
use crate::toeplitz::{root_music, MultiLevelToeplitzGenerator, ToeplitzError};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("invalid estimator configuration: {0}")]
    InvalidConfig(String),
    #[error("weight update is unsafe: eigenvalue {eigenvalue} is at or below -eps = {neg_eps}")]
    UnsafeWeights { eigenvalue: f64, neg_eps: f64 },
    #[error("sounder failure: {0}")]
    Sounder(String),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Toeplitz(#[from] ToeplitzError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// How the data-fit radius `η` is chosen for a problem with `B` slots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum EtaRule {
    /// `η = (N_BN_UB + 2√(N_BN_UB))·σ²/P`.
    Noise,
    Fixed { eta: f64 },
}

impl EtaRule {
    pub fn eta(&self, n_bu: usize, slots: usize, noise_var: f64) -> f64 {
        match *self {
            EtaRule::Noise => {
                let m = (n_bu * slots) as f64;
                (m + 2.0 * m.sqrt()) * noise_var
            }
            EtaRule::Fixed { eta } => eta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub n_b: usize,
    pub n_u: usize,
    /// Per-entry noise variance `σ²/P` of the observations.
    pub noise_var: f64,
    pub eta_rule: EtaRule,
    pub max_iters_reweight: usize,
    pub eps0: f64,
    /// APC stops halving `ε` once it reaches `eps_floor_factor·σ²`.
    pub eps_floor_factor: f64,
    /// Convergence threshold `ε_H`; the test compares against `σ²·ε_H`.
    pub conv_tol: f64,
    pub b0: usize,
    pub b_max: usize,
    pub rank_tol: f64,
    pub anm3d_cap: usize,
    pub solver: SolverOptions,
    /// Keep every conic problem and solution in [`EstimateResult::solves`].
    #[serde(default)]
    pub record_solves: bool,
}

impl EstimatorConfig {
    /// Defaults for a system: `B₀ = N_R/2`, `B_max = N_R`.
    pub fn for_system(sys: &SystemConfig) -> Self {
        Self {
            n_b: sys.n_b,
            n_u: sys.n_u,
            noise_var: sys.noise_var(),
            eta_rule: EtaRule::Noise,
            max_iters_reweight: 10,
            eps0: 1.0,
            eps_floor_factor: 0.1,
            conv_tol: 1e-3,
            b0: (sys.n_r / 2).max(1),
            b_max: sys.n_r,
            rank_tol: ESTIMATOR_RANK_TOL,
            anm3d_cap: ANM3D_DEFAULT_CAP,
            solver: SolverOptions::default(),
            record_solves: false,
        }
    }

    pub fn n_bu(&self) -> usize {
        self.n_b * self.n_u
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        let bad = |m: &str| Err(EstimatorError::InvalidConfig(m.to_string()));
        if self.n_b == 0 || self.n_u == 0 {
            return bad("array sizes must be positive");
        }
        if self.b0 == 0 || self.b0 > self.b_max {
            return bad("need 1 <= b0 <= b_max");
        }
        if !(self.noise_var >= 0.0) {
            return bad("noise variance must be nonnegative");
        }
        if !(self.eps0 > 0.0 && self.eps_floor_factor > 0.0 && self.conv_tol > 0.0 && self.rank_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if let EtaRule::Fixed { eta } = self.eta_rule {
            if !(eta > 0.0) {
                return bad("fixed eta must be positive");
            }
        }
        if self.max_iters_reweight == 0 {
            return bad("max_iters_reweight must be at least 1");
        }
        self.solver.validate()?;
        Ok(())
    }

    pub fn eta(&self, slots: usize) -> f64 {
        self.eta_rule.eta(self.n_bu(), slots, self.noise_var)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateStatus {
    /// Single-shot estimate from an optimal solve.
    Optimal,
    /// Reweighting stopped on the relative-change test.
    Converged,
    /// Reweighting hit its iteration limit.
    MaxIterations,
    /// APC stopped because the next probe would exceed the slot budget.
    BudgetExhausted,
    /// APC found no differential angles to probe.
    DegenerateRank,
    /// The last solve did not reach optimal status.
    SolverNotOptimal,
}

impl EstimateStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimateStatus::Optimal => "optimal",
            EstimateStatus::Converged => "converged",
            EstimateStatus::MaxIterations => "max_iterations",
            EstimateStatus::BudgetExhausted => "budget_exhausted",
            EstimateStatus::DegenerateRank => "degenerate_rank",
            EstimateStatus::SolverNotOptimal => "solver_not_optimal",
        }
    }

    /// Whether the estimate comes from optimal solves only.
    pub fn is_success(&self) -> bool {
        !matches!(self, EstimateStatus::SolverNotOptimal)
    }
}

/// One solve of an estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub iteration: usize,
    pub objective: f64,
    pub h_hat: ComplexMatrix,
    /// Filled by [`EstimateResult::attach_oracle`].
    pub nmse: Option<f64>,
    /// Regularization `ε` of the weights used in this solve (`None` for unweighted solves).
    pub eps: Option<f64>,
    /// Hash of the weight matrices used in this solve.
    pub weight_hash: Option<u64>,
    pub slots: usize,
    /// Numerical rank of the RIS-side Toeplitz estimate, when computed.
    pub rank: Option<usize>,
    pub solver_status: SolveStatus,
    pub solver_iterations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateResult {
    pub h_hat: ComplexMatrix,
    /// Estimated differential angles in `[0, π]`, ascending in cosine.
    pub psi_hat: Vec<f64>,
    pub t_gen: Option<MultiLevelToeplitzGenerator>,
    pub t_bu_gen: Option<MultiLevelToeplitzGenerator>,
    pub history: Vec<IterationSummary>,
    pub slots_used: usize,
    pub wall_time: Duration,
    pub solver_iterations: usize,
    pub status: EstimateStatus,
    /// Conic problems and solutions, when [`EstimatorConfig::record_solves`] is set.
    #[serde(skip)]
    pub solves: Vec<RecordedSolve>,
}

#[derive(Debug, Clone)]
pub struct RecordedSolve {
    pub problem: ConicProblem,
    pub solution: ConicSolution,
}

impl EstimateResult {
    /// Fills the per-iteration NMSE against the true channel.
    pub fn attach_oracle(&mut self, h: &ComplexMatrix) -> Result<(), EstimatorError> {
        for it in &mut self.history {
            it.nmse = Some(nmse(&it.h_hat, h)?);
        }
        Ok(())
    }

    pub fn nmse(&self, h: &ComplexMatrix) -> Result<f64, EstimatorError> {
        Ok(nmse(&self.h_hat, h)?)
    }

    /// Same result with the wall-clock time zeroed, for reproducibility checks.
    pub fn without_timing(mut self) -> Self {
        self.wall_time = Duration::ZERO;
        self
    }
}

/// Source of training observations for adaptive phase control.
pub trait Sounder {
    /// Sounds one slot per column of `omega_add`; returns the `N_BN_U × k` observations.
    fn request(&mut self, omega_add: &PhaseControlMatrix) -> Result<ComplexMatrix, EstimatorError>;
    /// Total slots consumed so far.
    fn slots_used(&self) -> usize;
}

/// Simulated sounding of a fixed effective channel with Gaussian noise.
#[derive(Debug, Clone)]
pub struct SimulatedSounder {
    h: ComplexMatrix,
    noise_var: f64,
    rng: ChaCha8Rng,
    slots: usize,
    max_slots: Option<usize>,
}

impl SimulatedSounder {
    pub fn new(h: ComplexMatrix, noise_var: f64, rng: ChaCha8Rng) -> Self {
        Self {
            h,
            noise_var,
            rng,
            slots: 0,
            max_slots: None,
        }
    }

    /// Refuses requests beyond `max_slots` in total.
    pub fn with_limit(mut self, max_slots: usize) -> Self {
        self.max_slots = Some(max_slots);
        self
    }

    pub fn channel(&self) -> &ComplexMatrix {
        &self.h
    }
}

impl Sounder for SimulatedSounder {
    fn request(&mut self, omega_add: &PhaseControlMatrix) -> Result<ComplexMatrix, EstimatorError> {
        if omega_add.n_r() != self.h.cols() {
            return Err(EstimatorError::Sounder(format!(
                "request has {} rows, channel has {} RIS elements",
                omega_add.n_r(),
                self.h.cols()
            )));
        }
        let k = omega_add.slots();
        if let Some(max) = self.max_slots {
            if self.slots + k > max {
                return Err(EstimatorError::Sounder(format!(
                    "request of {k} slots exceeds the limit {max} ({} used)",
                    self.slots
                )));
            }
        }
        let mut y = &self.h * omega_add.matrix();
        if self.noise_var > 0.0 {
            let sd = self.noise_var.sqrt();
            for z in y.data_mut() {
                *z += complex_gaussian(&mut self.rng) * sd;
            }
        }
        self.slots += k;
        Ok(y)
    }

    fn slots_used(&self) -> usize {
        self.slots
    }
}

/// `W_R = (𝒯_{N_R}(t) + εI)⁻¹`, `W_BU = (𝒯_{[N_B,N_U]}(T) + εI)⁻¹`.
pub fn weight_update(
    t_gen: &MultiLevelToeplitzGenerator,
    t_bu_gen: &MultiLevelToeplitzGenerator,
    eps: f64,
) -> Result<(ComplexMatrix, ComplexMatrix), EstimatorError> {
    if !(eps > 0.0) {
        return Err(EstimatorError::InvalidConfig(format!("eps must be positive, got {eps}")));
    }
    let inv = |g: &MultiLevelToeplitzGenerator| -> Result<ComplexMatrix, EstimatorError> {
        let m = g.hermitian_symmetrized().realize().hermitian_part();
        let (vals, _) = hermitian_eig(&m)?;
        let lmin = vals.last().copied().unwrap_or(0.0);
        if lmin <= -eps {
            return Err(EstimatorError::UnsafeWeights {
                eigenvalue: lmin,
                neg_eps: -eps,
            });
        }
        let shifted = &m + &ComplexMatrix::identity(m.rows()).scale_real(eps);
        Ok(inverse_hermitian_pd(&shifted)?.hermitian_part())
    };
    Ok((inv(t_gen)?, inv(t_bu_gen)?))
}

fn weight_hash(w_r: &ComplexMatrix, w_bu: &ComplexMatrix) -> u64 {
    let mut h = DefaultHasher::new();
    for z in w_r.data().iter().chain(w_bu.data()) {
        z.re.to_bits().hash(&mut h);
        z.im.to_bits().hash(&mut h);
    }
    h.finish()
}

fn check_data(y: &ComplexMatrix, omega: &PhaseControlMatrix, cfg: &EstimatorConfig) -> Result<(), EstimatorError> {
    cfg.validate()?;
    if y.rows() != cfg.n_bu() || y.cols() != omega.slots() {
        return Err(EstimatorError::InvalidConfig(format!(
            "Y is {}x{}, expected {}x{}",
            y.rows(),
            y.cols(),
            cfg.n_bu(),
            omega.slots()
        )));
    }
    Ok(())
}

/// Relative eigenvalue threshold for reading the number of paths off a
/// noisy RIS-side Toeplitz estimate.
pub const ESTIMATOR_RANK_TOL: f64 = 1e-2;

/// Number of eigenvalues above `rank_tol·λ_max` in a spectrum sorted descending.
pub fn numerical_rank(vals: &[f64], rank_tol: f64) -> usize {
    let lmax = vals.first().copied().unwrap_or(0.0);
    if !(lmax > 0.0) {
        return 0;
    }
    vals.iter().filter(|&&v| v > rank_tol * lmax).count()
}

/// Numerical rank of a Hermitian Toeplitz estimate and the root-MUSIC cosines of its range.
fn rank_and_cosines(t: &ComplexMatrix, rank_tol: f64) -> Result<(usize, Vec<f64>), EstimatorError> {
    let (vals, vecs) = hermitian_eig(t)?;
    let n = t.rows();
    let rank = numerical_rank(&vals, rank_tol);
    if rank == 0 || rank >= n {
        return Ok((rank, Vec::new()));
    }
    let noise = vecs.submatrix(0, rank, n, n - rank);
    Ok((rank, root_music(&noise, rank)?))
}

fn psi_from(t_gen: &MultiLevelToeplitzGenerator, rank_tol: f64) -> Vec<f64> {
    match rank_and_cosines(&t_gen.hermitian_symmetrized().realize(), rank_tol) {
        Ok((_, cosines)) => cosines.iter().map(|x| x.acos()).collect(),
        Err(e) => {
            log::debug!("no differential angles from the RIS-side estimate: {e}");
            Vec::new()
        }
    }
}

/// Solves a PDANM-type problem, or returns the exact zero optimizer when `‖Y‖²_F ≤ η`.
struct Solved {
    h: ComplexMatrix,
    t: MultiLevelToeplitzGenerator,
    tt: MultiLevelToeplitzGenerator,
    objective: f64,
    status: SolveStatus,
    iterations: usize,
}

fn solve_weighted(
    y: &ComplexMatrix,
    omega: &PhaseControlMatrix,
    cfg: &EstimatorConfig,
    weights: Option<(&ComplexMatrix, &ComplexMatrix)>,
    solves: &mut Vec<RecordedSolve>,
) -> Result<Solved, EstimatorError> {
    let eta = cfg.eta(omega.slots());
    let n_r = omega.n_r();
    if y.frobenius_norm().powi(2) <= eta {
        // the objective is nonnegative and vanishes at zero, which is then feasible
        return Ok(Solved {
            h: ComplexMatrix::zeros(y.rows(), n_r),
            t: MultiLevelToeplitzGenerator::zeros(vec![n_r])?,
            tt: MultiLevelToeplitzGenerator::zeros(vec![cfg.n_b, cfg.n_u])?,
            objective: 0.0,
            status: SolveStatus::Optimal,
            iterations: 0,
        });
    }
    let p = match weights {
        Some((w_r, w_bu)) => build_wpdanm(y, omega, eta, cfg.n_b, cfg.n_u, w_r, w_bu)?,
        None => build_pdanm(y, omega, eta, cfg.n_b, cfg.n_u)?,
    };
    let sol = solve(&p, &cfg.solver)?;
    let (t, tt, h) = extract_pdanm(&sol)?;
    let solved = Solved {
        h,
        t,
        tt,
        objective: sol.primal_objective,
        status: sol.status,
        iterations: sol.iterations,
    };
    if cfg.record_solves {
        solves.push(RecordedSolve {
            problem: p,
            solution: sol,
        });
    }
    Ok(solved)
}

fn relative_change(h: &ComplexMatrix, last: &ComplexMatrix) -> f64 {
    let den = last.frobenius_norm().powi(2);
    let num = (h - last).frobenius_norm().powi(2);
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// PDANM estimate from observations `Y = HΩ + N`.
pub fn pdanm_estimate(
    y: &ComplexMatrix,
    omega: &PhaseControlMatrix,
    cfg: &EstimatorConfig,
) -> Result<EstimateResult, EstimatorError> {
    check_data(y, omega, cfg)?;
    let start = Instant::now();
    let mut solves = Vec::new();
    let s = solve_weighted(y, omega, cfg, None, &mut solves)?;
    let psi_hat = psi_from(&s.t, cfg.rank_tol);
    let status = if s.status == SolveStatus::Optimal {
        EstimateStatus::Optimal
    } else {
        EstimateStatus::SolverNotOptimal
    };
    Ok(EstimateResult {
        history: vec![IterationSummary {
            iteration: 1,
            objective: s.objective,
            h_hat: s.h.clone(),
            nmse: None,
            eps: None,
            weight_hash: None,
            slots: omega.slots(),
            rank: None,
            solver_status: s.status,
            solver_iterations: s.iterations,
        }],
        h_hat: s.h,
        psi_hat,
        t_gen: Some(s.t),
        t_bu_gen: Some(s.tt),
        slots_used: omega.slots(),
        wall_time: start.elapsed(),
        solver_iterations: s.iterations,
        status,
        solves,
    })
}

/// Reweighted PDANM: a sequence of weighted problems with `ε` halved after each.
pub fn rpdanm_estimate(
    y: &ComplexMatrix,
    omega: &PhaseControlMatrix,
    cfg: &EstimatorConfig,
) -> Result<EstimateResult, EstimatorError> {
    check_data(y, omega, cfg)?;
    let start = Instant::now();
    let n_r = omega.n_r();
    let mut w_r = ComplexMatrix::identity(n_r).scale_real(1.0 / n_r as f64);
    let mut w_bu = ComplexMatrix::identity(cfg.n_bu()).scale_real(1.0 / cfg.n_bu() as f64);
    let mut eps = cfg.eps0;
    let mut eps_used: Option<f64> = None;
    let threshold = cfg.noise_var * cfg.conv_tol;
    let mut history: Vec<IterationSummary> = Vec::new();
    let mut last: Option<Solved> = None;
    let mut status = EstimateStatus::MaxIterations;
    let mut total_iters = 0;
    let mut solves = Vec::new();
    for k in 1..=cfg.max_iters_reweight {
        let s = solve_weighted(y, omega, cfg, Some((&w_r, &w_bu)), &mut solves)?;
        total_iters += s.iterations;
        history.push(IterationSummary {
            iteration: k,
            objective: s.objective,
            h_hat: s.h.clone(),
            nmse: None,
            eps: eps_used,
            weight_hash: Some(weight_hash(&w_r, &w_bu)),
            slots: omega.slots(),
            rank: None,
            solver_status: s.status,
            solver_iterations: s.iterations,
        });
        if s.status != SolveStatus::Optimal {
            status = EstimateStatus::SolverNotOptimal;
            if last.is_none() {
                last = Some(s);
            }
            break;
        }
        let converged = last.as_ref().is_some_and(|l| relative_change(&s.h, &l.h) < threshold);
        if converged {
            last = Some(s);
            status = EstimateStatus::Converged;
            break;
        }
        if k < cfg.max_iters_reweight {
            (w_r, w_bu) = weight_update(&s.t, &s.tt, eps)?;
            eps_used = Some(eps);
            eps /= 2.0;
        }
        last = Some(s);
    }
    let s = last.expect("at least one iteration runs");
    Ok(EstimateResult {
        psi_hat: psi_from(&s.t, cfg.rank_tol),
        h_hat: s.h,
        t_gen: Some(s.t),
        t_bu_gen: Some(s.tt),
        history,
        slots_used: omega.slots(),
        wall_time: start.elapsed(),
        solver_iterations: total_iters,
        status,
        solves,
    })
}

/// Reweighted PDANM with adaptive phase control.
///
/// Starts from `B₀` random-phase slots; after each solve, probes the RIS with
/// the steering vectors of the estimated differential angles while the slot
/// budget allows, and re-solves with updated weights on the grown data.
pub fn rpdanm_apc(
    sounder: &mut dyn Sounder,
    cfg: &EstimatorConfig,
    n_r: usize,
    rng: &mut impl Rng,
) -> Result<EstimateResult, EstimatorError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut omega = random_phase_matrix(n_r, cfg.b0, rng);
    let mut y = sounder.request(&omega)?;
    if y.rows() != cfg.n_bu() {
        return Err(EstimatorError::Sounder(format!(
            "sounder returned {} rows, expected {}",
            y.rows(),
            cfg.n_bu()
        )));
    }
    let mut b = cfg.b0;
    let mut w_r = ComplexMatrix::identity(n_r).scale_real(1.0 / n_r as f64);
    let mut w_bu = ComplexMatrix::identity(cfg.n_bu()).scale_real(1.0 / cfg.n_bu() as f64);
    let mut eps = cfg.eps0;
    let eps_floor = cfg.eps_floor_factor * cfg.noise_var;
    let threshold = cfg.noise_var * cfg.conv_tol;
    let mut history = Vec::new();
    let mut total_iters = 0;
    let mut solves = Vec::new();

    let mut solve_step = |y: &ComplexMatrix,
                          omega: &PhaseControlMatrix,
                          w: Option<(&ComplexMatrix, &ComplexMatrix)>,
                          eps: Option<f64>,
                          history: &mut Vec<IterationSummary>|
     -> Result<(Solved, usize, Vec<f64>), EstimatorError> {
        let s = solve_weighted(y, omega, cfg, w, &mut solves)?;
        total_iters += s.iterations;
        let (rank, cosines) = rank_and_cosines(&s.t.hermitian_symmetrized().realize(), cfg.rank_tol)?;
        history.push(IterationSummary {
            iteration: history.len() + 1,
            objective: s.objective,
            h_hat: s.h.clone(),
            nmse: None,
            eps,
            weight_hash: w.map(|(a, c)| weight_hash(a, c)),
            slots: omega.slots(),
            rank: Some(rank),
            solver_status: s.status,
            solver_iterations: s.iterations,
        });
        Ok((s, rank, cosines))
    };

    let (mut cur, mut rank, mut cosines) = solve_step(&y, &omega, Some((&w_r, &w_bu)), Some(eps), &mut history)?;
    let status;
    loop {
        if cur.status != SolveStatus::Optimal {
            status = EstimateStatus::SolverNotOptimal;
            break;
        }
        if rank == 0 {
            status = EstimateStatus::DegenerateRank;
            break;
        }
        if b + rank > cfg.b_max {
            status = EstimateStatus::BudgetExhausted;
            break;
        }
        if cosines.len() != rank {
            // full numerical rank: no subspace split to probe
            status = EstimateStatus::DegenerateRank;
            break;
        }
        if eps > eps_floor {
            eps /= 2.0;
        }
        b += rank;
        let probe = ComplexMatrix::from_fn(n_r, rank, |i, j| steering_vector_cos(n_r, cosines[j])[i]);
        let omega_add = PhaseControlMatrix::new(probe)?;
        let y_add = sounder.request(&omega_add)?;
        (w_r, w_bu) = weight_update(&cur.t, &cur.tt, eps)?;
        omega = omega.concat(&omega_add)?;
        y = y.hconcat(&y_add)?;
        let h_last = cur.h.clone();
        (cur, rank, cosines) = solve_step(&y, &omega, Some((&w_r, &w_bu)), Some(eps), &mut history)?;
        if cur.status == SolveStatus::Optimal && relative_change(&cur.h, &h_last) < threshold {
            status = EstimateStatus::Converged;
            break;
        }
    }
    let psi_hat = if cosines.len() == rank {
        cosines.iter().map(|x| x.acos()).collect()
    } else {
        Vec::new()
    };
    Ok(EstimateResult {
        h_hat: cur.h,
        psi_hat,
        t_gen: Some(cur.t),
        t_bu_gen: Some(cur.tt),
        history,
        slots_used: b,
        wall_time: start.elapsed(),
        solver_iterations: total_iters,
        status,
        solves,
    })
}

fn baseline_result(
    y: &ComplexMatrix,
    omega: &PhaseControlMatrix,
    solved: Option<(ConicProblem, ConicSolution)>,
    record: bool,
    start: Instant,
) -> Result<EstimateResult, EstimatorError> {
    let sol = solved.as_ref().map(|(_, s)| s);
    let (h, objective, solver_status, iterations) = match sol {
        Some(s) => (s.complex(VAR_H)?, s.primal_objective, s.status, s.iterations),
        None => (ComplexMatrix::zeros(y.rows(), omega.n_r()), 0.0, SolveStatus::Optimal, 0),
    };
    Ok(EstimateResult {
        history: vec![IterationSummary {
            iteration: 1,
            objective,
            h_hat: h.clone(),
            nmse: None,
            eps: None,
            weight_hash: None,
            slots: omega.slots(),
            rank: None,
            solver_status,
            solver_iterations: iterations,
        }],
        h_hat: h,
        psi_hat: Vec::new(),
        t_gen: None,
        t_bu_gen: None,
        slots_used: omega.slots(),
        wall_time: start.elapsed(),
        solver_iterations: iterations,
        status: if solver_status == SolveStatus::Optimal {
            EstimateStatus::Optimal
        } else {
            EstimateStatus::SolverNotOptimal
        },
        solves: match solved {
            Some((problem, solution)) if record => vec![RecordedSolve { problem, solution }],
            _ => Vec::new(),
        },
    })
}

/// ANM-2D baseline: 2-level Toeplitz atoms on the BS/UE side, free RIS side.
pub fn anm2d_estimate(
    y: &ComplexMatrix,
    omega: &PhaseControlMatrix,
    cfg: &EstimatorConfig,
) -> Result<EstimateResult, EstimatorError> {
    check_data(y, omega, cfg)?;
    let start = Instant::now();
    let eta = cfg.eta(omega.slots());
    let solved = if y.frobenius_norm().powi(2) <= eta {
        None
    } else {
        let problem = build_anm2d(y, omega, eta, cfg.n_b, cfg.n_u)?;
        let sol = solve(&problem, &cfg.solver)?;
        Some((problem, sol))
    };
    baseline_result(y, omega, solved, cfg.record_solves, start)
}

/// ANM-3D baseline: 3-level Toeplitz atoms over all three arrays.
pub fn anm3d_estimate(
    y: &ComplexMatrix,
    omega: &PhaseControlMatrix,
    cfg: &EstimatorConfig,
) -> Result<EstimateResult, EstimatorError> {
    check_data(y, omega, cfg)?;
    let start = Instant::now();
    let eta = cfg.eta(omega.slots());
    let problem = build_anm3d(y, omega, eta, cfg.n_b, cfg.n_u, cfg.anm3d_cap)?;
    let solved = if y.frobenius_norm().powi(2) <= eta {
        None
    } else {
        let sol = solve(&problem, &cfg.solver)?;
        Some((problem, sol))
    };
    baseline_result(y, omega, solved, cfg.record_solves, start)
}

//! Sweep execution: one task per (grid point, trial), rows per method.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use pdanm_core::channel::{effective_channel, random_phase_matrix, sample_channel, synthesize_from_matrix};
use pdanm_core::estimators::{
    anm2d_estimate, anm3d_estimate, pdanm_estimate, rpdanm_apc, rpdanm_estimate, EstimateResult, EstimatorConfig,
    EstimatorError, SimulatedSounder,
};
use pdanm_core::ComplexMatrix;

use crate::spec::{ExperimentSpec, GridPoint, Method, Scenario};
use crate::BenchError;

/// Column order of the result CSV.
pub const RESULT_COLUMNS: [&str; 18] = [
    "scenario",
    "method",
    "n_b",
    "n_u",
    "n_r",
    "l_br",
    "l_ru",
    "snr_db",
    "slots",
    "b0",
    "b_max",
    "iteration",
    "trial",
    "nmse",
    "slots_used",
    "wall_time_ms",
    "solver_iterations",
    "status",
];

pub const STATUS_SKIPPED: &str = "skipped";
pub const STATUS_ERROR: &str = "error";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: Scenario,
    pub method: Method,
    pub n_b: usize,
    pub n_u: usize,
    pub n_r: usize,
    pub l_br: usize,
    pub l_ru: usize,
    pub snr_db: f64,
    /// Training slots of non-adaptive methods.
    pub slots: Option<usize>,
    pub b0: Option<usize>,
    pub b_max: Option<usize>,
    /// Estimator iteration, for per-iteration scenarios.
    pub iteration: Option<usize>,
    pub trial: usize,
    pub nmse: Option<f64>,
    pub slots_used: usize,
    pub wall_time_ms: f64,
    pub solver_iterations: usize,
    pub status: String,
}

impl ResultRow {
    /// Whether the row carries a usable estimate.
    pub fn is_valid(&self) -> bool {
        self.nmse.is_some_and(f64::is_finite)
            && self.status != STATUS_SKIPPED
            && self.status != STATUS_ERROR
            && self.status != "solver_not_optimal"
    }
}

/// Seed of a (grid point, trial) cell; independent of the method so that
/// methods see the same channels and noise.
pub fn cell_seed(spec: &ExperimentSpec, p: &GridPoint, trial: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(spec.seed.to_le_bytes());
    h.update(spec.scenario.as_str().as_bytes());
    for v in [p.n_b, p.n_u, p.n_r, p.l_br, p.l_ru, trial] {
        h.update((v as u64).to_le_bytes());
    }
    h.update(p.snr_db.to_bits().to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

fn sub_seed(seed: u64, tag: &str) -> u64 {
    let d = Sha256::new().chain_update(seed.to_le_bytes()).chain_update(tag.as_bytes()).finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

fn estimator_config(spec: &ExperimentSpec, p: &GridPoint) -> EstimatorConfig {
    let mut cfg = EstimatorConfig::for_system(&p.system());
    cfg.b0 = p.b0();
    cfg.b_max = p.b_max();
    cfg.anm3d_cap = spec.anm3d_cap;
    cfg
}

/// Rows of every method at one grid point and trial.
pub fn run_cell(spec: &ExperimentSpec, p: &GridPoint, trial: usize) -> Vec<ResultRow> {
    let seed = cell_seed(spec, p, trial);
    let sys = p.system();
    let cfg = estimator_config(spec, p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = effective_channel(&sample_channel(&sys, &mut rng), &sys).h;
    let omega = random_phase_matrix(sys.n_r, p.slots(), &mut rng);
    let y = synthesize_from_matrix(&h, &omega, sys.noise_var(), &mut rng).map(|s| s.y);

    let mut rows = Vec::new();
    for &method in spec.methods_at(p) {
        let apc = method == Method::RpdanmApc;
        let base = ResultRow {
            scenario: spec.scenario,
            method,
            n_b: p.n_b,
            n_u: p.n_u,
            n_r: p.n_r,
            l_br: p.l_br,
            l_ru: p.l_ru,
            snr_db: p.snr_db,
            slots: (!apc).then(|| p.slots()),
            b0: apc.then(|| p.b0()),
            b_max: apc.then(|| p.b_max()),
            iteration: None,
            trial,
            nmse: None,
            slots_used: 0,
            wall_time_ms: 0.0,
            solver_iterations: 0,
            status: String::new(),
        };
        if method == Method::Anm3d && p.n_b * p.n_u * p.n_r > spec.anm3d_cap {
            log::info!(
                "skipping anm3d at n_b={} n_u={} n_r={}: size {} exceeds cap {}",
                p.n_b,
                p.n_u,
                p.n_r,
                p.n_b * p.n_u * p.n_r,
                spec.anm3d_cap
            );
            rows.push(ResultRow {
                status: STATUS_SKIPPED.into(),
                ..base
            });
            continue;
        }
        let result = match &y {
            Ok(y) => estimate(method, y, &omega, &cfg, &h, seed),
            Err(e) => Err(EstimatorError::Channel(e.clone())),
        };
        match result.and_then(|mut r| r.attach_oracle(&h).map(|_| r)) {
            Ok(r) => rows.extend(rows_from(spec, base, &r, &h)),
            Err(e) => {
                log::warn!("{method} failed at {p:?}, trial {trial}: {e}");
                rows.push(ResultRow {
                    status: STATUS_ERROR.into(),
                    ..base
                });
            }
        }
    }
    rows
}

fn estimate(
    method: Method,
    y: &ComplexMatrix,
    omega: &pdanm_core::channel::PhaseControlMatrix,
    cfg: &EstimatorConfig,
    h: &ComplexMatrix,
    seed: u64,
) -> Result<EstimateResult, EstimatorError> {
    match method {
        Method::Anm2d => anm2d_estimate(y, omega, cfg),
        Method::Anm3d => anm3d_estimate(y, omega, cfg),
        Method::Pdanm => pdanm_estimate(y, omega, cfg),
        Method::Rpdanm => rpdanm_estimate(y, omega, cfg),
        Method::RpdanmApc => {
            let noise = ChaCha8Rng::seed_from_u64(sub_seed(seed, "sounder"));
            let mut sounder = SimulatedSounder::new(h.clone(), cfg.noise_var, noise).with_limit(cfg.b_max);
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, "phases"));
            rpdanm_apc(&mut sounder, cfg, omega.n_r(), &mut rng)
        }
    }
}

fn rows_from(spec: &ExperimentSpec, base: ResultRow, r: &EstimateResult, h: &ComplexMatrix) -> Vec<ResultRow> {
    let wall_time_ms = if spec.record_timing {
        r.wall_time.as_secs_f64() * 1e3
    } else {
        0.0
    };
    let status = r.status.as_str().to_string();
    if spec.scenario.per_iteration() {
        r.history
            .iter()
            .map(|it| ResultRow {
                iteration: Some(it.iteration),
                nmse: it.nmse,
                slots_used: it.slots,
                wall_time_ms,
                solver_iterations: it.solver_iterations,
                status: status.clone(),
                ..base.clone()
            })
            .collect()
    } else {
        vec![ResultRow {
            nmse: r.nmse(h).ok(),
            slots_used: r.slots_used,
            wall_time_ms,
            solver_iterations: r.solver_iterations,
            status,
            ..base
        }]
    }
}

/// Runs every (grid point, trial) cell on `jobs` worker threads (0: all cores).
///
/// Rows come back ordered by grid point, trial, method and iteration
/// regardless of the number of workers.
pub fn run_experiment(spec: &ExperimentSpec, jobs: usize) -> Result<Vec<ResultRow>, BenchError> {
    spec.validate()?;
    let cells: Vec<(usize, usize)> = (0..spec.grid.len())
        .flat_map(|g| (0..spec.trials).map(move |t| (g, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| BenchError::InvalidSpec(format!("cannot start {jobs} workers: {e}")))?;
    let rows: Vec<Vec<ResultRow>> =
        pool.install(|| cells.par_iter().map(|&(g, t)| run_cell(spec, &spec.grid[g], t)).collect());
    Ok(rows.into_iter().flatten().collect())
}

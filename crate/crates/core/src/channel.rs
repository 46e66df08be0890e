//! Channel generation, the effective (phase-decoupled) channel, and the
//! slot-based sounding model.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{khatri_rao, kron_vec, ComplexMatrix, LinalgError, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("phase shift must have unit modulus (entry {index} has modulus {modulus})")]
    NotUnitModulus { index: usize, modulus: f64 },
    #[error("xi = {xi} is outside the admissible range [-{zeta}, {zeta}]")]
    InadmissibleShift { xi: f64, zeta: f64 },
    #[error("kappa must be nonzero")]
    ZeroKappa,
    #[error("pilot matrix is not orthogonal (Gram deviation {0})")]
    NonOrthogonalPilots(f64),
    #[error("reference channel is zero")]
    ZeroReference,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Array sizes, path counts, power and noise level of one simulated link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_b: usize,
    pub n_u: usize,
    pub n_r: usize,
    pub l_br: usize,
    pub l_ru: usize,
    /// Transmit power per antenna (linear).
    pub power: f64,
    /// Noise variance (linear).
    pub sigma2: f64,
    /// Symbols per slot; only used by [`symbol_level_sounding`].
    pub symbols_per_slot: Option<usize>,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n_b: 4,
            n_u: 4,
            n_r: 16,
            l_br: 2,
            l_ru: 2,
            power: 1.0,
            sigma2: snr_to_sigma2(1.0, 30.0),
            symbols_per_slot: None,
            seed: 0,
        }
    }
}

impl SystemConfig {
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.sigma2 = snr_to_sigma2(self.power, snr_db);
        self
    }

    /// Rejects zero counts, nonpositive power and negative noise. Emits a
    /// warning when the path count exceeds what the arrays can identify.
    pub fn validate(&self) -> Result<(), ChannelError> {
        let counts = [
            ("n_b", self.n_b),
            ("n_u", self.n_u),
            ("n_r", self.n_r),
            ("l_br", self.l_br),
            ("l_ru", self.l_ru),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(ChannelError::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        if !(self.power > 0.0) || !self.power.is_finite() {
            return Err(ChannelError::InvalidConfig(format!("power must be positive, got {}", self.power)));
        }
        if !(self.sigma2 >= 0.0) || !self.sigma2.is_finite() {
            return Err(ChannelError::InvalidConfig(format!("sigma2 must be nonnegative, got {}", self.sigma2)));
        }
        if !self.is_identifiable() {
            log::warn!(
                "{} effective paths with N_B*N_U = {} and N_R = {} may not be identifiable",
                self.l_br * self.l_ru,
                self.n_b * self.n_u,
                self.n_r
            );
        }
        Ok(())
    }

    pub fn is_identifiable(&self) -> bool {
        self.l_br * self.l_ru < (self.n_b * self.n_u).min(self.n_r)
    }

    pub fn n_bu(&self) -> usize {
        self.n_b * self.n_u
    }

    /// Per-entry variance of the despread noise, `σ²/P`.
    pub fn noise_var(&self) -> f64 {
        self.sigma2 / self.power
    }
}

/// Ground-truth angles (radians, in `[0, π]`) and complex gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub theta_b: Vec<f64>,
    pub phi_r: Vec<f64>,
    pub theta_r: Vec<f64>,
    pub phi_u: Vec<f64>,
    pub rho_br: Vec<C64>,
    pub rho_ru: Vec<C64>,
}

impl ChannelRealization {
    pub fn l_br(&self) -> usize {
        self.rho_br.len()
    }

    pub fn l_ru(&self) -> usize {
        self.rho_ru.len()
    }
}

/// Phase-decoupled channel `H` with `vec(H_RU diag(ω) H_BR) = H ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveChannel {
    /// `N_B·N_U × N_R`.
    pub h: ComplexMatrix,
    /// Differential angles, indexed by `l_BR·L_RU + l_RU`.
    pub psi_r: Vec<f64>,
    /// Effective gains `ρ_BR ⊗ ρ_RU`, same indexing as `psi_r`.
    pub rho_bu: Vec<C64>,
}

/// RIS phase control matrix with unit-modulus entries, one column per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseControlMatrix {
    omega: ComplexMatrix,
}

impl PhaseControlMatrix {
    pub const MODULUS_TOL: f64 = 1e-12;

    pub fn new(omega: ComplexMatrix) -> Result<Self, ChannelError> {
        check_unit_modulus(omega.data())?;
        Ok(Self { omega })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.omega
    }

    pub fn n_r(&self) -> usize {
        self.omega.rows()
    }

    pub fn slots(&self) -> usize {
        self.omega.cols()
    }

    /// Appends the columns of `other`.
    pub fn concat(&self, other: &PhaseControlMatrix) -> Result<Self, ChannelError> {
        Ok(Self {
            omega: self.omega.hconcat(&other.omega)?,
        })
    }
}

/// Stacked despread observations `Y = H Ω + N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceivedSignal {
    pub y: ComplexMatrix,
    /// Per-entry noise variance `σ²/P`.
    pub noise_var: f64,
}

fn check_unit_modulus(v: &[C64]) -> Result<(), ChannelError> {
    for (index, z) in v.iter().enumerate() {
        let modulus = z.norm();
        if (modulus - 1.0).abs() > PhaseControlMatrix::MODULUS_TOL {
            return Err(ChannelError::NotUnitModulus { index, modulus });
        }
    }
    Ok(())
}

/// Standard complex Gaussian sample, `CN(0, 1)`.
pub fn complex_gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// ULA steering vector parameterized directly by `x = cos θ`.
pub fn steering_vector_cos(n: usize, x: f64) -> Vec<C64> {
    (0..n).map(|k| C64::from_polar(1.0, PI * k as f64 * x)).collect()
}

/// Steering vector of an `n`-element half-wavelength ULA: entry `k` is `exp(iπ k cos θ)`.
pub fn steering_vector(n: usize, theta: f64) -> Vec<C64> {
    steering_vector_cos(n, theta.cos())
}

/// Matrix whose columns are steering vectors at the given angles.
pub fn steering_matrix(n: usize, angles: &[f64]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n, angles.len());
    for (j, &a) in angles.iter().enumerate() {
        m.set_column(j, &steering_vector(n, a));
    }
    m
}

/// Draws i.i.d. uniform angles on `[0, π]` and `CN(0, 1)` gains.
pub fn sample_channel(config: &SystemConfig, rng: &mut impl Rng) -> ChannelRealization {
    let mut angles = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(0.0..=PI)).collect() };
    let theta_b = angles(config.l_br);
    let phi_r = angles(config.l_br);
    let theta_r = angles(config.l_ru);
    let phi_u = angles(config.l_ru);
    let rho_br = (0..config.l_br).map(|_| complex_gaussian(rng)).collect();
    let rho_ru = (0..config.l_ru).map(|_| complex_gaussian(rng)).collect();
    ChannelRealization {
        theta_b,
        phi_r,
        theta_r,
        phi_u,
        rho_br,
        rho_ru,
    }
}

/// `H_BR = A(φ_R) diag(ρ_BR) Aᴴ(θ_B)` (`N_R × N_B`) and
/// `H_RU = A(φ_U) diag(ρ_RU) Aᴴ(θ_R)` (`N_U × N_R`).
pub fn build_link_channels(r: &ChannelRealization, config: &SystemConfig) -> (ComplexMatrix, ComplexMatrix) {
    let a_phi_r = steering_matrix(config.n_r, &r.phi_r);
    let a_theta_b = steering_matrix(config.n_b, &r.theta_b);
    let a_phi_u = steering_matrix(config.n_u, &r.phi_u);
    let a_theta_r = steering_matrix(config.n_r, &r.theta_r);
    let h_br = &(&a_phi_r * &ComplexMatrix::from_diag(&r.rho_br)) * &a_theta_b.adjoint();
    let h_ru = &(&a_phi_u * &ComplexMatrix::from_diag(&r.rho_ru)) * &a_theta_r.adjoint();
    (h_br, h_ru)
}

/// Cascaded channel `H_RU diag(ω) H_BR` for one RIS phase vector (`N_U × N_B`).
pub fn cascaded_channel(
    r: &ChannelRealization,
    config: &SystemConfig,
    omega_b: &[C64],
) -> Result<ComplexMatrix, ChannelError> {
    if omega_b.len() != config.n_r {
        return Err(ChannelError::DimensionMismatch(format!(
            "phase vector has {} entries, RIS has {}",
            omega_b.len(),
            config.n_r
        )));
    }
    check_unit_modulus(omega_b)?;
    let (h_br, h_ru) = build_link_channels(r, config);
    Ok(&(&h_ru * &ComplexMatrix::from_diag(omega_b)) * &h_br)
}

/// Wraps `x` into `(−1, 1]` modulo 2.
pub fn wrap_cos(x: f64) -> f64 {
    let mut w = x - 2.0 * ((x + 1.0) / 2.0).floor();
    if w <= -1.0 {
        w += 2.0;
    }
    w
}

/// Cosines of the differential angles, `cos θ_R,k − cos φ_R,l` wrapped modulo 2,
/// ordered by `l·L_RU + k`.
pub fn differential_cosines(r: &ChannelRealization) -> Vec<f64> {
    let mut out = Vec::with_capacity(r.l_br() * r.l_ru());
    for &phi in &r.phi_r {
        for &theta in &r.theta_r {
            out.push(wrap_cos(theta.cos() - phi.cos()));
        }
    }
    out
}

/// Effective channel `[conj A_NB(θ_B) ⊗ A_NU(φ_U)] diag(ρ_BU) Aᴴ_NR(ψ_R)`.
pub fn effective_channel(r: &ChannelRealization, config: &SystemConfig) -> EffectiveChannel {
    let cos_psi = differential_cosines(r);
    let mut rho_bu = Vec::with_capacity(cos_psi.len());
    let mut h = ComplexMatrix::zeros(config.n_bu(), config.n_r);
    for (l, (&rb, &theta_b)) in r.rho_br.iter().zip(&r.theta_b).enumerate() {
        let a_b: Vec<C64> = steering_vector(config.n_b, theta_b).iter().map(|z| z.conj()).collect();
        for (k, (&ru, &phi_u)) in r.rho_ru.iter().zip(&r.phi_u).enumerate() {
            let g = rb * ru;
            rho_bu.push(g);
            let left = kron_vec(&a_b, &steering_vector(config.n_u, phi_u));
            let right = steering_vector_cos(config.n_r, cos_psi[l * r.l_ru() + k]);
            for (i, &x) in left.iter().enumerate() {
                for (j, &y) in right.iter().enumerate() {
                    h[(i, j)] += g * x * y.conj();
                }
            }
        }
    }
    EffectiveChannel {
        h,
        psi_r: cos_psi.iter().map(|c| c.acos()).collect(),
        rho_bu,
    }
}

/// `H_BRᵀ ⋄ H_RU`, the effective channel computed from the link matrices.
pub fn effective_channel_from_links(r: &ChannelRealization, config: &SystemConfig) -> ComplexMatrix {
    let (h_br, h_ru) = build_link_channels(r, config);
    khatri_rao(&h_br.transpose(), &h_ru).expect("link channels share the RIS dimension")
}

/// Largest admissible `|ξ|` for [`ambiguity_transform`].
pub fn ambiguity_zeta(r: &ChannelRealization) -> f64 {
    r.phi_r
        .iter()
        .chain(&r.theta_r)
        .map(|a| {
            let c = a.cos();
            (1.0 - c).min(1.0 + c)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Scales `ρ_BR` by `κ`, `ρ_RU` by `1/κ` and shifts every RIS-side cosine by `ξ`.
/// The cascaded channel is unchanged for every phase vector.
pub fn ambiguity_transform(r: &ChannelRealization, kappa: C64, xi: f64) -> Result<ChannelRealization, ChannelError> {
    if kappa.norm() == 0.0 {
        return Err(ChannelError::ZeroKappa);
    }
    let zeta = ambiguity_zeta(r);
    if !(xi.abs() <= zeta) {
        return Err(ChannelError::InadmissibleShift { xi, zeta });
    }
    let shift = |a: &f64| (a.cos() + xi).clamp(-1.0, 1.0).acos();
    Ok(ChannelRealization {
        theta_b: r.theta_b.clone(),
        phi_r: r.phi_r.iter().map(shift).collect(),
        theta_r: r.theta_r.iter().map(shift).collect(),
        phi_u: r.phi_u.clone(),
        rho_br: r.rho_br.iter().map(|&g| g * kappa).collect(),
        rho_ru: r.rho_ru.iter().map(|&g| g / kappa).collect(),
    })
}

/// `Y = H Ω + N` with `N` i.i.d. `CN(0, σ²/P)`.
pub fn synthesize_received(
    h: &EffectiveChannel,
    omega: &PhaseControlMatrix,
    config: &SystemConfig,
    rng: &mut impl Rng,
) -> Result<ReceivedSignal, ChannelError> {
    synthesize_from_matrix(&h.h, omega, config.noise_var(), rng)
}

/// [`synthesize_received`] for a bare channel matrix.
pub fn synthesize_from_matrix(
    h: &ComplexMatrix,
    omega: &PhaseControlMatrix,
    noise_var: f64,
    rng: &mut impl Rng,
) -> Result<ReceivedSignal, ChannelError> {
    if omega.n_r() != h.cols() {
        return Err(ChannelError::DimensionMismatch(format!(
            "Omega has {} rows, H has {} columns",
            omega.n_r(),
            h.cols()
        )));
    }
    let mut y = h.try_matmul(omega.matrix())?;
    if noise_var > 0.0 {
        let sd = noise_var.sqrt();
        for z in y.data_mut() {
            *z += complex_gaussian(rng) * sd;
        }
    }
    Ok(ReceivedSignal { y, noise_var })
}

/// Scaled DFT pilots `S` (`n_b × m`, `m ≥ n_b`) with `S Sᴴ = P I`.
pub fn dft_pilots(n_b: usize, m: usize, power: f64) -> ComplexMatrix {
    let scale = (power / m as f64).sqrt();
    ComplexMatrix::from_fn(n_b, m, |i, j| {
        C64::from_polar(scale, -2.0 * PI * (i * j) as f64 / m as f64)
    })
}

/// Symbol-level sounding of one slot followed by despreading with `Sᴴ/P`.
/// Returns the `N_U × N_B` despread observation.
pub fn symbol_level_sounding(
    r: &ChannelRealization,
    s_b: &ComplexMatrix,
    omega_b: &[C64],
    config: &SystemConfig,
    rng: &mut impl Rng,
) -> Result<ComplexMatrix, ChannelError> {
    if s_b.rows() != config.n_b {
        return Err(ChannelError::DimensionMismatch(format!(
            "pilot matrix has {} rows, BS has {} antennas",
            s_b.rows(),
            config.n_b
        )));
    }
    let gram = s_b * &s_b.adjoint();
    let dev = (&gram - &ComplexMatrix::identity(config.n_b).scale_real(config.power)).max_abs();
    if dev > 1e-8 * config.power {
        return Err(ChannelError::NonOrthogonalPilots(dev));
    }
    let h_b = cascaded_channel(r, config, omega_b)?;
    let mut z = &h_b * s_b;
    if config.sigma2 > 0.0 {
        let sd = config.sigma2.sqrt();
        for v in z.data_mut() {
            *v += complex_gaussian(rng) * sd;
        }
    }
    Ok((&z * &s_b.adjoint()).scale_real(1.0 / config.power))
}

/// `n_r × b` matrix of i.i.d. uniform unit-modulus phases.
pub fn random_phase_matrix(n_r: usize, b: usize, rng: &mut impl Rng) -> PhaseControlMatrix {
    let omega = ComplexMatrix::from_fn(n_r, b, |_, _| C64::from_polar(1.0, rng.random_range(0.0..2.0 * PI)));
    PhaseControlMatrix { omega }
}

/// `‖Ĥ − H‖²_F / ‖H‖²_F`.
pub fn nmse(h_hat: &ComplexMatrix, h: &ComplexMatrix) -> Result<f64, ChannelError> {
    if h_hat.shape() != h.shape() {
        return Err(ChannelError::DimensionMismatch(format!(
            "{:?} vs {:?}",
            h_hat.shape(),
            h.shape()
        )));
    }
    let den = h.frobenius_norm().powi(2);
    if den == 0.0 {
        return Err(ChannelError::ZeroReference);
    }
    Ok((h_hat - h).frobenius_norm().powi(2) / den)
}

/// `σ² = P · 10^(−SNR/10)`.
pub fn snr_to_sigma2(power: f64, snr_db: f64) -> f64 {
    power * 10f64.powf(-snr_db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    fn small_config() -> SystemConfig {
        SystemConfig {
            n_b: 3,
            n_u: 2,
            n_r: 8,
            l_br: 2,
            l_ru: 3,
            ..SystemConfig::default()
        }
    }

    #[test]
    fn steering_vector_examples() {
        assert!(steering_vector(4, PI / 2.0).iter().all(|&z| close(z, C64::new(1.0, 0.0))));
        let v = steering_vector(2, 0.0);
        assert!(close(v[0], C64::new(1.0, 0.0)) && close(v[1], C64::new(-1.0, 0.0)));
        let v = steering_vector(3, PI / 3.0);
        assert!(close(v[1], C64::new(0.0, 1.0)) && close(v[2], C64::new(-1.0, 0.0)));
    }

    #[test]
    fn sampling_is_reproducible_and_in_range() {
        let cfg = SystemConfig::default();
        let a = sample_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(3));
        let b = sample_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        for x in a.theta_b.iter().chain(&a.phi_r).chain(&a.theta_r).chain(&a.phi_u) {
            assert!((0.0..=PI).contains(x));
        }
    }

    #[test]
    fn sampling_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cfg = SystemConfig {
            l_br: 1,
            l_ru: 1,
            ..SystemConfig::default()
        };
        let (mut power, mut angle, n) = (0.0, 0.0, 100_000);
        for _ in 0..n {
            let r = sample_channel(&cfg, &mut rng);
            power += r.rho_br[0].norm_sqr();
            angle += r.theta_b[0];
        }
        assert!((power / n as f64 - 1.0).abs() < 0.03);
        assert!((angle / n as f64 / (PI / 2.0) - 1.0).abs() < 0.01);
    }

    #[test]
    fn link_channels_single_path_is_outer_product() {
        let cfg = SystemConfig {
            l_br: 1,
            l_ru: 1,
            ..small_config()
        };
        let r = ChannelRealization {
            theta_b: vec![0.4],
            phi_r: vec![1.1],
            theta_r: vec![2.0],
            phi_u: vec![0.2],
            rho_br: vec![C64::new(1.0, 0.0)],
            rho_ru: vec![C64::new(1.0, 0.0)],
        };
        let (h_br, _) = build_link_channels(&r, &cfg);
        let a = steering_vector(cfg.n_r, 1.1);
        let b = steering_vector(cfg.n_b, 0.4);
        for i in 0..cfg.n_r {
            for j in 0..cfg.n_b {
                assert!(close(h_br[(i, j)], a[i] * b[j].conj()));
            }
        }
    }

    #[test]
    fn link_channels_match_double_loop() {
        let cfg = small_config();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = sample_channel(&cfg, &mut rng);
        let (h_br, h_ru) = build_link_channels(&r, &cfg);
        for i in 0..cfg.n_r {
            for j in 0..cfg.n_b {
                let mut s = C64::new(0.0, 0.0);
                for l in 0..cfg.l_br {
                    s += r.rho_br[l]
                        * C64::from_polar(1.0, PI * i as f64 * r.phi_r[l].cos())
                        * C64::from_polar(1.0, -PI * j as f64 * r.theta_b[l].cos());
                }
                assert!(close(h_br[(i, j)], s));
            }
        }
        assert_eq!(h_ru.shape(), (cfg.n_u, cfg.n_r));
        let zero = ChannelRealization {
            rho_br: vec![C64::new(0.0, 0.0); cfg.l_br],
            ..r
        };
        assert_eq!(build_link_channels(&zero, &cfg).0.max_abs(), 0.0);
    }

    #[test]
    fn cascaded_channel_vec_identity() {
        let cfg = small_config();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let r = sample_channel(&cfg, &mut rng);
            let omega = random_phase_matrix(cfg.n_r, 1, &mut rng).matrix().column(0);
            let casc = cascaded_channel(&r, &cfg, &omega).unwrap();
            let h = effective_channel(&r, &cfg);
            let hw = h.h.matvec(&omega);
            for (a, b) in casc.vec().iter().zip(&hw) {
                assert!((a - b).norm() < 1e-10);
            }
        }
        let ones = vec![C64::new(1.0, 0.0); cfg.n_r];
        let r = sample_channel(&cfg, &mut rng);
        let (h_br, h_ru) = build_link_channels(&r, &cfg);
        assert!((&cascaded_channel(&r, &cfg, &ones).unwrap() - &(&h_ru * &h_br)).max_abs() < 1e-12);
        assert!(cascaded_channel(&r, &cfg, &ones[1..]).is_err());
        let mut bad = ones.clone();
        bad[0] = C64::new(0.5, 0.0);
        assert!(matches!(
            cascaded_channel(&r, &cfg, &bad),
            Err(ChannelError::NotUnitModulus { .. })
        ));
    }

    #[test]
    fn differential_angle_examples() {
        let mk = |ct: f64, cp: f64| ChannelRealization {
            theta_b: vec![0.0],
            phi_r: vec![cp.acos()],
            theta_r: vec![ct.acos()],
            phi_u: vec![0.0],
            rho_br: vec![C64::new(1.0, 0.0)],
            rho_ru: vec![C64::new(1.0, 0.0)],
        };
        let cfg = SystemConfig {
            l_br: 1,
            l_ru: 1,
            ..small_config()
        };
        let e = effective_channel(&mk(0.3, 0.5), &cfg);
        assert!((e.psi_r[0] - (-0.2f64).acos()).abs() < 1e-12);
        let e = effective_channel(&mk(-0.9, 0.9), &cfg);
        assert!((e.psi_r[0] - 0.2f64.acos()).abs() < 1e-12);
        assert_eq!(wrap_cos(1.0), 1.0);
        assert_eq!(wrap_cos(-1.0), 1.0);
        assert!((wrap_cos(1.5) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn effective_channel_matches_khatri_rao() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for cfg in [small_config(), SystemConfig::default()] {
            for _ in 0..50 {
                let r = sample_channel(&cfg, &mut rng);
                let h = effective_channel(&r, &cfg).h;
                let k = effective_channel_from_links(&r, &cfg);
                assert!((&h - &k).frobenius_norm() <= 1e-10 * h.frobenius_norm());
            }
        }
    }

    #[test]
    fn effective_gain_ordering() {
        let cfg = small_config();
        let r = sample_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(8));
        let e = effective_channel(&r, &cfg);
        for l in 0..cfg.l_br {
            for k in 0..cfg.l_ru {
                assert_eq!(e.rho_bu[l * cfg.l_ru + k], r.rho_br[l] * r.rho_ru[k]);
            }
        }
    }

    #[test]
    fn ambiguity_examples() {
        let cfg = small_config();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r = sample_channel(&cfg, &mut rng);
        assert_eq!(ambiguity_transform(&r, C64::new(1.0, 0.0), 0.0).unwrap().rho_br, r.rho_br);
        let omega = random_phase_matrix(cfg.n_r, 1, &mut rng).matrix().column(0);
        let base = cascaded_channel(&r, &cfg, &omega).unwrap();
        let zeta = ambiguity_zeta(&r);
        for (kappa, xi) in [(C64::new(2.0, 0.0), 0.0), (C64::new(1.0, 0.0), 0.1f64.min(zeta))] {
            let t = ambiguity_transform(&r, kappa, xi).unwrap();
            let c = cascaded_channel(&t, &cfg, &omega).unwrap();
            assert!((&c - &base).frobenius_norm() <= 1e-12 * base.frobenius_norm().max(1.0));
        }
        assert_eq!(
            ambiguity_transform(&r, C64::new(0.0, 0.0), 0.0).unwrap_err(),
            ChannelError::ZeroKappa
        );
        assert!(matches!(
            ambiguity_transform(&r, C64::new(1.0, 0.0), zeta + 1e-3),
            Err(ChannelError::InadmissibleShift { .. })
        ));
    }

    #[test]
    fn noiseless_synthesis_is_exact() {
        let cfg = SystemConfig {
            sigma2: 0.0,
            ..small_config()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let e = effective_channel(&sample_channel(&cfg, &mut rng), &cfg);
        let omega = random_phase_matrix(cfg.n_r, 5, &mut rng);
        let y = synthesize_received(&e, &omega, &cfg, &mut rng).unwrap();
        assert_eq!(y.y, &e.h * omega.matrix());
        assert_eq!(y.noise_var, 0.0);
    }

    #[test]
    fn noise_variance_matches_config() {
        for (power, sigma2) in [(1.0, 1e-3), (2.0, 0.5)] {
            let cfg = SystemConfig {
                power,
                sigma2,
                ..small_config()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let e = EffectiveChannel {
                h: ComplexMatrix::zeros(cfg.n_bu(), cfg.n_r),
                psi_r: vec![],
                rho_bu: vec![],
            };
            let omega = random_phase_matrix(cfg.n_r, 2000, &mut rng);
            let y = synthesize_received(&e, &omega, &cfg, &mut rng).unwrap();
            let var = y.y.data().iter().map(|z| z.norm_sqr()).sum::<f64>() / y.y.data().len() as f64;
            assert!((var / (sigma2 / power) - 1.0).abs() < 0.05, "var {var}");
        }
    }

    #[test]
    fn dft_pilots_are_orthogonal() {
        let s = dft_pilots(4, 4, 2.0);
        let g = &s * &s.adjoint();
        assert!((&g - &ComplexMatrix::identity(4).scale_real(2.0)).max_abs() < 1e-12);
    }

    #[test]
    fn symbol_level_sounding_matches_despread_model() {
        let cfg = SystemConfig {
            sigma2: 0.0,
            ..small_config()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let r = sample_channel(&cfg, &mut rng);
        let omega = random_phase_matrix(cfg.n_r, 1, &mut rng).matrix().column(0);
        let s = dft_pilots(cfg.n_b, 5, cfg.power);
        let y = symbol_level_sounding(&r, &s, &omega, &cfg, &mut rng).unwrap();
        let h = cascaded_channel(&r, &cfg, &omega).unwrap();
        assert!((&y - &h).max_abs() < 1e-12);
        let bad = ComplexMatrix::from_fn(cfg.n_b, 5, |_, _| C64::new(1.0, 0.0));
        assert!(matches!(
            symbol_level_sounding(&r, &bad, &omega, &cfg, &mut rng),
            Err(ChannelError::NonOrthogonalPilots(_))
        ));
    }

    #[test]
    fn symbol_level_noise_variance() {
        let cfg = SystemConfig {
            power: 2.0,
            sigma2: 0.3,
            ..small_config()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let r = ChannelRealization {
            rho_br: vec![C64::new(0.0, 0.0); cfg.l_br],
            ..sample_channel(&cfg, &mut rng)
        };
        let omega = vec![C64::new(1.0, 0.0); cfg.n_r];
        let s = dft_pilots(cfg.n_b, cfg.n_b, cfg.power);
        let (mut acc, mut count) = (0.0, 0);
        for _ in 0..2000 {
            let y = symbol_level_sounding(&r, &s, &omega, &cfg, &mut rng).unwrap();
            acc += y.data().iter().map(|z| z.norm_sqr()).sum::<f64>();
            count += y.data().len();
        }
        let var = acc / count as f64;
        assert!((var / cfg.noise_var() - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn random_phases() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let w = random_phase_matrix(100, 100, &mut rng);
        assert!(w.matrix().data().iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        let mean: C64 = w.matrix().data().iter().sum::<C64>() / 10_000.0;
        assert!(mean.norm() < 0.05);
        let again = random_phase_matrix(100, 100, &mut ChaCha8Rng::seed_from_u64(14));
        assert_eq!(w, again);
    }

    #[test]
    fn nmse_and_snr() {
        let h = ComplexMatrix::from_real_rows(&[vec![1.0, 2.0]]);
        assert_eq!(nmse(&h, &h).unwrap(), 0.0);
        assert_eq!(nmse(&ComplexMatrix::zeros(1, 2), &h).unwrap(), 1.0);
        assert_eq!(nmse(&h, &ComplexMatrix::zeros(1, 2)).unwrap_err(), ChannelError::ZeroReference);
        assert!((snr_to_sigma2(1.0, 30.0) - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn config_validation() {
        assert!(SystemConfig::default().validate().is_ok());
        assert!(SystemConfig { n_r: 0, ..SystemConfig::default() }.validate().is_err());
        assert!(SystemConfig { power: 0.0, ..SystemConfig::default() }.validate().is_err());
        assert!(SystemConfig { sigma2: -1.0, ..SystemConfig::default() }.validate().is_err());
        let crowded = SystemConfig { l_br: 4, l_ru: 4, ..SystemConfig::default() };
        assert!(crowded.validate().is_ok() && !crowded.is_identifiable());
    }
}

//! Experiment specifications and the preset grids for each scenario.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use pdanm_core::channel::SystemConfig;
use pdanm_core::sdp::ANM3D_DEFAULT_CAP;

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    NmseVsIteration,
    NmseVsSnr,
    RuntimeVsNr,
    NmseVsSlots,
    ApcB0Sweep,
    ApcSlotsVsNr,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::NmseVsIteration,
        Scenario::NmseVsSnr,
        Scenario::RuntimeVsNr,
        Scenario::NmseVsSlots,
        Scenario::ApcB0Sweep,
        Scenario::ApcSlotsVsNr,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::NmseVsIteration => "nmse-vs-iteration",
            Scenario::NmseVsSnr => "nmse-vs-snr",
            Scenario::RuntimeVsNr => "runtime-vs-nr",
            Scenario::NmseVsSlots => "nmse-vs-slots",
            Scenario::ApcB0Sweep => "apc-b0-sweep",
            Scenario::ApcSlotsVsNr => "apc-slots-vs-nr",
        }
    }

    /// Whether rows are emitted per estimator iteration rather than per estimate.
    pub fn per_iteration(&self) -> bool {
        matches!(self, Scenario::NmseVsIteration | Scenario::ApcB0Sweep)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| BenchError::InvalidSpec(format!("unknown scenario {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "anm2d")]
    Anm2d,
    #[serde(rename = "anm3d")]
    Anm3d,
    #[serde(rename = "pdanm")]
    Pdanm,
    #[serde(rename = "rpdanm")]
    Rpdanm,
    #[serde(rename = "rpdanm-apc")]
    RpdanmApc,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Anm2d, Method::Anm3d, Method::Pdanm, Method::Rpdanm, Method::RpdanmApc];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Anm2d => "anm2d",
            Method::Anm3d => "anm3d",
            Method::Pdanm => "pdanm",
            Method::Rpdanm => "rpdanm",
            Method::RpdanmApc => "rpdanm-apc",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One system configuration of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    #[serde(default = "default_n_bu")]
    pub n_b: usize,
    #[serde(default = "default_n_bu")]
    pub n_u: usize,
    #[serde(default = "default_n_r")]
    pub n_r: usize,
    #[serde(default = "default_paths")]
    pub l_br: usize,
    #[serde(default = "default_paths")]
    pub l_ru: usize,
    #[serde(default = "default_snr")]
    pub snr_db: f64,
    /// Training slots of the single-shot and reweighted methods (default `N_R`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slots: Option<usize>,
    /// Initial APC slots (default `N_R/2`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b0: Option<usize>,
    /// APC slot budget (default `N_R`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_max: Option<usize>,
    /// Overrides the spec's method list at this point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<Method>>,
}

fn default_n_bu() -> usize {
    4
}

fn default_n_r() -> usize {
    16
}

fn default_paths() -> usize {
    2
}

fn default_snr() -> f64 {
    30.0
}

impl Default for GridPoint {
    fn default() -> Self {
        Self {
            n_b: 4,
            n_u: 4,
            n_r: 16,
            l_br: 2,
            l_ru: 2,
            snr_db: 30.0,
            slots: None,
            b0: None,
            b_max: None,
            methods: None,
        }
    }
}

impl GridPoint {
    pub fn system(&self) -> SystemConfig {
        SystemConfig {
            n_b: self.n_b,
            n_u: self.n_u,
            n_r: self.n_r,
            l_br: self.l_br,
            l_ru: self.l_ru,
            ..SystemConfig::default()
        }
        .with_snr_db(self.snr_db)
    }

    pub fn slots(&self) -> usize {
        self.slots.unwrap_or(self.n_r)
    }

    pub fn b0(&self) -> usize {
        self.b0.unwrap_or((self.n_r / 2).max(1))
    }

    pub fn b_max(&self) -> usize {
        self.b_max.unwrap_or(self.n_r)
    }

    fn validate(&self) -> Result<(), BenchError> {
        self.system()
            .validate()
            .map_err(|e| BenchError::InvalidSpec(format!("grid point {self:?}: {e}")))?;
        if !self.snr_db.is_finite() {
            return Err(BenchError::InvalidSpec("snr_db must be finite".into()));
        }
        if self.slots() == 0 {
            return Err(BenchError::InvalidSpec("slots must be at least 1".into()));
        }
        if self.b0() == 0 || self.b0() > self.b_max() {
            return Err(BenchError::InvalidSpec(format!(
                "need 1 <= b0 <= b_max, got b0 = {}, b_max = {}",
                self.b0(),
                self.b_max()
            )));
        }
        if self.methods.as_ref().is_some_and(|m| m.is_empty()) {
            return Err(BenchError::InvalidSpec("per-point method list is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub methods: Vec<Method>,
    pub grid: Vec<GridPoint>,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; the CLI falls back to its flag or environment default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Record wall-clock times; when off, `wall_time_ms` is 0 and output is byte-reproducible.
    #[serde(default = "default_true")]
    pub record_timing: bool,
    #[serde(default = "default_cap")]
    pub anm3d_cap: usize,
}

fn default_true() -> bool {
    true
}

fn default_cap() -> usize {
    ANM3D_DEFAULT_CAP
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.trials == 0 {
            return Err(BenchError::InvalidSpec("trials must be at least 1".into()));
        }
        if self.grid.is_empty() {
            return Err(BenchError::InvalidSpec("grid is empty".into()));
        }
        if self.methods.is_empty() {
            return Err(BenchError::InvalidSpec("method list is empty".into()));
        }
        self.grid.iter().try_for_each(GridPoint::validate)
    }

    pub fn methods_at<'a>(&'a self, p: &'a GridPoint) -> &'a [Method] {
        p.methods.as_deref().unwrap_or(&self.methods)
    }

    pub fn from_json(s: &str) -> Result<Self, BenchError> {
        let spec: Self = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    /// Default sweep for a scenario.
    pub fn preset(scenario: Scenario) -> Self {
        let apc = |n_r: usize, b0: usize, b_max: usize| GridPoint {
            n_r,
            b0: Some(b0),
            b_max: Some(b_max),
            methods: Some(vec![Method::RpdanmApc]),
            ..GridPoint::default()
        };
        let (methods, grid, trials) = match scenario {
            Scenario::NmseVsIteration => (Method::ALL.to_vec(), vec![GridPoint::default()], 10),
            Scenario::NmseVsSnr => (
                Method::ALL.to_vec(),
                (0..=8)
                    .map(|k| GridPoint {
                        snr_db: 5.0 * k as f64,
                        ..GridPoint::default()
                    })
                    .collect(),
                100,
            ),
            Scenario::RuntimeVsNr => (
                Method::ALL.to_vec(),
                [6, 8, 10, 12, 14, 16]
                    .into_iter()
                    .map(|n_r| GridPoint {
                        n_b: 2,
                        n_u: 2,
                        n_r,
                        ..GridPoint::default()
                    })
                    .collect(),
                50,
            ),
            Scenario::NmseVsSlots => {
                let mut grid: Vec<GridPoint> = (1..=8)
                    .map(|k| GridPoint {
                        n_r: 64,
                        slots: Some(8 * k),
                        methods: Some(vec![Method::Anm2d, Method::Pdanm, Method::Rpdanm]),
                        ..GridPoint::default()
                    })
                    .collect();
                for b0 in [8, 12, 16] {
                    for b_max in [16, 24, 32, 48, 64] {
                        if b_max >= b0 {
                            grid.push(apc(64, b0, b_max));
                        }
                    }
                }
                (vec![Method::Anm2d, Method::Pdanm, Method::Rpdanm, Method::RpdanmApc], grid, 100)
            }
            Scenario::ApcB0Sweep => (
                vec![Method::RpdanmApc],
                [2, 4, 8, 16, 32].into_iter().map(|b0| apc(64, b0, 64)).collect(),
                100,
            ),
            Scenario::ApcSlotsVsNr => {
                let mut grid = Vec::new();
                for n_r in [16, 32, 64, 128] {
                    for b0 in [4, 8, 16, 32] {
                        if b0 <= n_r {
                            grid.push(apc(n_r, b0, n_r));
                        }
                    }
                }
                (vec![Method::RpdanmApc], grid, 100)
            }
        };
        Self {
            scenario,
            methods,
            grid,
            trials,
            seed: 0,
            out_dir: None,
            record_timing: true,
            anm3d_cap: ANM3D_DEFAULT_CAP,
        }
    }
}

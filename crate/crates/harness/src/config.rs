//! Scenario files: system dimensions, channel geometry, sweep axis, methods
//! and solver settings.
//!
//! Doppler ranges are given in Hz and converted to ramp units with
//! `κ = ν·L / (M·Δf)`, i.e. the shift across the pilot in units of one
//! sample-rate bin.

use std::fmt;
use std::path::Path;

use otfs_burst::burst_vbi::{HyperParams, PriorMode, RefineSchedule, DEFAULT_REFERENCE_POWER};
use otfs_burst::otfs_model::{ClusterSpec, SystemConfig};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

const FIG2A: &str = include_str!("../configs/fig2a.toml");
const FIG2B: &str = include_str!("../configs/fig2b.toml");
const FIG2C: &str = include_str!("../configs/fig2c.toml");
const RUNTIME: &str = include_str!("../configs/runtime.toml");
const SIM5: &str = include_str!("../configs/sim5.toml");
const SIM6: &str = include_str!("../configs/sim6.toml");
const CONVERGENCE: &str = include_str!("../configs/convergence.toml");

/// Trial count used by `--full`.
pub const FULL_TRIALS: usize = 200;

/// Estimators the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ls,
    L1,
    Ogvbi,
    VectorOgvbi,
    FastVbi,
    Proposed,
    /// Returns the true channel; checks the NMSE plumbing.
    Oracle,
}

impl Method {
    /// The six estimators in the order of the NMSE comparison.
    pub const COMPARED: [Method; 6] =
        [Method::Ls, Method::L1, Method::Ogvbi, Method::VectorOgvbi, Method::FastVbi, Method::Proposed];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ls => "ls",
            Method::L1 => "l1",
            Method::Ogvbi => "ogvbi",
            Method::VectorOgvbi => "vector_ogvbi",
            Method::FastVbi => "fast_vbi",
            Method::Proposed => "proposed",
            Method::Oracle => "oracle",
        }
    }

    /// Whether the method reads the true Doppler values.
    pub fn uses_true_kappa(self) -> bool {
        matches!(self, Method::Ls | Method::L1)
    }

    /// How the channel estimate is formed from the method's output.
    pub fn reconstruction(self) -> &'static str {
        match self {
            Method::Ls | Method::L1 => "tap coefficients on the grid with true tap Doppler",
            Method::Ogvbi => "row estimate projected per tap onto searched Doppler ramps",
            Method::VectorOgvbi => "coefficients at refined angles and refined Doppler offsets",
            Method::FastVbi | Method::Proposed => "coefficients on the refined dictionary",
            Method::Oracle => "true channel",
        }
    }

    /// Default iteration cap.
    pub fn default_cap(self) -> usize {
        match self {
            Method::FastVbi | Method::Proposed => 80,
            _ => 60,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let all = [Method::Oracle].into_iter().chain(Method::COMPARED);
        all.into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| HarnessError::Config(format!("unknown method `{s}`")))
    }
}

/// OTFS frame and array dimensions; the array is a half-wavelength ULA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub subcarriers: usize,
    pub frames: usize,
    pub subcarrier_spacing_hz: f64,
    pub carrier_freq_hz: f64,
    pub pilot_len: usize,
    pub antennas: usize,
    pub angle_grid: usize,
    pub delay_taps: usize,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            subcarriers: 256,
            frames: 128,
            subcarrier_spacing_hz: 15e3,
            carrier_freq_hz: 6e9,
            pilot_len: 40,
            antennas: 40,
            angle_grid: 90,
            delay_taps: 20,
        }
    }
}

impl SystemSection {
    pub fn to_config(&self) -> SystemConfig<f64> {
        SystemConfig::half_wavelength_ula(
            self.subcarriers,
            self.frames,
            self.subcarrier_spacing_hz,
            self.carrier_freq_hz,
            self.pilot_len,
            self.antennas,
            self.angle_grid,
            self.delay_taps,
        )
    }
}

/// Random channel geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSection {
    /// Clusters with random centres and sub-paths spread around them.
    Clusters {
        clusters: usize,
        subpaths: usize,
        spread_deg: f64,
        center_range_deg: [f64; 2],
        /// Inclusive range of delay taps; the upper end is clamped to the delay grid.
        delay_range: [usize; 2],
        doppler_max_hz: f64,
    },
    /// Fixed angles; gains, delays and Dopplers are drawn per trial.
    Paths { aoa_deg: Vec<f64>, delay_range: [usize; 2], doppler_max_hz: f64 },
}

impl Default for ChannelSection {
    fn default() -> Self {
        let c = ClusterSpec::default();
        ChannelSection::Clusters {
            clusters: c.clusters,
            subpaths: c.subpaths,
            spread_deg: c.spread_deg,
            center_range_deg: [c.center_range_deg.0, c.center_range_deg.1],
            delay_range: [c.delay_range.0, c.delay_range.1],
            doppler_max_hz: c.doppler_max_hz,
        }
    }
}

impl ChannelSection {
    /// True angles in degrees for fixed path lists.
    pub fn fixed_angles(&self) -> Option<&[f64]> {
        match self {
            ChannelSection::Paths { aoa_deg, .. } => Some(aoa_deg),
            ChannelSection::Clusters { .. } => None,
        }
    }
}

/// Quantity varied across a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    SnrDb,
    #[serde(rename = "L")]
    PilotLen,
    #[serde(rename = "N_BS")]
    Antennas,
    #[serde(rename = "N_tau")]
    DelayTaps,
    /// Iteration cap applied to every iterative method.
    Iterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// SNR used when the axis is not `snr_db`.
    #[serde(default = "default_snr")]
    pub snr_db: f64,
}

fn default_snr() -> f64 {
    10.0
}

/// Estimator settings shared by the Bayesian methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub c: f64,
    pub d: f64,
    /// Iteration cap of the proposed solver and Fast-VBI.
    pub max_iters: usize,
    /// Iteration cap of OGVBI and Vector-OGVBI.
    pub baseline_max_iters: usize,
    /// Iteration cap of the ℓ1 solver.
    pub l1_max_iters: usize,
    pub tol: f64,
    pub refine_angles: bool,
    pub refine_doppler: bool,
    pub burn_in: usize,
    /// Observation power the Bayesian solvers rescale to; 0 disables rescaling.
    pub reference_power: f64,
    /// Fixed ℓ1 weight; the universal threshold is used when absent.
    pub l1_lambda: Option<f64>,
    /// Allocation budget of the vectorized baseline in MiB.
    pub memory_budget_mib: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            c: 1e-3,
            d: 1e-3,
            max_iters: 80,
            baseline_max_iters: 60,
            l1_max_iters: 2000,
            tol: 1e-6,
            refine_angles: true,
            refine_doppler: true,
            burn_in: 0,
            reference_power: DEFAULT_REFERENCE_POWER,
            l1_lambda: None,
            memory_budget_mib: 1024,
        }
    }
}

impl SolverSection {
    pub fn reference(&self) -> Option<f64> {
        (self.reference_power > 0.0).then_some(self.reference_power)
    }

    /// Hyperparameters of the proposed solver (`Iid` gives Fast-VBI).
    pub fn hyper(&self, prior: PriorMode) -> HyperParams<f64> {
        HyperParams {
            c: self.c,
            d: self.d,
            max_iters: self.max_iters,
            tol: self.tol,
            prior,
            refine: RefineSchedule { angles: self.refine_angles, doppler: self.refine_doppler, burn_in: self.burn_in },
            reference_power: self.reference(),
            ..HyperParams::default()
        }
    }
}

/// One experiment: system, channel model, sweep, methods and trial plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub channel: ChannelSection,
    pub sweep: SweepSection,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub solver: SolverSection,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// NMSE versus SNR with `L = 40`, `N_BS = 40`.
    pub fn figure_2a() -> Self {
        Self::from_toml_str(FIG2A).expect("shipped config")
    }

    /// NMSE versus pilot length with SNR 10 dB, `N_BS = 40`.
    pub fn figure_2b() -> Self {
        Self::from_toml_str(FIG2B).expect("shipped config")
    }

    /// NMSE versus array size with SNR 10 dB, `L = 30`.
    pub fn figure_2c() -> Self {
        Self::from_toml_str(FIG2C).expect("shipped config")
    }

    /// Runtime versus `N_τ`.
    pub fn runtime() -> Self {
        Self::from_toml_str(RUNTIME).expect("shipped config")
    }

    /// Two angular bursts at SNR 5 dB.
    pub fn simulation_5() -> Self {
        Self::from_toml_str(SIM5).expect("shipped config")
    }

    /// One burst plus three isolated paths at SNR 20 dB.
    pub fn simulation_6() -> Self {
        Self::from_toml_str(SIM6).expect("shipped config")
    }

    /// Per-iteration NMSE at SNR 0, 10 and 20 dB.
    pub fn convergence() -> Self {
        Self::from_toml_str(CONVERGENCE).expect("shipped config")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: &str| Err(HarnessError::Config(format!("{}: {msg}", self.id)));
        if self.sweep.values.is_empty() {
            return bad("sweep needs at least one value");
        }
        if self.sweep.values.iter().any(|v| !v.is_finite()) || !self.sweep.snr_db.is_finite() {
            return bad("sweep values must be finite");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty");
        }
        if !matches!(self.sweep.axis, SweepAxis::SnrDb) {
            for &v in &self.sweep.values {
                if v < 1.0 || v.fract() != 0.0 {
                    return bad("integer sweep values must be positive whole numbers");
                }
            }
        }
        if self.solver.max_iters == 0 || self.solver.baseline_max_iters == 0 || self.solver.l1_max_iters == 0 || !(self.solver.tol > 0.0) {
            return bad("iteration caps and tolerance must be positive");
        }
        for &v in &self.sweep.values {
            let cfg = self.system_at(v);
            cfg.validate().map_err(|e| HarnessError::Config(format!("{}: {e}", self.id)))?;
            self.solver_at(v).hyper(PriorMode::HybridBurst).validate().map_err(|e| HarnessError::Config(e.to_string()))?;
            if let ChannelSection::Clusters { .. } = self.channel {
                self.cluster_spec(&cfg)
                    .validate(&cfg)
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", self.id)))?;
            }
        }
        if let ChannelSection::Paths { aoa_deg, .. } = &self.channel {
            if aoa_deg.is_empty() || aoa_deg.iter().any(|a| !(a.abs() <= 90.0)) {
                return bad("path angles must be a nonempty list within [-90, 90] degrees");
            }
        }
        Ok(())
    }

    /// System configuration at one sweep value.
    pub fn system_at(&self, value: f64) -> SystemConfig<f64> {
        let mut sys = self.system.clone();
        let n = value as usize;
        match self.sweep.axis {
            SweepAxis::PilotLen => sys.pilot_len = n,
            SweepAxis::Antennas => sys.antennas = n,
            SweepAxis::DelayTaps => sys.delay_taps = n,
            SweepAxis::SnrDb | SweepAxis::Iterations => {}
        }
        sys.to_config()
    }

    /// Solver settings at one sweep value.
    pub fn solver_at(&self, value: f64) -> SolverSection {
        let mut s = self.solver.clone();
        if self.sweep.axis == SweepAxis::Iterations {
            s.max_iters = value as usize;
            s.baseline_max_iters = value as usize;
            s.l1_max_iters = value as usize;
        }
        s
    }

    pub fn snr_at(&self, value: f64) -> f64 {
        match self.sweep.axis {
            SweepAxis::SnrDb => value,
            _ => self.sweep.snr_db,
        }
    }

    /// Cluster geometry with the delay range clamped to the system's delay grid.
    pub fn cluster_spec(&self, cfg: &SystemConfig<f64>) -> ClusterSpec {
        match &self.channel {
            ChannelSection::Clusters { clusters, subpaths, spread_deg, center_range_deg, delay_range, doppler_max_hz } => {
                ClusterSpec {
                    clusters: *clusters,
                    subpaths: *subpaths,
                    spread_deg: *spread_deg,
                    center_range_deg: (center_range_deg[0], center_range_deg[1]),
                    delay_range: (delay_range[0], delay_range[1].min(cfg.delay_taps)),
                    doppler_max_hz: *doppler_max_hz,
                }
            }
            ChannelSection::Paths { .. } => ClusterSpec::default(),
        }
    }

    /// Trial seed `base_seed ⊕ trial_index`; every sweep value reuses it so
    /// points along a sweep see the same channel draws.
    pub fn trial_seed(&self, trial_index: usize) -> u64 {
        self.base_seed ^ trial_index as u64
    }

    /// Same scenario with `trials` replaced.
    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    /// Same scenario restricted to `methods`.
    pub fn with_methods(mut self, methods: Vec<Method>) -> Self {
        self.methods = methods;
        self
    }

    /// Same scenario with new sweep values.
    pub fn with_values(mut self, values: Vec<f64>) -> Self {
        self.sweep.values = values;
        self
    }
}

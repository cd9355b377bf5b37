use crate::error::{Error, Result};
use crate::scalar::Real;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// OTFS frame and receive-array dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig<T> {
    /// Subcarrier count `M`.
    pub subcarriers: usize,
    /// Frame count `N`.
    pub frames: usize,
    /// Subcarrier spacing in Hz.
    pub subcarrier_spacing: T,
    /// Carrier frequency in Hz.
    pub carrier_freq: T,
    /// Pilot length `L` in samples.
    pub pilot_len: usize,
    /// Receive antennas `N_BS`.
    pub antennas: usize,
    /// Distance of each antenna from the first one, in meters.
    pub spacings: Vec<T>,
    /// Angle-grid size `M_θ`.
    pub angle_grid: usize,
    /// Delay-grid size `N_τ` (largest delay tap).
    pub delay_taps: usize,
}

impl<T: Real> SystemConfig<T> {
    /// Uniform linear array with half-wavelength spacing.
    #[allow(clippy::too_many_arguments)]
    pub fn half_wavelength_ula(
        subcarriers: usize,
        frames: usize,
        subcarrier_spacing: T,
        carrier_freq: T,
        pilot_len: usize,
        antennas: usize,
        angle_grid: usize,
        delay_taps: usize,
    ) -> Self {
        let mut cfg = Self {
            subcarriers,
            frames,
            subcarrier_spacing,
            carrier_freq,
            pilot_len,
            antennas,
            spacings: Vec::new(),
            angle_grid,
            delay_taps,
        };
        cfg.spacings = cfg.ula_spacings(antennas);
        cfg
    }

    /// M=256, N=128, Δf=15 kHz, f0=6 GHz, L=40, N_BS=40, M_θ=90, N_τ=20.
    pub fn reference() -> Self {
        Self::half_wavelength_ula(256, 128, T::of(15e3), T::of(6e9), 40, 40, 90, 20)
    }

    /// Carrier wavelength `c/f0`.
    pub fn wavelength(&self) -> T {
        T::of(SPEED_OF_LIGHT) / self.carrier_freq
    }

    fn ula_spacings(&self, antennas: usize) -> Vec<T> {
        let half = self.wavelength() * T::of(0.5);
        (0..antennas).map(|r| half * T::of_usize(r)).collect()
    }

    /// Same system with a half-wavelength ULA of `antennas` elements.
    pub fn with_antennas(mut self, antennas: usize) -> Self {
        self.antennas = antennas;
        self.spacings = self.ula_spacings(antennas);
        self
    }

    /// Same system with a different pilot length.
    pub fn with_pilot_len(mut self, pilot_len: usize) -> Self {
        self.pilot_len = pilot_len;
        self
    }

    /// Same system with a different delay grid.
    pub fn with_delay_taps(mut self, delay_taps: usize) -> Self {
        self.delay_taps = delay_taps;
        self
    }

    /// Same system with a different angle grid.
    pub fn with_angle_grid(mut self, angle_grid: usize) -> Self {
        self.angle_grid = angle_grid;
        self
    }

    /// Checks counts, ordering of the antenna positions and positivity.
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("subcarriers", self.subcarriers),
            ("frames", self.frames),
            ("pilot_len", self.pilot_len),
            ("antennas", self.antennas),
            ("angle_grid", self.angle_grid),
            ("delay_taps", self.delay_taps),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.pilot_len < self.delay_taps {
            return Err(Error::Config(format!(
                "pilot length {} shorter than delay grid {}",
                self.pilot_len, self.delay_taps
            )));
        }
        if !(self.subcarrier_spacing > T::zero()) || !(self.carrier_freq > T::zero()) {
            return Err(Error::Config("subcarrier spacing and carrier must be positive".into()));
        }
        if self.spacings.len() != self.antennas {
            return Err(Error::Config(format!(
                "{} antenna positions for {} antennas",
                self.spacings.len(),
                self.antennas
            )));
        }
        if self.spacings[0] != T::zero() {
            return Err(Error::Config("first antenna position must be 0".into()));
        }
        if self.spacings.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("antenna positions must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Angular width of one grid cell, `π/M_θ`.
    pub fn grid_cell(&self) -> T {
        T::PI() / T::of_usize(self.angle_grid)
    }

    /// Cell-centred uniform grid over `[-π/2, π/2]`.
    pub fn angle_grid_points(&self) -> Vec<T> {
        let cell = self.grid_cell();
        let start = -T::FRAC_PI_2();
        (0..self.angle_grid)
            .map(|m| start + cell * (T::of_usize(m) + T::of(0.5)))
            .collect()
    }

    /// Sample rate `MΔf` in Hz.
    pub fn sample_rate(&self) -> T {
        T::of_usize(self.subcarriers) * self.subcarrier_spacing
    }

    /// Doppler in Hz to ramp units κ, where the phase on sample `t` is `2πκt/L`.
    pub fn kappa_from_hz(&self, hz: T) -> T {
        hz * T::of_usize(self.pilot_len) / self.sample_rate()
    }

    /// Inverse of [`kappa_from_hz`](Self::kappa_from_hz).
    pub fn hz_from_kappa(&self, kappa: T) -> T {
        kappa * self.sample_rate() / T::of_usize(self.pilot_len)
    }
}

//! Experiment configuration.
//!
//! A TOML file with flat keys plus an optional `[path_loss]` table. Every key
//! is optional and defaults to the reference setting (M = 32, N = K = 8,
//! D = 400 m, D0 = 200 m, 28 GHz, 30 dBm, −88 dBm, L = 3, ν = 0.5, μ = 0.8,
//! σ = 0.2, C = 32, C1 = C2 = 16). Unknown keys are rejected.
//!
//! ```toml
//! preset = "fig3"
//! trials = 2000
//! pilot_lengths = [16, 64, 256, 1024]
//!
//! [path_loss]
//! blockage_scale_m = 150.0
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::airlink::PbrQuantizer;
use crate::beamforming::UcaDescriptor;
use crate::channel::{ChannelOptions, PathLossParams};
use crate::evaluation::RateParams;
use crate::protocol::{Method, ProtocolParams};
use crate::scheduler::RangeControl;
use crate::units::{dbm_to_watts, wavelength_m};
use crate::{Error, Result};

/// Which figure an experiment reproduces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Misalignment probability versus pilot length.
    Fig3,
    /// Per-user rate distribution at a single pilot length.
    Fig4,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig3" => Ok(Preset::Fig3),
            "fig4" => Ok(Preset::Fig4),
            _ => Err(Error::invalid(format!("unknown preset '{s}' (expected fig3 or fig4)"))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Preset,

    /// Antennas per RRU (M).
    pub num_antennas: usize,
    /// RRUs, equal to the number of users (N = K).
    pub num_rrus: usize,
    pub cell_radius_m: f64,
    pub rru_ring_radius_m: f64,
    /// Angular offset of the RRU ring (φ0).
    pub rru_rotation_rad: f64,
    /// Recorded in outputs only.
    pub bandwidth_mhz: f64,
    pub p_sum_dbm: f64,
    pub noise_dbm: f64,
    pub nlos_paths: usize,
    pub random_los_aod: bool,
    pub path_loss: PathLossParams,

    /// FTPA decay factor ν.
    pub nu: f64,
    /// Scan-range control: mean and spread of the confidence mapping.
    pub range_mean: f64,
    pub range_std: f64,
    /// Floor on the refined half-range; `π / C2` when absent.
    pub min_half_range_rad: Option<f64>,
    pub pbr_bits: u32,

    /// Baseline codebook size C.
    pub codebook_size: usize,
    pub stage1_size: usize,
    pub stage2_size: usize,
    /// Require `C1 + C2 = C` so all methods spend the same beam steps.
    pub delay_parity: bool,

    /// Pilot lengths swept by the fig3 preset.
    pub pilot_lengths: Vec<usize>,
    /// Pilot length used by the fig4 preset.
    pub rate_pilot_length: usize,
    /// Uplink estimation pilot length; the downlink length when absent.
    pub uplink_pilot_length: Option<usize>,
    /// Per-user uplink pilot power; `p_sum / K` when absent.
    pub uplink_power_dbm: Option<f64>,

    pub methods: Vec<Method>,
    pub trials: usize,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    pub output_dir: PathBuf,
    /// Also write scheduler and per-pair index traces.
    pub trace: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            preset: Preset::Fig3,
            num_antennas: 32,
            num_rrus: 8,
            cell_radius_m: 400.0,
            rru_ring_radius_m: 200.0,
            rru_rotation_rad: 0.0,
            bandwidth_mhz: 100.0,
            p_sum_dbm: 30.0,
            noise_dbm: -88.0,
            nlos_paths: 3,
            random_los_aod: false,
            path_loss: PathLossParams::default(),
            nu: 0.5,
            range_mean: 0.8,
            range_std: 0.2,
            min_half_range_rad: None,
            pbr_bits: 0,
            codebook_size: 32,
            stage1_size: 16,
            stage2_size: 16,
            delay_parity: true,
            pilot_lengths: vec![16, 32, 64, 128, 256, 512, 1024],
            rate_pilot_length: 1024,
            uplink_pilot_length: None,
            uplink_power_dbm: None,
            methods: Method::ALL.to_vec(),
            trials: 5000,
            seed: 20190601,
            threads: 0,
            output_dir: PathBuf::from("out"),
            trace: false,
        }
    }
}

impl ExperimentConfig {
    /// Defaults for a preset.
    pub fn preset(preset: Preset) -> Self {
        ExperimentConfig {
            preset,
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config {
            path: PathBuf::from("<inline>"),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: ExperimentConfig = toml::from_str(&text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::invalid(m));
        if self.num_antennas == 0 {
            return fail("num_antennas must be positive".into());
        }
        if self.num_rrus == 0 {
            return fail("num_rrus must be positive".into());
        }
        if !(self.cell_radius_m > 0.0) || !(self.rru_ring_radius_m > 0.0) || self.rru_ring_radius_m > self.cell_radius_m {
            return fail("need 0 < rru_ring_radius_m <= cell_radius_m".into());
        }
        if !self.rru_rotation_rad.is_finite() || !self.p_sum_dbm.is_finite() || !self.noise_dbm.is_finite() {
            return fail("rotation, power and noise must be finite".into());
        }
        self.path_loss.validate()?;
        if !(0.0..=1.0).contains(&self.nu) {
            return fail(format!("nu = {} outside [0, 1]", self.nu));
        }
        if !self.range_mean.is_finite() || !(self.range_std >= 0.0) {
            return fail("range_mean must be finite and range_std non-negative".into());
        }
        if self.stage1_size < 2 || self.stage2_size < 2 || self.codebook_size < 2 {
            return fail("codebooks need at least two beams".into());
        }
        if self.delay_parity && self.stage1_size + self.stage2_size != self.codebook_size {
            return fail(format!(
                "delay parity requires stage1_size + stage2_size = codebook_size ({} + {} != {})",
                self.stage1_size, self.stage2_size, self.codebook_size
            ));
        }
        if let Some(m) = self.min_half_range_rad {
            if !(m > 0.0 && m <= PI) {
                return fail("min_half_range_rad must lie in (0, π]".into());
            }
        }
        if self.pbr_bits > 16 {
            return fail("pbr_bits above 16 is not supported".into());
        }
        if self.pilot_lengths.is_empty() || self.pilot_lengths.contains(&0) {
            return fail("pilot_lengths must be non-empty and positive".into());
        }
        if self.rate_pilot_length == 0 || self.uplink_pilot_length == Some(0) {
            return fail("pilot lengths must be positive".into());
        }
        if self.uplink_power_dbm.is_some_and(|p| !p.is_finite()) {
            return fail("uplink_power_dbm must be finite".into());
        }
        if self.methods.is_empty() {
            return fail("at least one method is required".into());
        }
        if self.trials == 0 {
            return fail("trials must be positive".into());
        }
        Ok(())
    }

    /// Pilot lengths this preset sweeps.
    pub fn sweep(&self) -> Vec<usize> {
        match self.preset {
            Preset::Fig3 => self.pilot_lengths.clone(),
            Preset::Fig4 => vec![self.rate_pilot_length],
        }
    }

    pub fn p_sum_w(&self) -> f64 {
        dbm_to_watts(self.p_sum_dbm)
    }

    pub fn noise_var_w(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }

    pub fn uca(&self) -> Result<UcaDescriptor> {
        UcaDescriptor::new(self.num_antennas, wavelength_m(self.path_loss.carrier_ghz))
    }

    pub fn channel_options(&self) -> ChannelOptions {
        let mut o = ChannelOptions::new(self.nlos_paths);
        o.random_los_aod = self.random_los_aod;
        o
    }

    pub fn protocol_params(&self, pilot_length: usize) -> Result<ProtocolParams> {
        let floor = self.min_half_range_rad.unwrap_or(PI / self.stage2_size as f64);
        Ok(ProtocolParams {
            uca: self.uca()?,
            p_sum_w: self.p_sum_w(),
            noise_var_w: self.noise_var_w(),
            pilot_length,
            oses_codebook_size: self.codebook_size,
            stage1_size: self.stage1_size,
            stage2_size: self.stage2_size,
            nu: self.nu,
            range: RangeControl::new(self.range_mean, self.range_std, floor)?,
            quantizer: PbrQuantizer::with_bits(self.pbr_bits),
        })
    }

    pub fn rate_params(&self, pilot_length: usize) -> RateParams {
        RateParams {
            p_sum_w: self.p_sum_w(),
            noise_var_w: self.noise_var_w(),
            uplink_power_w: self
                .uplink_power_dbm
                .map_or(self.p_sum_w() / self.num_rrus as f64, dbm_to_watts),
            uplink_pilot_length: self.uplink_pilot_length.unwrap_or(pilot_length),
        }
    }
}

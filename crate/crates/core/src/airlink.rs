//! Downlink pilot scanning as seen by one user.
//!
//! Each RRU sends its own orthogonal pilot through the current beam. The
//! user correlates the received block with that pilot; since pilots are
//! orthogonal, the correlator output for RRU `n` is exactly
//! `T·√p·h^H w + z̃` with `z̃ ~ CN(0, T·σ²)`. The simulator therefore draws
//! one complex sample per beam step. [`ReceivedBlock`] builds the full
//! length-`T` sequence instead and is kept as a cross-check.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::beamforming::{inner, Codebook, ScanConfig, UcaDescriptor};
use crate::stats::exact_sum;
use crate::{Cplx, Error, Result};

/// `N` mutually orthogonal pilots of length `T` with `‖s_n‖² = T`.
///
/// When `T` is a power of two the rows of a Sylvester-Hadamard matrix are
/// used (entries ±1, so correlations are exact in floating point);
/// otherwise rows of the `T`-point DFT matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotSet {
    length: usize,
    sequences: Vec<Vec<Cplx>>,
}

impl PilotSet {
    pub fn num_sequences(&self) -> usize {
        self.sequences.len()
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn sequences(&self) -> &[Vec<Cplx>] {
        &self.sequences
    }

    pub fn sequence(&self, n: usize) -> &[Cplx] {
        &self.sequences[n]
    }

    /// Whether every entry is ±1.
    pub fn is_binary(&self) -> bool {
        self.sequences
            .iter()
            .flatten()
            .all(|s| s.im == 0.0 && s.re.abs() == 1.0)
    }
}

pub fn make_pilots(n: usize, t: usize) -> Result<PilotSet> {
    if n == 0 {
        return Err(Error::invalid("need at least one pilot"));
    }
    if t < n {
        return Err(Error::invalid(format!(
            "pilot length {t} shorter than pilot count {n}"
        )));
    }
    let sequences = if t.is_power_of_two() {
        (0..n)
            .map(|row| {
                (0..t)
                    .map(|col| {
                        // Sylvester construction: H[r][c] = (-1)^popcount(r & c)
                        let sign = if (row & col).count_ones() % 2 == 0 {
                            1.0
                        } else {
                            -1.0
                        };
                        Cplx::new(sign, 0.0)
                    })
                    .collect()
            })
            .collect()
    } else {
        (0..n)
            .map(|row| {
                (0..t)
                    .map(|col| Cplx::from_polar(1.0, TAU * ((row * col) % t) as f64 / t as f64))
                    .collect()
            })
            .collect()
    };
    Ok(PilotSet {
        length: t,
        sequences,
    })
}

/// One complex `CN(0, variance)` draw.
pub fn complex_gaussian<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> Cplx {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Cplx::new(s * re, s * im)
}

/// Noise-free correlator output `T·√p·h^H w`.
pub fn correlator_mean(h: &[Cplx], w: &[Cplx], power_w: f64, t: usize) -> Cplx {
    inner(h, w) * (t as f64 * power_w.sqrt())
}

/// Correlator output for one beam step: `T·√p·h^H w + z̃`.
pub fn scan_step_statistic<R: Rng + ?Sized>(
    h: &[Cplx],
    w: &[Cplx],
    power_w: f64,
    t: usize,
    noise_var: f64,
    rng: &mut R,
) -> Cplx {
    correlator_mean(h, w, power_w, t) + complex_gaussian(t as f64 * noise_var, rng)
}

/// Correlator output computed from an explicit per-symbol noise block `z`,
/// i.e. `T·√p·h^H w + z·s_n`, summed exactly.
pub fn scan_step_statistic_from_noise(
    effective_gain: Cplx,
    pilot: &[Cplx],
    noise: &[Cplx],
) -> Cplx {
    let t = pilot.len() as f64;
    let lead = effective_gain * t;
    let re =
        exact_sum(std::iter::once(lead.re).chain(noise.iter().zip(pilot).map(|(z, s)| (z * s).re)));
    let im =
        exact_sum(std::iter::once(lead.im).chain(noise.iter().zip(pilot).map(|(z, s)| (z * s).im)));
    Cplx::new(re, im)
}

/// A received length-`T` block kept as the superposition of its additive
/// parts (one per transmitting RRU plus noise), so that correlation can be
/// evaluated either exactly or on the materialized samples.
#[derive(Debug, Clone)]
pub struct ReceivedBlock {
    components: Vec<Vec<Cplx>>,
}

impl ReceivedBlock {
    /// `y = Σ_m a_m·s_m^H + z`, where `a_m = √p_m·h_m^H w_m` is the effective
    /// gain of transmitter `m` during this beam step.
    pub fn new(pilots: &PilotSet, effective_gains: &[Cplx], noise: &[Cplx]) -> Result<Self> {
        if effective_gains.len() > pilots.num_sequences() {
            return Err(Error::invalid("more transmitters than pilots"));
        }
        if noise.len() != pilots.length() {
            return Err(Error::invalid(
                "noise block length differs from pilot length",
            ));
        }
        let mut components: Vec<Vec<Cplx>> = effective_gains
            .iter()
            .zip(pilots.sequences())
            .map(|(a, s)| s.iter().map(|sv| a * sv.conj()).collect())
            .collect();
        components.push(noise.to_vec());
        Ok(ReceivedBlock { components })
    }

    /// Materialized samples `y_t` in ordinary floating point.
    pub fn samples(&self) -> Vec<Cplx> {
        let t = self.components[0].len();
        (0..t)
            .map(|i| self.components.iter().map(|c| c[i]).sum())
            .collect()
    }

    /// `y·s` summed exactly over every component product.
    pub fn correlate_exact(&self, pilot: &[Cplx]) -> Cplx {
        let products = || {
            self.components
                .iter()
                .flat_map(|c| c.iter().zip(pilot).map(|(y, s)| y * s))
        };
        Cplx::new(
            exact_sum(products().map(|p| p.re)),
            exact_sum(products().map(|p| p.im)),
        )
    }

    /// `y·s` on the materialized samples.
    pub fn correlate(&self, pilot: &[Cplx]) -> Cplx {
        self.samples().iter().zip(pilot).map(|(y, s)| y * s).sum()
    }
}

/// Power-angle-spectrum of one scan with its detected peak and PBR.
#[derive(Debug, Clone, PartialEq)]
pub struct PasRecord {
    values: Vec<f64>,
    best_index: usize,
    pbr: f64,
}

impl PasRecord {
    /// Requires at least two beams and a non-zero background.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid("PBR needs a codebook of at least two beams"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("PAS values must be finite and non-negative"));
        }
        let best_index = argmax_first(&values);
        let background: f64 = values
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != best_index)
            .map(|(_, v)| v)
            .sum();
        if background <= 0.0 {
            return Err(Error::invalid("PAS background is zero; PBR undefined"));
        }
        let pbr = values[best_index] / background;
        Ok(PasRecord {
            values,
            best_index,
            pbr,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn best_index(&self) -> usize {
        self.best_index
    }

    pub fn pbr(&self) -> f64 {
        self.pbr
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Sweeps every beam of `codebook` and records the PAS.
pub fn scan_codebook<R: Rng + ?Sized>(
    h: &[Cplx],
    codebook: &Codebook,
    t: usize,
    noise_var: f64,
    rng: &mut R,
) -> Result<PasRecord> {
    validate_scan(codebook.config(), t, noise_var)?;
    let p = codebook.config().tx_power_w();
    let values = codebook
        .weights()
        .iter()
        .map(|w| scan_step_statistic(h, w, p, t, noise_var, rng).norm_sqr())
        .collect();
    PasRecord::from_values(values)
}

/// Builds the codebook for `config` and sweeps it.
pub fn run_scan<R: Rng + ?Sized>(
    h: &[Cplx],
    uca: &UcaDescriptor,
    config: &ScanConfig,
    t: usize,
    noise_var: f64,
    rng: &mut R,
) -> Result<PasRecord> {
    validate_scan(config, t, noise_var)?;
    if h.len() != uca.num_antennas() {
        return Err(Error::invalid("channel length differs from array size"));
    }
    scan_codebook(h, &Codebook::new(uca, *config), t, noise_var, rng)
}

fn validate_scan(config: &ScanConfig, t: usize, noise_var: f64) -> Result<()> {
    if config.codebook_size() < 2 {
        return Err(Error::invalid(
            "scan codebook needs at least two beams for a PBR",
        ));
    }
    if t == 0 {
        return Err(Error::invalid("pilot length must be positive"));
    }
    if !(noise_var > 0.0 && noise_var.is_finite()) {
        return Err(Error::invalid(format!(
            "noise variance must be positive, got {noise_var}"
        )));
    }
    Ok(())
}

/// Log-domain uniform PBR quantizer over `[lo_db, hi_db]`; `bits = 0`
/// passes values through.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PbrQuantizer {
    pub bits: u32,
    pub lo_db: f64,
    pub hi_db: f64,
}

impl Default for PbrQuantizer {
    fn default() -> Self {
        PbrQuantizer {
            bits: 0,
            lo_db: -10.0,
            hi_db: 30.0,
        }
    }
}

impl PbrQuantizer {
    pub fn with_bits(bits: u32) -> Self {
        PbrQuantizer {
            bits,
            ..Default::default()
        }
    }

    pub fn quantize(&self, pbr: f64) -> f64 {
        if self.bits == 0 {
            return pbr;
        }
        let levels = (1u64 << self.bits.min(52)) as f64;
        let step = (self.hi_db - self.lo_db) / (levels - 1.0);
        let db = 10.0 * pbr.log10();
        let idx = ((db - self.lo_db) / step).round().clamp(0.0, levels - 1.0);
        10f64.powf((self.lo_db + idx * step) / 10.0)
    }

    pub fn top(&self) -> f64 {
        10f64.powf(self.hi_db / 10.0)
    }

    pub fn bottom(&self) -> f64 {
        10f64.powf(self.lo_db / 10.0)
    }
}

pub fn quantize_pbr(pbr: f64, bits: u32) -> f64 {
    PbrQuantizer::with_bits(bits).quantize(pbr)
}

//! Uniform circular arrays, analog beams and scan codebooks.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use crate::geometry::wrap_angle;
use crate::{Cplx, Error, Result};

/// `a^H b` for two equal-length complex vectors.
pub fn inner(a: &[Cplx], b: &[Cplx]) -> Cplx {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[Cplx]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// An `M`-element uniform circular array with half-wavelength spacing
/// between neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct UcaDescriptor {
    num_antennas: usize,
    wavelength_m: f64,
    radius_m: f64,
    x_coords: Vec<f64>,
    y_coords: Vec<f64>,
}

impl UcaDescriptor {
    pub fn new(num_antennas: usize, wavelength_m: f64) -> Result<Self> {
        if num_antennas == 0 {
            return Err(Error::invalid("UCA needs at least one antenna"));
        }
        if !(wavelength_m > 0.0 && wavelength_m.is_finite()) {
            return Err(Error::invalid(format!(
                "wavelength must be positive, got {wavelength_m}"
            )));
        }
        let m = num_antennas as f64;
        let radius_m = wavelength_m / (4.0 * (PI / m).sin());
        let (x_coords, y_coords) = (0..num_antennas)
            .map(|i| {
                let phi = TAU * i as f64 / m;
                (radius_m * phi.cos(), radius_m * phi.sin())
            })
            .unzip();
        Ok(UcaDescriptor {
            num_antennas,
            wavelength_m,
            radius_m,
            x_coords,
            y_coords,
        })
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn wavelength_m(&self) -> f64 {
        self.wavelength_m
    }

    pub fn radius_m(&self) -> f64 {
        self.radius_m
    }

    pub fn x_coords(&self) -> &[f64] {
        &self.x_coords
    }

    pub fn y_coords(&self) -> &[f64] {
        &self.y_coords
    }

    /// Unit-norm, constant-modulus analog beam steered toward `theta`.
    ///
    /// Entry `i` is `exp(j2π(x_i cosθ + y_i sinθ)/λ) / √M`. The same vector
    /// doubles as the unit-norm array response in the channel model.
    pub fn beam_weight(&self, theta: f64) -> Vec<Cplx> {
        let amp = 1.0 / (self.num_antennas as f64).sqrt();
        let k = TAU / self.wavelength_m;
        let (c, s) = (theta.cos(), theta.sin());
        self.x_coords
            .iter()
            .zip(&self.y_coords)
            .map(|(x, y)| Cplx::from_polar(amp, k * (x * c + y * s)))
            .collect()
    }
}

/// One beam-scanning configuration: a window of `2·half_range` centred on
/// `center`, swept in `codebook_size` equal steps at a fixed power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    center_rad: f64,
    half_range_rad: f64,
    codebook_size: usize,
    step_rad: f64,
    tx_power_w: f64,
}

impl ScanConfig {
    pub fn new(
        center_rad: f64,
        half_range_rad: f64,
        codebook_size: usize,
        tx_power_w: f64,
    ) -> Result<Self> {
        if codebook_size == 0 {
            return Err(Error::invalid("codebook size must be at least 1"));
        }
        if !(half_range_rad > 0.0 && half_range_rad <= PI) {
            return Err(Error::invalid(format!(
                "half range {half_range_rad} outside (0, π]"
            )));
        }
        if !(tx_power_w >= 0.0 && tx_power_w.is_finite()) {
            return Err(Error::invalid(format!(
                "transmit power {tx_power_w} must be non-negative"
            )));
        }
        if !center_rad.is_finite() {
            return Err(Error::invalid("scan center must be finite"));
        }
        Ok(ScanConfig {
            center_rad,
            half_range_rad,
            codebook_size,
            step_rad: 2.0 * half_range_rad / codebook_size as f64,
            tx_power_w,
        })
    }

    pub fn center_rad(&self) -> f64 {
        self.center_rad
    }

    pub fn half_range_rad(&self) -> f64 {
        self.half_range_rad
    }

    pub fn codebook_size(&self) -> usize {
        self.codebook_size
    }

    pub fn step_rad(&self) -> f64 {
        self.step_rad
    }

    pub fn tx_power_w(&self) -> f64 {
        self.tx_power_w
    }

    /// Angle of beam `c`, not reduced mod 2π.
    pub fn raw_angle(&self, c: usize) -> f64 {
        self.center_rad - self.half_range_rad + c as f64 * self.step_rad
    }

    /// Same sweep at a different power.
    pub fn with_power(&self, tx_power_w: f64) -> Result<Self> {
        Self::new(
            self.center_rad,
            self.half_range_rad,
            self.codebook_size,
            tx_power_w,
        )
    }

    /// Whether two configs scan the same set of beams, power aside.
    pub fn same_beams(&self, other: &ScanConfig) -> bool {
        self.center_rad == other.center_rad
            && self.half_range_rad == other.half_range_rad
            && self.codebook_size == other.codebook_size
    }
}

/// Beam angles of a config: `center − half_range + c·step`, each in `[0, 2π)`.
pub fn codebook_angles(config: &ScanConfig) -> Vec<f64> {
    (0..config.codebook_size)
        .map(|c| wrap_angle(config.raw_angle(c)))
        .collect()
}

/// Full-circle sweep whose beam `c` points at `2πc/c1`.
pub fn stage1_config(power_w: f64, c1: usize) -> Result<ScanConfig> {
    ScanConfig::new(PI, PI, c1, power_w)
}

/// A scan config together with its precomputed beams.
#[derive(Debug, Clone)]
pub struct Codebook {
    config: ScanConfig,
    angles: Vec<f64>,
    weights: Vec<Vec<Cplx>>,
}

impl Codebook {
    pub fn new(uca: &UcaDescriptor, config: ScanConfig) -> Self {
        let angles = codebook_angles(&config);
        let weights = angles.iter().map(|&a| uca.beam_weight(a)).collect();
        Codebook {
            config,
            angles,
            weights,
        }
    }

    pub fn config(&self) -> &ScanConfig {
        &self.config
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn weights(&self) -> &[Vec<Cplx>] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Noiseless effective gains `h^H w_c` for every beam.
    pub fn effective_gains(&self, h: &[Cplx]) -> Vec<Cplx> {
        self.weights.iter().map(|w| inner(h, w)).collect()
    }
}

/// Debug dump of `|a(θ)^H w(θ_c)|²` for every beam of a codebook, sampled on
/// `samples` points over `[0, 2π)`. Columns: `theta_rad,beam,gain`.
pub fn write_beam_pattern_csv<W: Write>(
    uca: &UcaDescriptor,
    codebook: &Codebook,
    samples: usize,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta_rad", "beam", "gain"])?;
    for s in 0..samples {
        let theta = TAU * s as f64 / samples as f64;
        let a = uca.beam_weight(theta);
        for (c, wc) in codebook.weights().iter().enumerate() {
            let g = inner(&a, wc).norm_sqr();
            w.write_record([theta.to_string(), c.to_string(), g.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io("<beam pattern csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::wavelength_m;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn uca(m: usize) -> UcaDescriptor {
        UcaDescriptor::new(m, wavelength_m(28.0)).unwrap()
    }

    #[test]
    fn uca_geometry() {
        for m in [1usize, 2, 8, 32] {
            let u = uca(m);
            let lambda = u.wavelength_m();
            let want = lambda / (4.0 * (PI / m as f64).sin());
            assert!(((u.radius_m() - want) / want).abs() <= 1e-12);
            for i in 0..m {
                let phi = TAU * i as f64 / m as f64;
                assert_eq!(u.x_coords()[i], u.radius_m() * phi.cos());
                assert_eq!(u.y_coords()[i], u.radius_m() * phi.sin());
            }
            if m >= 2 {
                let dx = u.x_coords()[1] - u.x_coords()[0];
                let dy = u.y_coords()[1] - u.y_coords()[0];
                let spacing = dx.hypot(dy);
                assert!(
                    ((spacing - lambda / 2.0) / (lambda / 2.0)).abs() <= 1e-9,
                    "M={m}"
                );
            }
        }
        assert!(UcaDescriptor::new(0, 0.01).is_err());
        assert!(UcaDescriptor::new(4, 0.0).is_err());
    }

    #[test]
    fn beam_is_unit_norm_constant_modulus() {
        for m in [1usize, 2, 8, 32] {
            let u = uca(m);
            for theta in [0.0, 0.3, 2.0, -1.0, 5.9] {
                let w = u.beam_weight(theta);
                assert!((norm_sqr(&w).sqrt() - 1.0).abs() <= 1e-12);
                let amp = 1.0 / (m as f64).sqrt();
                assert!(w.iter().all(|x| (x.norm() - amp).abs() <= 1e-15));
            }
        }
    }

    #[test]
    fn beam_is_2pi_periodic() {
        let u = uca(32);
        for theta in [0.0, 0.7, 3.0, 6.0] {
            let a = u.beam_weight(theta);
            let b = u.beam_weight(theta + TAU);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn matched_beam_gain_is_sqrt_m() {
        let u = uca(32);
        let w = u.beam_weight(1.234);
        let h: Vec<Cplx> = w.iter().map(|x| x * 32f64.sqrt()).collect();
        assert!((inner(&w, &h).norm() - 32f64.sqrt()).abs() <= 1e-12);
    }

    #[test]
    fn codebook_angle_examples() {
        let cfg = ScanConfig::new(FRAC_PI_2, PI / 4.0, 4, 1.0).unwrap();
        let got = codebook_angles(&cfg);
        let want = [PI / 4.0, 3.0 * PI / 8.0, PI / 2.0, 5.0 * PI / 8.0];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= 1e-15, "{g} vs {w}");
        }
        assert!((cfg.step_rad() * 4.0 - 2.0 * cfg.half_range_rad()).abs() <= 1e-12);
        assert!(ScanConfig::new(0.0, PI, 0, 1.0).is_err());
        assert!(ScanConfig::new(0.0, 0.0, 4, 1.0).is_err());
        assert!(ScanConfig::new(0.0, 4.0, 4, 1.0).is_err());
        assert!(ScanConfig::new(0.0, 1.0, 4, -1.0).is_err());
    }

    #[test]
    fn stage1_grid_is_uniform_over_circle() {
        let cfg = stage1_config(0.125, 16).unwrap();
        let angles = codebook_angles(&cfg);
        assert_eq!(angles.len(), 16);
        for (c, a) in angles.iter().enumerate() {
            let want = TAU * c as f64 / 16.0;
            assert!((a - want).abs() <= 1e-12, "beam {c}: {a} vs {want}");
            assert!((0.0..TAU).contains(a));
        }
        for c in 1..16 {
            assert!((angles[c] - angles[c - 1] - TAU / 16.0).abs() <= 1e-12);
        }
        // centralized full-circle grid from the generic formula
        let full = ScanConfig::new(0.0, PI, 8, 1.0).unwrap();
        for (c, a) in codebook_angles(&full).iter().enumerate() {
            let want = wrap_angle(TAU * c as f64 / 8.0 - PI);
            assert!((a - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn main_lobe_peaks_at_matched_grid_angle() {
        let u = uca(32);
        let cb = Codebook::new(&u, stage1_config(1.0, 16).unwrap());
        for (c, &theta) in cb.angles().iter().enumerate() {
            let a = u.beam_weight(theta);
            let gains: Vec<f64> = cb.weights().iter().map(|w| inner(&a, w).norm()).collect();
            let best = gains
                .iter()
                .enumerate()
                .fold(0, |b, (i, g)| if *g > gains[b] { i } else { b });
            assert_eq!(best, c);
        }
    }

    #[test]
    fn beam_pattern_dump_shape() {
        let u = uca(8);
        let cb = Codebook::new(&u, stage1_config(1.0, 4).unwrap());
        let mut buf = Vec::new();
        write_beam_pattern_csv(&u, &cb, 10, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 10 * 4);
    }

    proptest! {
        #[test]
        fn codebook_translation_equivariance(
            center in -7.0f64..7.0, half in 0.01f64..PI, c in 1usize..40, delta in -7.0f64..7.0,
        ) {
            let a = codebook_angles(&ScanConfig::new(center, half, c, 1.0).unwrap());
            let b = codebook_angles(&ScanConfig::new(center + delta, half, c, 1.0).unwrap());
            for (x, y) in a.iter().zip(&b) {
                let diff = wrap_angle(y - x - delta);
                prop_assert!(diff.min(TAU - diff) <= 1e-9);
            }
        }
    }
}

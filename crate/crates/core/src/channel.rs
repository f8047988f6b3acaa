//! Saleh-Valenzuela mmWave channels with probabilistic LOS blockage.
//!
//! Per (RRU, user) pair the channel is `h = β·α₀·h₀ + Σ_l α_l·h_l`, where
//! `h_l = √M·a(θ_l)` and `a(·)` is the unit-norm UCA response. A perfectly
//! aligned beam therefore sees `|h^H w| = √M·|α|`.

use std::f64::consts::TAU;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::beamforming::UcaDescriptor;
use crate::units::db_to_linear;
use crate::{Cplx, Error, Result};

/// Path-loss distances are clamped to this floor; the model's intercept is
/// referenced at 1 m.
pub const MIN_PATH_LOSS_DISTANCE_M: f64 = 1.0;

/// Log-distance path loss for LOS and NLOS paths plus the blockage scale.
///
/// Defaults are the 28 GHz fit (LOS 61.4 dB + 20 log10 d, NLOS
/// 72.0 dB + 29.2 log10 d) with shadowing disabled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathLossParams {
    pub los_intercept_db: f64,
    pub los_exponent: f64,
    pub nlos_intercept_db: f64,
    pub nlos_exponent: f64,
    pub carrier_ghz: f64,
    /// Blockage scale ϱ in `P(LOS) = exp(−d/ϱ)`, meters.
    pub blockage_scale_m: f64,
    /// Lognormal shadowing standard deviations; 0 disables the term.
    pub los_shadowing_db: f64,
    pub nlos_shadowing_db: f64,
}

impl Default for PathLossParams {
    fn default() -> Self {
        PathLossParams {
            los_intercept_db: 61.4,
            los_exponent: 2.0,
            nlos_intercept_db: 72.0,
            nlos_exponent: 2.92,
            carrier_ghz: 28.0,
            blockage_scale_m: 200.0,
            los_shadowing_db: 0.0,
            nlos_shadowing_db: 0.0,
        }
    }
}

impl PathLossParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.los_intercept_db,
            self.nlos_intercept_db,
            self.los_exponent,
            self.nlos_exponent,
            self.carrier_ghz,
            self.blockage_scale_m,
            self.los_shadowing_db,
            self.nlos_shadowing_db,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("path-loss parameters must be finite"));
        }
        if self.los_exponent <= 0.0 || self.nlos_exponent <= 0.0 {
            return Err(Error::invalid("path-loss exponents must be positive"));
        }
        if self.blockage_scale_m <= 0.0 {
            return Err(Error::invalid("blockage scale must be positive"));
        }
        if self.carrier_ghz <= 0.0 {
            return Err(Error::invalid("carrier frequency must be positive"));
        }
        if self.los_shadowing_db < 0.0 || self.nlos_shadowing_db < 0.0 {
            return Err(Error::invalid("shadowing deviations must be non-negative"));
        }
        Ok(())
    }
}

/// Draws the LOS indicator: `true` (LOS present) with probability `exp(−d/ρ)`.
pub fn sample_blockage<R: Rng + ?Sized>(distance_m: f64, rho_m: f64, rng: &mut R) -> Result<bool> {
    if !(distance_m >= 0.0) {
        return Err(Error::invalid(format!(
            "distance must be non-negative, got {distance_m}"
        )));
    }
    if !(rho_m > 0.0) {
        return Err(Error::invalid(format!(
            "blockage scale must be positive, got {rho_m}"
        )));
    }
    let p_los = (-distance_m / rho_m).exp();
    Ok(rng.random::<f64>() < p_los)
}

/// `intercept + 10·exponent·log10(d)` in dB.
pub fn path_loss_db(distance_m: f64, is_los: bool, params: &PathLossParams) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::invalid(format!(
            "distance must be positive, got {distance_m}"
        )));
    }
    let (intercept, exponent) = if is_los {
        (params.los_intercept_db, params.los_exponent)
    } else {
        (params.nlos_intercept_db, params.nlos_exponent)
    };
    Ok(intercept + 10.0 * exponent * distance_m.log10())
}

/// How the blockage flag of a new realization is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Blockage {
    #[default]
    Sampled,
    Forced(bool),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelOptions {
    pub nlos_paths: usize,
    /// Draw the LOS AOD uniformly instead of using the geometric bearing.
    pub random_los_aod: bool,
    pub blockage: Blockage,
}

impl ChannelOptions {
    pub fn new(nlos_paths: usize) -> Self {
        ChannelOptions {
            nlos_paths,
            random_los_aod: false,
            blockage: Blockage::Sampled,
        }
    }
}

/// One (RRU, user) channel with all of its paths.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub los_present: bool,
    pub los_aod: f64,
    pub nlos_aods: Vec<f64>,
    pub los_gain: Cplx,
    pub nlos_gains: Vec<Cplx>,
    pub path_loss_los_db: f64,
    pub path_loss_nlos_db: f64,
    channel_vector: Vec<Cplx>,
}

impl ChannelRealization {
    pub fn blockage_flag(&self) -> u8 {
        u8::from(self.los_present)
    }

    pub fn channel_vector(&self) -> &[Cplx] {
        &self.channel_vector
    }

    /// Rebuilds `h` from the stored paths.
    pub fn reconstruct(&self, uca: &UcaDescriptor) -> Vec<Cplx> {
        assemble(
            uca,
            self.los_present,
            self.los_aod,
            self.los_gain,
            &self.nlos_aods,
            &self.nlos_gains,
        )
    }

    /// Copy of this realization with the LOS flag overridden.
    pub fn with_los(&self, los_present: bool, uca: &UcaDescriptor) -> Self {
        let mut out = self.clone();
        out.los_present = los_present;
        out.channel_vector = out.reconstruct(uca);
        out
    }

    /// Copy with every path gain multiplied by `factor`.
    pub fn scaled(&self, factor: f64, uca: &UcaDescriptor) -> Self {
        let mut out = self.clone();
        out.los_gain *= factor;
        out.nlos_gains.iter_mut().for_each(|g| *g *= factor);
        out.channel_vector = out.reconstruct(uca);
        out
    }
}

fn assemble(
    uca: &UcaDescriptor,
    los_present: bool,
    los_aod: f64,
    los_gain: Cplx,
    nlos_aods: &[f64],
    nlos_gains: &[Cplx],
) -> Vec<Cplx> {
    let m = uca.num_antennas();
    let scale = (m as f64).sqrt();
    let mut h = vec![Cplx::new(0.0, 0.0); m];
    if los_present {
        for (hi, ai) in h.iter_mut().zip(uca.beam_weight(los_aod)) {
            *hi += los_gain * (ai * scale);
        }
    }
    for (&theta, &alpha) in nlos_aods.iter().zip(nlos_gains) {
        for (hi, ai) in h.iter_mut().zip(uca.beam_weight(theta)) {
            *hi += alpha * (ai * scale);
        }
    }
    h
}

/// Draws one channel realization for a pair at `(distance, bearing)`.
///
/// The number of random draws does not depend on the blockage outcome, so
/// two pairs that differ only in blockage consume their streams identically.
pub fn synthesize_channel<R: Rng + ?Sized>(
    geom: (f64, f64),
    uca: &UcaDescriptor,
    params: &PathLossParams,
    options: &ChannelOptions,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let (distance, bearing) = geom;
    if !(distance >= 0.0 && distance.is_finite()) || !bearing.is_finite() {
        return Err(Error::invalid(format!(
            "invalid pair geometry ({distance}, {bearing})"
        )));
    }
    params.validate()?;

    let sampled = sample_blockage(distance, params.blockage_scale_m, rng)?;
    let los_present = match options.blockage {
        Blockage::Sampled => sampled,
        Blockage::Forced(flag) => flag,
    };
    let random_aod = rng.random::<f64>() * TAU;
    let los_aod = if options.random_los_aod {
        random_aod
    } else {
        bearing
    };

    let d = distance.max(MIN_PATH_LOSS_DISTANCE_M);
    let shadow = |std_db: f64, rng: &mut R| -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        std_db * z
    };
    let pl_los = path_loss_db(d, true, params)? + shadow(params.los_shadowing_db, rng);
    let pl_nlos = path_loss_db(d, false, params)? + shadow(params.nlos_shadowing_db, rng);

    let los_phase = rng.random::<f64>() * TAU;
    let los_gain = Cplx::from_polar(db_to_linear(-pl_los).sqrt(), los_phase);

    let l = options.nlos_paths;
    let mut nlos_aods = Vec::with_capacity(l);
    let mut nlos_gains = Vec::with_capacity(l);
    if l > 0 {
        let per_path = db_to_linear(-pl_nlos) / l as f64;
        let component = Normal::new(0.0, (per_path / 2.0).sqrt())
            .map_err(|e| Error::invalid(format!("NLOS gain distribution: {e}")))?;
        for _ in 0..l {
            nlos_aods.push(rng.random::<f64>() * TAU);
            nlos_gains.push(Cplx::new(component.sample(rng), component.sample(rng)));
        }
    }

    let channel_vector = assemble(uca, los_present, los_aod, los_gain, &nlos_aods, &nlos_gains);
    Ok(ChannelRealization {
        los_present,
        los_aod,
        nlos_aods,
        los_gain,
        nlos_gains,
        path_loss_los_db: pl_los,
        path_loss_nlos_db: pl_nlos,
        channel_vector,
    })
}

/// Debug dump of a channel grid indexed `[rru][user]`. Columns:
/// `n,k,beta,pl_los_db,pl_nlos_db,los_aod_rad`.
pub fn write_channels_csv<W: Write>(channels: &[Vec<ChannelRealization>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "k", "beta", "pl_los_db", "pl_nlos_db", "los_aod_rad"])?;
    for (n, row) in channels.iter().enumerate() {
        for (k, ch) in row.iter().enumerate() {
            w.write_record([
                n.to_string(),
                k.to_string(),
                ch.blockage_flag().to_string(),
                ch.path_loss_los_db.to_string(),
                ch.path_loss_nlos_db.to_string(),
                ch.los_aod.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<channel csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::norm_sqr;
    use crate::rng::{substream, Purpose};
    use crate::units::wavelength_m;

    fn uca() -> UcaDescriptor {
        UcaDescriptor::new(32, wavelength_m(28.0)).unwrap()
    }

    fn binomial_within_3sigma(hits: usize, n: usize, p: f64) -> bool {
        let mean = n as f64 * p;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        (hits as f64 - mean).abs() <= 3.0 * sd.max(1e-9)
    }

    #[test]
    fn blockage_at_zero_distance_always_los() {
        let mut rng = substream(1, 0, Purpose::Scratch);
        assert!((0..1000).all(|_| sample_blockage(0.0, 200.0, &mut rng).unwrap()));
    }

    #[test]
    fn blockage_frequency_matches_exponential() {
        let mut rng = substream(2, 0, Purpose::Scratch);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| sample_blockage(200.0, 200.0, &mut rng).unwrap())
            .count();
        let freq = hits as f64 / n as f64;
        assert!((freq - (-1.0f64).exp()).abs() <= 0.005, "P(LOS) = {freq}");
        for d in [10.0, 100.0, 350.0, 600.0] {
            let hits = (0..20_000)
                .filter(|_| sample_blockage(d, 200.0, &mut rng).unwrap())
                .count();
            assert!(
                binomial_within_3sigma(hits, 20_000, (-d / 200.0f64).exp()),
                "d={d}"
            );
        }
    }

    #[test]
    fn blockage_rejects_bad_inputs() {
        let mut rng = substream(3, 0, Purpose::Scratch);
        assert!(sample_blockage(-1.0, 200.0, &mut rng).is_err());
        assert!(sample_blockage(1.0, 0.0, &mut rng).is_err());
    }

    #[test]
    fn path_loss_formula() {
        let p = PathLossParams::default();
        assert_eq!(path_loss_db(1.0, true, &p).unwrap(), 61.4);
        assert_eq!(path_loss_db(1.0, false, &p).unwrap(), 72.0);
        let a = path_loss_db(150.0, false, &p).unwrap();
        let b = path_loss_db(300.0, false, &p).unwrap();
        assert!((b - a - 10.0 * 2.92 * 2f64.log10()).abs() <= 1e-12);
        // d = 100 m: LOS 101.4 dB, NLOS 130.4 dB
        let los = path_loss_db(100.0, true, &p).unwrap();
        let nlos = path_loss_db(100.0, false, &p).unwrap();
        assert!((los - 101.4).abs() < 1e-12 && (nlos - 130.4).abs() < 1e-12);
        assert!(los < nlos);
        assert!(path_loss_db(0.0, true, &p).is_err());
        assert!(path_loss_db(-3.0, true, &p).is_err());
    }

    #[test]
    fn blocked_pair_without_nlos_is_zero() {
        let mut opts = ChannelOptions::new(0);
        opts.blockage = Blockage::Forced(false);
        let mut rng = substream(4, 0, Purpose::Scratch);
        let ch = synthesize_channel(
            (150.0, 1.0),
            &uca(),
            &PathLossParams::default(),
            &opts,
            &mut rng,
        )
        .unwrap();
        assert!(ch
            .channel_vector()
            .iter()
            .all(|x| *x == Cplx::new(0.0, 0.0)));
        assert_eq!(ch.blockage_flag(), 0);
    }

    #[test]
    fn los_only_energy_is_m_alpha_squared() {
        let mut opts = ChannelOptions::new(0);
        opts.blockage = Blockage::Forced(true);
        let mut rng = substream(5, 0, Purpose::Scratch);
        let ch = synthesize_channel(
            (150.0, 1.0),
            &uca(),
            &PathLossParams::default(),
            &opts,
            &mut rng,
        )
        .unwrap();
        let want = 32.0 * ch.los_gain.norm_sqr();
        assert!(((norm_sqr(ch.channel_vector()) - want) / want).abs() <= 1e-12);
        assert_eq!(ch.los_aod, 1.0);
    }

    #[test]
    fn mean_energy_matches_path_budget() {
        let u = uca();
        let p = PathLossParams::default();
        let mut opts = ChannelOptions::new(3);
        opts.blockage = Blockage::Forced(true);
        let mut rng = substream(6, 0, Purpose::Scratch);
        let d = 120.0;
        let n = 10_000;
        let mean = (0..n)
            .map(|_| {
                norm_sqr(
                    synthesize_channel((d, 0.4), &u, &p, &opts, &mut rng)
                        .unwrap()
                        .channel_vector(),
                )
            })
            .sum::<f64>()
            / n as f64;
        let want = 32.0
            * (db_to_linear(-path_loss_db(d, true, &p).unwrap())
                + db_to_linear(-path_loss_db(d, false, &p).unwrap()));
        assert!(
            ((mean - want) / want).abs() <= 0.03,
            "mean {mean:e} want {want:e}"
        );
    }

    #[test]
    fn reconstruction_is_bitwise_and_los_toggle_isolates_los_term() {
        let u = uca();
        let p = PathLossParams::default();
        let mut rng = substream(7, 0, Purpose::Scratch);
        for _ in 0..50 {
            let ch = synthesize_channel((250.0, 2.0), &u, &p, &ChannelOptions::new(3), &mut rng)
                .unwrap();
            assert_eq!(ch.reconstruct(&u), ch.channel_vector());
            let on = ch.with_los(true, &u);
            let off = ch.with_los(false, &u);
            let los_term: Vec<Cplx> = u
                .beam_weight(ch.los_aod)
                .iter()
                .map(|a| ch.los_gain * (a * 32f64.sqrt()))
                .collect();
            let scale = ch.los_gain.norm() * 32f64.sqrt();
            for i in 0..32 {
                let diff = on.channel_vector()[i] - off.channel_vector()[i];
                assert!((diff - los_term[i]).norm() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn random_los_aod_switch() {
        let mut opts = ChannelOptions::new(1);
        opts.random_los_aod = true;
        let mut rng = substream(8, 0, Purpose::Scratch);
        let ch = synthesize_channel(
            (50.0, 1.0),
            &uca(),
            &PathLossParams::default(),
            &opts,
            &mut rng,
        )
        .unwrap();
        assert_ne!(ch.los_aod, 1.0);
        assert!((0.0..TAU).contains(&ch.los_aod));
    }

    #[test]
    fn params_validation() {
        let mut p = PathLossParams::default();
        assert!(p.validate().is_ok());
        p.los_exponent = 0.0;
        assert!(p.validate().is_err());
        let mut p = PathLossParams::default();
        p.blockage_scale_m = -1.0;
        assert!(p.validate().is_err());
        let mut p = PathLossParams::default();
        p.nlos_intercept_db = f64::NAN;
        assert!(p.validate().is_err());
    }

    #[test]
    fn channel_dump_columns() {
        let u = UcaDescriptor::new(4, 0.01).unwrap();
        let mut rng = substream(9, 0, Purpose::Scratch);
        let grid: Vec<Vec<ChannelRealization>> = (0..2)
            .map(|_| {
                (0..2)
                    .map(|_| {
                        synthesize_channel(
                            (100.0, 0.0),
                            &u,
                            &PathLossParams::default(),
                            &ChannelOptions::new(1),
                            &mut rng,
                        )
                        .unwrap()
                    })
                    .collect()
            })
            .collect();
        let mut buf = Vec::new();
        write_channels_csv(&grid, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,k,beta,pl_los_db,pl_nlos_db,los_aod_rad\n"));
        assert_eq!(text.lines().count(), 5);
    }
}

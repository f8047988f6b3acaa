//! Ground-truth oracles, misalignment accounting and the downlink rate
//! pipeline (uplink MMSE estimation of the beamformed channel, ZF precoding,
//! equal power per user).

use nalgebra::DMatrix;
use rand::Rng;

use crate::airlink::{argmax_first, complex_gaussian};
use crate::beamforming::{inner, Codebook, ScanConfig, UcaDescriptor};
use crate::protocol::{AlignmentResult, Scene};
use crate::{Cplx, Error, Result};

/// Noiseless codebook argmax `argmax_c |h^H w(θ_c)|²`, lowest index on ties.
pub fn oracle_best_beam(h: &[Cplx], uca: &UcaDescriptor, config: &ScanConfig) -> usize {
    oracle_from_codebook(h, &Codebook::new(uca, *config))
}

pub fn oracle_from_codebook(h: &[Cplx], codebook: &Codebook) -> usize {
    let power: Vec<f64> = codebook
        .effective_gains(h)
        .iter()
        .map(|g| g.norm_sqr())
        .collect();
    argmax_first(&power)
}

/// Oracle indices for every index an [`AlignmentResult`] reports.
#[derive(Debug, Clone, PartialEq)]
pub struct PairOracles {
    pub stage1_config: ScanConfig,
    /// `[n][k]`, against the full-circle sweep.
    pub stage1: Vec<Vec<usize>>,
    /// Per RRU for TSSA: refined window and its oracle. Empty for baselines.
    pub stage2: Vec<(ScanConfig, usize)>,
}

pub fn compute_oracles(
    scene: &Scene,
    result: &AlignmentResult,
    uca: &UcaDescriptor,
) -> PairOracles {
    let codebook = Codebook::new(uca, result.stage1_config);
    let n = scene.size();
    let stage1 = (0..n)
        .map(|rru| {
            (0..n)
                .map(|k| oracle_from_codebook(scene.channel(rru, k).channel_vector(), &codebook))
                .collect()
        })
        .collect();
    let stage2 = result
        .stage2
        .iter()
        .map(|s| {
            (
                s.config,
                oracle_best_beam(
                    scene.channel(s.rru, s.user).channel_vector(),
                    uca,
                    &s.config,
                ),
            )
        })
        .collect();
    PairOracles {
        stage1_config: result.stage1_config,
        stage1,
        stage2,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentMetrics {
    /// `[n][k]`: detected index differs from the oracle.
    pub pair_misaligned: Vec<Vec<bool>>,
    /// Misaligned toward every RRU.
    pub user_misaligned: Vec<bool>,
    pub system_misaligned: bool,
}

impl AlignmentMetrics {
    pub fn from_pairs(pair_misaligned: Vec<Vec<bool>>) -> Self {
        let k = pair_misaligned.first().map_or(0, Vec::len);
        let user_misaligned: Vec<bool> = (0..k)
            .map(|k| pair_misaligned.iter().all(|row| row[k]))
            .collect();
        let system_misaligned = user_misaligned.iter().any(|&u| u);
        AlignmentMetrics {
            pair_misaligned,
            user_misaligned,
            system_misaligned,
        }
    }
}

/// Compares detections with oracles. For TSSA the scheduled pair of each RRU
/// is judged on its refined scan, every other pair on the coarse one.
pub fn misalignment_metrics(
    result: &AlignmentResult,
    oracles: &PairOracles,
) -> Result<AlignmentMetrics> {
    if !result.stage1_config.same_beams(&oracles.stage1_config) {
        return Err(Error::CodebookMismatch(
            "full-circle sweep differs from the oracle codebook".into(),
        ));
    }
    if oracles.stage1.len() != result.stage1_indices.len()
        || oracles
            .stage1
            .iter()
            .zip(&result.stage1_indices)
            .any(|(a, b)| a.len() != b.len())
    {
        return Err(Error::invalid(
            "oracle grid does not match the detected grid",
        ));
    }
    if oracles.stage2.len() != result.stage2.len() {
        return Err(Error::CodebookMismatch(
            "refined scans and oracles differ in count".into(),
        ));
    }

    let mut pairs: Vec<Vec<bool>> = result
        .stage1_indices
        .iter()
        .zip(&oracles.stage1)
        .map(|(det, ora)| det.iter().zip(ora).map(|(d, o)| d != o).collect())
        .collect();
    for (s, (config, oracle)) in result.stage2.iter().zip(&oracles.stage2) {
        if !s.config.same_beams(config) {
            return Err(Error::CodebookMismatch(format!(
                "refined window of RRU {} differs from its oracle",
                s.rru
            )));
        }
        pairs[s.rru][s.user] = s.index != *oracle;
    }
    Ok(AlignmentMetrics::from_pairs(pairs))
}

/// `G[k][n] = h_{n,k}^H w_n` for the final analog beams.
pub fn effective_channel(scene: &Scene, beams: &[Vec<Cplx>]) -> Result<Vec<Vec<Cplx>>> {
    let n = scene.size();
    if beams.len() != n {
        return Err(Error::invalid(format!(
            "expected {n} beams, got {}",
            beams.len()
        )));
    }
    Ok((0..n)
        .map(|k| {
            (0..n)
                .map(|rru| inner(scene.channel(rru, k).channel_vector(), &beams[rru]))
                .collect()
        })
        .collect())
}

/// Mean `|g|²` over all entries, used as the estimator's prior variance.
pub fn empirical_prior_variance(g: &[Vec<Cplx>]) -> f64 {
    let count: usize = g.iter().map(Vec::len).sum();
    if count == 0 {
        return 0.0;
    }
    g.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>() / count as f64
}

/// Correlated uplink observations `r = T·√p·g + z̃`, `z̃ ~ CN(0, T·σ²)`.
pub fn uplink_observations<R: Rng + ?Sized>(
    g: &[Vec<Cplx>],
    uplink_power_w: f64,
    t_ul: usize,
    noise_var: f64,
    rng: &mut R,
) -> Vec<Vec<Cplx>> {
    let t = t_ul as f64;
    let gain = t * uplink_power_w.sqrt();
    g.iter()
        .map(|row| {
            row.iter()
                .map(|&x| x * gain + complex_gaussian(t * noise_var, rng))
                .collect()
        })
        .collect()
}

/// Scalar MMSE shrinkage of uplink observations under prior variance `v`.
pub fn mmse_from_observations(
    r: &[Vec<Cplx>],
    uplink_power_w: f64,
    t_ul: usize,
    noise_var: f64,
    prior_var: f64,
) -> Vec<Vec<Cplx>> {
    let t = t_ul as f64;
    let p = uplink_power_w;
    let denom = p * t * t * prior_var + t * noise_var;
    let a = if denom > 0.0 {
        p.sqrt() * t * prior_var / denom
    } else {
        0.0
    };
    r.iter()
        .map(|row| row.iter().map(|&x| x * a).collect())
        .collect()
}

pub fn mmse_effective_channel<R: Rng + ?Sized>(
    g: &[Vec<Cplx>],
    uplink_power_w: f64,
    t_ul: usize,
    noise_var: f64,
    prior_var: f64,
    rng: &mut R,
) -> Result<Vec<Vec<Cplx>>> {
    if t_ul == 0 || !(uplink_power_w > 0.0) || !(noise_var >= 0.0) || !(prior_var >= 0.0) {
        return Err(Error::invalid(
            "uplink estimation needs T > 0, p > 0 and non-negative variances",
        ));
    }
    let r = uplink_observations(g, uplink_power_w, t_ul, noise_var, rng);
    Ok(mmse_from_observations(
        &r,
        uplink_power_w,
        t_ul,
        noise_var,
        prior_var,
    ))
}

fn to_matrix(g: &[Vec<Cplx>]) -> Result<DMatrix<Cplx>> {
    let rows = g.len();
    let cols = g.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || g.iter().any(|r| r.len() != cols) {
        return Err(Error::invalid(
            "effective channel must be a non-empty rectangular matrix",
        ));
    }
    Ok(DMatrix::from_fn(rows, cols, |i, j| g[i][j]))
}

fn loaded_inverse(a: &DMatrix<Cplx>) -> (DMatrix<Cplx>, bool) {
    if let Some(inv) = a.clone().try_inverse() {
        if inv.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
            return (inv, false);
        }
    }
    let load = 1e-12 * a.trace().re.abs().max(f64::MIN_POSITIVE);
    let n = a.nrows();
    let loaded = a + DMatrix::<Cplx>::identity(n, n) * Cplx::new(load, 0.0);
    let inv = loaded.try_inverse().unwrap_or_else(|| DMatrix::zeros(n, n));
    (inv, true)
}

/// Unit-norm ZF precoder `Ĝ^H(ĜĜ^H)^{-1}` (N×K). The flag reports whether
/// diagonal loading was needed.
pub fn zf_precoder(g_est: &[Vec<Cplx>]) -> Result<(DMatrix<Cplx>, bool)> {
    let g = to_matrix(g_est)?;
    let (k, n) = g.shape();
    if k > n {
        return Err(Error::invalid(format!(
            "cannot zero-force {k} users with {n} RRUs"
        )));
    }
    // square and invertible: the pseudo-inverse is the inverse, and one
    // refinement step keeps the residual at machine precision
    let direct = if k == n {
        g.clone()
            .try_inverse()
            .filter(|inv| inv.iter().all(|x| x.re.is_finite() && x.im.is_finite()))
    } else {
        None
    };
    let (mut f, regularized) = match direct {
        Some(mut inv) => {
            let residual = DMatrix::<Cplx>::identity(k, k) - &g * &inv;
            inv += &inv * residual;
            (inv, false)
        }
        None => {
            let gh = g.adjoint();
            let (inv, reg) = loaded_inverse(&(&g * &gh));
            (gh * inv, reg)
        }
    };
    for mut col in f.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= Cplx::new(norm, 0.0);
        }
    }
    Ok((f, regularized))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZfOutcome {
    pub sinr: Vec<f64>,
    pub rates: Vec<f64>,
    pub regularized: bool,
}

/// Per-user rates under ZF built from `g_est` and applied to `g_true`, with
/// `p_sum / K` per user.
pub fn zf_rates(
    g_true: &[Vec<Cplx>],
    g_est: &[Vec<Cplx>],
    p_sum_w: f64,
    noise_var: f64,
) -> Result<ZfOutcome> {
    let g = to_matrix(g_true)?;
    let (f, regularized) = zf_precoder(g_est)?;
    if g.shape() != (f.ncols(), f.nrows()) {
        return Err(Error::invalid(
            "true and estimated channels differ in shape",
        ));
    }
    if !(p_sum_w > 0.0) || !(noise_var > 0.0) {
        return Err(Error::invalid("power and noise variance must be positive"));
    }
    let k = g.nrows();
    let p = p_sum_w / k as f64;
    let h = &g * &f;
    let sinr: Vec<f64> = (0..k)
        .map(|i| {
            let signal = p * h[(i, i)].norm_sqr();
            let interference: f64 = (0..k)
                .filter(|&j| j != i)
                .map(|j| p * h[(i, j)].norm_sqr())
                .sum();
            signal / (interference + noise_var)
        })
        .collect();
    let rates = sinr.iter().map(|s| (1.0 + s).log2()).collect();
    Ok(ZfOutcome {
        sinr,
        rates,
        regularized,
    })
}

/// Downlink rate settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    pub p_sum_w: f64,
    pub noise_var_w: f64,
    pub uplink_power_w: f64,
    pub uplink_pilot_length: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    pub alignment: AlignmentMetrics,
    pub rates: Vec<f64>,
    pub zf_regularized: bool,
}

/// Everything one method contributes for one trial.
pub fn evaluate_trial<R: Rng + ?Sized>(
    scene: &Scene,
    result: &AlignmentResult,
    uca: &UcaDescriptor,
    rate: &RateParams,
    rng: &mut R,
) -> Result<TrialMetrics> {
    let oracles = compute_oracles(scene, result, uca);
    let alignment = misalignment_metrics(result, &oracles)?;
    let g = effective_channel(scene, &result.final_beams)?;
    let prior = empirical_prior_variance(&g);
    let g_est = mmse_effective_channel(
        &g,
        rate.uplink_power_w,
        rate.uplink_pilot_length,
        rate.noise_var_w,
        prior,
        rng,
    )?;
    let zf = zf_rates(&g, &g_est, rate.p_sum_w, rate.noise_var_w)?;
    Ok(TrialMetrics {
        alignment,
        rates: zf.rates,
        zf_regularized: zf.regularized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::{codebook_angles, stage1_config};
    use crate::rng::{substream, Purpose};
    use crate::units::wavelength_m;
    use proptest::prelude::{any, prop_assert_eq, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn uca(m: usize) -> UcaDescriptor {
        UcaDescriptor::new(m, wavelength_m(28.0)).unwrap()
    }

    fn random_vec(m: usize, rng: &mut ChaCha8Rng) -> Vec<Cplx> {
        (0..m).map(|_| complex_gaussian(1.0, rng)).collect()
    }

    fn random_matrix(k: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<Cplx>> {
        (0..k).map(|_| random_vec(n, rng)).collect()
    }

    #[test]
    fn oracle_on_grid_los_path() {
        let u = uca(32);
        let cfg = stage1_config(1.0, 16).unwrap();
        for (c, &theta) in codebook_angles(&cfg).iter().enumerate() {
            let h: Vec<Cplx> = u.beam_weight(theta).iter().map(|x| x * 3.0).collect();
            assert_eq!(oracle_best_beam(&h, &u, &cfg), c);
        }
        assert_eq!(
            oracle_best_beam(&vec![Cplx::new(0.0, 0.0); 32], &u, &cfg),
            0
        );
    }

    #[test]
    fn oracle_matches_independent_argmax() {
        let u = uca(16);
        let cfg = ScanConfig::new(1.0, 0.7, 12, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let h = random_vec(16, &mut rng);
            // independent path: steer each angle, accumulate by hand
            let mut best = (0, -1.0);
            for c in 0..12 {
                let theta = 1.0 - 0.7 + c as f64 * (1.4 / 12.0);
                let w = u.beam_weight(theta);
                let mut acc = Cplx::new(0.0, 0.0);
                for (a, b) in h.iter().zip(&w) {
                    acc += a.conj() * b;
                }
                if acc.norm_sqr() > best.1 {
                    best = (c, acc.norm_sqr());
                }
            }
            assert_eq!(oracle_best_beam(&h, &u, &cfg), best.0);
        }
    }

    proptest! {
        #[test]
        fn oracle_scale_invariant(seed in any::<u64>(), scale in 1e-6f64..1e6) {
            let u = uca(8);
            let cfg = stage1_config(1.0, 16).unwrap();
            let h = random_vec(8, &mut ChaCha8Rng::seed_from_u64(seed));
            let s: Vec<Cplx> = h.iter().map(|x| x * scale).collect();
            prop_assert_eq!(oracle_best_beam(&h, &u, &cfg), oracle_best_beam(&s, &u, &cfg));
        }
    }

    #[test]
    fn flags_follow_and_or_rules() {
        let ok = AlignmentMetrics::from_pairs(vec![vec![false, false], vec![false, false]]);
        assert_eq!(ok.user_misaligned, vec![false, false]);
        assert!(!ok.system_misaligned);

        let partial = AlignmentMetrics::from_pairs(vec![vec![true, false], vec![false, true]]);
        assert_eq!(partial.user_misaligned, vec![false, false]);
        assert!(!partial.system_misaligned);

        let one = AlignmentMetrics::from_pairs(vec![vec![true, false], vec![true, true]]);
        assert_eq!(one.user_misaligned, vec![true, false]);
        assert!(one.system_misaligned);

        let single = AlignmentMetrics::from_pairs(vec![vec![true]]);
        assert_eq!(single.user_misaligned, vec![true]);
    }

    #[test]
    fn flags_invariant_to_relabeling() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let pairs: Vec<Vec<bool>> = (0..4)
                .map(|_| (0..4).map(|_| rng.random::<f64>() < 0.6).collect())
                .collect();
            let base = AlignmentMetrics::from_pairs(pairs.clone());
            let rru_perm = [2, 0, 3, 1];
            let user_perm = [1, 3, 0, 2];
            let relabeled: Vec<Vec<bool>> = (0..4)
                .map(|n| (0..4).map(|k| pairs[rru_perm[n]][user_perm[k]]).collect())
                .collect();
            let m = AlignmentMetrics::from_pairs(relabeled);
            assert_eq!(m.system_misaligned, base.system_misaligned);
            for k in 0..4 {
                assert_eq!(m.user_misaligned[k], base.user_misaligned[user_perm[k]]);
            }
        }
    }

    #[test]
    fn mmse_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_matrix(3, 3, &mut rng);
        let est = mmse_effective_channel(&g, 0.5, 16, 0.0, 1.0, &mut rng).unwrap();
        for (a, b) in g.iter().flatten().zip(est.iter().flatten()) {
            assert!((a - b).norm() < 1e-12);
        }
        let est = mmse_effective_channel(&g, 0.5, 16, 1.0, 0.0, &mut rng).unwrap();
        assert!(est.iter().flatten().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn mmse_beats_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (p, t, noise, v) = (0.1, 4, 1.0, 1.0);
        let (mut mse_mmse, mut mse_ls) = (0.0, 0.0);
        for _ in 0..10_000 {
            let g = vec![vec![complex_gaussian(v, &mut rng)]];
            let r = uplink_observations(&g, p, t, noise, &mut rng);
            let mmse = mmse_from_observations(&r, p, t, noise, v);
            let ls = r[0][0] / (t as f64 * f64::sqrt(p));
            mse_mmse += (mmse[0][0] - g[0][0]).norm_sqr();
            mse_ls += (ls - g[0][0]).norm_sqr();
        }
        assert!(mse_mmse <= mse_ls, "{mse_mmse} vs {mse_ls}");
    }

    fn residual_ok(g: &[Vec<Cplx>]) -> bool {
        let (f, reg) = zf_precoder(g).unwrap();
        assert!(!reg);
        let gm = to_matrix(g).unwrap();
        let h = &gm * &f;
        (0..g.len()).all(|k| {
            let gk: f64 = g[k].iter().map(|x| x.norm_sqr()).sum();
            (0..g.len())
                .filter(|&j| j != k)
                .all(|j| h[(k, j)].norm_sqr() < 1e-20 * gk)
        })
    }

    #[test]
    fn zf_nulls_interference() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let g = random_matrix(8, 8, &mut rng);
            assert!(residual_ok(&g));
        }
        // wide case goes through the Gram inverse
        let g = random_matrix(3, 5, &mut rng);
        let (f, _) = zf_precoder(&g).unwrap();
        let h = to_matrix(&g).unwrap() * f;
        for k in 0..3 {
            for j in 0..3 {
                if j != k {
                    assert!(h[(k, j)].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zf_perfect_csi_sinr() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = random_matrix(4, 4, &mut rng);
        let out = zf_rates(&g, &g, 2.0, 0.1).unwrap();
        let (f, _) = zf_precoder(&g).unwrap();
        let h = to_matrix(&g).unwrap() * f;
        for k in 0..4 {
            let want = 0.5 * h[(k, k)].norm_sqr() / 0.1;
            assert!((out.sinr[k] - want).abs() < 1e-9 * want);
        }
    }

    #[test]
    fn zf_scalar_and_identity() {
        let g = vec![vec![Cplx::new(0.3, -0.4)]];
        let out = zf_rates(&g, &g, 2.0, 0.5).unwrap();
        assert!((out.rates[0] - (1.0 + 2.0 * 0.25 / 0.5f64).log2()).abs() < 1e-12);

        let eye: Vec<Vec<Cplx>> = (0..3)
            .map(|i| {
                (0..3)
                    .map(|j| Cplx::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                    .collect()
            })
            .collect();
        let out = zf_rates(&eye, &eye, 3.0, 1.0).unwrap();
        for r in out.rates {
            assert!((r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zf_flags_singular_estimate() {
        let row = vec![Cplx::new(1.0, 0.0), Cplx::new(2.0, 1.0)];
        let g = vec![row.clone(), row];
        let out = zf_rates(&g, &g, 1.0, 1.0).unwrap();
        assert!(out.regularized);
        assert!(out.rates.iter().all(|r| r.is_finite()));
    }

    #[test]
    fn trial_evaluation_runs_end_to_end() {
        use crate::airlink::PbrQuantizer;
        use crate::channel::{ChannelOptions, PathLossParams};
        use crate::geometry::CellTopology;
        use crate::protocol::{Protocol, ProtocolParams};
        use crate::scheduler::RangeControl;
        use std::f64::consts::PI;

        let params = ProtocolParams {
            uca: uca(32),
            p_sum_w: 1.0,
            noise_var_w: crate::units::dbm_to_watts(-88.0),
            pilot_length: 256,
            oses_codebook_size: 32,
            stage1_size: 16,
            stage2_size: 16,
            nu: 0.5,
            range: RangeControl::new(0.8, 0.2, PI / 16.0).unwrap(),
            quantizer: PbrQuantizer::default(),
        };
        let proto = Protocol::new(params.clone()).unwrap();
        let topo =
            CellTopology::generate(400.0, 200.0, 8, 0.0, &mut substream(7, 0, Purpose::Users))
                .unwrap();
        let scene = Scene::distributed(
            &topo,
            &params.uca,
            &PathLossParams::default(),
            &ChannelOptions::new(3),
            &mut substream(7, 0, Purpose::DistributedChannels),
        )
        .unwrap();
        let result = proto
            .run_tssa(&scene, &mut substream(7, 0, Purpose::TssaNoise))
            .unwrap();
        let rate = RateParams {
            p_sum_w: 1.0,
            noise_var_w: params.noise_var_w,
            uplink_power_w: 1.0 / 8.0,
            uplink_pilot_length: 256,
        };
        let m = evaluate_trial(
            &scene,
            &result,
            &params.uca,
            &rate,
            &mut substream(7, 0, Purpose::UplinkNoise),
        )
        .unwrap();
        assert_eq!(m.rates.len(), 8);
        assert!(m.rates.iter().all(|r| r.is_finite() && *r >= 0.0));

        // a foreign oracle codebook is rejected
        let mut oracles = compute_oracles(&scene, &result, &params.uca);
        oracles.stage1_config = stage1_config(1.0, 32).unwrap();
        assert!(matches!(
            misalignment_metrics(&result, &oracles),
            Err(Error::CodebookMismatch(_))
        ));
    }
}

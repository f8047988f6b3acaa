//! Complete alignment procedures for one trial.
//!
//! [`Protocol::run_tssa`] runs the coarse full-circle scan, collects
//! feedback, schedules and reconfigures at the home BS, then refines every
//! RRU toward its scheduled user. The two baselines perform a single
//! full-resolution scan and pair RRUs to users at random; they differ only
//! in where the arrays sit ([`Layout`]).

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::airlink::{scan_codebook, PasRecord, PbrQuantizer};
use crate::beamforming::{stage1_config, Codebook, ScanConfig, UcaDescriptor};
use crate::channel::{synthesize_channel, ChannelOptions, ChannelRealization, PathLossParams};
use crate::geometry::{wrap_angle, CellTopology};
use crate::scheduler::{decide, ConfidenceMatrix, RangeControl, ScheduleDecision, Stage2Params};
use crate::{Cplx, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Tssa,
    OsesDistributed,
    OsesCentralized,
}

impl Method {
    pub const ALL: [Method; 3] = [
        Method::Tssa,
        Method::OsesDistributed,
        Method::OsesCentralized,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Tssa => "tssa",
            Method::OsesDistributed => "oses-distributed",
            Method::OsesCentralized => "oses-centralized",
        }
    }

    pub fn layout(&self) -> Layout {
        match self {
            Method::OsesCentralized => Layout::Centralized,
            _ => Layout::Distributed,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method '{s}'")))
    }
}

/// Where the `N` arrays are: on the RRU ring, or all at the cell center.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Distributed,
    Centralized,
}

/// Channels of every (array, user) pair for one trial, indexed `[n][k]`.
#[derive(Debug, Clone)]
pub struct Scene {
    layout: Layout,
    channels: Vec<Vec<ChannelRealization>>,
}

impl Scene {
    pub fn new(layout: Layout, channels: Vec<Vec<ChannelRealization>>) -> Result<Self> {
        let n = channels.len();
        if n == 0 || channels.iter().any(|row| row.len() != n) {
            return Err(Error::invalid("scene needs an N x N channel grid"));
        }
        Ok(Scene { layout, channels })
    }

    /// RRU-to-user channels of a distributed cell.
    pub fn distributed<R: Rng + ?Sized>(
        topology: &CellTopology,
        uca: &UcaDescriptor,
        path_loss: &PathLossParams,
        options: &ChannelOptions,
        rng: &mut R,
    ) -> Result<Self> {
        let n = topology.num_rrus();
        let channels = (0..n)
            .map(|rru| {
                (0..topology.num_users())
                    .map(|k| {
                        synthesize_channel(
                            topology.pair_geometry(rru, k)?,
                            uca,
                            path_loss,
                            options,
                            rng,
                        )
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Scene::new(Layout::Distributed, channels)
    }

    /// Channels of `N` subarrays colocated at the cell center. Blockage is
    /// drawn independently per subarray-user pair from the common distance.
    pub fn centralized<R: Rng + ?Sized>(
        topology: &CellTopology,
        uca: &UcaDescriptor,
        path_loss: &PathLossParams,
        options: &ChannelOptions,
        rng: &mut R,
    ) -> Result<Self> {
        let n = topology.num_rrus();
        let channels = (0..n)
            .map(|_| {
                (0..topology.num_users())
                    .map(|k| {
                        synthesize_channel(
                            topology.center_geometry(k)?,
                            uca,
                            path_loss,
                            options,
                            rng,
                        )
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Scene::new(Layout::Centralized, channels)
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn size(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, n: usize, k: usize) -> &ChannelRealization {
        &self.channels[n][k]
    }

    pub fn channels(&self) -> &[Vec<ChannelRealization>] {
        &self.channels
    }

    /// Whether user `k` has at least one unblocked array.
    pub fn user_has_los(&self, k: usize) -> bool {
        self.channels.iter().any(|row| row[k].los_present)
    }
}

/// Physical and protocol constants shared by all methods.
#[derive(Debug, Clone)]
pub struct ProtocolParams {
    pub uca: UcaDescriptor,
    pub p_sum_w: f64,
    pub noise_var_w: f64,
    pub pilot_length: usize,
    /// Codebook size `C` of the one-stage baselines.
    pub oses_codebook_size: usize,
    pub stage1_size: usize,
    pub stage2_size: usize,
    pub nu: f64,
    pub range: RangeControl,
    pub quantizer: PbrQuantizer,
}

/// Stage-1 feedback: detected index and (possibly quantized) PBR for every
/// (RRU, user) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackReport {
    pub best_index: Vec<Vec<usize>>,
    pub pbr: Vec<Vec<f64>>,
}

impl FeedbackReport {
    pub fn confidence_matrix(&self) -> Result<ConfidenceMatrix> {
        ConfidenceMatrix::new(self.pbr.clone(), self.best_index.clone())
    }
}

/// Refined scan of one RRU toward its scheduled user.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage2Record {
    pub rru: usize,
    pub user: usize,
    pub config: ScanConfig,
    pub index: usize,
    pub pas: PasRecord,
}

#[derive(Debug, Clone)]
pub struct AlignmentResult {
    pub method: Method,
    /// `schedule[n]` is the user served by RRU `n`.
    pub schedule: Vec<usize>,
    /// Power each RRU used in its last scan.
    pub rru_power_w: Vec<f64>,
    /// Full-circle sweep every pair was observed with (stage 1 for TSSA,
    /// the only sweep for the baselines).
    pub stage1_config: ScanConfig,
    pub stage1_indices: Vec<Vec<usize>>,
    pub feedback: Option<FeedbackReport>,
    pub decision: Option<ScheduleDecision>,
    /// One entry per RRU for TSSA, empty for the baselines.
    pub stage2: Vec<Stage2Record>,
    /// Estimated AOD of each RRU's scheduled user, in `[0, 2π)`.
    pub estimated_aods: Vec<f64>,
    pub final_beams: Vec<Vec<Cplx>>,
    /// Beam steps each RRU spent on training.
    pub steps_per_rru: usize,
    /// `Σ_n Σ_stages p_n × steps`.
    pub training_energy: f64,
}

/// A configured protocol with its full-circle codebooks cached.
#[derive(Debug, Clone)]
pub struct Protocol {
    params: ProtocolParams,
    stage1: Codebook,
    oses: Codebook,
}

impl Protocol {
    pub fn new(params: ProtocolParams) -> Result<Self> {
        if params.stage1_size < 2 || params.stage2_size < 2 || params.oses_codebook_size < 2 {
            return Err(Error::invalid("every codebook needs at least two beams"));
        }
        if !(params.p_sum_w > 0.0) || !(params.noise_var_w > 0.0) {
            return Err(Error::invalid(
                "power budget and noise variance must be positive",
            ));
        }
        if params.pilot_length == 0 {
            return Err(Error::invalid("pilot length must be positive"));
        }
        if !(0.0..=1.0).contains(&params.nu) {
            return Err(Error::invalid("FTPA decay factor must lie in [0, 1]"));
        }
        // the per-RRU share depends on N, which arrives with the scene; the
        // cached codebooks carry unit power and are re-powered per run
        let stage1 = Codebook::new(&params.uca, stage1_config(1.0, params.stage1_size)?);
        let oses = Codebook::new(&params.uca, stage1_config(1.0, params.oses_codebook_size)?);
        Ok(Protocol {
            params,
            stage1,
            oses,
        })
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    /// Same protocol at a different pilot length.
    pub fn with_pilot_length(&self, pilot_length: usize) -> Result<Self> {
        if pilot_length == 0 {
            return Err(Error::invalid("pilot length must be positive"));
        }
        let mut out = self.clone();
        out.params.pilot_length = pilot_length;
        Ok(out)
    }

    fn equal_share(&self, scene: &Scene) -> f64 {
        self.params.p_sum_w / scene.size() as f64
    }

    fn full_circle(&self, base: &Codebook, power: f64) -> Result<Codebook> {
        let config = base.config().with_power(power)?;
        Ok(Codebook::new(&self.params.uca, config))
    }

    fn sweep_all<R: Rng + ?Sized>(
        &self,
        scene: &Scene,
        codebook: &Codebook,
        rng: &mut R,
    ) -> Result<Vec<Vec<PasRecord>>> {
        let p = &self.params;
        (0..scene.size())
            .map(|n| {
                (0..scene.size())
                    .map(|k| {
                        scan_codebook(
                            scene.channel(n, k).channel_vector(),
                            codebook,
                            p.pilot_length,
                            p.noise_var_w,
                            rng,
                        )
                    })
                    .collect()
            })
            .collect()
    }

    /// Two-stage schedule-and-align.
    pub fn run_tssa<R: Rng + ?Sized>(&self, scene: &Scene, rng: &mut R) -> Result<AlignmentResult> {
        if scene.layout() != Layout::Distributed {
            return Err(Error::invalid("TSSA runs on a distributed scene"));
        }
        let p = &self.params;
        let n_rru = scene.size();
        let share = self.equal_share(scene);

        let stage1 = self.full_circle(&self.stage1, share)?;
        let pas = self.sweep_all(scene, &stage1, rng)?;
        let feedback = FeedbackReport {
            best_index: pas
                .iter()
                .map(|row| row.iter().map(PasRecord::best_index).collect())
                .collect(),
            pbr: pas
                .iter()
                .map(|row| row.iter().map(|r| p.quantizer.quantize(r.pbr())).collect())
                .collect(),
        };

        let decision = decide(
            &feedback.confidence_matrix()?,
            &Stage2Params {
                c1: p.stage1_size,
                c2: p.stage2_size,
                nu: p.nu,
                p_sum_w: p.p_sum_w,
                range: p.range,
            },
        )?;

        let mut stage2 = Vec::with_capacity(n_rru);
        let mut estimated_aods = Vec::with_capacity(n_rru);
        let mut final_beams = Vec::with_capacity(n_rru);
        for (rru, (&user, config)) in decision
            .assignment
            .iter()
            .zip(&decision.stage2_configs)
            .enumerate()
        {
            let codebook = Codebook::new(&p.uca, *config);
            let record = scan_codebook(
                scene.channel(rru, user).channel_vector(),
                &codebook,
                p.pilot_length,
                p.noise_var_w,
                rng,
            )?;
            let index = record.best_index();
            let aod = wrap_angle(config.raw_angle(index));
            estimated_aods.push(aod);
            final_beams.push(p.uca.beam_weight(aod));
            stage2.push(Stage2Record {
                rru,
                user,
                config: *config,
                index,
                pas: record,
            });
        }

        let steps_per_rru = p.stage1_size + p.stage2_size;
        let training_energy = share * n_rru as f64 * p.stage1_size as f64
            + decision.rru_power_w.iter().sum::<f64>() * p.stage2_size as f64;
        Ok(AlignmentResult {
            method: Method::Tssa,
            schedule: decision.assignment.clone(),
            rru_power_w: decision.rru_power_w.clone(),
            stage1_config: *stage1.config(),
            stage1_indices: feedback.best_index.clone(),
            feedback: Some(feedback),
            decision: Some(decision),
            stage2,
            estimated_aods,
            final_beams,
            steps_per_rru,
            training_energy,
        })
    }

    /// One-stage exhaustive search with random pairing on distributed RRUs.
    pub fn run_oses_distributed<R: Rng + ?Sized>(
        &self,
        scene: &Scene,
        rng: &mut R,
    ) -> Result<AlignmentResult> {
        if scene.layout() != Layout::Distributed {
            return Err(Error::invalid(
                "distributed baseline needs a distributed scene",
            ));
        }
        self.run_oses(Method::OsesDistributed, scene, rng)
    }

    /// One-stage exhaustive search with random pairing on colocated
    /// subarrays.
    pub fn run_oses_centralized<R: Rng + ?Sized>(
        &self,
        scene: &Scene,
        rng: &mut R,
    ) -> Result<AlignmentResult> {
        if scene.layout() != Layout::Centralized {
            return Err(Error::invalid(
                "centralized baseline needs a centralized scene",
            ));
        }
        self.run_oses(Method::OsesCentralized, scene, rng)
    }

    pub fn run<R: Rng + ?Sized>(
        &self,
        method: Method,
        scene: &Scene,
        rng: &mut R,
    ) -> Result<AlignmentResult> {
        match method {
            Method::Tssa => self.run_tssa(scene, rng),
            Method::OsesDistributed => self.run_oses_distributed(scene, rng),
            Method::OsesCentralized => self.run_oses_centralized(scene, rng),
        }
    }

    fn run_oses<R: Rng + ?Sized>(
        &self,
        method: Method,
        scene: &Scene,
        rng: &mut R,
    ) -> Result<AlignmentResult> {
        let p = &self.params;
        let n_rru = scene.size();
        let share = self.equal_share(scene);

        // pairing first so it does not depend on the pilot length
        let mut schedule: Vec<usize> = (0..n_rru).collect();
        schedule.shuffle(rng);

        let codebook = self.full_circle(&self.oses, share)?;
        let pas = self.sweep_all(scene, &codebook, rng)?;
        let stage1_indices: Vec<Vec<usize>> = pas
            .iter()
            .map(|row| row.iter().map(PasRecord::best_index).collect())
            .collect();

        let estimated_aods: Vec<f64> = schedule
            .iter()
            .enumerate()
            .map(|(n, &k)| codebook.angles()[stage1_indices[n][k]])
            .collect();
        let final_beams = estimated_aods
            .iter()
            .map(|&a| p.uca.beam_weight(a))
            .collect();

        Ok(AlignmentResult {
            method,
            schedule,
            rru_power_w: vec![share; n_rru],
            stage1_config: *codebook.config(),
            stage1_indices,
            feedback: None,
            decision: None,
            stage2: Vec::new(),
            estimated_aods,
            final_beams,
            steps_per_rru: p.oses_codebook_size,
            training_energy: share * n_rru as f64 * p.oses_codebook_size as f64,
        })
    }
}

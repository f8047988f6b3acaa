//! Seeded, parallel trial execution.

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use crate::beamforming::UcaDescriptor;
use crate::channel::ChannelOptions;
use crate::evaluation::{compute_oracles, evaluate_trial, RateParams};
use crate::geometry::{place_rrus, place_users, CellTopology, Point};
use crate::protocol::{AlignmentResult, Layout, Method, Protocol, Scene};
use crate::rng::{substream, substream_indexed, Purpose};
use crate::{Error, Result};

/// One method at one pilot length in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub pilot_length: usize,
    pub method: Method,
    pub trial: u64,
    pub user_misaligned: Vec<bool>,
    pub system_misaligned: bool,
    pub rates: Vec<f64>,
    pub zf_regularized: bool,
}

/// Scheduler inputs and decisions for one (RRU, user) pair of a TSSA run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchedulerTraceRow {
    #[serde(rename = "T")]
    pub pilot_length: usize,
    pub trial: u64,
    pub n: usize,
    pub k: usize,
    pub xi: f64,
    pub c_hat: usize,
    /// User scheduled on RRU `n`.
    pub sigma_n: usize,
    pub p_n: f64,
    pub theta_n: f64,
}

/// Detected versus oracle index for one pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairTraceRow {
    #[serde(rename = "T")]
    pub pilot_length: usize,
    pub trial: u64,
    pub method: Method,
    pub n: usize,
    pub k: usize,
    pub stage: u8,
    pub detected: usize,
    pub oracle: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialOutput {
    pub records: Vec<TrialRecord>,
    pub scheduler_trace: Vec<SchedulerTraceRow>,
    pub pair_trace: Vec<PairTraceRow>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub config: ExperimentConfig,
    /// Trial-major, then pilot length, then method in config order.
    pub records: Vec<TrialRecord>,
    pub scheduler_trace: Vec<SchedulerTraceRow>,
    pub pair_trace: Vec<PairTraceRow>,
}

fn noise_purpose(method: Method) -> Purpose {
    match method {
        Method::Tssa => Purpose::TssaNoise,
        Method::OsesDistributed => Purpose::OsesDistributedNoise,
        Method::OsesCentralized => Purpose::OsesCentralizedNoise,
    }
}

fn method_slot(method: Method) -> u64 {
    Method::ALL.iter().position(|m| *m == method).unwrap_or(0) as u64
}

/// Everything that stays fixed across trials.
#[derive(Debug, Clone)]
pub struct TrialContext {
    config: ExperimentConfig,
    uca: UcaDescriptor,
    rrus: Vec<Point>,
    options: ChannelOptions,
    /// `(pilot length, protocol, rate settings)` per sweep point.
    points: Vec<(usize, Protocol, RateParams)>,
}

impl TrialContext {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let uca = config.uca()?;
        let rrus = place_rrus(config.num_rrus, config.rru_ring_radius_m, config.rru_rotation_rad)?;
        let proto = Protocol::new(config.protocol_params(config.sweep()[0])?)?;
        let points = config
            .sweep()
            .into_iter()
            .map(|t| Ok((t, proto.with_pilot_length(t)?, config.rate_params(t))))
            .collect::<Result<Vec<_>>>()?;
        Ok(TrialContext {
            config: config.clone(),
            uca,
            rrus,
            options: config.channel_options(),
            points,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    /// The trial's user drop with the experiment's fixed RRU ring.
    pub fn topology(&self, trial: u64) -> Result<CellTopology> {
        let c = &self.config;
        let users = place_users(c.num_rrus, c.cell_radius_m, &mut substream(c.seed, trial, Purpose::Users))?;
        CellTopology::new(c.cell_radius_m, c.rru_ring_radius_m, self.rrus.clone(), users)
    }

    /// Distributed and (if any method needs it) centralized scenes.
    pub fn scenes(&self, trial: u64) -> Result<(Option<Scene>, Option<Scene>)> {
        let c = &self.config;
        let topo = self.topology(trial)?;
        let needs = |l: Layout| c.methods.iter().any(|m| m.layout() == l);
        let dist = if needs(Layout::Distributed) {
            let mut rng = substream(c.seed, trial, Purpose::DistributedChannels);
            Some(Scene::distributed(&topo, &self.uca, &c.path_loss, &self.options, &mut rng)?)
        } else {
            None
        };
        let cent = if needs(Layout::Centralized) {
            let mut rng = substream(c.seed, trial, Purpose::CentralizedChannels);
            Some(Scene::centralized(&topo, &self.uca, &c.path_loss, &self.options, &mut rng)?)
        } else {
            None
        };
        Ok((dist, cent))
    }

    /// All sweep points and methods of one trial. Noise streams are shared
    /// across pilot lengths, so longer pilots see the same draws rescaled.
    pub fn run_trial(&self, trial: u64) -> Result<TrialOutput> {
        let c = &self.config;
        let (dist, cent) = self.scenes(trial)?;
        let mut out = TrialOutput::default();
        for (t, proto, rate) in &self.points {
            for &method in &c.methods {
                let scene = match method.layout() {
                    Layout::Distributed => dist.as_ref(),
                    Layout::Centralized => cent.as_ref(),
                }
                .ok_or_else(|| Error::invalid("scene for method was not generated"))?;
                let mut noise = substream(c.seed, trial, noise_purpose(method));
                let result = proto.run(method, scene, &mut noise)?;
                let mut uplink = substream_indexed(c.seed, trial, Purpose::UplinkNoise, method_slot(method));
                let metrics = evaluate_trial(scene, &result, &self.uca, rate, &mut uplink)?;
                if c.trace {
                    self.trace(*t, trial, scene, &result, &mut out);
                }
                out.records.push(TrialRecord {
                    pilot_length: *t,
                    method,
                    trial,
                    user_misaligned: metrics.alignment.user_misaligned,
                    system_misaligned: metrics.alignment.system_misaligned,
                    rates: metrics.rates,
                    zf_regularized: metrics.zf_regularized,
                });
            }
        }
        Ok(out)
    }

    fn trace(&self, t: usize, trial: u64, scene: &Scene, result: &AlignmentResult, out: &mut TrialOutput) {
        let oracles = compute_oracles(scene, result, &self.uca);
        let n = scene.size();
        for rru in 0..n {
            for k in 0..n {
                out.pair_trace.push(PairTraceRow {
                    pilot_length: t,
                    trial,
                    method: result.method,
                    n: rru,
                    k,
                    stage: 1,
                    detected: result.stage1_indices[rru][k],
                    oracle: oracles.stage1[rru][k],
                });
            }
        }
        for (s, (_, oracle)) in result.stage2.iter().zip(&oracles.stage2) {
            out.pair_trace.push(PairTraceRow {
                pilot_length: t,
                trial,
                method: result.method,
                n: s.rru,
                k: s.user,
                stage: 2,
                detected: s.index,
                oracle: *oracle,
            });
        }
        if let (Some(fb), Some(dec)) = (&result.feedback, &result.decision) {
            for rru in 0..n {
                for k in 0..n {
                    out.scheduler_trace.push(SchedulerTraceRow {
                        pilot_length: t,
                        trial,
                        n: rru,
                        k,
                        xi: fb.pbr[rru][k],
                        c_hat: fb.best_index[rru][k],
                        sigma_n: dec.assignment[rru],
                        p_n: dec.rru_power_w[rru],
                        theta_n: dec.stage2_configs[rru].half_range_rad(),
                    });
                }
            }
        }
    }
}

/// Runs every trial of `config` on a worker pool and returns the records in
/// trial order, independent of the thread count.
pub fn simulate(config: &ExperimentConfig) -> Result<ExperimentResults> {
    let ctx = TrialContext::new(config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let outputs: Vec<TrialOutput> = pool.install(|| {
        (0..config.trials as u64)
            .into_par_iter()
            .map(|trial| ctx.run_trial(trial))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut results = ExperimentResults {
        config: config.clone(),
        records: Vec::new(),
        scheduler_trace: Vec::new(),
        pair_trace: Vec::new(),
    };
    for o in outputs {
        results.records.extend(o.records);
        results.scheduler_trace.extend(o.scheduler_trace);
        results.pair_trace.extend(o.pair_trace);
    }
    Ok(results)
}

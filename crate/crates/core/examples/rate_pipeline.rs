//! Downlink rates after alignment: beamformed channel, MMSE estimate from
//! uplink pilots, ZF precoding with equal power.
//!
//! `cargo run --example rate_pipeline`

use tssa::evaluation::{effective_channel, empirical_prior_variance, mmse_effective_channel, zf_rates};
use tssa::harness::{ExperimentConfig, TrialContext};
use tssa::protocol::Protocol;
use tssa::rng::{substream, Purpose};

fn main() -> tssa::Result<()> {
    let config = ExperimentConfig {
        pilot_lengths: vec![1024],
        ..ExperimentConfig::default()
    };
    let ctx = TrialContext::new(&config)?;
    let proto = Protocol::new(config.protocol_params(1024)?)?;
    let (dist, _) = ctx.scenes(4)?;
    let scene = dist.expect("distributed scene");
    let r = proto.run_tssa(&scene, &mut substream(config.seed, 4, Purpose::TssaNoise))?;

    let g = effective_channel(&scene, &r.final_beams)?;
    let rate = config.rate_params(1024);
    let prior = empirical_prior_variance(&g);
    let g_est = mmse_effective_channel(
        &g,
        rate.uplink_power_w,
        rate.uplink_pilot_length,
        rate.noise_var_w,
        prior,
        &mut substream(config.seed, 4, Purpose::UplinkNoise),
    )?;
    let perfect = zf_rates(&g, &g, rate.p_sum_w, rate.noise_var_w)?;
    let estimated = zf_rates(&g, &g_est, rate.p_sum_w, rate.noise_var_w)?;
    for k in 0..g.len() {
        println!(
            "user {k}: {:6.3} bit/s/Hz with MMSE CSI, {:6.3} with perfect CSI",
            estimated.rates[k], perfect.rates[k]
        );
    }
    Ok(())
}

//! One trial of TSSA and both one-stage baselines on the same users, with
//! per-user misalignment against the noiseless oracle.
//!
//! `cargo run --example alignment_trial [pilot_length]`

use tssa::evaluation::{compute_oracles, misalignment_metrics};
use tssa::harness::{ExperimentConfig, TrialContext};
use tssa::protocol::{Layout, Method, Protocol};
use tssa::rng::{substream, Purpose};

fn main() -> tssa::Result<()> {
    let t: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(64);
    let config = ExperimentConfig {
        pilot_lengths: vec![t],
        ..ExperimentConfig::default()
    };
    let ctx = TrialContext::new(&config)?;
    let proto = Protocol::new(config.protocol_params(t)?)?;
    let uca = config.uca()?;
    let (dist, cent) = ctx.scenes(0)?;
    let (dist, cent) = (dist.expect("distributed scene"), cent.expect("centralized scene"));

    for method in Method::ALL {
        let scene = if method.layout() == Layout::Centralized { &cent } else { &dist };
        let r = proto.run(method, scene, &mut substream(config.seed, 0, Purpose::TssaNoise))?;
        let m = misalignment_metrics(&r, &compute_oracles(scene, &r, &uca))?;
        let flags: String = m.user_misaligned.iter().map(|&u| if u { 'x' } else { '.' }).collect();
        println!(
            "{method:17} schedule {:?} users [{flags}] system misaligned: {}",
            r.schedule, m.system_misaligned
        );
    }
    Ok(())
}

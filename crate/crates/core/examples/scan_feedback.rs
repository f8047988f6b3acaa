//! One RRU scans a user: PAS, detected beam, PBR and its quantized feedback,
//! for a few pilot lengths.
//!
//! `cargo run --example scan_feedback`

use tssa::airlink::{run_scan, PbrQuantizer};
use tssa::beamforming::{stage1_config, UcaDescriptor};
use tssa::channel::{synthesize_channel, ChannelOptions, PathLossParams};
use tssa::evaluation::oracle_best_beam;
use tssa::rng::{substream, Purpose};
use tssa::units::{dbm_to_watts, wavelength_m};

fn main() -> tssa::Result<()> {
    let uca = UcaDescriptor::new(32, wavelength_m(28.0))?;
    let mut rng = substream(3, 0, Purpose::DistributedChannels);
    let channel = synthesize_channel((180.0, 1.0), &uca, &PathLossParams::default(), &ChannelOptions::new(3), &mut rng)?;
    let config = stage1_config(1.0 / 8.0, 16)?;
    let oracle = oracle_best_beam(channel.channel_vector(), &uca, &config);
    println!("LOS present: {}, oracle beam {oracle}", channel.los_present);

    let quantizer = PbrQuantizer::with_bits(3);
    for t in [16, 64, 256, 1024] {
        let mut noise = substream(3, 0, Purpose::TssaNoise);
        let pas = run_scan(channel.channel_vector(), &uca, &config, t, dbm_to_watts(-88.0), &mut noise)?;
        println!(
            "T = {t:4}: best beam {:2}, PBR {:8.3}, 3-bit feedback {:8.3}",
            pas.best_index(),
            pas.pbr(),
            quantizer.quantize(pas.pbr())
        );
    }
    Ok(())
}

//! Synthesize one trial's RRU-to-user channels and dump per-pair blockage,
//! path loss and LOS direction.
//!
//! `cargo run --example channel_dump`

use tssa::beamforming::UcaDescriptor;
use tssa::channel::{write_channels_csv, ChannelOptions, PathLossParams};
use tssa::geometry::CellTopology;
use tssa::protocol::Scene;
use tssa::rng::{substream, Purpose};
use tssa::units::wavelength_m;

fn main() -> tssa::Result<()> {
    let uca = UcaDescriptor::new(32, wavelength_m(28.0))?;
    let topo = CellTopology::generate(400.0, 200.0, 8, 0.0, &mut substream(2, 0, Purpose::Users))?;
    let scene = Scene::distributed(
        &topo,
        &uca,
        &PathLossParams::default(),
        &ChannelOptions::new(3),
        &mut substream(2, 0, Purpose::DistributedChannels),
    )?;
    let with_los = (0..scene.size()).filter(|&k| scene.user_has_los(k)).count();
    eprintln!("{with_los} of {} users see at least one unblocked RRU", scene.size());
    write_channels_csv(scene.channels(), std::io::stdout())
}

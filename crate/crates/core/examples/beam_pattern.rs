//! Stage-1 codebook of a 32-element UCA and its sampled beam pattern.
//!
//! `cargo run --example beam_pattern > pattern.csv`

use tssa::beamforming::{stage1_config, write_beam_pattern_csv, Codebook, UcaDescriptor};
use tssa::units::wavelength_m;

fn main() -> tssa::Result<()> {
    let uca = UcaDescriptor::new(32, wavelength_m(28.0))?;
    eprintln!("radius {:.3} mm", uca.radius_m() * 1e3);
    let codebook = Codebook::new(&uca, stage1_config(0.125, 16)?);
    for (c, a) in codebook.angles().iter().enumerate() {
        eprintln!("beam {c:2}: {:6.1} deg", a.to_degrees());
    }
    write_beam_pattern_csv(&uca, &codebook, 720, std::io::stdout())
}

//! Drop users in a cell and dump the layout as CSV.
//!
//! `cargo run --example topology_dump [out.csv]`

use std::fs::File;

use tssa::geometry::CellTopology;
use tssa::rng::{substream, Purpose};

fn main() -> tssa::Result<()> {
    let topo = CellTopology::generate(400.0, 200.0, 8, 0.0, &mut substream(1, 0, Purpose::Users))?;
    for k in 0..topo.num_users() {
        let (d, bearing) = topo.pair_geometry(0, k)?;
        println!("user {k}: {d:7.1} m from RRU 0 at {:6.1} deg", bearing.to_degrees());
    }
    match std::env::args().nth(1) {
        Some(path) => {
            let file = File::create(&path).map_err(|e| tssa::Error::Io { path: path.clone().into(), source: e })?;
            topo.write_csv(file)?;
            println!("wrote {path}");
        }
        None => topo.write_csv(std::io::stdout())?,
    }
    Ok(())
}

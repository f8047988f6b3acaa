//! Home-BS decision from a feedback matrix: assignment, FTPA power and the
//! refined scan windows.
//!
//! `cargo run --example scheduling`

use std::f64::consts::PI;

use tssa::scheduler::{decide, sum_log_objective, ConfidenceMatrix, RangeControl, Stage2Params};

fn main() -> tssa::Result<()> {
    let pbr = vec![
        vec![3.2, 0.4, 0.5, 0.3],
        vec![2.9, 0.6, 0.3, 1.1],
        vec![0.3, 0.4, 0.9, 0.4],
        vec![0.5, 1.8, 0.4, 0.6],
    ];
    let best = vec![vec![2, 9, 14, 5], vec![12, 3, 7, 0], vec![1, 4, 8, 11], vec![6, 15, 2, 10]];
    let conf = ConfidenceMatrix::new(pbr.clone(), best)?;
    let params = Stage2Params {
        c1: 16,
        c2: 16,
        nu: 0.5,
        p_sum_w: 1.0,
        range: RangeControl::new(0.8, 0.2, PI / 16.0)?,
    };
    let d = decide(&conf, &params)?;
    println!("objective {:.4}", sum_log_objective(&pbr, &d.assignment));
    for (n, cfg) in d.stage2_configs.iter().enumerate() {
        println!(
            "RRU {n} -> user {}: confidence {:.2}, power {:.3} W, center {:6.1} deg, half-range {:5.1} deg",
            d.assignment[n],
            d.rru_confidence[n],
            d.rru_power_w[n],
            cfg.center_rad().to_degrees(),
            cfg.half_range_rad().to_degrees()
        );
    }
    Ok(())
}

//! Small per-user rate CDF at T = 1024 written to `out/fig4-small`.
//!
//! `cargo run --release --example fig4_rates [trials]`

use tssa::harness::{run_experiment, ExperimentConfig, Preset};

fn main() -> tssa::Result<()> {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(300);
    let config = ExperimentConfig {
        preset: Preset::Fig4,
        trials,
        output_dir: "out/fig4-small".into(),
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&config)?;
    for row in &report.summary {
        println!(
            "{:17} mean {:.3}  p10 {:.3}  median {:.3}  p90 {:.3} bit/s/Hz",
            row.method, row.rate_mean, row.rate_p10, row.rate_p50, row.rate_p90
        );
    }
    if let Some(path) = &report.files.fig4 {
        println!("CDF written to {}", path.display());
    }
    Ok(())
}

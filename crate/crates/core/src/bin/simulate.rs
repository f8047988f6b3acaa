use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use tssa::harness::{run_experiment, ExperimentConfig, Preset};

/// Monte Carlo beam-alignment experiments for distributed mmWave arrays.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Args {
    /// TOML experiment config; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// fig3 (misalignment vs pilot length) or fig4 (rate CDF).
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write scheduler and per-pair index traces.
    #[arg(long)]
    trace: bool,
}

fn run(args: Args) -> tssa::Result<()> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(p) = args.preset {
        config.preset = p;
    }
    if let Some(t) = args.trials {
        config.trials = t;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(w) = args.threads {
        config.threads = w;
    }
    if let Some(o) = args.out {
        config.output_dir = o;
    }
    config.trace |= args.trace;
    config.validate()?;

    let start = Instant::now();
    let report = run_experiment(&config)?;
    eprintln!(
        "{} trials, preset {}, {:.1} s",
        config.trials,
        config.preset,
        start.elapsed().as_secs_f64()
    );
    println!("T,method,p_mis_sys,p_mis_sys_ci,rate_mean");
    for row in &report.summary {
        println!(
            "{},{},{:.4},{:.4},{:.3}",
            row.pilot_length, row.method, row.p_mis_sys, row.p_mis_sys_ci, row.rate_mean
        );
    }
    let f = &report.files;
    for path in [Some(&f.summary), f.fig3.as_ref(), f.fig4.as_ref(), f.scheduler_trace.as_ref(), f.pair_trace.as_ref()]
        .into_iter()
        .flatten()
    {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}

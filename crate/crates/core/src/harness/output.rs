//! CSV files of an experiment.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::Preset;
use super::runner::ExperimentResults;
use super::summary::{rate_cdf, summarize, SummaryRow};
use crate::error::Error;
use crate::Result;

pub const CDF_POINTS: usize = 200;

/// Writes `rows` with a header derived from the row type.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputFiles {
    pub config: PathBuf,
    pub summary: PathBuf,
    pub fig3: Option<PathBuf>,
    pub fig4: Option<PathBuf>,
    pub scheduler_trace: Option<PathBuf>,
    pub pair_trace: Option<PathBuf>,
}

/// Writes the effective config, the summary, the preset's figure CSV and,
/// when enabled, the traces into `dir`.
pub fn write_outputs(results: &ExperimentResults, summary: &[SummaryRow], dir: &Path) -> Result<OutputFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let config = &results.config;
    let mut files = OutputFiles {
        config: dir.join("config.toml"),
        summary: dir.join("summary.csv"),
        ..OutputFiles::default()
    };
    fs::write(&files.config, config.to_toml_string()).map_err(|e| Error::io(&files.config, e))?;
    write_rows(&files.summary, summary)?;

    match config.preset {
        Preset::Fig3 => {
            let path = dir.join("fig3.csv");
            let rows: Vec<_> = summary.iter().map(SummaryRow::fig3).collect();
            write_rows(&path, &rows)?;
            files.fig3 = Some(path);
        }
        Preset::Fig4 => {
            let path = dir.join("fig4.csv");
            let rows = rate_cdf(&results.records, config.rate_pilot_length, &config.methods, CDF_POINTS)?;
            write_rows(&path, &rows)?;
            files.fig4 = Some(path);
        }
    }
    if config.trace {
        let path = dir.join("scheduler_trace.csv");
        write_rows(&path, &results.scheduler_trace)?;
        files.scheduler_trace = Some(path);
        let path = dir.join("pair_trace.csv");
        write_rows(&path, &results.pair_trace)?;
        files.pair_trace = Some(path);
    }
    Ok(files)
}

/// Summary of a finished run together with where it was written.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub results: ExperimentResults,
    pub summary: Vec<SummaryRow>,
    pub files: OutputFiles,
}

/// Simulates `config` and writes every output into `config.output_dir`.
pub fn run_experiment(config: &super::ExperimentConfig) -> Result<ExperimentReport> {
    // fail on an unwritable directory before spending time simulating
    fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))?;
    let results = super::simulate(config)?;
    let summary = summarize(&results.records)?;
    let files = write_outputs(&results, &summary, &config.output_dir)?;
    Ok(ExperimentReport { results, summary, files })
}

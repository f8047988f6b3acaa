//! End-to-end checks across protocol, evaluation and harness.

use std::fs;

use tssa::harness::{run_experiment, simulate, summarize, ExperimentConfig, Preset, TrialContext};
use tssa::protocol::Method;

fn small(preset: Preset, trials: usize, threads: usize) -> ExperimentConfig {
    ExperimentConfig {
        preset,
        num_antennas: 16,
        num_rrus: 4,
        codebook_size: 16,
        stage1_size: 8,
        stage2_size: 8,
        pilot_lengths: vec![16, 256],
        rate_pilot_length: 256,
        trials,
        threads,
        seed: 11,
        ..ExperimentConfig::default()
    }
}

#[test]
fn serial_and_parallel_runs_agree() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in [1, 3] {
        let mut config = small(Preset::Fig3, 40, threads);
        config.output_dir = dir.path().join(format!("t{threads}"));
        config.trace = true;
        let report = run_experiment(&config).unwrap();
        let read = |p: &std::path::Path| fs::read_to_string(p).unwrap();
        outputs.push((
            read(&report.files.summary),
            read(report.files.fig3.as_ref().unwrap()),
            read(report.files.pair_trace.as_ref().unwrap()),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn single_trial_is_reproducible() {
    let a = simulate(&small(Preset::Fig3, 1, 1)).unwrap();
    let b = simulate(&small(Preset::Fig3, 1, 1)).unwrap();
    assert_eq!(a.records, b.records);
}

#[test]
fn fig3_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small(Preset::Fig3, 10, 1);
    config.output_dir = dir.path().to_path_buf();
    let report = run_experiment(&config).unwrap();
    let text = fs::read_to_string(report.files.fig3.unwrap()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("T,method,p_mis_sys,p_mis_sys_ci,p_mis_user_mean,trials"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2 * 3);
    assert!(rows[0].starts_with("16,tssa,"));
    assert!(rows.iter().all(|r| r.ends_with(",10")));
    assert!(report.files.fig4.is_none());
    let cfg = fs::read_to_string(report.files.config).unwrap();
    assert_eq!(ExperimentConfig::from_toml_str(&cfg).unwrap(), config);
}

#[test]
fn fig4_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small(Preset::Fig4, 10, 1);
    config.output_dir = dir.path().to_path_buf();
    let report = run_experiment(&config).unwrap();
    let text = fs::read_to_string(report.files.fig4.unwrap()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("method,rate_bps_hz,cdf"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    assert_eq!(rows.len(), 200 * 3);
    for chunk in rows.chunks(200) {
        assert_eq!(chunk[0][1], "0.0");
        assert_eq!(chunk[199][2], "1.0");
        let cdf: Vec<f64> = chunk.iter().map(|r| r[2].parse().unwrap()).collect();
        assert!(cdf.windows(2).all(|w| w[0] <= w[1]));
    }
    assert!(report.summary.iter().all(|r| r.pilot_length == 256));
}

#[test]
fn longer_pilots_do_not_hurt_on_common_draws() {
    let results = simulate(&small(Preset::Fig3, 200, 0)).unwrap();
    let summary = summarize(&results.records).unwrap();
    for m in Method::ALL {
        let p: Vec<f64> = summary.iter().filter(|r| r.method == m).map(|r| r.p_mis_sys).collect();
        assert!(p[1] <= p[0], "{m}: {p:?}");
    }
}

#[test]
fn unwritable_output_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let mut config = small(Preset::Fig3, 1, 1);
    config.output_dir = blocker.join("sub");
    let err = run_experiment(&config).unwrap_err();
    assert!(matches!(err, tssa::Error::Io { .. }), "{err}");
}

#[test]
fn methods_share_users_and_channels() {
    let config = small(Preset::Fig3, 3, 1);
    let ctx = TrialContext::new(&config).unwrap();
    let only_tssa = TrialContext::new(&ExperimentConfig {
        methods: vec![Method::Tssa],
        ..config.clone()
    })
    .unwrap();
    for trial in 0..3 {
        let a = ctx.run_trial(trial).unwrap();
        let b = only_tssa.run_trial(trial).unwrap();
        let tssa: Vec<_> = a.records.into_iter().filter(|r| r.method == Method::Tssa).collect();
        assert_eq!(tssa, b.records);
    }
}

#[test]
fn config_file_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    fs::write(&path, "preset = \"fig4\"\nnum_rrus = 4\n[path_loss]\nlos_shadowing_db = 4.0\n").unwrap();
    let c = ExperimentConfig::load(&path).unwrap();
    assert_eq!(c.num_rrus, 4);
    assert_eq!(c.path_loss.los_shadowing_db, 4.0);
    let err = ExperimentConfig::load(&dir.path().join("missing.toml")).unwrap_err();
    assert!(matches!(err, tssa::Error::Io { .. }));
    fs::write(&path, "num_rrus = \"eight\"").unwrap();
    assert!(matches!(ExperimentConfig::load(&path).unwrap_err(), tssa::Error::Config { .. }));
}

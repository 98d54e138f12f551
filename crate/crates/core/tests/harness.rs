use malliavin_lab::harness::{
    config_hash, read_csv, run_experiment, write_csv, write_metadata, ExperimentConfig,
    HarnessError, ReportRow, RunMetadata, EXPERIMENTS,
};

/// Cheap settings so every experiment finishes quickly.
fn small(experiment: &str) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        experiment: Some(experiment.to_string()),
        seed: 11,
        n: 2,
        dt: 0.01,
        paths: 400,
        samples: 400,
        draws: 3,
        x_points: 3,
        levels: vec![1, 2],
        drifts: vec!["sin".into()],
        ..Default::default()
    };
    if experiment == "time_continuity" {
        cfg.t = 0.2;
        cfg.gaps = vec![0.1, 0.2];
    }
    cfg
}

#[test]
fn every_experiment_runs_by_name() {
    for name in EXPERIMENTS {
        let rows = run_experiment(&small(name)).unwrap();
        assert!(!rows.is_empty(), "{name}");
        for r in &rows {
            assert_eq!(r.experiment, name);
            assert_ne!(r.metric, "error", "{name}: {}", r.note);
        }
    }
}

#[test]
fn unknown_and_missing_experiment() {
    let err = run_experiment(&small("bogus")).unwrap_err();
    match err {
        HarnessError::UnknownExperiment { name, available } => {
            assert_eq!(name, "bogus");
            assert!(available.contains("eta_check"));
        }
        other => panic!("unexpected {other:?}"),
    }
    let cfg = ExperimentConfig::default();
    assert_eq!(run_experiment(&cfg), Err(HarnessError::MissingExperiment));
}

#[test]
fn module_errors_become_failed_rows() {
    // Linear closed form for I_1 needs a sin drift.
    let mut cfg = small("i1_closed_form");
    cfg.drift = Some("cos".into());
    let rows = run_experiment(&cfg).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].pass, Some(false));
    assert!(!rows[0].note.is_empty());
}

fn row(parameters: &str, pass: Option<bool>) -> ReportRow {
    ReportRow {
        experiment: "eta_check".into(),
        parameters: parameters.into(),
        metric: "m".into(),
        value: 0.1 + 0.2,
        std_error: 1e-300,
        tolerance: f64::NAN,
        pass,
        seed: u64::MAX,
        version: "0.1.0".into(),
        note: "say \"hi\"".into(),
    }
}

#[test]
fn empty_report_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/empty.csv");
    write_csv(&[], &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(
        text,
        "experiment,parameters,metric,value,std_error,tolerance,pass,seed,version,note\n"
    );
    assert!(read_csv(&path).unwrap().is_empty());
}

#[test]
fn commas_are_quoted_and_reparse() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let rows = vec![row("a=1, 2;b=x,y", Some(true)), row("plain", None)];
    write_csv(&rows, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("\"a=1, 2;b=x,y\""));
    let back = read_csv(&path).unwrap();
    assert_eq!(back.len(), 2);
    for (a, b) in rows.iter().zip(&back) {
        assert_eq!(a.parameters, b.parameters);
        assert_eq!(a.note, b.note);
        assert_eq!(a.pass, b.pass);
        assert_eq!(a.seed, b.seed);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        assert!(b.tolerance.is_nan());
    }
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["girsanov", "representation_residual", "duhamel"] {
        let cfg = small(name);
        let a = dir.path().join(format!("{name}_a.csv"));
        let b = dir.path().join(format!("{name}_b.csv"));
        write_csv(&run_experiment(&cfg).unwrap(), &a).unwrap();
        let mut other = cfg.clone();
        other.workers = Some(3);
        // Worker count is part of the parameter column, so compare values.
        let rows_b = run_experiment(&other).unwrap();
        write_csv(&run_experiment(&cfg).unwrap(), &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let rows_a = read_csv(&a).unwrap();
        for (x, y) in rows_a.iter().zip(&rows_b) {
            assert_eq!(x.value.to_bits(), y.value.to_bits(), "{name} {}", x.metric);
        }
    }
}

#[test]
fn sidecar_records_hash_seed_and_rng() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small("series_half_factorial");
    let rows = run_experiment(&cfg).unwrap();
    let csv = dir.path().join("s.csv");
    write_csv(&rows, &csv).unwrap();
    let meta_path = write_metadata(&cfg, rows.len(), &csv).unwrap();
    assert_eq!(meta_path, dir.path().join("s.csv.meta.json"));
    let meta: RunMetadata =
        serde_json::from_str(&std::fs::read_to_string(&meta_path).unwrap()).unwrap();
    assert_eq!(meta.config_sha256, config_hash(&cfg));
    assert_eq!(meta.config_sha256.len(), 64);
    assert_eq!(meta.seed, 11);
    assert_eq!(meta.rows, rows.len());
    assert!(meta.rng.contains("ChaCha20"));
    let mut changed = cfg.clone();
    changed.seed = 12;
    assert_ne!(config_hash(&changed), meta.config_sha256);
}

#[test]
fn config_file_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.ini");
    std::fs::write(&path, "[grid]\nn = 2\nstepsz = 0.1\n").unwrap();
    let err = ExperimentConfig::parse_config(&path).unwrap_err();
    assert_eq!(
        err,
        HarnessError::UnknownKey {
            key: "stepsz".into(),
            line: 3
        }
    );
    let missing = ExperimentConfig::parse_config(&dir.path().join("none.ini")).unwrap_err();
    assert!(matches!(missing, HarnessError::Io { .. }));
}

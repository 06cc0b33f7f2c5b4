use qtorus::experiments::{
    run, summary_path, write_output, Experiment, ExperimentConfig, Overrides, Schedule,
};

fn scratch(name: &str) -> std::path::PathBuf {
    std::env::temp_dir().join(format!("qtorus-exp-{}-{name}", std::process::id()))
}

#[test]
fn presets_validate_and_round_trip() {
    for e in Experiment::ALL {
        let cfg = ExperimentConfig::preset(e);
        cfg.validate().unwrap();
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg, "{}", e.name());
    }
}

#[test]
fn written_artifacts_are_reproducible() {
    let mut cfg = ExperimentConfig::preset(Experiment::Egorov);
    cfg.apply(&Overrides {
        n_min: Some(16),
        n_max: Some(64),
        n_steps: Some(3),
        seed: Some(11),
        ..Default::default()
    })
    .unwrap();
    cfg.params.calibration_dims = vec![16, 32, 64];
    assert_eq!(
        cfg.schedule,
        Some(Schedule::Geometric {
            min: 16,
            max: 64,
            steps: 3
        })
    );
    let dir = scratch("egorov");
    let paths = [dir.join("a.csv"), dir.join("b.csv")];
    for p in &paths {
        write_output(&run(&cfg).unwrap(), p).unwrap();
    }
    let read = |p: &std::path::Path| std::fs::read_to_string(p).unwrap();
    assert_eq!(read(&paths[0]), read(&paths[1]));
    assert_eq!(
        read(&summary_path(&paths[0])),
        read(&summary_path(&paths[1]))
    );
    let csv = read(&paths[0]);
    assert!(csv.contains("# seed: 11"));
    // one row per map and N
    assert_eq!(
        csv.lines().filter(|l| !l.starts_with('#')).count(),
        1 + 3 * 3
    );
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn json_reports_go_to_the_primary_artifact() {
    let out = run(&ExperimentConfig::preset(Experiment::SlowConv)).unwrap();
    assert!(!out.primary_is_csv && out.summary.is_none());
    let v: serde_json::Value = serde_json::from_str(&out.primary).unwrap();
    assert_eq!(v["levels"].as_array().unwrap().len(), 3);
}

//! End-to-end checks of the command-line layer: determinism of emitted
//! files, schema validation, exit-code mapping, and the binary dump.

use opo_cat::{run_cat, run_check, run_detect, run_stability, run_steady, CliError, ReportFormat, RunConfig};

fn base_config(out: &std::path::Path) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.cutoffs = [2, 10, 10];
    cfg.outputs = out.to_path_buf();
    cfg
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let cfg_a = base_config(dir_a.path());
    let cfg_b = base_config(dir_b.path());

    run_steady(&cfg_a).unwrap();
    run_steady(&cfg_b).unwrap();
    run_detect(&cfg_a).unwrap();
    run_detect(&cfg_b).unwrap();

    for name in ["steady.json", "detect_cat.csv", "detect_mixture.csv", "photon_distributions.csv"] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn csv_files_carry_header_and_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base_config(dir.path());
    run_stability(&cfg).unwrap();
    let text = std::fs::read_to_string(dir.path().join("stability.csv")).unwrap();
    let mut lines = text.lines();
    let first = lines.next().unwrap();
    assert!(first.starts_with("# config-hash="), "comment line: {first}");
    assert_eq!(first, format!("# config-hash={}", cfg.fingerprint()));
    assert!(lines.next().unwrap().starts_with("config,index,re,im,"));
}

#[test]
fn stability_reports_instability_above_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(dir.path());
    cfg.nbar = None;
    cfg.chi2_t = Some(1.2e-3); // χ₂ > κ at κt = 1e-3
    cfg.validate().unwrap();
    run_stability(&cfg).unwrap();
    let text = std::fs::read_to_string(dir.path().join("stability.csv")).unwrap();
    let opo4_line = text.lines().find(|l| l.starts_with("opo4,")).unwrap();
    let fields: Vec<&str> = opo4_line.split(',').collect();
    assert_eq!(fields[4], "false", "stable column");
    assert_eq!(fields[5], "true", "unstable column");
}

#[test]
fn invalid_configs_are_config_errors() {
    let mut cfg = RunConfig::default();
    cfg.chi2_t = Some(1e-3); // both keys set
    assert!(matches!(cfg.validate(), Err(CliError::Config(_))));

    let parse = RunConfig::from_json("{\"nbar\": 0.5, \"phi_points\": 4}");
    let cfg = parse.unwrap();
    assert!(matches!(cfg.validate(), Err(CliError::Config(_))));

    // Exit-code mapping: config errors are 2, domain errors 3.
    assert_eq!(CliError::Config("x".into()).exit_code(), 2);
    assert_eq!(CliError::Domain(opo_core::OpoError::ZeroHeraldProbability).exit_code(), 3);
}

#[test]
fn above_threshold_steady_state_is_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(dir.path());
    cfg.nbar = None;
    cfg.chi2_t = Some(2e-3);
    cfg.validate().unwrap();
    let err = run_steady(&cfg).unwrap_err();
    assert!(matches!(err, CliError::Domain(opo_core::OpoError::AboveThreshold { .. })));
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn cat_dump_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base_config(dir.path());
    run_cat(&cfg, true).unwrap();
    let bytes = std::fs::read(dir.path().join("rho123.bin")).unwrap();
    let rho = opo_core::fock::FockDensityMatrix::read_dump(bytes.as_slice()).unwrap();
    assert_eq!(rho.basis().cutoffs(), &[2, 10, 10]);
    assert!((rho.trace().re - 1.0).abs() < 1e-8);
}

#[test]
fn sweep_merges_points_in_grid_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(dir.path());
    cfg.cutoffs = [2, 8, 8];
    let grid = [0.2, 0.1];
    opo_cat::run_sweep(&cfg, &grid, opo_cat::SweepTarget::Steady, 2).unwrap();
    let text = std::fs::read_to_string(dir.path().join("sweep_summary.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[1], "index,nbar,nbar_out,purity");
    assert!(lines[2].starts_with("0,0.2,"), "grid order preserved: {}", lines[2]);
    assert!(lines[3].starts_with("1,0.1,"));
    assert!(dir.path().join("sweep_000").join("steady.json").exists());
    assert!(dir.path().join("sweep_001").join("steady.json").exists());
}

#[test]
fn check_report_passes_at_reference_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base_config(dir.path());
    let all_pass = run_check(&cfg, ReportFormat::Csv).unwrap();
    assert!(all_pass, "reference-point check must pass");
    let text = std::fs::read_to_string(dir.path().join("check.csv")).unwrap();
    assert!(text.contains("visibility,"));
    assert!(!text.contains(",false\n"), "no failing rows expected");
}

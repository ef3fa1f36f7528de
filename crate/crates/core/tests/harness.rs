use std::fs;
use std::path::Path;
use std::process::Command;

use flrw_wave::decay::{DecaySeries, NormKind, NormSample};
use flrw_wave::harness::{
    dichotomy_sweep, exponent_table, export_csv, read_decay_csv, read_multiplier_csv, read_report_json,
    run_linear_decay, run_semilinear_decay, verify_multipliers, write_decay_csv, write_multiplier_csv,
    write_report_json, Classification, Config, ReportKind, MULTIPLIER_HEADER,
};
use flrw_wave::semilinear_solver::{Frame, Nonlinearity, RunStatus};
use flrw_wave::Error;
use serde_json::json;

fn config(value: serde_json::Value) -> Config {
    serde_json::from_value(value).unwrap()
}

/// One-dimensional linear run with `ℓ = 1/2`, `β = 3` up to `T = 100`.
fn linear_config() -> Config {
    config(json!({
        "model": {"n": 1, "ell": 0.5, "beta": 3.0},
        "grid": {"points_per_axis": 1024, "half_length": 24.0},
        "run": {"horizon": 100.0, "outputs_per_decade": 16},
        "report": {"qs": [6.0]}
    }))
}

fn sample_config(count: usize) -> Config {
    config(json!({
        "model": {"n": 1, "ell": 0.5, "beta": 2.0},
        "grid": {"points_per_axis": 64, "half_length": 8.0},
        "run": {"samples": {"count": count}}
    }))
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

#[test]
fn config_defaults_and_lowercase_enums() {
    let cfg = config(json!({
        "model": {"n": 2, "ell": 0.0, "beta": 2.0, "p": 2.5},
        "grid": {"points_per_axis": 128, "half_length": 40.0},
        "run": {"nonlinearity": "signed_power", "frame": "tau", "p_list": [2.0, 3.0]}
    }));
    assert_eq!(cfg.run.nonlinearity, Nonlinearity::SignedPower);
    assert_eq!(cfg.run.frame, Frame::Tau);
    assert_eq!(cfg.run.horizon, 1000.0);
    assert_eq!(cfg.run.samples.count, 1000);
    assert_eq!(cfg.window(), (100.0, 1000.0));
    assert_eq!(cfg.report.tolerance_for("l2"), 0.1);
    let back: Config = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn malformed_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let typo = write_json(
        dir.path(),
        "typo.json",
        &json!({"model": {"n": 1, "ell": 0.5, "beta": 3.0}, "grid": {"points_per_axis": 64, "half_lenght": 8.0}}),
    );
    assert!(matches!(Config::load(&typo), Err(Error::Parse { .. })));
    let upper = write_json(
        dir.path(),
        "upper.json",
        &json!({"model": {"n": 1, "ell": 0.5, "beta": 3.0}, "grid": {"points_per_axis": 64, "half_length": 8.0},
                "run": {"frame": "Tau"}}),
    );
    assert!(matches!(Config::load(&upper), Err(Error::Parse { .. })));
    assert!(matches!(Config::load(&dir.path().join("missing.json")), Err(Error::Io { .. })));
    // No power for a semilinear run.
    assert!(matches!(run_semilinear_decay(&linear_config(), 0), Err(Error::Config(_))));
}

#[test]
fn short_boxes_fail_before_any_computation() {
    let mut cfg = linear_config();
    cfg.grid.half_length = 10.0;
    assert!(matches!(run_linear_decay(&cfg, 0), Err(Error::Config(_))));
    cfg.model.p = Some(6.0);
    assert!(matches!(run_semilinear_decay(&cfg, 0), Err(Error::Config(_))));
    cfg.run.p_list = vec![2.0, 6.0];
    assert!(matches!(dichotomy_sweep(&cfg, 0), Err(Error::Config(_))));
}

#[test]
fn decay_csv_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let mut series = DecaySeries::new(vec![3.0, 6.0]);
    for (i, t) in [1.0, 1.5, 2.25].into_iter().enumerate() {
        let k = i as f64;
        series.push(NormSample { t, l2: 0.1 / 3.0 + k, linf: std::f64::consts::PI * 1e-17, lq: vec![1e300, -0.0] }).unwrap();
    }
    let path = dir.path().join("decay.csv");
    write_decay_csv(&series, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("t,l2,linf,lq_3,lq_6\n"));
    assert!(!text.contains('\r'));
    assert_eq!(read_decay_csv(&path).unwrap(), series);
}

#[test]
fn empty_sample_writes_the_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let report = verify_multipliers(&sample_config(0), 0).unwrap();
    assert!(report.multipliers.is_empty());
    let path = dir.path().join("multipliers.csv");
    export_csv(&report, &path).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap(), format!("{}\n", MULTIPLIER_HEADER.join(",")));
    assert!(read_multiplier_csv(&path).unwrap().is_empty());
}

#[test]
fn multiplier_outputs_are_reproducible_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sample_config(40);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let first = verify_multipliers(&cfg, 11).unwrap();
    write_multiplier_csv(&first.multipliers, &a).unwrap();
    write_multiplier_csv(&verify_multipliers(&cfg, 11).unwrap().multipliers, &b).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(read_multiplier_csv(&a).unwrap(), first.multipliers);
    assert!(first.passed);
    assert_eq!(first.provenance.seed, 11);

    let other = verify_multipliers(&cfg, 12).unwrap();
    assert_ne!(other.multipliers, first.multipliers);

    let json = dir.path().join("report.json");
    write_report_json(&first, &json).unwrap();
    assert!(!fs::read_to_string(&json).unwrap().contains('\r'));
    assert_eq!(read_report_json(&json).unwrap(), first);
}

#[test]
fn linear_report_recovers_the_predicted_rates() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_linear_decay(&linear_config(), 0).unwrap();
    assert_eq!(report.kind, ReportKind::LinearDecay);
    assert_eq!(report.status, Some(RunStatus::Completed));
    assert!(report.passed, "{:#?}", report.comparisons);
    let norms: Vec<&str> = report.comparisons.iter().map(|c| c.norm.as_str()).collect();
    assert_eq!(norms, ["l2", "linf", "lq_6"]);

    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    export_csv(&report, &a).unwrap();
    export_csv(&run_linear_decay(&linear_config(), 0).unwrap(), &b).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let json = dir.path().join("report.json");
    write_report_json(&report, &json).unwrap();
    assert_eq!(read_report_json(&json).unwrap(), report);
}

#[test]
fn semilinear_report_without_nonlinearity_matches_the_linear_report() {
    let linear = run_linear_decay(&linear_config(), 0).unwrap();
    let mut cfg = linear_config();
    cfg.model.p = Some(3.0);
    cfg.run.nonlinearity = Nonlinearity::Zero;
    cfg.run.rtol = 1e-11;
    cfg.run.atol = 1e-15;
    let semi = run_semilinear_decay(&cfg, 0).unwrap();
    assert_eq!(semi.status, Some(RunStatus::Completed));
    let (a, b) = (semi.series.unwrap(), linear.series.unwrap());
    assert_eq!(a.rows.len(), b.rows.len());
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!(x.t, y.t);
        assert!((x.l2 - y.l2).abs() <= 1e-8 * y.l2);
        assert!((x.linf - y.linf).abs() <= 1e-8 * y.linf);
        assert!((x.lq[0] - y.lq[0]).abs() <= 1e-8 * y.lq[0]);
    }
    let window = linear_config().window();
    for kind in [NormKind::L2, NormKind::Linf, NormKind::Lq(6.0)] {
        let (fa, fb) = (a.fit(kind, window).unwrap(), b.fit(kind, window).unwrap());
        assert!((fa.exponent - fb.exponent).abs() <= 1e-8);
    }
}

#[test]
fn empty_power_list_gives_an_empty_sweep() {
    let report = dichotomy_sweep(&linear_config(), 0).unwrap();
    assert_eq!(report.kind, ReportKind::DichotomySweep);
    assert!(report.sweep.is_empty());
    assert_eq!(report.bracket, None);
    assert_eq!(report.monotone, Some(true));
    assert!(report.passed);
}

#[test]
fn supercritical_powers_with_small_data_all_decay() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = linear_config();
    cfg.run.delta = 0.01;
    cfg.run.p_list = vec![7.0, 6.0];
    let report = dichotomy_sweep(&cfg, 0).unwrap();
    assert_eq!(report.sweep.iter().map(|r| r.p).collect::<Vec<_>>(), [6.0, 7.0]);
    for row in &report.sweep {
        assert_eq!(row.status, RunStatus::Completed);
        assert_eq!(row.class, Classification::Decay);
        assert!(row.l2_exponent.unwrap() < 0.0);
    }
    assert_eq!(report.bracket, None);
    assert!(report.passed);
    let path = dir.path().join("sweep.csv");
    export_csv(&report, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p,status,blowup_time,l2_exponent,linf_ratio,class"));
    assert!(lines.next().unwrap().contains(",completed,,"));
}

#[test]
fn exponent_table_for_the_plane_without_expansion() {
    let rows = exponent_table(2, 0.0, 2.0).unwrap();
    let get = |name: &str| rows.iter().find(|r| r.name == name).unwrap().value;
    assert_eq!(get("p_c"), Some(2.0));
    assert_eq!(get("p_fujita(n)"), Some(2.0));
    assert!((get("p_strauss(n)").unwrap() - (3.0 + 17f64.sqrt()) / 2.0).abs() < 1e-14);
    assert_eq!(get("rho"), Some(-0.5));
    assert_eq!(get("mu"), Some(2.0));
    assert_eq!(get("beta_star"), Some(2.0));
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_flrw-wave")).args(args).output().unwrap()
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out_str = out.to_str().unwrap();

    let ok = cli(&["exponents", "--n", "2", "--ell", "0", "--beta", "2", "--out", out_str]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(fs::read_to_string(out.join("exponents.csv")).unwrap().starts_with("name,value\np_c,2"));

    assert_eq!(cli(&["exponents", "--bogus"]).status.code(), Some(1));
    assert_eq!(cli(&["linear-decay"]).status.code(), Some(1));
    assert_eq!(cli(&["linear-decay", "--config", "/nonexistent.json"]).status.code(), Some(1));

    let mut strict = serde_json::to_value(linear_config()).unwrap();
    strict["report"]["tolerance"] = json!(1e-9);
    let path = write_json(dir.path(), "strict.json", &strict);
    let failed = cli(&["linear-decay", "--config", path.to_str().unwrap(), "--out", out_str]);
    assert_eq!(failed.status.code(), Some(2));
    let report = read_report_json(&out.join("report.json")).unwrap();
    assert!(!report.passed);
    assert!(read_decay_csv(&out.join("decay.csv")).unwrap().rows.len() > 10);

    let path = write_json(dir.path(), "linear.json", &serde_json::to_value(linear_config()).unwrap());
    assert_eq!(cli(&["linear-decay", "--config", path.to_str().unwrap()]).status.code(), Some(0));
}

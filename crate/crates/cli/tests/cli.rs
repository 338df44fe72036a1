use std::path::Path;
use std::process::{Command, Output};

fn wrg(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wrg"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

#[test]
fn default_runs_pass_and_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [(&str, &[&str]); 9] = [
        ("filter_check", &[]),
        ("flow", &[]),
        ("flow", &["scheme=momentum_transfer", "M_max=6"]),
        ("two_point", &["scheme=point"]),
        ("two_point", &["scheme=blockspin"]),
        ("dynamics", &["K=10", "xi=[1,1]"]),
        ("causality", &[]),
        ("hamiltonian", &[]),
        ("infinite_volume", &["K=6", "eps=0.125"]),
    ];
    for (i, (exp, extra)) in runs.iter().enumerate() {
        let out = dir.path().join(i.to_string());
        let mut args = vec![*exp];
        args.extend_from_slice(extra);
        let o = wrg(&args, &out);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{exp} {extra:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let report: serde_json::Value =
            serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
        assert_eq!(report["experiment"], *exp);
        assert_eq!(report["pass"], true);
        let csv = std::fs::read_to_string(out.join(format!("{exp}.csv"))).unwrap();
        assert!(csv.starts_with("#wavelet-rg-report v1"), "{csv}");
        assert!(csv.lines().count() > 2);
        let header: serde_json::Value =
            serde_json::from_slice(&std::fs::read(out.join("run_header.json")).unwrap()).unwrap();
        assert_eq!(header["tool"], "wrg");
    }
}

#[test]
fn expected_divergence_is_a_pass() {
    let dir = tempfile::tempdir().unwrap();
    let o = wrg(&["flow", "scheme=blockspin"], &dir.path().join("a"));
    assert_eq!(o.status.code(), Some(2));
    let o = wrg(
        &["flow", "scheme=blockspin", "expect_divergence=true"],
        &dir.path().join("b"),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn tolerance_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = wrg(&["flow", "M_max=3", "tolerance=1e-12"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], false);
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let o = wrg(&["no_such_experiment"], out);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("valid names") && err.contains("poisson_defect"), "{err}");
    assert_eq!(wrg(&["flow", "bogus_key=1"], out).status.code(), Some(1));
    assert_eq!(wrg(&["flow", "d=0"], out).status.code(), Some(1));
    assert_eq!(wrg(&["flow", "novalue"], out).status.code(), Some(1));
    assert_eq!(wrg(&["flow", "K=1"], out).status.code(), Some(1));
    assert_eq!(wrg(&["two_point"], out).status.code(), Some(1));
    assert_eq!(wrg(&["infinite_volume", "d=2"], out).status.code(), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_wrg")).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_wrg")).arg("--help").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn config_file_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"experiment": "flow", "scheme": "wavelet", "K": 3, "M_max": 4, "tolerance": 1e-12}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = wrg(&["flow", "--config", cfg.to_str().unwrap(), "tolerance=1e-2"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["K"], 3);
    assert_eq!(report["config"]["tolerance"], 1e-2);
    assert_eq!(report["config"]["M_max"], 4);
    // the config names a different experiment
    let o = wrg(&["dynamics", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(1));
}

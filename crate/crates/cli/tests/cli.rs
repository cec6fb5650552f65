use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::Duration;

use proptest::prelude::*;
use serde_json::Value;
use talenti_cli::scenario::DEFAULT_AREA;
use talenti_cli::verify::VerifyOptions;
use talenti_cli::{exit, run_scenario, Check, CliError, Datum, Domain, Family, Scenario};

fn talenti(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_talenti"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env_remove("TALENTI_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn flags(report: &Value) -> Vec<(String, bool, String)> {
    report["flags"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| (f["check"].as_str().unwrap().to_string(), f["passed"].as_bool().unwrap(), f["verdict"].as_str().unwrap().to_string()))
        .collect()
}

#[test]
fn disk_equality_run_passes_and_writes_all_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = talenti(
        &["run", "--domain", "disk", "--f", "one", "--p", "2", "--beta", "1", "--h", "0.03", "--check", "lorentz,pointwise"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    for file in ["mesh.txt", "solution.csv", "solution.json", "report.json"] {
        assert!(dir.path().join(file).exists(), "{file}");
    }
    let f = flags(&report(dir.path()));
    assert!(f.iter().all(|(_, passed, _)| *passed));
    assert_eq!(f.iter().filter(|(c, _, _)| c.starts_with("lorentz-equality")).count(), 2);
    assert!(f.iter().any(|(c, _, _)| c == "pointwise-equality"));
}

#[test]
fn square_gap_is_a_strict_pass() {
    let dir = tempfile::tempdir().unwrap();
    let o = talenti(&["run", "--domain", "square", "--f", "one", "--p", "2", "--beta", "1", "--k", "1", "--check", "lorentz"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let f = flags(&report(dir.path()));
    let (_, _, verdict) = f.iter().find(|(c, _, _)| c == "lorentz k=1").unwrap();
    assert_eq!(verdict, "strict-pass");
    assert!(stdout(&o).contains("STRICT"));
}

#[test]
fn failing_check_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = talenti(&["run", "--domain", "square", "--h", "0.05", "--check", "polya-szego"], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}{}", stdout(&o), stderr(&o));
    assert!(flags(&report(dir.path())).iter().any(|(c, passed, _)| c == "polya-szego" && !passed));
}

#[test]
fn p_one_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = talenti(&["run", "--domain", "disk", "--p", "1", "--check", "lorentz"], dir.path());
    assert_eq!(o.status.code(), Some(64));
    assert!(stderr(&o).contains("p must exceed 1"), "{}", stderr(&o));
}

#[test]
fn invalid_configuration_exits_64() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[(&[&str], &str)] = &[
        (&["run", "--p", "3", "--k", "5", "--check", "lorentz"], "admissible range"),
        (&["run", "--domain", "hexagon"], "unknown domain"),
        (&["run", "--check", "lorentz,colour"], "unknown check"),
        (&["run", "--p", "two"], "not a decimal number"),
        (&["run", "--h=-0.1"], "mesh_h must be positive"),
        (&["run", "--p", "3", "--check", "pointwise"], "n/(n-1)"),
        (&["run", "--domain", "square", "--n", "3"], "only supported on the disk"),
        (&["run", "--check", "rigidity-sweep"], "sweep command"),
        (&["sweep", "--family", "triangle"], "unknown family"),
        (&["sweep", "--check", "lorentz"], "only runs rigidity-sweep"),
        (&["mesh", "--h", "0"], "must be positive"),
        (&["verify", "--h", "0.2"], "outside the supported range"),
    ];
    for (args, message) in cases {
        let o = talenti(args, dir.path());
        assert_eq!(o.status.code(), Some(64), "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).contains(message), "{args:?}: {}", stderr(&o));
    }
    let o = talenti(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn ellipse_sweep_writes_a_gap_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = talenti(&["sweep", "--family", "ellipse", "--ratios", "1,1.2,1.5,2", "--check", "rigidity-sweep"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("gaps.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[0].starts_with("label,ratio"));
    let gaps: Vec<f64> = rows[1..]
        .iter()
        .map(|r| {
            let (label, rest) = r[1..].split_once("\",").unwrap();
            assert!(label.starts_with("ellipse("));
            rest.split(',').nth(5).unwrap().parse().unwrap()
        })
        .collect();
    assert!(gaps[0].abs() < 2e-3 && gaps.windows(2).all(|w| w[1] > w[0]), "{gaps:?}");
    let sweep: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("sweep.json")).unwrap()).unwrap();
    assert_eq!(sweep["monotone"], Value::Bool(true));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["--threads", "2", "run", "--domain", "ellipse(1.5,1)", "--p", "1.5", "--seed", "7", "--check", "lorentz,pointwise,talenti"];
    for dir in [&a, &b] {
        let o = talenti(&args, dir.path());
        assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    }
    for file in ["report.json", "margins.csv", "solution.csv"] {
        let read = |d: &tempfile::TempDir| std::fs::read(d.path().join(file)).unwrap();
        assert_eq!(read(&a), read(&b), "{file}");
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scenario.json");
    let s = Scenario::new(Domain::Ellipse { a: 2.0, b: 1.0 }, 3.0, 2.0, 0.05).with_checks(&[Check::Lorentz]);
    std::fs::write(&config, serde_json::to_string(&s).unwrap()).unwrap();
    let o = talenti(&["run", "--config", config.to_str().unwrap(), "--p", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let r = report(dir.path());
    assert_eq!(r["p"], 2.0);
    assert_eq!(r["beta"], 2.0);
    assert!(r["scenario"].as_str().unwrap().starts_with("ellipse(2,1)"));

    std::fs::write(&config, r#"{"domain": {"shape": "disk"}, "datum": {"kind": "one"}, "p": 2, "beta": 1, "colour": 3}"#).unwrap();
    let o = talenti(&["run", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(64));
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));
}

#[test]
fn radial_paths_run_in_higher_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let o = talenti(&["run", "--n", "3", "--p", "2.5", "--check", "lorentz,integral-identity"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let r = report(dir.path());
    assert_eq!(r["n"], 3);
    assert_eq!(r["norm_v"].as_array().unwrap().len(), 2);
    assert!(flags(&r).iter().any(|(c, passed, _)| c == "integral-identity-radial" && *passed));
    assert!(!dir.path().join("mesh.txt").exists());
}

#[test]
fn file_datums_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("f.csv");
    let rows: String = (0..=20).map(|i| format!("{},{}\n", i as f64 / 20.0, 2.0 - (i as f64 / 20.0).powi(2))).collect();
    std::fs::write(&profile, format!("r,f\n{rows}")).unwrap();
    let radial = dir.path().join("radial");
    let f = format!("radial-decreasing({})", profile.display());
    let o = talenti(&["run", "--f", &f, "--h", "0.05", "--check", "lorentz,talenti"], &radial);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));

    let field = format!("mesh-field({})", radial.join("solution.json").display());
    let o = talenti(&["run", "--domain", "square", "--f", &field, "--h", "0.05", "--check", "lorentz,talenti"], &dir.path().join("field"));
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));

    std::fs::write(&profile, "r,f\n0,1\n0.5,2\n1,1\n").unwrap();
    let o = talenti(&["run", "--f", &format!("radial-decreasing({})", profile.display())], dir.path());
    assert_eq!(o.status.code(), Some(64));
    assert!(stderr(&o).contains("profile increases"), "{}", stderr(&o));
}

#[test]
fn mesh_verb_emits_a_reloadable_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let o = talenti(&["mesh", "--domain", "lshape", "--h", "0.1", "--area", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("mesh.txt")).unwrap();
    let mesh = talenti_core::Mesh64::from_text(&text).unwrap();
    assert!((mesh.measure() - 2.0).abs() < 1e-12);
    assert_eq!(mesh.to_text(), text);
}

#[test]
fn interrupted_verify_exits_130() {
    let dir = tempfile::tempdir().unwrap();
    let child = Command::new(env!("CARGO_BIN_EXE_talenti"))
        .args(["verify", "--h", "0.03", "--out-dir"])
        .arg(dir.path())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    std::thread::sleep(Duration::from_millis(1500));
    let sent = Command::new("kill").args(["-INT", &child.id().to_string()]).status().unwrap();
    assert!(sent.success());
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(130), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("interrupted after"), "{}", stdout(&o));
    let partial: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert!(partial.as_array().unwrap().len() < 10);
}

#[test]
fn library_run_matches_exit_contract() {
    let dir = tempfile::tempdir().unwrap();
    let s = Scenario::new(Domain::Disk, 2.0, 1.0, 0.05).with_checks(&[Check::Talenti, Check::IntegralIdentity, Check::Dirichlet]);
    let outcome = run_scenario(&s, dir.path()).unwrap();
    assert_eq!(outcome.status(), exit::PASS);
    assert!(outcome.files.margins.as_ref().unwrap().exists());

    let bad = Scenario::new(Domain::Disk, 0.5, 1.0, 0.05);
    assert_eq!(run_scenario(&bad, dir.path()).unwrap_err().exit_code(), exit::USAGE);
    assert_eq!(CliError::Interrupted.exit_code(), exit::INTERRUPTED);
    assert!(VerifyOptions::new(0.005, 0).is_err() && VerifyOptions::new(0.1, 0).is_err() && VerifyOptions::new(0.03, 0).is_ok());
}

#[test]
fn shape_and_datum_syntax() {
    assert_eq!("ellipse(2,1)".parse::<Domain>().unwrap(), Domain::Ellipse { a: 2.0, b: 1.0 });
    assert_eq!("rectangle:3,1".parse::<Domain>().unwrap(), Domain::Rectangle { a: 3.0, b: 1.0 });
    assert_eq!("Square".parse::<Domain>().unwrap(), Domain::Square);
    assert_eq!("polygon(a.txt)".parse::<Domain>().unwrap(), Domain::Polygon { path: "a.txt".into() });
    assert!("ellipse(2)".parse::<Domain>().is_err());
    assert_eq!("one".parse::<Datum>().unwrap(), Datum::One);
    assert_eq!("mesh-field(s.json)".parse::<Datum>().unwrap(), Datum::MeshField { path: "s.json".into() });
    for c in Check::ALL {
        assert_eq!(c.name().parse::<Check>().unwrap(), c);
    }
    assert_eq!("rectangle".parse::<Family>().unwrap(), Family::Rectangle);
    assert!(Domain::Ellipse { a: 1.0, b: 1.0 }.is_ball() && !Domain::Square.is_ball());
}

fn domain_strategy() -> impl Strategy<Value = Domain> {
    prop_oneof![
        Just(Domain::Disk),
        Just(Domain::Square),
        Just(Domain::Lshape),
        (0.1f64..10.0, 0.1f64..10.0).prop_map(|(a, b)| Domain::Ellipse { a, b }),
        (0.1f64..10.0, 0.1f64..10.0).prop_map(|(a, b)| Domain::Rectangle { a, b }),
        "[a-z]{1,8}\\.txt".prop_map(|p| Domain::Polygon { path: p.into() }),
    ]
}

fn datum_strategy() -> impl Strategy<Value = Datum> {
    prop_oneof![
        Just(Datum::One),
        "[a-z]{1,8}\\.csv".prop_map(|p| Datum::RadialDecreasing { path: p.into() }),
        "[a-z]{1,8}\\.json".prop_map(|p| Datum::MeshField { path: p.into() }),
    ]
}

proptest! {
    #[test]
    fn scenario_json_round_trip(
        domain in domain_strategy(),
        datum in datum_strategy(),
        n in 2usize..5,
        p in 1.01f64..6.0,
        beta in 0.01f64..10.0,
        mesh_h in 0.001f64..0.5,
        k_list in proptest::collection::vec(0.01f64..2.0, 0..4),
        checks in proptest::sample::subsequence(Check::ALL.to_vec(), 0..=Check::ALL.len()),
        area in prop_oneof![Just(DEFAULT_AREA), 0.1f64..10.0],
        seed in any::<u64>(),
    ) {
        let s = Scenario { domain, datum, n, p, beta, mesh_h, k_list, checks, area, seed };
        let text = serde_json::to_string(&s).unwrap();
        let back: Scenario = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, s);
    }
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cocycle-lab"))
        .current_dir(dir)
        .env_remove("COCYCLE_LAB_SEED")
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn minimal_trace_config_gives_ten_rows() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"operation": "trace", "system": {"kind": "doubling"}, "observable": "1", "N": 10, "seed": 42}"#,
    )
    .unwrap();
    let o = lab(dir.path(), &["trace", "--config", "c.json", "--out", "out"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(dir.path().join("out/trace.csv")).unwrap();
    let header = rdr.headers().unwrap().clone();
    assert_eq!(&header[0], "fingerprint");
    assert_eq!(&header[1], "seed");
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 10);
    let summary = json(&dir.path().join("out/trace.summary.json"));
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(&row[0], summary["fingerprint"].as_str().unwrap());
        assert_eq!(&row[1], "42");
        // constant observable: Φ_n = n
        assert_eq!(row[4].parse::<f64>().unwrap(), (k + 1) as f64);
    }
}

#[test]
fn malformed_cone_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(
        dir.path(),
        &[
            "sojourn",
            "--system",
            "iid-shift:rademacher,2",
            "--obs",
            "iid(d=2)",
            "--cone",
            "halfspace:0,y",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(
        err.contains("ConfigInvalid") && err.contains("cone"),
        "{err}"
    );

    fs::write(
        dir.path().join("c.json"),
        r#"{"system": {"kind": "iid-shift", "law": "rademacher", "dim": "two"}, "observable": "iid(d=2)", "cone": "halfspace:0,1"}"#,
    )
    .unwrap();
    let o = lab(dir.path(), &["sojourn", "--config", "c.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("system.dim"), "{}", stderr(&o));
}

#[test]
fn unknown_fields_and_flags_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"system": {"kind": "doubling"}, "obsrvable": "x"}"#,
    )
    .unwrap();
    let o = lab(dir.path(), &["trace", "--config", "c.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("obsrvable"));
    assert_eq!(
        lab(dir.path(), &["trace", "--no-such-flag"]).status.code(),
        Some(1)
    );
    let o = lab(dir.path(), &["trace", "--config", "missing.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn declared_module_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(
        dir.path(),
        &[
            "induce",
            "--system",
            "rotation:golden",
            "--obs",
            "x",
            "--set",
            "interval:0,0.001",
            "--returns",
            "5",
            "--cap",
            "2",
        ],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("no return"));
}

#[test]
fn outputs_do_not_depend_on_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str, jobs: &'static str| {
        vec![
            "sojourn",
            "--system",
            "iid-shift:gaussian,2",
            "--obs",
            "iid(d=2)",
            "--N",
            "3000",
            "--seeds",
            "70",
            "--cone",
            "angular:1,0;0.7",
            "--ball-radius",
            "4",
            "--seed",
            "11",
            "--jobs",
            jobs,
            "--out",
            out,
        ]
    };
    assert!(lab(dir.path(), &args("one", "1")).status.success());
    assert!(lab(dir.path(), &args("three", "3")).status.success());
    let a = fs::read(dir.path().join("one/sojourn.csv")).unwrap();
    let b = fs::read(dir.path().join("three/sojourn.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        json(&dir.path().join("one/sojourn.summary.json")),
        json(&dir.path().join("three/sojourn.summary.json"))
    );
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"system": {"kind": "iid-shift", "law": "gaussian"}, "observable": "iid", "N": 5, "seed": 1}"#,
    )
    .unwrap();
    let run = |env: Option<&str>, extra: &[&str], out: &str| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_cocycle-lab"));
        cmd.current_dir(dir.path()).env_remove("COCYCLE_LAB_SEED");
        if let Some(s) = env {
            cmd.env("COCYCLE_LAB_SEED", s);
        }
        let o = cmd
            .args(["trace", "--config", "c.json", "--out", out])
            .args(extra)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        json(&dir.path().join(out).join("trace.summary.json"))["seed"]
            .as_u64()
            .unwrap()
    };
    assert_eq!(run(None, &[], "a"), 1);
    assert_eq!(run(Some("5"), &[], "b"), 5);
    assert_eq!(run(Some("5"), &["--seed", "8"], "c"), 8);
    let a = fs::read_to_string(dir.path().join("a/trace.csv")).unwrap();
    let b = fs::read_to_string(dir.path().join("b/trace.csv")).unwrap();
    assert_ne!(a, b);
}

fn schema() -> jsonschema::Validator {
    let text = include_str!("../schemas/acceptance-report.schema.json");
    jsonschema::validator_for(&serde_json::from_str(text).unwrap()).unwrap()
}

#[test]
fn accept_report_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(dir.path(), &["accept", "--criteria", "5,16", "--out", "r"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(
        stdout.contains("[PASS]  5") && stdout.contains("[PASS] 16"),
        "{stdout}"
    );
    let report = json(&dir.path().join("r/acceptance.json"));
    assert!(schema().is_valid(&report));
    assert_eq!(report["passed"], 2);
}

#[test]
fn zero_tolerance_reports_failures_with_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(
        dir.path(),
        &[
            "accept",
            "--criteria",
            "16",
            "--zero-tolerance",
            "--out",
            "z.json",
        ],
    );
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("[FAIL] 16"), "{stdout}");
    let report = json(&dir.path().join("z.json"));
    assert!(schema().is_valid(&report));
    let m = &report["criteria"][0]["measurements"][0];
    assert_eq!(m["pass"], false);
    assert_eq!(m["check"]["tolerance"], 0.0);
    assert!(m["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn every_subcommand_writes_fingerprinted_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 5] = [
        &[
            "induce",
            "--system",
            "doubling",
            "--obs",
            "x - 0.5",
            "--set",
            "interval:0,0.5",
            "--returns",
            "50",
            "--seeds",
            "2",
        ],
        &[
            "directions",
            "--system",
            "cat-map",
            "--obs",
            "[x - 0.5, y - 0.5]",
            "--N",
            "2000",
            "--seeds",
            "3",
        ],
        &[
            "filling",
            "--system",
            "rotation:sqrt2m1",
            "--obs",
            "indicator(0,0.5) - 0.5",
            "--N",
            "300",
            "--seeds",
            "2",
        ],
        &[
            "sojourn",
            "--system",
            "iid-shift:rademacher,2",
            "--obs",
            "iid(d=2)",
            "--N",
            "100",
            "--cone",
            "orthant:+,+",
            "--grid",
            "10,50,100",
        ],
        &[
            "brownian",
            "--cone",
            "halfspace:1",
            "--samples",
            "20",
            "--t",
            "1",
            "--h",
            "0.01",
        ],
    ];
    for args in cases {
        let op = args[0];
        let mut full = args.to_vec();
        full.extend(["--seed", "3", "--out", op]);
        let o = lab(dir.path(), &full);
        assert!(o.status.success(), "{op}: {}", stderr(&o));
        let summary = json(&dir.path().join(op).join(format!("{op}.summary.json")));
        let fp = summary["fingerprint"].as_str().unwrap().to_string();
        let mut rdr =
            csv::Reader::from_path(dir.path().join(op).join(format!("{op}.csv"))).unwrap();
        let mut rows = 0;
        for r in rdr.records() {
            let r = r.unwrap();
            assert_eq!(&r[0], fp);
            assert_eq!(&r[1], "3");
            rows += 1;
        }
        assert!(rows > 0, "{op}");
        assert_eq!(summary["rows"], rows);
    }
}

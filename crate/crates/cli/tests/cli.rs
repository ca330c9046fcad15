//! End-to-end runs of the binary: outputs, manifests, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn spacorr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spacorr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn spacorr_argv(args: &[String]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spacorr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn manifest_argv(dir: &Path, subcommand: &str) -> Vec<String> {
    let body = read(&dir.join(format!("{subcommand}.manifest.json")));
    let value: serde_json::Value = serde_json::from_str(&body).unwrap();
    value["argv"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect()
}

#[test]
fn gen_writes_field_and_rerunning_its_manifest_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_success(&spacorr(&[
        "gen",
        "--grid=6x6",
        "--scheme=rook",
        "--rho=0.4",
        "--dist=laplace",
        "--seed=9",
        &format!("--out={out}"),
    ]));
    let field_path = dir.path().join("field.csv");
    let first = read(&field_path);
    assert!(first.starts_with("z\n"));
    assert_eq!(first.lines().count(), 37);

    let sidecar: serde_json::Value = serde_json::from_str(&read(&dir.path().join("field.json"))).unwrap();
    assert_eq!(sidecar["seed"], 9);
    assert_eq!(sidecar["rho"], 0.4);
    assert_eq!(sidecar["kind"], "laplace");

    // reproduce from the manifest alone
    let argv = manifest_argv(dir.path(), "gen");
    assert_success(&spacorr_argv(&argv));
    assert_eq!(first, read(&field_path));
}

#[test]
fn measure_reports_requested_kinds_and_derived_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_success(&spacorr(&[
        "gen",
        "--grid=8x8",
        "--scheme=queen",
        "--rho=0.5",
        "--seed=4",
        &format!("--out={out}"),
    ]));
    let input = dir.path().join("field.csv");
    assert_success(&spacorr(&[
        "measure",
        "--grid=8x8",
        "--scheme=queen",
        &format!("--input={}", input.display()),
        "--kinds=MC,GC,GK2",
        &format!("--out={out}"),
    ]));
    let rows: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("measures.json"))).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["kind"], "MC");
    assert_eq!(rows[0]["n"], 64);
    assert_eq!(rows[0]["scheme"], "queen");
    assert!(rows[0].get("one_minus_gc").is_none());
    let gc = rows[1]["value"].as_f64().unwrap();
    assert_eq!(rows[1]["one_minus_gc"].as_f64().unwrap(), 1.0 - gc);
    assert_eq!(rows[2]["kind"], "GK2");
}

#[test]
fn test_subcommand_emits_result_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_success(&spacorr(&[
        "gen",
        "--grid=7x7",
        "--rho=0.6",
        "--seed=11",
        &format!("--out={out}"),
    ]));
    let input = dir.path().join("field.csv");
    assert_success(&spacorr(&[
        "test",
        "--grid=7x7",
        &format!("--input={}", input.display()),
        "--kind=MC",
        "--n-perm=99",
        "--seed=2",
        &format!("--out={out}"),
    ]));
    let result: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("test.json"))).unwrap();
    assert_eq!(result["kind"], "MC");
    assert_eq!(result["n_permutations"], 99);
    let p = result["p_value"].as_f64().unwrap();
    assert!(p > 0.0 && p <= 1.0);
    assert_eq!(result["reject"].as_bool().unwrap(), p <= 0.05);
}

#[test]
fn influence_writes_curves_svg_and_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_success(&spacorr(&[
        "influence",
        "--kinds=MC,GK",
        "--runs=6",
        "--points=5",
        "--seed=3",
        "--threads=2",
        &format!("--out={out}"),
    ]));
    let csv = read(&dir.path().join("influence.csv"));
    assert_eq!(csv.lines().next().unwrap(), "z1,mean_influence,kind");
    assert_eq!(csv.lines().count(), 1 + 2 * 5);
    let svg = read(&dir.path().join("influence.svg"));
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));

    let argv = manifest_argv(dir.path(), "influence");
    assert_success(&spacorr_argv(&argv));
    assert_eq!(csv, read(&dir.path().join("influence.csv")));
}

#[test]
fn power_and_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_success(&spacorr(&[
        "power",
        "--grids=4x4",
        "--schemes=queen",
        "--rhos=0",
        "--dists=normal",
        "--kinds=MC,GC",
        "--reps=5",
        "--n-perm=19",
        "--seed=6",
        &format!("--out={out}"),
    ]));
    for name in ["power.json", "power.config.json", "power_cells.csv", "table1.csv", "power.svg"] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
    let cells = read(&dir.path().join("power_cells.csv"));
    assert_eq!(cells.lines().count(), 1 + 2);

    // rerun from the manifest: byte-identical power.json
    let power_json = read(&dir.path().join("power.json"));
    let argv = manifest_argv(dir.path(), "power");
    assert_success(&spacorr_argv(&argv));
    assert_eq!(power_json, read(&dir.path().join("power.json")));

    assert_success(&spacorr(&[
        "report",
        &format!("--input={}", dir.path().join("power.json").display()),
        "--layout=appendix",
        &format!("--out={out}"),
    ]));
    let appendix = read(&dir.path().join("appendix.csv"));
    assert!(appendix.starts_with("distribution,measure,n,W,rho_0"));
    assert_eq!(appendix.lines().count(), 1 + 2);
}

#[test]
fn exit_codes_follow_error_classes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    // usage: unknown flag
    let r = spacorr(&["gen", "--grid=4x4", "--no-such-flag"]);
    assert_eq!(r.status.code(), Some(2));

    // usage: measure without a weights source
    let r = spacorr(&["measure", "--input=/nonexistent.csv"]);
    assert_eq!(r.status.code(), Some(2));

    // data: unreadable input file
    let r = spacorr(&[
        "measure",
        "--grid=4x4",
        "--input=/nonexistent.csv",
        &format!("--out={out}"),
    ]);
    assert_eq!(r.status.code(), Some(3));

    // numerical: |rho| >= 1
    let r = spacorr(&["gen", "--grid=4x4", "--rho=1.0", &format!("--out={out}")]);
    assert_eq!(r.status.code(), Some(4));

    // numerical: constant field has zero variance
    let z = dir.path().join("constant.csv");
    std::fs::write(&z, "z\n1\n1\n1\n1\n1\n1\n1\n1\n1\n1\n1\n1\n1\n1\n1\n1\n").unwrap();
    let r = spacorr(&[
        "test",
        "--grid=4x4",
        &format!("--input={}", z.display()),
        "--n-perm=19",
        &format!("--out={out}"),
    ]);
    assert_eq!(r.status.code(), Some(4));
}

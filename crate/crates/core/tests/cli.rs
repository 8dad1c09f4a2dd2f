use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mcp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcp")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const SCALING: &str = r#"{"experiment_id": "NOISELESS_SCALING", "n": 32, "m": 4, "d_grid": [1, 3],
    "generators": [{"family": "CONSTANT"}, {"family": "K_SPARSE", "max_k": 1}],
    "budget": 18, "trials": 6, "base_seed": 21}"#;

#[test]
fn usage_and_help_exit_codes() {
    assert_eq!(code(&mcp(&["--help"])), 0);
    assert_eq!(code(&mcp(&["--version"])), 0);
    assert_eq!(code(&mcp(&[])), 1);
    assert_eq!(code(&mcp(&["frobnicate"])), 1);
    assert_eq!(
        code(&mcp(&[
            "generate",
            "--n",
            "8",
            "--generators",
            "NOPE",
            "--budget",
            "12"
        ])),
        1
    );
    assert_eq!(
        code(&mcp(&[
            "bounds",
            "--kappa-bits",
            "3",
            "--n",
            "8",
            "--m",
            "3",
            "--d",
            "4",
            "--tau",
            "2"
        ])),
        1
    );
}

#[test]
fn io_errors_exit_3() {
    let out = mcp(&[
        "solve",
        "--input",
        "/nonexistent/m.json",
        "--generators",
        "CONSTANT",
        "--budget",
        "12",
    ]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/m.json"));
}

#[test]
fn generate_lists_codebook() {
    let out = mcp(&[
        "generate",
        "--n",
        "8",
        "--m",
        "3",
        "--generators",
        "CONSTANT,K_SPARSE:1",
        "--budget",
        "15",
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,id,generator,description_length,codes");
    // zero signal, 8 constants, 8 positions times 7 nonzero levels
    assert_eq!(lines.len() - 1, 1 + 8 + 56);
    assert!(lines[1].starts_with("0,K_SPARSE:0,K_SPARSE:1,9,"));
}

#[test]
fn measure_then_solve_recovers_truth() {
    let dir = tempfile::tempdir().unwrap();
    let meas = dir.path().join("m.json");
    let meas_s = meas.to_str().unwrap();
    let codes = "0,0,0,0,0,6,0,0,0,0,0,0";
    assert_eq!(
        code(&mcp(&[
            "measure", "--d", "5", "--n", "12", "--m", "3", "--seed", "4", "--codes", codes, "--output", meas_s
        ])),
        0
    );
    let out = mcp(&[
        "solve",
        "--input",
        meas_s,
        "--generators",
        "CONSTANT,K_SPARSE:1",
        "--budget",
        "16",
    ]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["codes"], serde_json::json!([0, 0, 0, 0, 0, 6, 0, 0, 0, 0, 0, 0]));
    assert_eq!(v["error"]["l2"], 0.0);

    // The truth is outside a constant-only codebook.
    let out = mcp(&["solve", "--input", meas_s, "--generators", "CONSTANT", "--budget", "16"]);
    assert_eq!(code(&out), 2);
    let out = mcp(&[
        "solve",
        "--input",
        meas_s,
        "--generators",
        "CONSTANT",
        "--budget",
        "16",
        "--noisy",
    ]);
    assert_eq!(code(&out), 0);
}

#[test]
fn experiment_csv_is_reproducible_and_pinned() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", SCALING);
    let cfg = cfg.to_str().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = mcp(&["experiment", "--config", cfg, "--output", path.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(summary["points"].as_array().unwrap().len(), 2);
    }
    let first = std::fs::read(&a).unwrap();
    assert_eq!(first, std::fs::read(&b).unwrap());
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/cli_experiment_golden.csv");
    assert_eq!(
        String::from_utf8(first).unwrap(),
        std::fs::read_to_string(golden).unwrap()
    );

    let c = dir.path().join("c.csv");
    mcp(&[
        "experiment",
        "--config",
        cfg,
        "--output",
        c.to_str().unwrap(),
        "--seed",
        "22",
    ]);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn experiment_json_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", SCALING);
    let out_path = dir.path().join("r.json");
    let out = mcp(&[
        "experiment",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        out_path.to_str().unwrap(),
        "--trials",
        "2",
    ]);
    assert_eq!(code(&out), 0);
    let report = mcp_core::harness::read_json_report(&out_path).unwrap();
    assert_eq!(report.records.len(), 4);
    assert_eq!(report.config.trials, 2);

    let bad = write(
        dir.path(),
        "bad.json",
        &SCALING.replacen("\"n\"", "\"extra\": 0, \"n\"", 1),
    );
    assert_eq!(
        code(&mcp(&[
            "experiment",
            "--config",
            bad.to_str().unwrap(),
            "--output",
            "x.csv"
        ])),
        1
    );
}

#[test]
fn verify_lemmas_with_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "l.json",
        r#"{"experiment_id": "LEMMAS", "n": 16, "m": 3, "d": 16, "r": 4.0, "sigma": 0.1,
        "generators": [{"family": "CONSTANT"}, {"family": "K_SPARSE", "max_k": 1}],
        "budget": 16, "trials": 40, "base_seed": 3}"#,
    );
    let out = mcp(&["verify-lemmas", "--config", cfg.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let names: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(names, ["E1", "E2", "E3", "E4", "E5", "UNION"]);
    let all_pass = text.lines().skip(1).all(|l| l.ends_with(",true"));
    assert_eq!(code(&out), if all_pass { 0 } else { 2 });
}

#[test]
fn bounds_prints_calculators() {
    let out = mcp(&[
        "bounds",
        "--kappa-bits",
        "10",
        "--n",
        "256",
        "--m",
        "6",
        "--d",
        "320",
        "--sigma",
        "1",
    ]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["theorem2"], 0.5);
    let g3 = v["gammas"]["gamma3"].as_f64().unwrap();
    assert!((g3 - 1.5f64.sqrt() / 0.5).abs() < 1e-12);
    assert!(v["events"]["e5"].as_f64().unwrap() > 0.0);
}

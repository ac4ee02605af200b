use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const Z_HALF: &str = r#"{"kind":"povm","dim":2,"effects":[[[[0.75,0.0],[0.0,0.0]],[[0.0,0.0],[0.25,0.0]]],[[[0.25,0.0],[0.0,0.0]],[[0.0,0.0],[0.75,0.0]]]],"labels":["+1","-1"]}"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_incompat"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    assert_eq!(
        o.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    serde_json::from_str(&stdout(o)).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn matrix_json(n: usize, entries: &[(usize, usize, f64)]) -> String {
    let mut m = vec![vec![[0.0, 0.0]; n]; n];
    for &(i, j, v) in entries {
        m[i][j][0] = v;
    }
    serde_json::to_string(&m).unwrap()
}

/// `Σ_ij |ii><jj|` on output ⊗ reference.
fn identity_channel(d: usize) -> String {
    let mut e = Vec::new();
    for i in 0..d {
        for j in 0..d {
            e.push((i * d + i, j * d + j, 1.0));
        }
    }
    format!(
        r#"{{"kind":"channel-choi","dim_in":{d},"dim_out":{d},"choi":{}}}"#,
        matrix_json(d * d, &e)
    )
}

/// Measure σz and write the outcome into both outputs.
fn classical_cloner() -> String {
    let e: Vec<_> = (0..2)
        .map(|k| (k * 4 + k * 2 + k, k * 4 + k * 2 + k, 1.0))
        .collect();
    format!(
        r#"{{"kind":"joint-channel","dim_in":2,"dim_out1":2,"dim_out2":2,"choi":{}}}"#,
        matrix_json(8, &e)
    )
}

#[test]
fn rom_of_parsed_povm() {
    let dir = TempDir::new().unwrap();
    write(&dir, "z.json", Z_HALF);
    let v = json(&run(dir.path(), &["rom", "z.json"]));
    assert!((v["value"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn roi_output_shape() {
    let dir = TempDir::new().unwrap();
    write(&dir, "z.json", Z_HALF);
    write(&dir, "id.json", &identity_channel(2));
    let v = json(&run(
        dir.path(),
        &["roi", "channel-povm", "id.json", "z.json"],
    ));
    for key in ["value", "primal", "dual", "gap"] {
        assert!(v[key].is_number(), "missing {key}: {v}");
    }
    let expect = (1.5f64.sqrt() - 1.0).powi(2);
    assert!((v["value"].as_f64().unwrap() - expect).abs() < 1e-6);
}

#[test]
fn incomplete_povm_is_input_error() {
    let dir = TempDir::new().unwrap();
    write(
        &dir,
        "bad.json",
        r#"{"kind":"povm","dim":1,"effects":[[[[0.9,0.0]]]]}"#,
    );
    let o = run(dir.path(), &["rom", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("completeness"), "{err}");
}

#[test]
fn malformed_json_reports_field() {
    let dir = TempDir::new().unwrap();
    write(&dir, "bad.json", "{\"kind\":\"povm\",\n\"dim\":\"two\"}");
    let o = run(dir.path(), &["rom", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("dim") && err.contains("line 2"), "{err}");
}

#[test]
fn unbiased_sweep_columns() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["sweep", "unbiased-eta", "--steps", "11"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("eta,rom,roi_id_povm,bound_corollary,bound_hm")
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 11);
    for (k, r) in rows.iter().enumerate() {
        let eta = k as f64 / 10.0;
        let base = ((1.0 + eta).sqrt() - 1.0).powi(2);
        assert!((r[0] - eta).abs() < 1e-12);
        assert!((r[1] - eta).abs() < 1e-9);
        assert!((r[2] - base).abs() < 1e-6);
        assert!((r[3] - 2.0 * base).abs() < 1e-9);
        assert!((r[4] - eta * eta / 16.0).abs() < 1e-9);
    }
    assert!(text.ends_with('\n'));
}

#[test]
fn sweep_is_deterministic_across_jobs() {
    let dir = TempDir::new().unwrap();
    let a = run(dir.path(), &["sweep", "sixfold-p", "--steps", "9"]);
    let b = run(
        dir.path(),
        &["sweep", "sixfold-p", "--steps", "9", "--jobs", "4"],
    );
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn bad_grid_is_input_error() {
    let dir = TempDir::new().unwrap();
    for args in [
        &["sweep", "sixfold-p", "--steps", "1"][..],
        &["sweep", "sixfold-p", "--start", "0.8", "--end", "0.2"],
        &["sweep", "unbiased-eta", "--end", "1.5"],
        &["sweep", "unbiased-eta", "--columns", "effect_norm"],
    ] {
        assert_eq!(run(dir.path(), args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn random_devices_are_reproducible_and_parse() {
    let dir = TempDir::new().unwrap();
    let a = run(
        dir.path(),
        &[
            "random",
            "povm",
            "--dim",
            "3",
            "--outcomes",
            "4",
            "--seed",
            "7",
        ],
    );
    let b = run(
        dir.path(),
        &[
            "random",
            "povm",
            "--dim",
            "3",
            "--outcomes",
            "4",
            "--seed",
            "7",
        ],
    );
    let c = run(
        dir.path(),
        &[
            "random",
            "povm",
            "--dim",
            "3",
            "--outcomes",
            "4",
            "--seed",
            "8",
        ],
    );
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    write(&dir, "e.json", &stdout(&a));
    json(&run(dir.path(), &["verify", "hm-dominance", "e.json"]));

    let ch = run(
        dir.path(),
        &["random", "channel", "--dim-in", "2", "--dim-out", "3"],
    );
    write(&dir, "c.json", &stdout(&ch));
    write(&dir, "c2.json", &stdout(&ch));
    let v = json(&run(dir.path(), &["diamond", "c.json", "c2.json"]));
    assert_eq!(v["value"].as_f64(), Some(0.0));
}

#[test]
fn theorem1_with_classical_cloner() {
    let dir = TempDir::new().unwrap();
    write(&dir, "id.json", &identity_channel(2));
    write(&dir, "joint.json", &classical_cloner());
    let v = json(&run(
        dir.path(),
        &["verify", "theorem1", "id.json", "id.json", "joint.json"],
    ));
    assert_eq!(v["inequality"], "theorem1");
    assert_eq!(v["pass"], true);
    assert!(v["slack"].as_f64().unwrap() >= 0.0);
}

#[test]
fn kraus_files_match_choi_files() {
    let dir = TempDir::new().unwrap();
    write(
        &dir,
        "k.json",
        r#"{"kind":"channel-kraus","dim_in":2,"dim_out":2,"kraus":[[[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[1.0,0.0]]]]}"#,
    );
    write(&dir, "id.json", &identity_channel(2));
    let v = json(&run(dir.path(), &["diamond", "k.json", "id.json"]));
    assert_eq!(v["value"].as_f64(), Some(0.0));
}

#[test]
fn wrong_device_kind_is_input_error() {
    let dir = TempDir::new().unwrap();
    write(&dir, "z.json", Z_HALF);
    let o = run(dir.path(), &["diamond", "z.json", "z.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn theorem4_precondition_is_input_error() {
    let dir = TempDir::new().unwrap();
    let sharp = r#"{"kind":"povm","dim":2,"effects":[[[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[0.0,0.0]]],[[[0.0,0.0],[0.0,0.0]],[[0.0,0.0],[1.0,0.0]]]]}"#;
    write(&dir, "z.json", sharp);
    write(&dir, "id.json", &identity_channel(2));
    let o = run(
        dir.path(),
        &["verify", "theorem4", "z.json", "z.json", "id.json"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("precondition"));
}

#[test]
fn iteration_limit_is_solver_failure() {
    let dir = TempDir::new().unwrap();
    write(&dir, "z.json", Z_HALF);
    write(&dir, "id.json", &identity_channel(2));
    let o = run(
        dir.path(),
        &[
            "roi",
            "channel-povm",
            "id.json",
            "z.json",
            "--max-iters",
            "2",
        ],
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn config_file_settings() {
    let dir = TempDir::new().unwrap();
    write(&dir, "z.json", Z_HALF);
    write(&dir, "id.json", &identity_channel(2));
    let args = ["roi", "channel-povm", "id.json", "z.json"];
    // Picked up from the working directory.
    write(&dir, "incompat.toml", "max_iters = 2\n");
    assert_eq!(run(dir.path(), &args).status.code(), Some(3));
    // Flags override the file.
    let mut with_flag = args.to_vec();
    with_flag.extend(["--max-iters", "100"]);
    assert_eq!(run(dir.path(), &with_flag).status.code(), Some(0));
    // Unknown keys are rejected.
    write(&dir, "other.toml", "tolerance = 1\n");
    let mut with_cfg = args.to_vec();
    with_cfg.extend(["--config", "other.toml"]);
    assert_eq!(run(dir.path(), &with_cfg).status.code(), Some(2));
}

#[test]
fn csv_output_for_reports() {
    let dir = TempDir::new().unwrap();
    write(&dir, "z.json", Z_HALF);
    let o = run(
        dir.path(),
        &["verify", "prop3", "z.json", "--format", "csv"],
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("inequality,lhs,rhs,slack,pass,instance"));
    assert!(lines.next().unwrap().starts_with("prop3,"));
}

#[test]
fn every_subcommand_is_exposed() {
    let dir = TempDir::new().unwrap();
    let paths: &[&[&str]] = &[
        &["roi", "channel-channel"],
        &["roi", "channel-povm"],
        &["roi", "povm-povm"],
        &["woi"],
        &["diamond"],
        &["rom"],
        &["l1-error"],
        &["disturbance"],
        &["verify", "theorem1"],
        &["verify", "theorem2"],
        &["verify", "prop3"],
        &["verify", "theorem4"],
        &["verify", "hm-dominance"],
        &["verify", "lipschitz"],
        &["sweep", "unbiased-eta"],
        &["sweep", "sixfold-p"],
        &["random", "povm"],
        &["random", "channel"],
    ];
    for p in paths {
        let mut args = p.to_vec();
        args.push("--help");
        assert_eq!(run(dir.path(), &args).status.code(), Some(0), "{p:?}");
    }
    assert_eq!(run(dir.path(), &["frobnicate"]).status.code(), Some(2));
}

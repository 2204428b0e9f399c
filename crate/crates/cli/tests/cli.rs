use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn doslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_doslab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn here(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join(rel)
}

fn assert_golden(args: &[&str], golden: &str) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join(golden);
    let mut full: Vec<&str> = args.to_vec();
    let out_s = out.to_str().unwrap();
    full.extend(["--out", out_s]);
    let res = doslab(&full);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for name in [golden.to_string(), format!("{golden}.meta.json")] {
        let got = fs::read(dir.path().join(&name)).unwrap();
        let want = fs::read(here(&format!("golden/{name}"))).unwrap();
        assert!(got == want, "{name} differs from the golden copy");
    }
}

#[test]
fn counterexample_golden() {
    assert_golden(&["counterexample", "--mmax", "6"], "counterexample_m6.csv");
}

#[test]
fn ladder_golden() {
    assert_golden(&["space", "ladder", "--space", "z2:l1", "--kmax", "6"], "ladder_z2_l1.csv");
}

#[test]
fn folner_golden() {
    assert_golden(&["folner", "--dim", "2", "--shape", "cube", "--nmax", "4"], "folner_cube_d2.csv");
}

#[test]
fn counterexample_columns() {
    let res = doslab(&["counterexample", "--mmax", "12"]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("m,n,cesaro,log_cesaro"));
    assert_eq!(lines.count(), 24);
}

#[test]
fn failing_condition_c_is_still_a_success() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let res = doslab(&["space", "check-c", "--space", "f2", "--kmax", "15", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["report"]["verdict"], "fail");
    let ratio = v["report"]["tail_ratio"].as_f64().unwrap();
    assert!((2.99..=3.01).contains(&ratio));
    assert_eq!(v["tool"], "doslab");
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn theorem_check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let cfg = here("configs/z1_adjacency.json");
    let res = doslab(&["theorem-check", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    assert!(v["relative_gap"].as_f64().unwrap() <= 0.1);

    let mut strict: serde_json::Value = serde_json::from_slice(&fs::read(&cfg).unwrap()).unwrap();
    strict["tolerances"] = serde_json::json!({ "relative_gap": 1e-4 });
    let strict_path = dir.path().join("strict.json");
    fs::write(&strict_path, strict.to_string()).unwrap();
    let res = doslab(&["theorem-check", "--config", strict_path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn refusal_and_bad_configs_exit_one() {
    let res = doslab(&["theorem-check", "--space", "f2", "--g", "bump:0:1", "--radius", "8", "--margin", "2"]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("condition (C)"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"space":{"kind":"cayley_f2","depth":3}}"#).unwrap();
    let res = doslab(&["dos", "--config", bad.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("space.depth"));
}

#[test]
fn budget_is_enforced() {
    let res = doslab(&["space", "ladder", "--space", "z3", "--radius", "100", "--budget", "1000"]);
    assert_eq!(res.status.code(), Some(1));
    let res = Command::new(env!("CARGO_BIN_EXE_doslab"))
        .args(["space", "ladder", "--space", "z3", "--radius", "100"])
        .env("DOSLAB_BUDGET", "1000")
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("budget"));
}

#[test]
fn percolation_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str, threads: &str| {
        let csv = dir.path().join(format!("{tag}.csv"));
        let bin = dir.path().join(format!("{tag}.bin"));
        let res = doslab(&[
            "percolate", "--dim", "2", "--side", "120", "--p", "0.6", "--tmax", "30", "--seed", "5",
            "--threads", threads, "--sample", bin.to_str().unwrap(), "--out", csv.to_str().unwrap(),
        ]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        (fs::read(&csv).unwrap(), fs::read(&bin).unwrap(), fs::read(dir.path().join(format!("{tag}.csv.meta.json"))).unwrap())
    };
    let a = run("a", "1");
    let b = run("b", "2");
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    // the stamp differs only in the table name
    let strip = |m: &[u8]| String::from_utf8_lossy(m).replace("a.csv", "x").replace("b.csv", "x");
    assert_eq!(strip(&a.2), strip(&b.2));
    assert_eq!(&a.1[..8], b"DOSPERC1");
}

#[test]
fn dos_and_equivariance_tables() {
    let res = doslab(&["dos", "--space", "z1", "--hamiltonian", "adjacency", "--g", "gaussian:0:1", "--radii", "20,40,80"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.starts_with("radius,ball_count,value\n20.0,41,"));

    let res = doslab(&[
        "equivariance", "--space", "z1", "--hamiltonian", "adjacency+periodic:0,1", "--g", "bump:0:1",
        "--shift", "2", "--radii", "50,100",
    ]);
    let text = String::from_utf8(res.stdout).unwrap();
    for line in text.lines().skip(1) {
        assert!(line.ends_with(",0.0"), "{line}");
    }
}

#[test]
fn ergodic_writes_report_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("e.json");
    let csv = dir.path().join("e.csv");
    let res = doslab(&[
        "ergodic", "--space", "z1", "--hamiltonian", "adjacency+iid:0,1", "--g", "gaussian:0.5:0.5",
        "--cube", "100", "--realizations", "4", "--seed", "3",
        "--out", json.to_str().unwrap(), "--csv", csv.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&json).unwrap()).unwrap();
    assert_eq!(v["realizations"].as_array().unwrap().len(), 4);
    let rows = fs::read_to_string(&csv).unwrap();
    assert!(rows.starts_with("index,seed,average,sem,z\n"));
    assert_eq!(rows.lines().count(), 5);
}

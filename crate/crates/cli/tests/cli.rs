use std::process::{Command, Output};

use orthopersist_cli::RunConfig;

fn orthopersist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orthopersist")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn det_single_row() {
    let o = orthopersist(&["det", "--n", "1", "--ell", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,ell,p_no_real"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..2], &["1", "1"]);
    assert!(row[2].starts_with("0.36338"));
}

#[test]
fn theta_default() {
    let text = stdout(&orthopersist(&["theta"]));
    let row = text.lines().nth(1).unwrap();
    let v: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((v - 0.1875).abs() < 1e-9);
}

#[test]
fn headers_are_fixed() {
    let cases: [(&[&str], &str); 6] = [
        (&["det", "--n", "2", "--ell", "1"], "n,ell,p_no_real"),
        (&["mgf", "--n", "2", "--ell", "1", "--s", "-0.5"], "n,ell,s,mgf"),
        (&["dist", "--n", "2", "--ell", "1"], "n,ell,k,prob,stderr"),
        (&["theta", "--ell", "2"], "ell,theta"),
        (&["hilbert", "--n", "0:4", "--x", "0.5"], "x,l,hatP"),
        (&["mc", "--n", "1", "--ell", "1", "--samples", "1000"], "n,ell,estimate,stderr,samples,seed"),
    ];
    for (args, header) in cases {
        let o = orthopersist(args);
        assert!(o.status.success(), "{args:?}");
        assert_eq!(stdout(&o).lines().next(), Some(header), "{args:?}");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(orthopersist(&["det", "--n", "1", "--ell", "0"]).status.code(), Some(2));
    assert_eq!(orthopersist(&["det", "--nope"]).status.code(), Some(64));
    assert_eq!(orthopersist(&["det", "--n", "4:1", "--ell", "1"]).status.code(), Some(64));
    assert_eq!(orthopersist(&["det", "--ell", "1"]).status.code(), Some(64));
    assert_eq!(orthopersist(&["sweep", "--n", "1:3"]).status.code(), Some(64));
    assert_eq!(orthopersist(&["mc", "--n", "1", "--ell", "1", "--samples", "10"]).status.code(), Some(2));
}

#[test]
fn seed_fixes_output_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str, seed: &str| {
        let path = dir.path().join(name);
        let o = Command::new(env!("CARGO_BIN_EXE_orthopersist"))
            .env("ORTHOPERSIST_THREADS", threads)
            .args(["mc", "--n", "1:2", "--ell", "1", "--samples", "5000", "--seed", seed, "--out"])
            .arg(&path)
            .output()
            .unwrap();
        assert!(o.status.success());
        std::fs::read(path).unwrap()
    };
    let a = run("a.csv", "1", "7");
    assert_eq!(a, run("b.csv", "3", "7"));
    assert_ne!(a, run("c.csv", "1", "8"));
}

#[test]
fn json_round_trips_through_config() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.json");
    let o = orthopersist(&["mgf", "--n", "1:3", "--ell", "2", "--s", "0.25", "--format", "json", "--out", first.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&first).unwrap();
    let cfg = RunConfig::from_json(&text).unwrap();
    assert_eq!(cfg.s, Some(0.25));
    assert_eq!(cfg.n.as_ref().unwrap().values(), vec![1, 2, 3]);

    let second = dir.path().join("second.json");
    let o = orthopersist(&["--config", first.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&second).unwrap()).unwrap();
    let original: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["rows"], original["rows"]);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 3);
    assert!(doc["rows"][0]["mgf"].as_f64().is_some());

    // flags win over the file
    let third = dir.path().join("third.csv");
    let o = orthopersist(&["--config", first.to_str().unwrap(), "--s", "0", "--format", "csv", "--out", third.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(third).unwrap();
    for line in csv.lines().skip(1) {
        let mgf: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!((mgf - 1.0).abs() < 1e-12, "{line}");
    }
}

#[test]
fn sweep_fit_slope() {
    let o = orthopersist(&["sweep", "--command", "det", "--n", "256:4096:x2", "--ell", "1", "--fit"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 5 + 1 + 2);
    assert_eq!(lines[7], "slope,intercept,residual");
    let slope: f64 = lines[8].split(',').next().unwrap().parse().unwrap();
    assert!((-0.45..=-0.31).contains(&slope), "{slope}");
}

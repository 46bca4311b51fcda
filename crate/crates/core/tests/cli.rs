//! End-to-end runs of the mixbound binary.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mixbound"));
    c.env("MIXBOUND_WORKERS", "2");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("mixbound-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn law_table_csv() {
    let o = run(&["law", "table", "--law", "G", "--grid", "0:4:0.01"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,pdf,cdf");
    assert_eq!(lines.len(), 402);
    let last: Vec<f64> = lines[401].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 4.0);
    assert!(last[2] > 0.9 && last[2] < 1.0);
}

#[test]
fn sim_rate_is_reproducible() {
    let d = scratch("rate");
    let args = |out: &str| {
        vec!["sim", "rate", "--pair", "gauss_cauchy", "--n", "1000", "--replicates", "2000", "--seed", "7", "--out"]
            .into_iter()
            .map(String::from)
            .chain([out.to_string()])
            .collect::<Vec<_>>()
    };
    let a = d.join("a");
    let b = d.join("b");
    assert!(bin().args(args(a.to_str().unwrap())).output().unwrap().status.success());
    assert!(bin().env("MIXBOUND_WORKERS", "1").args(args(b.to_str().unwrap())).output().unwrap().status.success());
    let ra = std::fs::read_to_string(a.join("results.json")).unwrap();
    let rb = std::fs::read_to_string(b.join("results.json")).unwrap();
    assert_eq!(ra, rb);
    assert!(!ra.contains("workers"));
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["master_seed"], 7);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
    let csv = std::fs::read_to_string(a.join("rate.csv")).unwrap();
    assert!(csv.starts_with("n,replicates,positives,p_hat,se,theory\n"));
}

#[test]
fn config_file_round_trip() {
    let d = scratch("config");
    let cfg = d.join("cfg.toml");
    std::fs::write(&cfg, "pair = \"gauss_laplace\"\nn_grid = [50, 500]\nreplicates = 400\nmaster_seed = 3\n").unwrap();
    let out1 = d.join("o1");
    let out2 = d.join("o2");
    for out in [&out1, &out2] {
        let o = run(&["sim", "rate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(out1.join("results.json")).unwrap(), std::fs::read(out2.join("results.json")).unwrap());
    assert_eq!(std::fs::read(out1.join("rate.csv")).unwrap(), std::fs::read(out2.join("rate.csv")).unwrap());
}

#[test]
fn fit_below_threshold_gives_zero() {
    let d = scratch("fit");
    let f = d.join("z.csv");
    // h(x) < 1 near |x| = 1 for the Gauss-Cauchy pair
    std::fs::write(&f, "x\n1.0\n-0.9\n1.1\n0.8\n-1.2\n").unwrap();
    let o = run(&["fit", "--pair", "gauss_cauchy", "--data", f.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["theta_hat_hi"], 0.0);
    assert_eq!(v["lambda"], 0.0);
    assert_eq!(v["positive"], false);
}

#[test]
fn fit_from_stdin_with_outputs() {
    let d = scratch("stdin");
    let mut child = bin()
        .args(["fit", "--pair", "gauss_cauchy", "--data", "-", "--out", d.to_str().unwrap()])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"0.1\n6.0\n-0.3\n").unwrap();
    assert!(child.wait_with_output().unwrap().status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("fit.json")).unwrap()).unwrap();
    assert_eq!(v["positive"], true);
    let act = std::fs::read_to_string(d.join("activity.csv")).unwrap();
    assert_eq!(act.lines().count(), 4);
    assert!(d.join("manifest.json").exists());
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["dist", "list", "--nope"]).status.code(), Some(1));
    assert_eq!(run(&["dist", "eval", "--pair", "no_such_pair"]).status.code(), Some(1));
    assert_eq!(run(&["dist", "bounds", "--pair", "gauss_powerphi(0)"]).status.code(), Some(2));
    let d = scratch("capped");
    let o = run(&["sim", "lr", "--pair", "gauss_cauchy", "--n", "100", "--replicates", "20", "--target", "500", "--out", d.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(d.join("results.json").exists() && d.join("hist.csv").exists() && d.join("samples.csv").exists());
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn other_subcommands() {
    let o = run(&["dist", "eval", "--pair", "gauss_laplace", "--grid", "-1:1:0.5"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("x,f0,f1,h\n"));
    assert_eq!(text.lines().count(), 6);
    let o = run(&["asym", "table", "--pair", "gauss_cauchy", "--n-grid", "1e3,1e4"]);
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("n,A_n,B_n,T_n,theory_rate\n"));
    let o = run(&["law", "table", "--law", "skew-cauchy", "--beta", "1", "--grid", "-1:1:1"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 4);
    let d = scratch("composite");
    let f = d.join("x.csv");
    std::fs::write(&f, "0.2\n-0.5\n0.1\n5.0\n-0.2\n").unwrap();
    let o = run(&["composite", "fit", "--tau", "1.0", "--data", f.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["positive"], true);
    let o = run(&["composite", "sim", "--tau", "1", "--n-grid", "100", "--replicates", "200", "--out", d.join("s").to_str().unwrap()]);
    assert!(o.status.success());
    let o = run(&["sim", "nonnull", "--pair", "gauss_cauchy", "--n", "100", "--replicates", "200", "--out", d.join("nn").to_str().unwrap()]);
    assert!(o.status.success());
}

use std::path::Path;
use std::process::{Command, Output};

fn ez(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ez")).args(args).output().expect("run ez")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_form(dir: &Path, name: &str, json: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn random_form_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.json");
    let p = path.to_str().unwrap();
    let o = ez(&["random-form", "--k", "3", "--lo", "1", "--hi", "2", "--seed", "5", "--out", p]);
    assert!(o.status.success());
    let again = ez(&["random-form", "--k", "3", "--lo", "1", "--hi", "2", "--seed", "5"]);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout(&again));
    let o = ez(&["eval", "--form", p, "--s", "0.5+14.2i"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o);
    let fields: Vec<f64> = line.trim().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(fields.len(), 5);
    assert!((fields[2] - fields[0].hypot(fields[1])).abs() <= 1e-12 * fields[2]);
}

#[test]
fn eval_methods_agree() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_form(dir.path(), "i2.json", r#"{"k": 2, "gram": [[1, 0], [0, 1]]}"#);
    let parse = |o: Output| -> Vec<f64> { stdout(&o).trim().split(',').map(|x| x.parse().unwrap()).collect() };
    let g = parse(ez(&["eval", "--form", &f, "--s", "2+1i"]));
    let d = parse(ez(&["eval", "--form", &f, "--s", "2+1i", "--method", "direct"]));
    assert!((g[0] - d[0]).abs() < 1e-9 && (g[1] - d[1]).abs() < 1e-9);
    let g = parse(ez(&["eval", "--form", &f, "--s", "0.5+20i"]));
    let a = parse(ez(&["eval", "--form", &f, "--s", "0.5+20i", "--method", "afe"]));
    assert!((g[2] - a[2]).abs() < 1e-6 * g[2]);
    assert_eq!(ez(&["eval", "--form", &f, "--s", "0.7+20i", "--method", "afe"]).status.code(), Some(2));
    assert_eq!(ez(&["eval", "--form", &f, "--s", "1"]).status.code(), Some(1));
    assert_eq!(ez(&["eval", "--form", &f, "--s", "nonsense"]).status.code(), Some(2));
}

#[test]
fn sweep_is_deterministic_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_form(dir.path(), "f.json", r#"{"k": 3, "gram": [[1.3, 0.2, 0], [0.2, 1.1, 0.1], [0, 0.1, 1.7]]}"#);
    let mut outs = Vec::new();
    for (i, w) in ["1", "4", "1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("o{i}.csv"));
        let o = ez(&["--workers", w, "sweep", "--form", &f, "--t0", "10", "--t1", "30", "--step", "0.5", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outs.push(std::fs::read(&out).unwrap());
    }
    assert!(outs.windows(2).all(|w| w[0] == w[1]));
    let text = String::from_utf8(outs[0].clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,re,im,abs,err,lambda"));
    assert_eq!(lines.count(), 41);
}

#[test]
fn sweep_row_matches_eval() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_form(dir.path(), "h.json", r#"{"k": 2, "gram": [[1, 0.5], [0.5, 1]]}"#);
    let sweep = stdout(&ez(&["sweep", "--form", &f, "--t0", "20", "--t1", "21", "--step", "1"]));
    let row: Vec<f64> = sweep.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    let ev: Vec<f64> = stdout(&ez(&["eval", "--form", &f, "--s", "0.5+20i"])).trim().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(row[0], 20.0);
    assert_eq!(&row[1..4], &ev[0..3]);
}

#[test]
fn verify_reports_and_exit_codes() {
    let o = ez(&["verify", "--suite", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ez(&["verify", "--suite", "fe", "--cases", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["suite"], "fe");
    assert_eq!(v["cases"], 3);
    assert_eq!(v["passed"], 3);
    assert!(v["max_residual"].as_f64().unwrap() <= 1e-9);
    assert_eq!(ez(&["verify"]).status.code(), Some(2));
}

#[test]
fn lattice_subcommands() {
    let o = ez(&["lattice", "reps", "--k", "4", "--n", "4"]);
    assert_eq!(stdout(&o), "n,count\n1,8\n2,24\n3,32\n4,24\n");
    let dir = tempfile::tempdir().unwrap();
    let f = write_form(dir.path(), "i2.json", r#"{"k": 2, "gram": [[1, 0], [0, 1]]}"#);
    let o = ez(&["lattice", "count", "--form", &f, "--radius", "2"]);
    assert_eq!(stdout(&o).trim(), "8");
    let bad = write_form(dir.path(), "bad.json", r#"{"k": 2, "gram": [[1, 2], [2, 1]]}"#);
    assert_eq!(ez(&["lattice", "count", "--form", &bad, "--radius", "2"]).status.code(), Some(2));
}

#[test]
fn theta_and_meansquare_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_form(dir.path(), "d.json", r#"{"k": 2, "gram": [[1, 0], [0, 1.3]]}"#);
    let o = ez(&["theta-moment", "--form", &f, "--T", "2", "--R", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("T,R,step,moment,samples\n2,5,"));
    assert_eq!(ez(&["theta-moment", "--form", &f, "--T", "2", "--R", "2", "--step", "0.5"]).status.code(), Some(2));
    let o = ez(&["meansquare", "--form", &f, "--X", "5"]);
    assert!(o.status.success());
    let row: Vec<f64> = stdout(&o).lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(row[0], 5.0);
    assert!(row[2] > 0.0);
}

#[test]
fn config_file_and_selftest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"precision": 12, "workers": 1}"#).unwrap();
    let f = write_form(dir.path(), "i3.json", r#"{"k": 3, "gram": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}"#);
    let o = ez(&["--config", cfg.to_str().unwrap(), "eval", "--form", &f, "--s", "0.5+3i"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::write(&cfg, r#"{"precision": 12, "colour": 1}"#).unwrap();
    let o = ez(&["--config", cfg.to_str().unwrap(), "eval", "--form", &f, "--s", "0.5+3i"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ez(&["specfun", "selftest"]);
    assert!(o.status.success(), "{}", stdout(&o));
}

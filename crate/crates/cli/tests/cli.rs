use std::path::Path;
use std::process::{Command, Output};

fn coordmech(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coordmech"))
        .args(args)
        .env_remove("COORDMECH_SEED")
        .output()
        .expect("spawn coordmech")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn random_generation_is_seeded() {
    let args = ["gen", "random", "--n", "5", "--m", "3", "--seed", "42"];
    let a = coordmech(&args);
    let b = coordmech(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = coordmech(&["gen", "random", "--n", "5", "--m", "3", "--seed", "43"]);
    assert_ne!(a.stdout, c.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["weights"].as_array().unwrap().len(), 5);
}

#[test]
fn bundles_carry_targets() {
    let v = json(&coordmech(&["gen", "smith-lb", "--k", "2", "--m", "4"]));
    assert_eq!(v["target_ratio"], serde_json::json!(4));
    let v = json(&coordmech(&["gen", "tree-lb", "--depth", "3", "--variant", "det"]));
    assert_eq!(v["target_ratio"], serde_json::json!("13/6"));
    assert_eq!(v["policy"], serde_json::json!("ProportionalSharing"));
    let v = json(&coordmech(&["gen", "tree-lb", "--depth", "3", "--variant", "rand", "--delta", "0"]));
    assert_eq!(v["target_ratio"], serde_json::json!("5/3"));
}

#[test]
fn eval_two_jobs_under_sharing() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "two.json", r#"{"weights":[1,1],"proc":[[1,2]]}"#);
    let x = write(dir.path(), "x.json", r#"{"machine_of":[0,0]}"#);
    let v = json(&coordmech(&["eval", "-i", &inst, "-a", &x, "--policy", "ps"]));
    assert_eq!(v["weighted_total"], serde_json::json!(5));
    assert_eq!(v["completion"], serde_json::json!([2, 3]));
    let v = json(&coordmech(&["eval", "-i", &inst, "--policy", "rand"]));
    assert_eq!(v["weighted_total"], serde_json::json!("13/3"));
    let v = json(&coordmech(&["eval", "-i", &inst, "--identities"]));
    assert_eq!(v["all_identities_hold"], serde_json::json!(true));
}

#[test]
fn eval_writes_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "two.json", r#"{"weights":[1,1],"proc":[[1,2]]}"#);
    let out = dir.path().join("report.json");
    let o = coordmech(&["eval", "-i", &inst, "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(out).unwrap()).unwrap();
    assert_eq!(v["weighted_total"], serde_json::json!(4));
}

#[test]
fn equilibrium_bundle_is_nash() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("b.json");
    let o = coordmech(&["gen", "smith-lb", "--k", "2", "--m", "4", "-o", bundle.to_str().unwrap()]);
    assert!(o.status.success());
    let v = json(&coordmech(&["eval", "-i", bundle.to_str().unwrap(), "--nash"]));
    assert_eq!(v["nash"]["is_nash"], serde_json::json!(true));
    let v = json(&coordmech(&["dynamics", "-i", bundle.to_str().unwrap(), "-p", "ps", "--summary"]));
    assert_eq!(v["converged"], serde_json::json!(true));
    assert_eq!(v["final_is_nash"], serde_json::json!(true));
}

#[test]
fn dynamics_from_equilibrium_takes_no_steps() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "cross.json", r#"{"weights":[1,1],"proc":[[1,3],[3,1]]}"#);
    let x = write(dir.path(), "x.json", r#"{"machine_of":[0,1]}"#);
    let v = json(&coordmech(&["dynamics", "-i", &inst, "-a", &x, "-p", "ps"]));
    assert_eq!(v["num_steps"], serde_json::json!(0));
    let x = write(dir.path(), "y.json", r#"{"machine_of":[1,0]}"#);
    let v = json(&coordmech(&["dynamics", "-i", &inst, "-a", &x, "-p", "approx", "--alpha", "0.01"]));
    assert!(v["num_steps"].as_u64().unwrap() > 0);
    assert_eq!(v["final_assignment"]["machine_of"], serde_json::json!([0, 1]));
}

#[test]
fn approx_solves_crossing_instance() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "cross.json", r#"{"weights":[1,1],"proc":[[1,3],[3,1]]}"#);
    let v = json(&coordmech(&["approx", "-i", &inst]));
    assert_eq!(v["ratio"], serde_json::json!("1"));
    assert_eq!(v["smith_cost"], serde_json::json!("2"));
    assert_eq!(v["guarantee"], serde_json::json!("60/29"));
}

#[test]
fn approx_suite_is_reproducible() {
    let a = coordmech(&["approx", "--suite", "approx100", "--seed", "5", "--jobs", "3"]);
    let b = coordmech(&["approx", "--suite", "approx100", "--seed", "5", "--jobs", "1"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("instance_id,policy,opt,cost,ratio,steps"));
    assert_eq!(lines.count(), 100);
}

#[test]
fn smith_rule_poa_stays_below_four() {
    let o = coordmech(&["poa", "--policy", "sr", "--suite", "small200", "--bound", "4", "--jobs", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        if !rec[4].is_empty() {
            assert!(rec[4].parse::<f64>().unwrap() <= 4.0);
        }
        rows += 1;
    }
    assert_eq!(rows, 200);
}

#[test]
fn poa_bound_violation_exits_one() {
    let o = coordmech(&["poa", "--policy", "ps", "--suite", "small200", "--bound", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn checks_pass() {
    let o = coordmech(&["check", "--lemma-ineq", "500"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("check lemma-ineq: PASS"));
    let o = coordmech(&["check", "--pd", "25"]);
    assert!(o.status.success());
    let o = coordmech(&["check", "--reduction", "20", "--potential", "100", "--chung", "100"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.contains("PASS")).count(), 3);
}

#[test]
fn errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"weights":[1,-1],"proc":[[1,2]]}"#);
    assert_eq!(coordmech(&["eval", "-i", &bad]).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(coordmech(&["eval", "-i", missing.to_str().unwrap()]).status.code(), Some(2));
    let inst = write(dir.path(), "two.json", r#"{"weights":[1,1],"proc":[[1,2]]}"#);
    let o = coordmech(&["dynamics", "-i", &inst, "-p", "sr"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    assert_eq!(coordmech(&["poa", "--policy", "sr", "--suite", "nosuch"]).status.code(), Some(2));
}

#[test]
fn single_job_total_is_weighted_time() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "one.json", r#"{"weights":["3/2"],"proc":[[4],["inf"]]}"#);
    for policy in ["sr", "ps", "rand", "approx"] {
        let v = json(&coordmech(&["eval", "-i", &inst, "-p", policy]));
        let expect = if policy == "approx" { 12 } else { 6 };
        assert_eq!(v["weighted_total"], serde_json::json!(expect), "{policy}");
    }
}

#[test]
fn identities_hold_on_generated_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let p = path.to_str().unwrap();
    assert!(coordmech(&["gen", "random", "--n", "6", "--m", "3", "--seed", "9", "-o", p]).status.success());
    let v = json(&coordmech(&["eval", "-i", p, "--identities"]));
    assert_eq!(v["all_identities_hold"], serde_json::json!(true));
}

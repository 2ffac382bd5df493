use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_liplab"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn liplab")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad json ({e}): {}\nstderr: {}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn two_blocks(dir: &Path) {
    write(dir, "e.json", r#"{"intervals":[["0","1"],["2","3"]]}"#);
}

#[test]
fn monotone_then_estimate_gives_unit_ratios() {
    let d = TempDir::new().unwrap();
    two_blocks(d.path());
    let out = run(d.path(), &["construct", "monotone", "--set", "e.json", "--window=-1,4", "--out", "f.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let out = run(d.path(), &["estimate", "--function", "f.json", "--point", "1/2", "--r-grid", "1/2,1/2,20", "--exact"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let rows = v["sweep"].as_array().unwrap();
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| r["ratio"] == "1"));
    assert_eq!(v["lip_upper"], "1");
    assert_eq!(v["lip_lower"], "1");

    let out = run(d.path(), &["estimate", "--function", "f.json", "--point", "3/2", "--exact"]);
    let v = json_of(&out);
    assert_eq!(v["lip_upper"], "0");
    assert_eq!(v["lip_lower"], "0");
}

#[test]
fn counterexample_gen_depth_two() {
    let d = TempDir::new().unwrap();
    let out = run(d.path(), &["counterexample", "gen", "--depth", "2", "--csv", "blocks.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let blocks = v["blocks"].as_array().unwrap();
    assert_eq!(blocks.len(), 1 + 4);
    assert_eq!(blocks[0]["wd_ratio"], "4/5");
    for b in &blocks[1..] {
        assert_eq!(b["wd_ratio"], "16/17");
        assert_eq!(b["wd_expected"], "16/17");
    }
    assert_eq!(blocks[1]["f"], serde_json::json!(["9/16", "5/8"]));
    let csv = std::fs::read_to_string(d.path().join("blocks.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("kind,path,level,lo,lo_decimal,hi,hi_decimal"));
    // root, 4 children, 4*16 grandchildren; an F and a U row each
    assert_eq!(lines.count(), 2 * (1 + 4 + 64));
}

#[test]
fn udt_increment_factors() {
    let d = TempDir::new().unwrap();
    let out = run(d.path(), &["construct", "udt", "--fat-cantor", "2", "--stages", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    let factors: Vec<&str> =
        v["diagnostics"].as_array().unwrap().iter().map(|s| s["increment_factor"].as_str().unwrap()).collect();
    assert_eq!(factors, ["7/8", "63/64", "511/512"]);
    assert_eq!(v["passed"], true);
}

#[test]
fn exit_codes() {
    let d = TempDir::new().unwrap();
    two_blocks(d.path());
    write(d.path(), "bad.json", r#"{"intervals":[["1","0"]]}"#);

    // a failing check
    let out = run(d.path(), &["density", "--set", "e.json", "--point", "3/2", "--check", "weak"]);
    assert_eq!(out.status.code(), Some(1));
    // malformed input
    let out = run(d.path(), &["set", "measure", "--a", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let out = run(d.path(), &["set", "measure", "--a", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(d.path(), &["set", "scale", "--a", "e.json", "--by", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    // budget
    let out = bin()
        .current_dir(d.path())
        .env("LIPLAB_MAX_BLOCKS", "100")
        .args(["counterexample", "gen", "--depth", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn set_algebra_through_files() {
    let d = TempDir::new().unwrap();
    two_blocks(d.path());
    write(d.path(), "b.json", r#"{"intervals":[["1/2","5/2"]]}"#);
    let v = json_of(&run(d.path(), &["set", "union", "--a", "e.json", "--b", "b.json"]));
    assert_eq!(v["result"]["intervals"], serde_json::json!([["0", "3"]]));
    let v = json_of(&run(d.path(), &["set", "intersect", "--a", "e.json", "--b", "b.json"]));
    assert_eq!(v["result"]["intervals"], serde_json::json!([["1/2", "1"], ["2", "5/2"]]));
    let v = json_of(&run(d.path(), &["set", "measure", "--a", "e.json"]));
    assert_eq!(v["result"], "2");
    let v = json_of(&run(d.path(), &["set", "distance", "--a", "e.json", "--b", "b.json"]));
    assert_eq!(v["result"], "0");

    // the report itself is a valid set input
    let out = run(d.path(), &["set", "difference", "--a", "e.json", "--b", "b.json", "--out", "diff.json"]);
    assert!(out.status.success());
    let v = json_of(&run(d.path(), &["set", "measure", "--a", "diff.json"]));
    assert_eq!(v["result"], "1");
}

#[test]
fn strong_one_sided_check_fails_away_from_the_set() {
    let d = TempDir::new().unwrap();
    write(d.path(), "s.json", r#"{"intervals":[["1/4","1/2"]]}"#);
    let out = run(
        d.path(),
        &["density", "--set", "s.json", "--point", "0", "--r-grid", "1/2,1/4,3", "--check", "strong-one-sided"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_of(&out)["check"]["verdict"], "fails");
}

#[test]
fn levelset_reports_points() {
    let d = TempDir::new().unwrap();
    two_blocks(d.path());
    let out = run(
        d.path(),
        &["levelset", "--set", "e.json", "--gamma", "1/2", "--delta", "1/4", "--window=-1,4", "--point", "1", "--point", "3/2"],
    );
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let pts = v["points"].as_array().unwrap();
    assert_eq!(pts.len(), 2);
    assert_eq!(pts[0]["membership"]["member"], true);
    assert_eq!(pts[1]["membership"]["member"], false);
}

#[test]
fn counterexample_verify_defeats_zero_candidate() {
    let d = TempDir::new().unwrap();
    write(d.path(), "zero.json", r#"{"breakpoints":["0","1"],"values":["0","0"]}"#);
    let out = run(d.path(), &["counterexample", "verify", "--function", "zero.json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["trace"]["verdict"], "forced-failure");
    assert_eq!(v["trace"]["certificate"]["kind"], "no-eben-witness");
    assert_eq!(v["recheck"], true);
}

#[test]
fn same_seed_same_bytes() {
    let d = TempDir::new().unwrap();
    two_blocks(d.path());
    run(d.path(), &["construct", "small-lip", "--set", "e.json", "--eps", "1", "--window=-1,4", "--out", "g.json"]);
    let args = ["--seed", "7", "audit", "--function", "g.json", "--set", "e.json", "--pairs", "300"];
    let a = run(d.path(), &args);
    let b = run(d.path(), &args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = run(d.path(), &["--seed", "8", "audit", "--function", "g.json", "--set", "e.json", "--pairs", "300"]);
    assert!(c.status.success());
}

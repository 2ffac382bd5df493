use liplab_demo::{counterexample_report, density_report, monotone_report, parse_set};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn text_and_json_sets_agree() {
    let a = parse_set("0 1; 2 5/2\n3,4").unwrap();
    let b = parse_set(r#"{"intervals":[["0","1"],["2","5/2"],["3","4"]]}"#).unwrap();
    assert_eq!(a, b);
    assert!(parse_set("0 1 2").is_err());
    assert!(parse_set("1 0").is_err());
}

#[test]
fn density_sweep_inside_a_block() {
    let v = parse(&density_report("0 1", "1/2", "1/4", "1/2", 5).unwrap());
    let rows = v["sweep"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r["left"][0] == "1" && r["right"][0] == "1"));
    assert_eq!(v["weakly_dense"], true);
    assert_eq!(v["measure"][0], "1");
}

#[test]
fn monotone_slopes() {
    let v = parse(&monotone_report("0 1; 2 3", "-1", "4", "1/2").unwrap());
    assert_eq!(v["lip"]["upper"][0], "1");
    assert_eq!(v["lip"]["lower"][0], "1");
    let v = parse(&monotone_report("0 1; 2 3", "-1", "4", "3/2").unwrap());
    assert_eq!(v["lip"]["upper"][0], "0");
}

#[test]
fn counterexample_blocks() {
    let v = parse(&counterexample_report(2).unwrap());
    let blocks = v["blocks"].as_array().unwrap();
    assert_eq!(blocks.len(), 5);
    assert_eq!(blocks[0]["wd"][0], "4/5");
    assert_eq!(blocks[1]["wd"][0], "16/17");
    assert!(counterexample_report(4).is_err());
}

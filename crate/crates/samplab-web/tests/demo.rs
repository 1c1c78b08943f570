use serde_json::Value;

use samplab_web::{bound_json, hard_json, smooth_json};

fn parse(s: Result<String, String>) -> Value {
    serde_json::from_str(&s.expect("call succeeds")).unwrap()
}

#[test]
fn bound_terms() {
    // 1 - (1/2)^2 - 2^-3 * 3 - 1/8 and 2a - a^2 - 2^-1 - 1/8
    let v = parse(bound_json("1/2", "1/8", 1, 4, 1));
    assert_eq!(v["general"], "1/4");
    assert_eq!(v["single_block"], "1/8");
    assert_eq!(v["vacuous"], false);
    assert!(bound_json("1/2", "x", 1, 4, 1).is_err());
    assert!(bound_json("1/2", "1/8", 4, 4, 1).is_err());
}

#[test]
fn smoothing_buckets() {
    let v = parse(smooth_json("1/2 1/4, 1/8 1/8", 1));
    let s = &v["smoothing"];
    // 1/2 fills a bucket on its own; the other three share one of mass 1/2
    assert_eq!(s["bucket_count"], 2);
    assert_eq!(s["bucket_of"], serde_json::json!([0, 1, 1, 1]));
    assert_eq!(v["min_entropy"]["max_prob"], "1/2");
    assert!(smooth_json("1/2 1/4 1/4", 1).is_err());
    assert!(smooth_json("1/2 1/4 1/8 1/4", 1).is_err());
}

#[test]
fn hard_distribution() {
    // accepts x0 = 0, so Pr[Iso = 0] on uniform input is 1/2
    let v = parse(hard_json("5", 2, 1));
    assert_eq!(v["bits"], 3);
    assert_eq!(v["support"], serde_json::json!([1, 3, 4, 6]));
    assert_eq!(v["iso_zero"], v["predicted"]);
    assert_eq!(v["predicted"], "1/4");
    let v = parse(hard_json("5", 2, 2));
    assert_eq!(v["bits"], 6);
    assert_eq!(v["predicted"], "1/8");
    assert_eq!(v["iso_zero"], "1/8");
    assert!(hard_json("zz", 2, 1).is_err());
}

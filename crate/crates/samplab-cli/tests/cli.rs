use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    match std::env::var_os("SAMPLAB_FIXTURES") {
        Some(p) => PathBuf::from(p),
        None => PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures"),
    }
}

fn samplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_samplab")).args(args).current_dir(fixtures()).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("report is JSON ({e}); stderr: {}", String::from_utf8_lossy(&o.stderr)))
}

#[test]
fn verify_isolator_matches_golden_report() {
    let o = samplab(&["verify-isolator", "--isolator", "n2_isolator.json"]);
    assert_eq!(code(&o), 0);
    let golden = std::fs::read_to_string(fixtures().join("golden/verify_isolator.json")).unwrap();
    assert_eq!(String::from_utf8(o.stdout).unwrap(), golden);
}

#[test]
fn bound_matches_golden_report() {
    // 1 - (1/2)^2 - 2^-3 * 3 - 1/8 = 1/4
    let o = samplab(&["bound", "--alpha", "1/2", "--beta", "1/8", "--k", "1", "--n", "4", "--t", "1"]);
    assert_eq!(code(&o), 0);
    let golden = std::fs::read_to_string(fixtures().join("golden/bound.json")).unwrap();
    assert_eq!(String::from_utf8(o.stdout).unwrap(), golden);
    assert_eq!(report(&samplab(&["bound", "--alpha", "1/2", "--beta", "1/8", "--k", "1", "--n", "4", "--t", "1"]))["result"]["general"], "1/4");
}

#[test]
fn malformed_json_exits_2_with_location() {
    let o = samplab(&["verify-isolator", "--isolator", "malformed.json"]);
    assert_eq!(code(&o), 2);
    assert!(o.stdout.is_empty());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("malformed.json") && err.contains("line"), "{err}");
}

#[test]
fn missing_file_and_missing_parameter_exit_2() {
    assert_eq!(code(&samplab(&["tv", "--p", "u2.json", "--q", "nope.json"])), 2);
    assert_eq!(code(&samplab(&["tv", "--p", "u2.json"])), 2);
    assert_eq!(code(&samplab(&["no-such-command"])), 2);
}

#[test]
fn certify_refuses_unverified_isolator() {
    let o = samplab(&["certify-theorem", "--isolator", "addr_isolator_unverified.json", "--t", "1", "--class", "deg1_n3_class.json"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unverified"));
}

#[test]
fn forged_verified_flag_is_caught() {
    assert_eq!(code(&samplab(&["lift", "--isolator", "point_iso_bogus.json", "--k", "2"])), 2);
    assert_eq!(code(&samplab(&["lift", "--isolator", "point_iso_claim.json", "--k", "2"])), 0);
}

#[test]
fn violated_claims_exit_1() {
    let o = samplab(&["verify-isolator", "--isolator", "n2_isolator_tight.json"]);
    assert_eq!(code(&o), 1);
    let r = report(&o);
    assert_eq!(r["verdict"], "violated");
    assert_eq!(r["result"]["light_ok"], false);
    let o = samplab(&["search-isolator", "--class", "deg1_class.json", "--n", "2", "--m", "1", "--t", "2", "--alpha", "1/4", "--beta", "1/2", "--k", "1"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn budget_exhaustion_exits_3() {
    let o = samplab(&["enumerate", "--class", "deg1_class.json", "--budget", "10"]);
    assert_eq!(code(&o), 3);
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.matches("budget exceeded").count(), 1, "{err}");
    let o = samplab(&["search-isolator", "--class", "deg1_class.json", "--n", "2", "--m", "1", "--t", "2", "--alpha", "1/4", "--beta", "1/2", "--k", "1", "--budget", "1"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn config_values_override_flags() {
    let o = samplab(&["bound", "--config", "bound_config.json", "--alpha", "1", "--n", "9"]);
    assert_eq!(code(&o), 0);
    let r = report(&o);
    assert_eq!(r["config"]["params"]["alpha"], "1/2");
    assert_eq!(r["config"]["params"]["n"], 4);
    assert_eq!(r["result"]["general"], "1/4");
    assert_eq!(r["inputs"][0]["role"], "config");
}

#[test]
fn config_for_another_command_is_rejected() {
    assert_eq!(code(&samplab(&["tv", "--config", "bound_config.json", "--p", "u2.json", "--q", "u2.json"])), 2);
}

#[test]
fn reports_do_not_depend_on_worker_count() {
    for args in [
        vec!["certify-theorem", "--isolator", "addr_isolator.json", "--t", "1", "--class", "deg1_n3_class.json", "--record", "true"],
        vec!["counting-search", "--class", "deg1_n3_class.json", "--n", "3", "--s", "2", "--trials", "5", "--seed", "9"],
        vec!["verify-isolator", "--isolator", "point_iso_claim.json"],
    ] {
        let one = samplab(&[args.as_slice(), &["--jobs", "1"]].concat());
        let four = samplab(&[args.as_slice(), &["--jobs", "4"]].concat());
        assert_eq!(code(&one), 0, "{args:?}");
        assert_eq!(one.stdout, four.stdout, "{args:?}");
    }
}

#[test]
fn counting_search_is_reproducible_for_a_seed() {
    let base = ["counting-search", "--class", "deg1_n3_class.json", "--n", "3", "--s", "2", "--trials", "3"];
    let a = report(&samplab(&[base.as_slice(), &["--seed", "1"]].concat()));
    let b = report(&samplab(&[base.as_slice(), &["--seed", "1"]].concat()));
    assert_eq!(a, b);
    assert_eq!(a["config"]["seed"], 1);
}

#[test]
fn csv_output() {
    let o = samplab(&["exact-output", "--source", "poly_source.json", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,string,prob");
    assert_eq!(lines.len(), 9);
    // outputs (x0, x0*x1, 0) on uniform seeds
    assert_eq!(lines[1], "0,000,1/2");
    assert_eq!(lines[2], "1,100,1/4");
    assert_eq!(lines[4], "3,110,1/4");
    let o = samplab(&["certify-theorem", "--isolator", "addr_isolator.json", "--t", "1", "--class", "deg1_n3_class.json", "--format", "csv"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("member,tv"));
    assert_eq!(text.lines().count(), 1 + 4672);
    assert_eq!(code(&samplab(&["tv", "--p", "u2.json", "--q", "u2.json", "--format", "csv"])), 2);
}

#[test]
fn out_flag_writes_the_report() {
    let dir = std::env::temp_dir().join(format!("samplab-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("tv.json");
    let o = samplab(&["tv", "--p", "u2.json", "--q", "skew2.json", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r["result"]["tv"], "1/4");
    assert!(r["config"].get("out").is_none());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn inputs_are_hashed() {
    let r = report(&samplab(&["tv", "--p", "u2.json", "--q", "skew2.json"]));
    let inputs = r["inputs"].as_array().unwrap();
    assert_eq!(inputs.len(), 2);
    assert_eq!(inputs[0]["path"], "u2.json");
    let h = inputs[0]["sha256"].as_str().unwrap();
    assert_eq!(h.len(), 64);
    assert_ne!(h, inputs[1]["sha256"].as_str().unwrap());
    // same bytes, same digest
    let again = report(&samplab(&["entropy", "--dist", "u2.json"]));
    assert_eq!(again["inputs"][0]["sha256"].as_str().unwrap(), h);
}

#[test]
fn every_command_runs() {
    let cases: &[(&[&str], i32, &str)] = &[
        (&["tv", "--p", "u2.json", "--q", "skew2.json"], 0, "ok"),
        (&["entropy", "--dist", "skew2.json", "--k", "2"], 0, "ok"),
        (&["smooth", "--dist", "skew2.json", "--k", "1"], 0, "ok"),
        (&["exact-output", "--source", "poly_source.json"], 0, "ok"),
        (&["addr", "--dist", "u2.json", "--n", "1", "--t", "1"], 0, "ok"),
        (&["enumerate", "--class", "deg1_class.json", "--limit", "3"], 0, "ok"),
        (&["verify-isolator", "--isolator", "n2_isolator.json"], 0, "holds"),
        (&["search-isolator", "--class", "uniform_class.json", "--n", "2", "--m", "1", "--t", "2", "--alpha", "1/4", "--beta", "1/2", "--k", "2"], 0, "holds"),
        (&["input-reduce", "--map", "poly_map.json", "--eps", "1/4", "--ell", "7"], 0, "holds"),
        (&["lift", "--isolator", "point_iso_claim.json", "--k", "2", "--verify-class", "deg1_n2_r12.json"], 0, "holds"),
        (&["iso-from-rext", "--rext", "rext.json", "--z", "00", "--eps", "0", "--delta", "1/4", "--k", "2"], 0, "ok"),
        (&["mixture-bound", "--ext", "ext1.json", "--mixture", "mixture.json", "--tags", "constant,high_entropy", "--eps", "1/4", "--k", "1", "--k-prime", "2"], 0, "holds"),
        (&["two-source", "--x", "u4_flat.json", "--y", "u4_flat.json", "--ext", "ip4.json", "--k", "4", "--k0", "1", "--k1", "2", "--k2", "1", "--eps", "1/4"], 0, "holds"),
        (&["comm-mixture", "--protocol", "protocol.json"], 0, "holds"),
        (&["robp-cut", "--robp", "robp.json", "--cut", "1"], 0, "holds"),
        (&["build-hard-dist", "--iso", "iso_table.json", "--t", "1"], 0, "ok"),
        (&["bound", "--alpha", "1/2", "--beta", "1/8", "--k", "1", "--n", "4", "--t", "1"], 0, "ok"),
        (&["certify-theorem", "--isolator", "addr_isolator.json", "--t", "1", "--class", "deg1_n3_class.json"], 0, "holds"),
        (&["counting-search", "--class", "deg1_class.json", "--n", "2", "--s", "2", "--trials", "3"], 0, "ok"),
    ];
    assert_eq!(cases.len(), 19);
    for (args, want, verdict) in cases {
        let o = samplab(args);
        assert_eq!(code(&o), *want, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let r = report(&o);
        assert_eq!(r["verdict"], *verdict, "{args:?}");
        assert_eq!(r["config"]["command"], args[0]);
    }
}

#[test]
fn hard_distribution_of_a_point_isolator() {
    // table "5" accepts x0 = 0: U_0 in bits 0..2, Iso(U_0) in bit 2
    let r = report(&samplab(&["build-hard-dist", "--iso", "iso_table.json", "--t", "1"]));
    let probs: Vec<&str> = r["result"]["dist"]["probs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(probs, ["0/1", "1/4", "0/1", "1/4", "1/4", "0/1", "1/4", "0/1"]);
}

use std::path::Path;
use std::process::Command;

use serde_json::Value;

use asnp_harness::cli::{parse_coeffs, parse_p_range, run_with_args, EXIT_MISMATCH, EXIT_OK, EXIT_USAGE};
use asnp_harness::experiments::{polygon_from_json, Experiment, Family};
use asnp_harness::record::{cache_key, ExperimentRecord, Kind, RecordStore};

fn asnp(args: &[&str]) -> (i32, Vec<Value>, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["asnp"];
    argv.extend_from_slice(args);
    let code = run_with_args(argv, &mut out, &mut err);
    let records = String::from_utf8(out)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    (code, records, String::from_utf8(err).unwrap())
}

fn strip_timestamp(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn gnp_examples() {
    let (code, recs, _) = asnp(&["gnp", "--d", "3", "--p", "7"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(recs[0]["result"]["equals_hodge"], true);
    let (_, recs, _) = asnp(&["gnp", "--d", "3", "--p", "5"]);
    let r = &recs[0]["result"];
    assert_eq!(r["m_values"][0], 2);
    assert_eq!(r["polygon"]["vertices"], serde_json::json!([[0, "0/1"], [2, "1/1"]]));
    assert_eq!(r["epsilon"], serde_json::json!([2, -2]));
}

#[test]
fn gnp_sweep_has_no_exceptions() {
    let (code, recs, _) = asnp(&["gnp", "--d", "6", "--p-range", "2..60", "--sweep"]);
    assert_eq!(code, EXIT_OK);
    // Degrees 2..=6 against the 17 primes below 60, minus p | d.
    let expected: usize = (2..=6u64).map(|d| parse_p_range("2..60").unwrap().iter().filter(|&&p| d % p != 0).count()).sum();
    assert_eq!(recs.len(), expected);
    assert!(recs.iter().all(|r| r["result"]["hodge_criterion_holds"] == true));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(asnp(&["gnp", "--d", "3", "--p", "4"]).0, EXIT_USAGE);
    assert_eq!(asnp(&["gnp", "--d", "3"]).0, EXIT_USAGE);
    assert_eq!(asnp(&["gnp", "--bogus"]).0, EXIT_USAGE);
    assert_eq!(asnp(&["verify", "one-param", "--d", "3", "--f", "1", "--p", "7"]).0, EXIT_USAGE);
    assert_eq!(asnp(&["membership", "--f", "1,x,1"]).0, EXIT_USAGE);
    assert_eq!(asnp(&["dwork", "key2", "--d", "3", "--p", "19"]).0, EXIT_USAGE);
    assert_eq!(asnp(&["--help"]).0, EXIT_OK);
}

#[test]
fn mismatch_exits_with_two() {
    // A monomial sits on its own polygon, away from the generic one.
    let (code, recs, _) = asnp(&["verify", "sameNP", "--f", "0,0,0,1", "--p", "7"]);
    assert_eq!(code, EXIT_MISMATCH, "{}", recs[0]["result"]);
    assert_eq!(recs[0]["mismatch"], true);
}

#[test]
fn verify_examples() {
    let (code, recs, _) = asnp(&["verify", "sameNP", "--f", "1,0,1", "--p", "23"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(recs[0]["result"]["alphas"], 22);
    assert_eq!(recs[0]["result"]["all_equal"], true);
    let (code, recs, _) = asnp(&["verify", "one-param", "--d", "3", "--f", "1", "--p", "11"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(recs[0]["result"]["all_equal"], true);
}

#[test]
fn membership_and_dwork_examples() {
    let (_, recs, _) = asnp(&["membership", "--f", "1,0,1"]);
    let r = &recs[0]["result"];
    assert_eq!(r["in_u"], false);
    assert!(r["height"]["error"].is_string());
    let (_, recs, _) = asnp(&["membership", "--f", "1,1,1"]);
    assert_eq!(recs[0]["result"]["in_u"], true);
    assert_eq!(recs[0]["result"]["height"]["bound"], "20");

    let (code, recs, _) = asnp(&["dwork", "key2", "--d", "3", "--p", "23"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(recs[0]["result"]["all_hold"], true);
    let (code, recs, _) = asnp(&["dwork", "leading", "--d", "3", "--p", "29"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(recs[0]["result"]["all_match"], true);
    let (code, recs, _) = asnp(&["dwork", "transform", "--p", "5", "--t", "3", "--count", "5"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(recs[0]["result"]["equal"], 5);
}

#[test]
fn zeta_methods_agree() {
    let (code, recs, _) = asnp(&["zeta", "--f", "1,0,1", "--p", "3", "--method", "both"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(recs[0]["result"]["agree"], true);
    let (code, recs, _) = asnp(&["zeta", "--f", "1,0,1", "--p", "2", "--b", "2", "--ell", "2"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(recs[0]["result"]["direct"]["slopes"], serde_json::json!([["1/2", 6]]));
}

#[test]
fn lfun_single_and_scan() {
    let (code, recs, err) = asnp(&["lfun", "--f", "1,0,1", "--p", "7", "--alpha", "3"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let l = &recs[0]["result"]["l"][0];
    assert_eq!(l["alpha"], serde_json::json!([3]));
    assert_eq!(l["degree_check"]["verified"], serde_json::json!([3, 4, 5]));
    let (_, recs, _) = asnp(&["lfun", "--f", "1,0,1", "--p", "5", "--b", "2", "--alpha-scan"]);
    assert_eq!(recs[0]["result"]["l"].as_array().unwrap().len(), 24);
}

#[test]
fn infeasible_fields_get_a_cost_estimate() {
    let (code, recs, _) = asnp(&["lfun", "--f", "1,0,1", "--p", "2000003", "--b", "2"]);
    assert_eq!(code, EXIT_OK);
    let r = &recs[0]["result"];
    assert_eq!(r["status"], "infeasible");
    assert!(r["diagnostic"].as_str().unwrap().contains("CPU-hours"));
}

#[test]
fn payloads_are_deterministic() {
    for args in [
        vec!["gnp", "--d", "5", "--p-range", "7..40"],
        vec!["verify", "sameNP", "--f", "1,1,1", "--p", "29"],
        vec!["lfun", "--f", "1/2,0,1", "--p", "11", "--alpha-scan"],
    ] {
        let (_, a, _) = asnp(&args);
        let (_, b, _) = asnp(&args);
        let a: Vec<Value> = a.into_iter().map(strip_timestamp).collect();
        let b: Vec<Value> = b.into_iter().map(strip_timestamp).collect();
        assert_eq!(a, b);
    }
}

#[test]
fn cache_replay_matches_recomputation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("records.jsonl");
    let out = path.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["gnp", "--d", "3", "--p-range", "5..60"],
        vec!["gnp", "--d", "4", "--p", "13", "--family", "one-param"],
        vec!["membership", "--f", "1,1,1"],
        vec!["membership", "--f", "1,0,1"],
        vec!["dwork", "key2", "--d", "3", "--p", "23"],
        vec!["verify", "one-param", "--d", "3", "--f", "2", "--p", "13"],
        vec!["zeta", "--f", "1,0,1", "--p", "2"],
    ];
    let mut first = Vec::new();
    for args in &cases {
        let mut full = args.clone();
        full.extend(["--out", out]);
        first.extend(asnp(&full).1);
    }
    assert!(first.len() >= 20, "{} records", first.len());
    let lines = std::fs::read_to_string(&path).unwrap().lines().count();
    assert_eq!(lines, first.len());

    let mut replayed = Vec::new();
    let mut recomputed = Vec::new();
    for args in &cases {
        let mut full = args.clone();
        full.extend(["--out", out]);
        replayed.extend(asnp(&full).1);
        full.push("--no-cache");
        recomputed.extend(asnp(&full).1);
    }
    // A replay returns the stored record verbatim, timestamp included.
    assert_eq!(replayed, first);
    let strip = |v: &[Value]| v.iter().cloned().map(strip_timestamp).collect::<Vec<_>>();
    assert_eq!(strip(&recomputed), strip(&first));
    // Only the --no-cache runs appended.
    let lines_after = std::fs::read_to_string(&path).unwrap().lines().count();
    assert_eq!(lines_after, 2 * first.len());
}

#[test]
fn store_keys_ignore_parameter_order() {
    let a: Value = serde_json::from_str(r#"{"d":3,"p":5,"family":"full"}"#).unwrap();
    let b: Value = serde_json::from_str(r#"{"family":"full","p":5,"d":3}"#).unwrap();
    assert_eq!(cache_key(Kind::Gnp, &a), cache_key(Kind::Gnp, &b));
    assert_ne!(cache_key(Kind::Gnp, &a), cache_key(Kind::Lfun, &a));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.jsonl");
    let e = Experiment::Gnp { d: 3, p: 5, family: Family::Full };
    let mut store = RecordStore::open(&path).unwrap();
    let (rec, hit) = store.get_or_run(e.kind(), e.params(), true, || e.run()).unwrap();
    assert!(!hit);
    let (again, hit) = store.get_or_run(e.kind(), e.params(), true, || unreachable!()).unwrap();
    assert!(hit);
    assert_eq!(rec, again);
    let reopened = RecordStore::open(&path).unwrap();
    let stored: &ExperimentRecord = reopened.lookup(e.kind(), &e.params()).unwrap();
    assert_eq!(stored.payload(), rec.payload());
}

#[test]
fn plots_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("np.csv");
    let svg = dir.path().join("np.svg");
    let (code, recs, _) = asnp(&[
        "gnp", "--d", "4", "--p", "7", "--csv", csv.to_str().unwrap(), "--svg", svg.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.contains("# HP") && text.contains("x,y_num,y_den"));
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    let np = polygon_from_json(&recs[0]["result"]["polygon"]).unwrap();
    assert_eq!(np.to_json(), recs[0]["result"]["polygon"]);
}

#[test]
fn parsers() {
    assert_eq!(parse_p_range("10..20").unwrap(), vec![11, 13, 17, 19]);
    assert_eq!(parse_p_range("10-13").unwrap(), vec![11, 13]);
    assert!(parse_p_range("20..10").is_err());
    let f = parse_coeffs("1/2,-3,0").unwrap();
    assert_eq!(f.len(), 3);
    assert!(parse_coeffs("1/0").is_err());
}

fn binary(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_asnp")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn results_do_not_depend_on_threads() {
    let args = ["verify", "sameNP", "--f", "1,1,1", "--p", "31"];
    let (c1, one) = binary(&[&args[..], &["--threads", "1"]].concat());
    let (c2, many) = binary(&[&args[..], &["--threads", "3"]].concat());
    assert_eq!((c1, c2), (0, 0));
    let parse = |s: &str| strip_timestamp(serde_json::from_str(s.lines().next().unwrap()).unwrap());
    assert_eq!(parse(&one), parse(&many));
}

#[test]
fn binary_exit_codes() {
    assert_eq!(binary(&["gnp", "--d", "3", "--p", "9"]).0, 1);
    assert_eq!(binary(&["nonsense"]).0, 1);
    let (code, stdout) = binary(&["dwork", "key2", "--d", "4", "--p", "53"]);
    assert_eq!(code, 0);
    assert!(Path::new(env!("CARGO_BIN_EXE_asnp")).exists());
    assert!(stdout.contains("\"all_hold\":true"));
}

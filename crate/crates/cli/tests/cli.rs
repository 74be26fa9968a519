use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;
use sponge_cli::input::read_sponge;
use sponge_core::cubes::{approximate_cube, count_cubes};
use sponge_core::dims::dim_report;
use sponge_core::verify::{scan_cube_ratios, ScanConfig};
use sponge_core::{BernoulliMeasure, DigitTuple, Scale};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["sponge"];
    argv.extend_from_slice(args);
    let code = sponge_cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> Value {
    let (code, out, err) = run(args);
    assert_eq!(code, 0, "{err}");
    serde_json::from_str(&out).unwrap()
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_sponge");
    let ok = Command::new(bin).args(["count", &data("worked_example.json"), "--scale", "1/4"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(ok.stderr.is_empty());
    let usage = Command::new(bin).args(["count", &data("worked_example.json")]).output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
    assert!(usage.stdout.is_empty());
    let domain = Command::new(bin).args(["tangent", &data("equal_bases.json"), "--scale", "1/16"]).output().unwrap();
    assert_eq!(domain.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&domain.stderr).contains("NonStrictBases"));
    let help = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn count_of_worked_example() {
    let v = json(&["count", &data("worked_example.json"), "--scale", "0.25"]);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["count"], "20");
    assert_eq!(v["scale"]["exact"], "1/4");
    assert_eq!(v["scale"]["rounded"], false);
    let s = read_sponge(data("worked_example.json").as_ref()).unwrap();
    assert_eq!(count_cubes(&s, &Scale::from_ratio(1, 4).unwrap()).to_string(), "20");
}

#[test]
fn rounded_scales_are_reported() {
    let (code, out, err) = run(&["count", &data("worked_example.json"), "--scale", "0.0370370370370370370"]);
    assert_eq!(code, 0);
    assert!(err.contains("1/27"), "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["scale"]["exact"], "1/27");
    assert_eq!(v["scale"]["rounded"], true);
}

#[test]
fn key_order_is_fixed() {
    let (_, out, _) = run(&["dims", &data("worked_example.json")]);
    let keys: Vec<&str> = out.lines().filter_map(|l| l.strip_prefix("  \"")).map(|l| l.split('"').next().unwrap()).collect();
    assert_eq!(
        keys,
        [
            "schema_version",
            "command",
            "file",
            "bases",
            "assouad",
            "lower",
            "box",
            "hausdorff",
            "lower_via_zprime",
            "strictly_increasing_bases",
            "dichotomy"
        ]
    );
}

#[test]
fn outputs_are_byte_identical() {
    let args = ["scan", &data("worked_example.json"), "--samples", "200", "--seed", "11", "--depth", "30"];
    assert_eq!(run(&args).1, run(&args).1);
    let args = ["doubling", &data("no_doubling_carpet.json"), "--max-depth", "6"];
    assert_eq!(run(&args).1, run(&args).1);
}

#[test]
fn commands_match_library_calls() {
    let s = read_sponge(data("worked_example.json").as_ref()).unwrap();
    let v = json(&["dims", &data("worked_example.json")]);
    let r = dim_report(&s);
    assert_eq!(v["assouad"].as_f64(), r.assouad);
    assert_eq!(v["hausdorff"].as_f64(), Some(r.hausdorff));

    let word = "0,0,0;0,0,3;1,2,3;1,1,0;0,1,2";
    let v = json(&["cube-measure", &data("worked_example.json"), "--word", word, "--scale", "1/9"]);
    let w: Vec<DigitTuple> = sponge_cli::input::parse_word(word).unwrap();
    let r = Scale::from_ratio(1, 9).unwrap();
    let m = BernoulliMeasure::coordinate_uniform(&s);
    let expected = m.approximate_cube_measure(&approximate_cube(&s, &w, &r).unwrap()).unwrap();
    assert_eq!(v["measure"]["exact"], expected.exact.unwrap().to_string());

    let v = json(&["scan", &data("worked_example.json"), "--samples", "100", "--seed", "4", "--depth", "20"]);
    let report = scan_cube_ratios(&s, &m, &ScanConfig { samples: 100, seed: 4, depth: 20, record: false }).unwrap();
    assert_eq!(v["worst_upper_slack"].as_f64(), Some(report.worst_upper_slack));
    assert_eq!(v["violation_count"], report.violations.len());
}

#[test]
fn custom_measure_file() {
    let v = json(&[
        "cube-measure",
        &data("no_doubling_carpet.json"),
        "--word",
        "0,1;1,1",
        "--scale",
        "1/4",
        "--measure",
        &data("no_doubling_weights.json"),
    ]);
    // k = (2, 1): first track 0,1 and second track 1
    assert_eq!(v["measure"]["exact"], "1/4");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"0,1\": \"1/2\",\n  \"1,2\": \"1/4\",\n  \"1,3\": \"1/4\"\n}").unwrap();
    let (code, _, err) = run(&["weights", &data("no_doubling_carpet.json")]);
    assert_eq!(code, 0, "{err}");
    let (code, _, err) = run(&["scan", &data("no_doubling_carpet.json"), "--measure", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains(":3:3: DigitNotInSponge"), "{err}");
}

#[test]
fn malformed_sponge_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.json");
    std::fs::write(&p, "{\"bases\": [2, 3],\n \"digits\": [[0, 0], [1, 3]]}").unwrap();
    let (code, _, err) = run(&["validate", p.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains(":2:25: DigitOutOfRange"), "{err}");
    std::fs::write(&p, "{\"bases\": [2, 3], \"digits\": [[0, 0], [1, 1]], \"extra\": 1}").unwrap();
    let (code, _, err) = run(&["validate", p.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("ParseError"), "{err}");
    std::fs::write(&p, "{\"bases\": [3, 2], \"digits\": [[0, 0], [1, 1]]}").unwrap();
    let (_, _, err) = run(&["validate", p.to_str().unwrap()]);
    assert!(err.contains("DecreasingBases"), "{err}");
}

#[test]
fn validate_summary() {
    let v = json(&["validate", &data("vssc_carpet.json")]);
    assert_eq!(v["valid"], true);
    assert_eq!(v["vssc"], true);
    assert_eq!(v["projection_sizes"], serde_json::json!([2, 2]));
    let v = json(&["validate", &data("worked_example.json")]);
    assert_eq!(v["vssc"], false);
    assert_eq!(v["uniform_fibres"], false);
}

#[test]
fn render_files() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("c.svg");
    let v = json(&["render", &data("no_doubling_carpet.json"), "--level", "3", "--out", svg.to_str().unwrap()]);
    assert_eq!(v["boxes"], 27);
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") && text.contains("viewBox=\"0 0 1 1\""));
    assert_eq!(text.matches("<rect").count(), 27);
    let csv = dir.path().join("w.csv");
    json(&["render", &data("worked_example.json"), "--level", "2", "--out", csv.to_str().unwrap()]);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 101);
    assert!(text.starts_with("set,lo_1,hi_1,lo_2,hi_2,lo_3,hi_3"));
    let (code, _, _) = run(&["render", &data("worked_example.json"), "--level", "2", "--out", svg.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn tangent_boxes_and_witnesses() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let v = json(&[
        "tangent",
        &data("worked_example.json"),
        "--scale",
        "1/64",
        "--level",
        "2",
        "--witness",
        "1,1,1;1,2,2",
        "--emit-boxes",
        out.to_str().unwrap(),
    ]);
    assert_eq!(v["hat_factors"], serde_json::json!([[0, 1], [0, 1, 2], [0, 2, 3]]));
    assert_eq!(v["within_bound"], true);
    let rows = std::fs::read_to_string(&out).unwrap().lines().count() - 1;
    assert_eq!(rows as u64, v["image_cells"].as_u64().unwrap() + v["hat_cells"].as_u64().unwrap());
}

#[test]
fn scan_csv_dump() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let v = json(&["scan", &data("worked_example.json"), "--samples", "50", "--depth", "12", "--csv", out.to_str().unwrap()]);
    assert_eq!(v["clean"], true);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 51);
    assert!(text.starts_with("word,r,R,ratio,ratio_high,lower_bound,upper_bound"));
}

#[test]
fn doubling_flags() {
    let (code, _, _) = run(&["doubling", &data("vssc_carpet.json"), "--neighbourhood", "diagonal"]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["doubling", &data("vssc_carpet.json"), "--grid", "0.3"]);
    assert_eq!(code, 2);
    let v = json(&["doubling", &data("vssc_carpet.json"), "--neighbourhood", "near:2", "--max-depth", "8"]);
    assert_eq!(v["verdict"]["kind"], "DoublingUpToDepth");
    assert_eq!(v["neighbourhood"], "near:2");
}

#[test]
fn family_rows() {
    let (code, out, _) = run(&["family-lg", "--min", "0.1", "--max", "0.5", "--step", "0.1"]);
    assert_eq!(code, 0);
    let lambdas: Vec<&str> = out.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(lambdas, ["0.1", "0.2", "0.3", "0.4", "0.5"]);
    let (code, _, err) = run(&["family-lg", "--min", "0.4", "--max", "0.6", "--step", "0.1"]);
    assert_eq!(code, 1);
    assert!(err.contains("LambdaOutOfRange"));
}

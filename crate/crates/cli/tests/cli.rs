use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn mlecone(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlecone")).args(args).env_remove("MLECONE_LONG").output().expect("spawn mlecone")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn write_temp(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mlecone-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

const TWO_WAY: &str = "[12][13][23]";

#[test]
fn antipodal_table_has_no_mle() {
    let t = write_temp("anti.json", r#"{"levels":[2,2,2],"counts":[0,1,1,1,1,1,1,0]}"#);
    let out = mlecone(&["check", "--model", TWO_WAY, "--table", t.to_str().unwrap(), "--method", "all"]);
    assert_eq!(out.status.code(), Some(3));
    let v = json_of(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["exists"], false);
    assert_eq!(v["agreement"], true);
    assert_eq!(v["facial_set"], serde_json::json!([[1, 1, 1], [2, 2, 2]]));
    assert_eq!(v["methods"].as_array().unwrap().len(), 4);
}

#[test]
fn positive_table_has_mle() {
    let t = write_temp("pos.csv", "1,1,1,1\n1,1,2,2\n1,2,1,3\n1,2,2,4\n2,1,1,5\n2,1,2,6\n2,2,1,7\n2,2,2,8\n");
    let out = mlecone(&["check", "--model", TWO_WAY, "--table", t.to_str().unwrap(), "--levels", "2,2,2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["exists"], true);
    assert!(v["facial_set"].as_array().unwrap().is_empty());
}

#[test]
fn exit_codes_for_errors() {
    let t = write_temp("ok.json", r#"{"levels":[2,2,2],"counts":[1,1,1,1,1,1,1,1]}"#);
    let path = t.to_str().unwrap();
    assert_eq!(mlecone(&["check", "--model", "[12", "--table", path]).status.code(), Some(1));
    assert_eq!(mlecone(&["check", "--model", TWO_WAY, "--table", path, "--method", "simplex"]).status.code(), Some(1));
    assert_eq!(mlecone(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(mlecone(&["check", "--model", TWO_WAY, "--table", "/nonexistent/t.json"]).status.code(), Some(2));
    let bad = write_temp("bad.json", r#"{"levels":[2,2],"counts":[1,2,3]}"#);
    assert_eq!(mlecone(&["check", "--model", "[12]", "--table", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(mlecone(&["--budget-rays", "10", "facets", "--levels", "3,3,3"]).status.code(), Some(2));
}

#[test]
fn triangulate_reports_width() {
    let v = json_of(&mlecone(&["triangulate", "--model", "[12][23][34][45][15]"]));
    assert_eq!(v["width"], 2);
    assert_eq!(v["cliques"].as_array().unwrap().len(), 3);
    let v = json_of(&mlecone(&["triangulate", "--model", TWO_WAY]));
    assert_eq!(v["width"], 2);
    assert_eq!(v["cliques"].as_array().unwrap().len(), 1);
    let v = json_of(&mlecone(&["triangulate", "--model", "[12][13]"]));
    assert_eq!(v["width"], 1);
}

#[test]
fn facets_of_binary_cube() {
    let out = mlecone(&["facets", "--levels", "2,2,2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["facet_count"], 16);
    assert_eq!(v["extreme_rays"], 8);
    assert_eq!(v["orbits"].as_array().unwrap().len(), 4);
    assert_eq!(v["facets"].as_array().unwrap().len(), 16);
}

#[test]
fn table1_row_with_lower_bound() {
    let v = json_of(&mlecone(&["facets", "--levels", "3,3,4", "--table1", "--check-lower-bound"]));
    assert_eq!(v["dim"], 24);
    assert_eq!(v["extreme_rays"], 36);
    assert_eq!(v["facets"], 717);
    assert_eq!(v["orbits"], 10);
    assert_eq!(v["collapsing"], serde_json::json!([3, 3, 3]));
    assert_eq!(v["lower_bound"]["holds"], true);
    assert_eq!(v["lower_bound"]["bound"], "285");
}

#[test]
fn collapse_report_lists_every_orbit() {
    let v = json_of(&mlecone(&["collapse-report", "--levels", "2,3,3"]));
    let orbits = v["orbits"].as_array().unwrap();
    assert!(!orbits.is_empty());
    assert!(orbits.iter().all(|o| o["provenance"]["kind"].is_string()));
    assert_eq!(v["non_collapsible"], 0);
}

#[test]
fn dumps_matrix_and_lp() {
    let t = write_temp("cyc.json", r#"{"levels":[2,2,2,2,2],"counts":[1,0,1,1,0,1,1,1,1,1,0,1,1,1,1,0,1,1,1,1,1,0,1,1,1,1,1,1,0,1,1,1]}"#);
    let m = write_temp("a.mtx", "");
    let lp = write_temp("a.lp", "");
    let out = mlecone(&[
        "check",
        "--model",
        "[12][23][34][45][15]",
        "--table",
        t.to_str().unwrap(),
        "--method",
        "decomposed",
        "--dump-matrix",
        m.to_str().unwrap(),
        "--dump-lp",
        lp.to_str().unwrap(),
    ]);
    assert!(matches!(out.status.code(), Some(0) | Some(3)), "{}", String::from_utf8_lossy(&out.stderr));
    let matrix = std::fs::read_to_string(&m).unwrap();
    let header: Vec<usize> = matrix.lines().next().unwrap().split_whitespace().map(|x| x.parse().unwrap()).collect();
    assert_eq!(&header[..2], &[20, 32]);
    let lp_text = std::fs::read_to_string(&lp).unwrap();
    assert!(lp_text.contains("Maximize") || lp_text.contains("maximize"));
}

#[test]
fn human_output() {
    let out = mlecone(&["--human", "facets", "--levels", "2,2,2"]);
    let s = String::from_utf8_lossy(&out.stdout);
    assert!(s.contains("facets 16"), "{s}");
}

#[test]
fn all_ones_table_exits_zero() {
    let t = write_temp("ones.json", r#"{"levels":[2,2,2],"counts":[1,1,1,1,1,1,1,1]}"#);
    let out = mlecone(&["check", "--model", TWO_WAY, "--table", t.to_str().unwrap(), "--method", "all"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["agreement"], true);
}

#[test]
fn cycles_have_width_two() {
    let v = json_of(&mlecone(&["triangulate", "--model", "[12][23]"]));
    assert_eq!(v["width"], 1);
    for k in 4..=12usize {
        let model: String = (1..=k).map(|i| format!("[{},{}]", i, i % k + 1)).collect();
        let out = mlecone(&["triangulate", "--model", &model]);
        assert_eq!(out.status.code(), Some(0), "{model}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(json_of(&out)["width"], 2, "{model}");
    }
}

#[test]
fn lower_bound_for_cube_of_threes() {
    let v = json_of(&mlecone(&["facets", "--levels", "3,3,3", "--check-lower-bound"]));
    assert_eq!(v["lower_bound"]["bound"], "135");
    assert_eq!(v["lower_bound"]["facets"], 207);
    assert_eq!(v["lower_bound"]["holds"], true);
}

#[test]
fn collapse_targets() {
    for (levels, target) in [("2,3,4", [2, 2, 2]), ("3,3,5", [3, 3, 3])] {
        let v = json_of(&mlecone(&["collapse-report", "--levels", levels]));
        assert_eq!(v["minimal_collapsing"], serde_json::json!(target), "{levels}");
        assert!(v["square_reference"]["counterexamples"].as_array().unwrap().is_empty(), "{levels}");
    }
}

#[test]
fn oracle_over_budget_is_skipped_under_all() {
    let counts = vec!["1"; 27].join(",");
    let t = write_temp("ones333.json", &format!(r#"{{"levels":[3,3,3],"counts":[{counts}]}}"#));
    let out = mlecone(&["--budget-rays", "10", "check", "--model", TWO_WAY, "--table", t.to_str().unwrap(), "--method", "all"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    let oracle = v["methods"].as_array().unwrap().iter().find(|m| m["method"] == "oracle").unwrap().clone();
    assert!(oracle["exists"].is_null());
    assert!(oracle["skipped"].is_string());
    let out = mlecone(&["--budget-rays", "10", "check", "--model", TWO_WAY, "--table", t.to_str().unwrap(), "--method", "oracle"]);
    assert_eq!(out.status.code(), Some(2));
}

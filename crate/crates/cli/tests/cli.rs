use std::process::{Command, Output};

use batprop::{load_graph_file, parse_npage, parse_prefer, parse_sources};

fn batprop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_batprop"))
        .args(args)
        .output()
        .expect("run batprop")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn generate_edge_counts() {
    let dir = tempfile::tempdir().unwrap();
    for (n, m, edges) in [("8", "2", 12), ("14", "1", 13), ("20", "1", 19)] {
        let path = dir.path().join(format!("g{n}.txt"));
        let o = batprop(&["generate", "--n", n, "--m", m, "--seed", "3", "--out", path.to_str().unwrap()]);
        assert!(o.status.success());
        assert!(stdout(&o).contains(&format!("{edges} edges")));
        assert!(stdout(&o).contains("degree histogram"));
        let g = load_graph_file(&path).unwrap();
        assert_eq!(g.edge_count(), edges);
        assert!(g.is_connected());
    }
}

#[test]
fn generate_is_deterministic_and_json_loads() {
    let a = batprop(&["generate", "--n", "12", "--m", "2", "--seed", "9"]);
    let b = batprop(&["generate", "--n", "12", "--m", "2", "--seed", "9"]);
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("# barabasi-albert n=12 m=2"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    let o = batprop(&["generate", "--n", "12", "--m", "2", "--seed", "9", "--format", "json", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(load_graph_file(&path).unwrap().edge_count(), 20);
}

#[test]
fn rank_bridge_fixture() {
    let o = batprop(&["rank", "--fixture", "fig6"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("node,deg,neighbors,states,pr,pr_max\n"));
    assert!(text.contains("1,3,{3 2 0},8,0.295213,0.704787"));
    assert!(text.contains("0,2,{2 1},4,0.204787,0.590426"));
}

#[test]
fn rank_json_with_states_and_preference() {
    let o = batprop(&["rank", "--fixture", "fig7", "--prefer", "3=1", "--states", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["nodes"].as_array().unwrap().len(), 8);
    let ppr3 = v["nodes"][3]["ppr"].as_f64().unwrap();
    assert!((ppr3 - 0.3438).abs() < 5e-5);
    assert_eq!(v["state_tables"][3]["states"].as_array().unwrap().len(), 64);
    assert!(v["personalized_state_tables"].is_array());
}

#[test]
fn spread_cases_csv() {
    let o = batprop(&["spread", "--fixture", "fig7", "--cases", "1,2", "--npage", "1..8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("0,1.0000,0.9204,0.9071,0.8923,0.8681,0.8163,0.6992,0.4056"));
    assert!(text.contains("0,1.0000,0.9433,0.9345"));
    assert!(text.contains("3,0.6367,0.5633,-0.0734,1→2"));
}

#[test]
fn spread_output_is_reproducible_across_jobs() {
    let a = batprop(&["spread", "--fixture", "fig6", "--format", "json", "--jobs", "1"]);
    let b = batprop(&["spread", "--fixture", "fig6", "--format", "json", "--jobs", "3"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn spread_traces() {
    let o = batprop(&["spread", "--fixture", "fig6", "--sources", "0", "--npage", "3", "--traces", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let traces = v["traces"][0]["traces"].as_array().unwrap();
    assert!(traces.iter().any(|t| t == "(3/0)"));
}

#[test]
fn verify_random_graphs() {
    let o = batprop(&["verify", "--graphs", "6", "--max-n", "6", "--seed", "1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "6/6 graphs: oracle match, sums ok, monotone ok");
}

#[test]
fn verify_fixture_and_fault() {
    let ok = batprop(&["verify", "--fixture", "fig6"]);
    assert!(ok.status.success());
    assert!(stdout(&ok).contains("1/1 graphs"));

    let bad = batprop(&["verify", "--fixture", "fig6", "--inject-fault"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("state-probability-sum"));
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["spread", "--fixture", "nope"][..],
        &["spread", "--fixture", "fig6", "--npage", "0..9"],
        &["rank", "--fixture", "fig6", "--prefer", "7=1"],
        &["rank", "--fixture", "fig6", "--damping", "1.5"],
        &["generate", "--n", "3", "--m", "5"],
        &["rank"],
        &["bogus"],
    ] {
        let o = batprop(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn bad_edge_list_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "0 1\n1 1\n").unwrap();
    let o = batprop(&["rank", "--graph", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn argument_parsers() {
    assert_eq!(parse_npage("2..4", 8).unwrap(), vec![2, 3, 4]);
    assert_eq!(parse_npage("2..=4", 8).unwrap(), vec![2, 3, 4]);
    assert_eq!(parse_npage("1,8", 8).unwrap(), vec![1, 8]);
    assert!(parse_npage("5..9", 8).is_err());
    assert_eq!(parse_sources("all", 3).unwrap(), vec![0, 1, 2]);
    assert_eq!(parse_sources("2,0", 3).unwrap(), vec![2, 0]);
    assert!(parse_sources("3", 3).is_err());
    assert_eq!(parse_prefer("1=0.5, 2=1", 3).unwrap(), vec![0.0, 0.5, 1.0]);
    assert!(parse_prefer("1:2", 3).is_err());
}

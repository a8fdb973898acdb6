use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("{e}: {}", self.stdout))
    }
}

fn cli(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_sdn-energy"))
        .args(args)
        .output()
        .unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn triangle_one_flow_report() {
    let tri = fixture("triangle.inst");
    let r = cli(&[
        "solve-traffic",
        "--instance",
        path_str(&tri),
        "--mode",
        "per-flow-link",
        "--deterministic",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let j = r.json();
    assert_eq!(j["objective"], 3.0);
    assert_eq!(j["baseline"], 4.0);
    assert_eq!(j["savings_fraction"], 0.25);
    assert_eq!(j["optimality"], "exact");
    assert_eq!(j["wall_time_ms"], Value::Null);
    assert_eq!(j["traffic"]["routes"][0]["switches"], serde_json::json!([0, 1]));
    let on: Vec<bool> = j["traffic"]["switches"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["on"].as_bool().unwrap())
        .collect();
    assert_eq!(on, [true, true, false]);
}

#[test]
fn wall_time_is_reported_without_deterministic() {
    let r = cli(&["solve-traffic", "--instance", path_str(&fixture("triangle.inst"))]);
    assert!(r.json()["wall_time_ms"].as_f64().unwrap() >= 0.0);
}

#[test]
fn tampered_solution_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let tri = fixture("triangle.inst");
    let r = cli(&["solve-traffic", "--instance", path_str(&tri), "--deterministic"]);
    let mut j = r.json();
    // switch 1 carries the flow's last hop
    j["traffic"]["switches"][1]["on"] = Value::Bool(false);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, serde_json::to_string(&j).unwrap()).unwrap();
    let v = cli(&["verify", "--instance", path_str(&tri), "--solution", path_str(&bad)]);
    assert_eq!(v.code, 1);
    let out = v.json();
    assert_eq!(out["ok"], false);
    let eqs: Vec<u64> = out["violations"]
        .as_array()
        .unwrap()
        .iter()
        .filter_map(|x| x["equation"].as_u64())
        .collect();
    assert!(eqs.contains(&5), "{eqs:?}");
}

#[test]
fn tampered_placement_and_rules_fail_verification() {
    let dir = tempfile::tempdir().unwrap();

    let inst = fixture("placement.inst");
    let mut j = cli(&["solve-placement", "--instance", path_str(&inst), "--deterministic"]).json();
    // move every VM onto PM 0
    let all: Vec<Value> = (0..5).map(Value::from).collect();
    j["placement"]["pms"][0]["vms"] = Value::Array(all);
    let bad = dir.path().join("p.json");
    std::fs::write(&bad, j.to_string()).unwrap();
    let v = cli(&["verify", "--instance", path_str(&inst), "--solution", path_str(&bad)]);
    assert_eq!(v.code, 1);
    assert!(v.stdout.contains("\"equation\": 9"));

    let inst = fixture("diamond.inst");
    let mut j = cli(&["solve-rules", "--instance", path_str(&inst), "--deterministic"]).json();
    j["rules"]["tables"][1]["flows"] = serde_json::json!([0, 1]);
    let bad = dir.path().join("r.json");
    std::fs::write(&bad, j.to_string()).unwrap();
    let v = cli(&["verify", "--instance", path_str(&inst), "--solution", path_str(&bad)]);
    assert_eq!(v.code, 1);
    assert!(v.stdout.contains("\"equation\": 17"));
}

#[test]
fn report_for_other_instance_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let r = cli(&[
        "solve-traffic",
        "--instance",
        path_str(&fixture("triangle.inst")),
        "--deterministic",
    ]);
    let sol = dir.path().join("s.json");
    std::fs::write(&sol, &r.stdout).unwrap();
    let v = cli(&[
        "verify",
        "--instance",
        path_str(&fixture("diamond.inst")),
        "--solution",
        path_str(&sol),
    ]);
    assert_eq!(v.code, 1);
    assert!(v.stdout.contains("report is for instance"));
}

#[test]
fn every_report_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[(&str, &str, &[&str])] = &[
        (
            "solve-traffic",
            "fat-tree-4-low.inst",
            &["exact", "greedy-binpack", "shortest-first", "topology-aware"],
        ),
        (
            "solve-traffic",
            "ring-6.inst",
            &[
                "exact",
                "longest-first",
                "highest-demand-first",
                "smallest-demand-first",
            ],
        ),
        ("solve-rules", "diamond.inst", &["exact", "shortest-admissible"]),
        ("solve-rules", "fat-tree-4-high.inst", &["exact", "shortest-admissible"]),
        ("solve-placement", "ring-6.inst", &["exact", "ffd", "bfd"]),
    ];
    for (cmd, file, solvers) in cases {
        let inst = fixture(file);
        for mode in ["per-flow-link", "per-active-link"] {
            for solver in *solvers {
                let r = cli(&[
                    cmd,
                    "--instance",
                    path_str(&inst),
                    "--solver",
                    solver,
                    "--mode",
                    mode,
                    "--deterministic",
                ]);
                assert_eq!(r.code, 0, "{cmd} {file} {solver}: {}", r.stderr);
                let sol = dir.path().join("sol.json");
                std::fs::write(&sol, &r.stdout).unwrap();
                let v = cli(&["verify", "--instance", path_str(&inst), "--solution", path_str(&sol)]);
                assert_eq!(v.code, 0, "{cmd} {file} {solver}: {}", v.stdout);
            }
        }
    }
}

#[test]
fn compare_single_flow_has_zero_gaps() {
    for file in ["triangle.inst"] {
        let r = cli(&["compare", "--instance", path_str(&fixture(file)), "--deterministic"]);
        assert_eq!(r.code, 0);
        let rows = r.json()["rows"].as_array().unwrap().clone();
        assert_eq!(rows.len(), 6);
        for row in &rows {
            assert_eq!(row["gap"], 0.0, "{row}");
        }
    }
    // one cross-pod flow on a fat-tree, where the topology-aware heuristic runs too
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("one.inst");
    let g = cli(&[
        "gen",
        "--topology",
        "fat-tree:4",
        "--flows",
        "1",
        "--locality",
        "cross-pod",
        "--seed",
        "3",
        "--out",
        path_str(&inst),
    ]);
    assert_eq!(g.code, 0, "{}", g.stderr);
    for mode in ["per-flow-link", "per-active-link"] {
        let r = cli(&[
            "compare",
            "--instance",
            path_str(&inst),
            "--mode",
            mode,
            "--deterministic",
        ]);
        let rows = r.json()["rows"].as_array().unwrap().clone();
        assert_eq!(rows.len(), 7);
        let names: Vec<&str> = rows.iter().map(|r| r["solver"].as_str().unwrap()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        for row in &rows {
            assert_eq!(row["gap"], 0.0, "{row}");
        }
    }
}

#[test]
fn compare_rules_shows_detour_gap() {
    let r = cli(&[
        "compare",
        "--problem",
        "rules",
        "--instance",
        path_str(&fixture("diamond.inst")),
        "--deterministic",
    ]);
    assert_eq!(r.code, 0);
    let j = r.json();
    assert_eq!(j["rows"][0]["solver"], "exact");
    assert_eq!(j["rows"][0]["objective"], 7.0);
    // baseline is two fewest-hop routes of three switches
    let s = cli(&[
        "solve-rules",
        "--instance",
        path_str(&fixture("diamond.inst")),
        "--deterministic",
    ])
    .json();
    assert_eq!(s["baseline"], 6.0);
    assert_eq!(s["savings_fraction"], 1.0 - 7.0 / 6.0);
}

#[test]
fn malformed_input_exits_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("triangle.inst")).unwrap();

    let bad = dir.path().join("bad.inst");
    std::fs::write(&bad, text.replace("1 2 10 1", "1 2 x 1")).unwrap();
    let r = cli(&["solve-traffic", "--instance", path_str(&bad)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("line 8, column 5"), "{}", r.stderr);
    assert!(r.stdout.is_empty());

    std::fs::write(&bad, &text[..text.find("FLOWS").unwrap()]).unwrap();
    let r = cli(&["solve-traffic", "--instance", path_str(&bad)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("FLOWS"), "{}", r.stderr);

    std::fs::write(&bad, text.replace("instance 1", "instance 2")).unwrap();
    let r = cli(&["solve-traffic", "--instance", path_str(&bad)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("unsupported format version 2"), "{}", r.stderr);

    // parses, but the flow names a switch that does not exist
    std::fs::write(&bad, text.replace("0 0 1 1", "0 0 9 1")).unwrap();
    assert_eq!(cli(&["solve-traffic", "--instance", path_str(&bad)]).code, 2);

    let missing = dir.path().join("missing.inst");
    assert_eq!(cli(&["solve-traffic", "--instance", path_str(&missing)]).code, 2);
    assert_eq!(
        cli(&[
            "solve-traffic",
            "--instance",
            path_str(&fixture("triangle.inst")),
            "--solver",
            "magic"
        ])
        .code,
        2
    );
    assert_eq!(
        cli(&[
            "solve-traffic",
            "--instance",
            path_str(&fixture("triangle.inst")),
            "--mode",
            "nope"
        ])
        .code,
        2
    );
    assert_eq!(
        cli(&[
            "solve-traffic",
            "--instance",
            path_str(&fixture("triangle.inst")),
            "--k-paths",
            "0"
        ])
        .code,
        2
    );
    assert_eq!(
        cli(&["solve-placement", "--instance", path_str(&fixture("triangle.inst"))]).code,
        2
    );
    assert_eq!(
        cli(&[
            "solve-traffic",
            "--instance",
            path_str(&fixture("triangle.inst")),
            "--solver",
            "topology-aware"
        ])
        .code,
        2
    );

    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "{").unwrap();
    assert_eq!(
        cli(&[
            "verify",
            "--instance",
            path_str(&fixture("triangle.inst")),
            "--solution",
            path_str(&junk)
        ])
        .code,
        2
    );
}

#[test]
fn infeasible_instance_exits_one_with_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("triangle.inst")).unwrap();
    let over = dir.path().join("over.inst");
    std::fs::write(&over, text.replace("0 0 1 1", "0 0 1 25")).unwrap();
    let r = cli(&["solve-traffic", "--instance", path_str(&over)]);
    assert_eq!(r.code, 1);
    let j = r.json();
    assert_eq!(j["status"], "infeasible");
    assert_eq!(j["certificate"]["flows"], serde_json::json!([0]));
    assert_eq!(j["certificate"]["proven"], true);

    // rules need hosts at the flow's endpoints
    let r = cli(&["solve-rules", "--instance", path_str(&fixture("triangle.inst"))]);
    assert_eq!(r.code, 1);
    assert_eq!(r.json()["certificate"]["flows"], serde_json::json!([0]));

    let p = std::fs::read_to_string(fixture("placement.inst")).unwrap();
    let big = dir.path().join("big.inst");
    std::fs::write(&big, p.replace("VM 0.6", "VM 1.5")).unwrap();
    let r = cli(&["solve-placement", "--instance", path_str(&big)]);
    assert_eq!(r.code, 1);
    assert_eq!(r.json()["certificate"]["vm"], 0);
}

#[test]
fn exhausted_budget_exits_three_with_incumbent() {
    let inst = fixture("fat-tree-4-high.inst");
    let r = cli(&[
        "solve-traffic",
        "--instance",
        path_str(&inst),
        "--mode",
        "per-active-link",
        "--budget-nodes",
        "1",
    ]);
    assert_eq!(r.code, 3, "{}", r.stdout);
    let j = r.json();
    assert_eq!(j["status"], "budget-exhausted");
    assert_eq!(j["nodes_explored"], 1);

    let r = cli(&[
        "solve-rules",
        "--instance",
        path_str(&fixture("diamond.inst")),
        "--budget-nodes",
        "3",
    ]);
    assert_eq!(r.code, 3);
    let j = r.json();
    assert_eq!(j["status"], "budget-exhausted");
    assert!(j["objective"].as_f64().is_some());
    assert!(j["rules"]["routes"].as_array().is_some());
}

#[test]
fn placement_objectives() {
    let inst = fixture("placement.inst");
    let pms = cli(&[
        "solve-placement",
        "--instance",
        path_str(&inst),
        "--objective",
        "pms",
        "--deterministic",
    ])
    .json();
    assert_eq!(pms["objective"], 2.0);
    assert_eq!(pms["baseline"], 3.0);
    let lex = cli(&["solve-placement", "--instance", path_str(&inst), "--deterministic"]).json();
    assert_eq!(lex["objective"], 2.0);
    // two PMs force VMs 0 and 4 apart: 5 + 5 over one hop
    assert_eq!(lex["placement"]["network_cost"], 10.0);
    // a third PM costs 1 and saves 0.5 * 10
    let w = cli(&[
        "solve-placement",
        "--instance",
        path_str(&inst),
        "--objective",
        "weighted:1,0.5",
        "--deterministic",
    ]);
    assert_eq!(w.json()["objective"], 3.0);
    assert_eq!(w.json()["placement"]["network_cost"], 0.0);
    assert_eq!(w.json()["params"]["objective"], "weighted:1,0.5");
    assert_eq!(
        cli(&[
            "solve-placement",
            "--instance",
            path_str(&inst),
            "--objective",
            "weighted:1"
        ])
        .code,
        2
    );
}

#[test]
fn csv_rows_per_solver() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let r = cli(&[
        "compare",
        "--instance",
        path_str(&fixture("fat-tree-4-low.inst")),
        "--mode",
        "per-active-link",
        "--csv",
        path_str(&csv),
    ]);
    assert_eq!(r.code, 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "load_factor,solver,savings_fraction");
    assert_eq!(lines.len(), 8);
    assert_eq!(lines[1], "0.05,exact,0.37037037037037035");
    assert!(lines[1..].iter().all(|l| l.starts_with("0.05,")));
}

#[test]
fn gen_writes_canonical_reproducible_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.inst");
    let args = |out: &Path| {
        vec![
            "gen".to_string(),
            "--topology".into(),
            "fat-tree:4".into(),
            "--flows".into(),
            "8".into(),
            "--rate-fraction".into(),
            "0.05".into(),
            "--locality".into(),
            "cross-pod".into(),
            "--seed".into(),
            "0".into(),
            "--out".into(),
            out.to_str().unwrap().into(),
        ]
    };
    let argv = args(&a);
    assert_eq!(cli(&argv.iter().map(String::as_str).collect::<Vec<_>>()).code, 0);
    let golden = std::fs::read(fixture("fat-tree-4-low.inst")).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), golden);

    let stdout = cli(&["gen", "--topology", "ring:5", "--flows", "2", "--seed", "9"]);
    assert_eq!(stdout.code, 0);
    assert!(stdout.stdout.starts_with("sdn-energy-instance 1\nSWITCHES 5\n"));

    assert_eq!(cli(&["gen", "--topology", "fat-tree:3"]).code, 2);
    assert_eq!(
        cli(&["gen", "--topology", "ring:5", "--flows", "1", "--locality", "cross-pod"]).code,
        2
    );
    assert_eq!(cli(&["gen", "--topology", "blob:5"]).code, 2);
    assert_eq!(cli(&["gen"]).code, 2);
}

#[test]
fn sndlib_import_needs_explicit_figures() {
    let dir = tempfile::tempdir().unwrap();
    let src = fixture("triangle.sndlib");
    let out = dir.path().join("t.inst");
    let r = cli(&[
        "gen",
        "--sndlib",
        path_str(&src),
        "--switch-watts",
        "100",
        "--link-watts",
        "5",
    ]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("--rule-capacity"));

    let r = cli(&[
        "gen",
        "--sndlib",
        path_str(&src),
        "--switch-watts",
        "100",
        "--link-watts",
        "5",
        "--rule-capacity",
        "50",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("SWITCHES 3\n0 100 50\n1 100 50\n2 100 50\nEDGES 3\n0 1 10 5\n1 2 20 5\n0 2 10 5\n"));
    assert!(text.contains("FLOWS 2\n0 0 1 2.5\n1 2 1 4\n"));
    let s = cli(&["solve-traffic", "--instance", path_str(&out), "--deterministic"]);
    assert_eq!(s.code, 0);

    let broken = dir.path().join("b.sndlib");
    std::fs::write(&broken, "NODES (\n  A ( 0 0 )\n").unwrap();
    let r = cli(&[
        "gen",
        "--sndlib",
        path_str(&broken),
        "--switch-watts",
        "1",
        "--link-watts",
        "1",
        "--rule-capacity",
        "1",
    ]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("line 2"), "{}", r.stderr);
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn eidarp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eidarp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("eidarp-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn generate_solve_check_round_trip() {
    let dir = scratch("roundtrip");
    let (inst, sol, kpi) = (dir.join("i.json"), dir.join("s.json"), dir.join("k.csv"));
    let o = eidarp(&["generate", "--customers", "8", "--seed", "3", "--out", s(&inst)]);
    assert!(o.status.success(), "{o:?}");
    let o = eidarp(&[
        "solve",
        "--instance",
        s(&inst),
        "--iters",
        "20",
        "--out",
        s(&sol),
        "--kpi-csv",
        s(&kpi),
    ]);
    assert!(o.status.success(), "{o:?}");
    let o = eidarp(&["check", "--instance", s(&inst), "--solution", s(&sol)]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert!(stdout(&o).starts_with("ok: objective"));
    let rows = fs::read_to_string(&kpi).unwrap();
    assert!(rows.lines().next().unwrap().starts_with("run,seed,objective"));
    // one row per run plus the best
    assert_eq!(rows.lines().count(), 3);
    assert!(rows.lines().last().unwrap().starts_with("best,"));
}

#[test]
fn same_seed_same_answer() {
    let dir = scratch("determinism");
    let inst = dir.join("i.json");
    assert!(
        eidarp(&["generate", "--customers", "10", "--seed", "5", "--out", s(&inst)])
            .status
            .success()
    );
    let solve = || {
        stdout(&eidarp(&[
            "solve",
            "--instance",
            s(&inst),
            "--iters",
            "25",
            "--seed",
            "2",
        ]))
    };
    let first = solve();
    assert!(first.contains("\"objective\""));
    assert_eq!(first, solve());
}

#[test]
fn tampered_solution_fails_the_check() {
    let dir = scratch("tampered");
    let (inst, sol) = (dir.join("i.json"), dir.join("s.json"));
    assert!(
        eidarp(&["generate", "--customers", "6", "--seed", "1", "--out", s(&inst)])
            .status
            .success()
    );
    assert!(
        eidarp(&["solve", "--instance", s(&inst), "--iters", "10", "--out", s(&sol)])
            .status
            .success()
    );
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&sol).unwrap()).unwrap();
    let obj = v["objective"].as_f64().unwrap();
    v["objective"] = (obj + 50.0).into();
    fs::write(&sol, v.to_string()).unwrap();
    let o = eidarp(&["check", "--instance", s(&inst), "--solution", s(&sol)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_input_and_bad_usage_exit_codes() {
    let dir = scratch("errors");
    let junk = dir.join("junk.json");
    fs::write(&junk, "{ not json").unwrap();
    assert_eq!(eidarp(&["solve", "--instance", s(&junk)]).status.code(), Some(1));
    assert_eq!(
        eidarp(&["solve", "--instance", s(&dir.join("missing.json"))])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(eidarp(&["solve"]).status.code(), Some(2));
    assert_eq!(eidarp(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(eidarp(&["--help"]).status.code(), Some(0));
}

#[test]
fn expand_writes_csv() {
    let dir = scratch("expand");
    let inst = dir.join("i.json");
    assert!(
        eidarp(&["generate", "--customers", "4", "--layout", "one", "--out", s(&inst)])
            .status
            .success()
    );
    let o = eidarp(&["expand", "--instance", s(&inst)]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).lines().count() > 2);
}

#[test]
fn exact_oracle_agrees_with_the_search_on_a_tiny_instance() {
    let dir = scratch("oracle");
    let (inst, exact) = (dir.join("i.json"), dir.join("x.json"));
    let o = eidarp(&[
        "generate",
        "--customers",
        "2",
        "--fleet",
        "1",
        "--layout",
        "none",
        "--seed",
        "4",
        "--out",
        s(&inst),
    ]);
    assert!(o.status.success(), "{o:?}");
    let o = eidarp(&["oracle", "--instance", s(&inst), "--exact", "--out", s(&exact)]);
    assert!(o.status.success(), "{o:?}");
    let o = eidarp(&["oracle", "--instance", s(&inst), "--verify", s(&exact)]);
    assert!(o.status.success(), "{o:?}");
    let lns: serde_json::Value = serde_json::from_str(&stdout(&eidarp(&[
        "solve",
        "--instance",
        s(&inst),
        "--iters",
        "60",
        "--runs",
        "3",
    ])))
    .unwrap();
    let ex: serde_json::Value = serde_json::from_str(&fs::read_to_string(&exact).unwrap()).unwrap();
    let (a, b) = (lns["objective"].as_f64().unwrap(), ex["objective"].as_f64().unwrap());
    assert!((a - b).abs() < 1e-6, "search {a}, exact {b}");
}

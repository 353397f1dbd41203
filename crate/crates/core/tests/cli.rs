use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stopgame"))
}

fn game(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("games")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn solve_sim_on_matching() {
    let o = run(&["solve-sim", &game("matching.json")]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("values: 0.5 -0.5\n"));
    assert!(text.contains("gaps: 0 0\n"));
    assert!(text.ends_with("status: PASS\n"));
}

#[test]
fn solve_seq_reports_assembly() {
    let o = run(&["solve-seq", &game("matching.json")]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("values: 0 0\n"));
    assert!(text.contains("assembly: threshold\n"));

    let o = run(&["solve-seq", &game("threshold-gap.json")]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("values: 2 1\n"));
    assert!(text.contains("assembly: backward induction\nthreshold gaps: 1 0\n"));
}

#[test]
fn saved_profile_verifies() {
    let p = scratch("seq-profile.json");
    let p = p.to_str().unwrap();
    let g = game("threshold-gap.json");
    assert_eq!(run(&["solve-seq", &g, "--save-profile", p]).status.code(), Some(0));
    let o = run(&["verify", &g, "--profile", p, "--mode", "seq"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("values: 2 1\n"));

    let p = scratch("sim-profile.json");
    let p = p.to_str().unwrap();
    assert_eq!(run(&["solve-sim", &g, "--save-profile", p]).status.code(), Some(0));
    assert_eq!(
        run(&["verify", &g, "--profile", p, "--mode", "sim"]).status.code(),
        Some(0)
    );
}

#[test]
fn verify_rejects_non_equilibrium() {
    let p = scratch("both-stop.json");
    let rule = r#"{ "initial": { "stop_prob": [["r", 1.0], ["r.0", 1.0]] }, "adjust": [{ "stops": ["r.0"] }, { "stops": ["r.0"] }] }"#;
    std::fs::write(
        &p,
        format!(r#"{{ "mode": "sim", "player1": {rule}, "player2": {rule} }}"#),
    )
    .unwrap();
    let o = run(&[
        "verify",
        &game("matching.json"),
        "--profile",
        p.to_str().unwrap(),
        "--mode",
        "sim",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o);
    assert!(text.contains("gaps: 0 1\n"));
    assert!(text.ends_with("status: FAIL\n"));
}

#[test]
fn solve_zs_on_matching() {
    let zs = scratch("matching-zs.json");
    let mut file = stopgame_core::GameFile::load(Path::new(&game("matching.json"))).unwrap();
    file.payoffs.retain(|p| p.player == 1);
    std::fs::write(&zs, file.to_json()).unwrap();
    let o = run(&["solve-zs", zs.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("values: 0 0\n"));
}

#[test]
fn enumerate_counts_matching_table() {
    let o = run(&["enumerate", &game("matching.json"), "--mode", "sim"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("profiles: 4\n"));
    assert!(text.contains("pure equilibria: 0\n"));

    let o = run(&["enumerate", &game("matching.json"), "--mode", "seq", "--cap", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn gen_is_reproducible() {
    let a = scratch("gen-a.json");
    let b = scratch("gen-b.json");
    let c = scratch("gen-c.json");
    for (path, seed) in [(&a, "7"), (&b, "7"), (&c, "8")] {
        let o = run(&[
            "gen",
            "--horizon",
            "3",
            "--branching",
            "2",
            "--seed",
            seed,
            "-o",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    let (a, b, c) = (
        std::fs::read(a).unwrap(),
        std::fs::read(b).unwrap(),
        std::fs::read(c).unwrap(),
    );
    assert_eq!(a, b);
    assert_ne!(a, c);

    let o = run(&[
        "gen",
        "--horizon",
        "4",
        "--branching",
        "3",
        "--seed",
        "1",
        "--range",
        "-2,2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let file = stopgame_core::GameFile::parse(&stdout(&o)).unwrap();
    assert_eq!(file.tree.nodes.len(), 121);
}

#[test]
fn input_errors_exit_one() {
    let bad = scratch("bad-probs.json");
    std::fs::write(
        &bad,
        r#"{ "horizon": 1, "tree": { "nodes": [
            { "id": "r", "parent": null },
            { "id": "n1", "parent": "r", "prob": 0.6 },
            { "id": "n2", "parent": "r", "prob": 0.6 } ] }, "payoffs": [] }"#,
    )
    .unwrap();
    let o = run(&["solve-sim", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1.2"));

    assert_eq!(run(&["solve-seq", "/nonexistent/game.json"]).status.code(), Some(1));
    assert_eq!(run(&["verify", &game("matching.json")]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

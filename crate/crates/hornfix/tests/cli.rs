//! End-to-end tests of the command-line interface: verdicts, exit codes,
//! file round trips, and the translate-then-evaluate pipelines.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hornfix"))
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn write_temp(name: &str, contents: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("hornfix-test-{}-{name}", std::process::id()));
    std::fs::write(&path, contents).unwrap();
    path
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn eval_agap_instance_is_true_with_exit_zero() {
    let out = bin()
        .args(["eval", "--logic", "datalogr"])
        .arg(data("agap.dl"))
        .arg(data("agap-graph.st"))
        .args(["--goal", "P"])
        .output()
        .unwrap();
    assert_eq!(stdout(&out), "true\n");
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn eval_false_verdict_exits_one() {
    let graph = write_temp(
        "unreachable.st",
        "structure { size 2 const s = 0 const t = 1 rel E/2 { } rel Puni/1 { } }",
    );
    let out = bin()
        .args(["eval", "--logic", "datalogr"])
        .arg(data("agap.dl"))
        .arg(&graph)
        .args(["--goal", "P"])
        .output()
        .unwrap();
    assert_eq!(stdout(&out), "false\n");
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn eval_trace_prints_stages() {
    let out = bin()
        .args(["eval", "--logic", "datalogr", "--trace"])
        .arg(data("agap.dl"))
        .arg(data("agap-graph.st"))
        .args(["--goal", "P"])
        .output()
        .unwrap();
    let text = stdout(&out);
    assert!(text.starts_with("stage 0:"));
    assert!(text.ends_with("true\n"));
}

#[test]
fn parse_errors_exit_two_with_located_diagnostics() {
    let bad = write_temp("bad.dl", "P(x) :- forall : E(x).");
    let graph = write_temp("empty.st", "structure { size 1 rel E/1 { } }");
    let out = bin()
        .args(["eval", "--logic", "datalogr"])
        .arg(&bad)
        .arg(&graph)
        .args(["--goal", "P"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("SyntaxError"), "{err}");
    assert!(err.contains("1:"), "diagnostic should carry a position: {err}");
}

#[test]
fn check_accepts_and_rejects() {
    let out = bin().args(["check", "1", "2", "1"]).output().unwrap();
    assert_eq!(stdout(&out), "reject\n");
    assert_eq!(out.status.code(), Some(0));
    let out = bin().args(["check", "3", "1", "3"]).output().unwrap();
    assert_eq!(stdout(&out), "accept\n");
}

#[test]
fn lfp_eval_and_translate_agree() {
    let cycle = write_temp("cycle.st", "structure { size 3 rel E/2 { (0,1) (1,2) (2,0) } }");
    let direct = bin()
        .args(["eval", "--logic", "lfp"])
        .arg(data("tc.lfp"))
        .arg(&cycle)
        .output()
        .unwrap();
    assert_eq!(stdout(&direct), "true\n");

    // Translate to a program, then evaluate the program on the same input.
    let translated = bin()
        .args(["translate", "--from", "lfp", "--to", "datalogr"])
        .arg(data("tc.lfp"))
        .output()
        .unwrap();
    let text = stdout(&translated);
    let goal = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("% goal: "))
        .expect("translation names its goal")
        .to_string();
    let program = write_temp("tc-translated.dl", &text);
    let via_program = bin()
        .args(["eval", "--logic", "datalogr"])
        .arg(&program)
        .arg(&cycle)
        .args(["--goal", &goal])
        .output()
        .unwrap();
    assert_eq!(stdout(&via_program), "true\n");
}

#[test]
fn horn_translate_pipeline_negates_the_verdict() {
    let sentence = write_temp(
        "contradiction.shr",
        "exists R/1 forall x ( S(x) -> R(x) ; R(x) -> false )",
    );
    let input = write_temp("s-nonempty.st", "structure { size 2 rel S/1 { (0) } }");
    let horn = bin()
        .args(["eval", "--logic", "horn"])
        .arg(&sentence)
        .arg(&input)
        .output()
        .unwrap();
    assert_eq!(stdout(&horn), "false\n");
    assert_eq!(horn.status.code(), Some(1));

    let translated = bin()
        .args(["translate", "--from", "horn", "--to", "datalogr"])
        .arg(&sentence)
        .output()
        .unwrap();
    let text = stdout(&translated);
    let goal = text.lines().next().unwrap().strip_prefix("% goal: ").unwrap().to_string();
    let program = write_temp("contradiction.dl", &text);
    let datalog = bin()
        .args(["eval", "--logic", "datalogr"])
        .arg(&program)
        .arg(&input)
        .args(["--goal", &goal])
        .output()
        .unwrap();
    assert_eq!(stdout(&datalog), "true\n");
}

#[test]
fn horn_budget_env_var_is_honored() {
    let sentence = write_temp("wide.shr", "exists R/2 forall x ( S(x) -> R(x,x) )");
    let input = write_temp("three.st", "structure { size 3 rel S/1 { (0) } }");
    let out = bin()
        .args(["eval", "--logic", "horn"])
        .arg(&sentence)
        .arg(&input)
        .env("HORNFIX_BUDGET", "16")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}

#[test]
fn encode_decode_round_trip_via_files() {
    let original = "structure {\n  size 3\n  rel R1/1 {(0) (2)}\n  rel R2/2 {(1,1)}\n}\n";
    let input = write_temp("core.st", original);
    let encoded = bin().arg("encode").arg(&input).output().unwrap();
    assert!(encoded.status.success());
    let tree_file = write_temp("core-tree.st", &stdout(&encoded));
    let decoded = bin().arg("decode").arg(&tree_file).output().unwrap();
    assert_eq!(stdout(&decoded), original);
}

#[test]
fn pistar_prop6_and_kprime_commands() {
    let program = write_temp(
        "tree-tc.dl",
        "const root.\nT(x,y) :- E(x,y).\nT(x,y) :- E(x,z), T(z,y).\nP :- T(root,y), R1(y).\n",
    );
    let compiled = bin().arg("pistar").arg(&program).output().unwrap();
    assert!(compiled.status.success());
    assert!(stdout(&compiled).contains("T*"));

    let core = write_temp("prop6-core.st", "structure { size 2 rel R1/1 { (1) } }");
    let verify = bin()
        .arg("verify-prop6")
        .arg(&program)
        .arg(&core)
        .args(["--goal", "P"])
        .output()
        .unwrap();
    assert!(verify.status.success(), "{}", stdout(&verify));
    assert!(stdout(&verify).contains("goal:"));

    // A perfect tree with all levels marked is a member via condition 2.
    let member = write_temp(
        "member.st",
        "structure { size 3 const root = 0 rel E/2 { (0,1) (0,2) }
          rel P/1 { (0) (1) (2) } }",
    );
    let kprime = bin()
        .arg("kprime")
        .arg(&member)
        .args(["--oracle", "even"])
        .output()
        .unwrap();
    assert_eq!(stdout(&kprime), "member (condition 2)\n");

    let deep = write_temp(
        "nonmember.st",
        "structure { size 7 const root = 0
          rel E/2 { (0,1) (0,2) (1,3) (1,4) (2,5) (2,6) }
          rel P/1 { } }",
    );
    let kprime = bin()
        .arg("kprime")
        .arg(&deep)
        .args(["--oracle", "even"])
        .output()
        .unwrap();
    assert_eq!(kprime.status.code(), Some(1));
    assert!(stdout(&kprime).starts_with("not a member"));
}

#[test]
fn sigma_width_from_program() {
    let tree = write_temp(
        "tiny-tree.st",
        "structure { size 3 const root = 0 rel E/2 { (0,1) (0,2) } rel R1/1 { (1) (2) } }",
    );
    let program = write_temp("width.dl", "const root.\nP1(x) :- R1(x).\nG :- P1(root).\n");
    let out = bin()
        .arg("sigma")
        .arg(&tree)
        .args(["--width-from"])
        .arg(&program)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("rel R1*/1"));
    assert!(text.contains("rel SUCC/2"));
    assert!(text.contains("rel R_neq/3"));
}

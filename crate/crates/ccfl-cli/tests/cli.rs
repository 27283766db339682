use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name)
}

fn ccfl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccfl")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(name: &str) -> String {
    corpus(name).to_string_lossy().into_owned()
}

#[test]
fn normal_form_exits_zero() {
    let o = ccfl(&["run", &path("arith.ccfl"), "--query", "add (addOne (6+1)) (addOne 8)"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("17"));
}

#[test]
fn suspension_exits_two() {
    let o = ccfl(&["run", &path("suspend.ccfl"), "--query", "4 + x"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout(&o).lines().next(), Some("suspended"));
}

#[test]
fn bound_variable_completes() {
    let o = ccfl(&["run", &path("suspend.ccfl"), "--query", "4 + x", "--bind", "x=2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("6"));
}

#[test]
fn budget_exhaustion_exits_three() {
    let o = ccfl(&["run", &path("laziness.ccfl"), "--query", "const 1 loop", "--max-steps", "200"]);
    assert_eq!(o.status.code(), Some(3));
    let o = ccfl(&["run", &path("laziness.ccfl"), "--query", "const 1 loop", "--strategy", "outermost"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("1"));
}

#[test]
fn errors_exit_one() {
    let o = ccfl(&["run", &path("suspend.ccfl"), "--query", "4 +"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
    assert!(o.stdout.is_empty());

    let o = ccfl(&["run", &path("missing.ccfl"), "--query", "1"]);
    assert_eq!(o.status.code(), Some(1));

    let o = ccfl(&["run", &path("suspend.ccfl"), "--query", "4 + x", "--bind", "x"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn compile_diagnostics_exit_one() {
    let dir = std::env::temp_dir().join(format!("ccfl-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.ccfl");
    std::fs::write(&bad, "def f x = g x\n").unwrap();
    let o = ccfl(&["compile", &bad.to_string_lossy()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains('g'));
}

#[test]
fn compile_prints_rules() {
    let o = ccfl(&["compile", &path("arith.ccfl"), "--strategy", "outermost", "--inline-app"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("{$p, fac(X,V0), eval_} :- X =\\= 1 | {$p, V0 = X*V1, eval_}, {{fac(V2,V1)}}, {{V2 = X-1}}."));

    let o = ccfl(&["compile", &path("arith.ccfl"), "--inline-app", "--query", "fac 3"]);
    let text = stdout(&o);
    assert!(text.contains("{$p, fac(X,V0), inLinks_(_Tin1), _Tin1 = 0} :- X =\\= 1 | "));
    assert!(text.contains("inLinks_(0)"));
}

#[test]
fn lmntal_files_run() {
    let o = ccfl(&["lmntal", &path("membranes.lmn")]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("D = 3") && text.contains("E = 5"), "{text}");
}

#[test]
fn trace_and_dot_files_are_written() {
    let dir = std::env::temp_dir().join(format!("ccfl-cli-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let trace = dir.join("t.txt");
    let dot = dir.join("w.dot");
    let o = ccfl(&[
        "run",
        &path("arith.ccfl"),
        "--query",
        "fac 3",
        "--trace",
        &trace.to_string_lossy(),
        "--dot",
        &dot.to_string_lossy(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(&trace).unwrap().starts_with("#1 "));
    assert!(std::fs::read_to_string(&dot).unwrap().starts_with("digraph"));
}

use std::process::Command;

fn mlgraph(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mlgraph")).args(args).output().unwrap()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(mlgraph(&[]).status.code(), Some(1));
    assert_eq!(mlgraph(&["analyze", ".", "--mode", "fast"]).status.code(), Some(1));
    assert_eq!(mlgraph(&["--help"]).status.code(), Some(0));
}

#[test]
fn fatal_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    let out = mlgraph(&["analyze", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("mlgraph: "));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"entities\": 3}").unwrap();
    assert_eq!(mlgraph(&["diff", bad.to_str().unwrap(), bad.to_str().unwrap()]).status.code(), Some(2));
    let truth = dir.path().join("t.txt");
    std::fs::write(&truth, "a b c\n").unwrap();
    assert_eq!(mlgraph(&["eval", bad.to_str().unwrap(), truth.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn formats_and_stdout() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.jsp"), "<a href=\"b.jsp\">b</a>").unwrap();
    std::fs::write(dir.path().join("b.jsp"), "b").unwrap();
    let root = dir.path().to_str().unwrap();
    let json = mlgraph(&["analyze", root, "-q"]);
    assert!(json.status.success());
    assert!(String::from_utf8_lossy(&json.stdout).contains("\"LinksTo\""));
    let dot = mlgraph(&["analyze", root, "--format", "dot"]);
    assert!(String::from_utf8_lossy(&dot.stdout).starts_with("digraph"));
    assert!(String::from_utf8_lossy(&dot.stderr).contains("relationships"));
    let gml = mlgraph(&["analyze", root, "--format", "graphml", "-q"]);
    assert!(String::from_utf8_lossy(&gml.stdout).contains("<graphml"));
}

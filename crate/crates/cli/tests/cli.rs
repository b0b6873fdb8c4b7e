use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn nnkc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nnkc")).current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = nnkc(dir, args);
    assert!(o.status.success(), "{:?} failed: {}", args, String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn setup() -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("worked.txt"), "weights: 1.15 0.95 -1.05\nbias: -0.52\n").unwrap();
    // a ∨ b over two variables
    fs::write(dir.path().join("or.obdd"), "obdd n=2 root=3\n2 1 0 1\n3 0 2 1\n").unwrap();
    fs::write(dir.path().join("false.obdd"), "obdd n=3 root=0\n").unwrap();
    dir
}

#[test]
fn worked_neuron_compiles_and_evaluates() {
    let dir = setup();
    let d = dir.path();
    let out = ok(d, &["compile-neuron", "worked.txt", "--digits", "2", "-o", "w.obdd"]);
    assert_eq!(out, "nodes 4\n");
    assert_eq!(ok(d, &["eval", "w.obdd", "--bits", "111"]), "1\n");
    assert_eq!(ok(d, &["eval", "w.obdd", "--bits", "001"]), "0\n");
    // an image file gives the same answer
    fs::write(d.join("img.pbm"), "P1\n3 1\n1 1 1\n").unwrap();
    assert_eq!(ok(d, &["eval", "w.obdd", "img.pbm"]), "1\n");
    // reversed order compiles the same function
    ok(d, &["compile-neuron", "worked.txt", "--digits", "2", "--order", "reverse", "-o", "r.obdd"]);
    for bits in ["000", "010", "011", "101", "110", "111"] {
        assert_eq!(ok(d, &["eval", "w.obdd", "--bits", bits]), ok(d, &["eval", "r.obdd", "--bits", bits]));
    }
}

#[test]
fn robustness_subcommands() {
    let dir = setup();
    let d = dir.path();
    assert_eq!(ok(d, &["robustness", "max", "or.obdd"]), "2\n");
    assert_eq!(ok(d, &["robustness", "instance", "or.obdd", "--bits", "11"]), "2\n");
    assert_eq!(ok(d, &["robustness", "max", "false.obdd"]), "inf\n");
    let model = ok(d, &["robustness", "model", "or.obdd"]);
    assert!(model.contains("mr_over_all_inputs 5/4"), "{}", model);
    let hist = ok(d, &["robustness", "hist", "or.obdd"]);
    assert_eq!(hist, "k,count,proportion\n1,2,0.5\n2,1,0.25\n");
    fs::write(d.join("data.csv"), "0,0,0\n0,1,1\n1,0,1\n1,1,1\n").unwrap();
    assert!(ok(d, &["robustness", "average", "or.obdd", "data.csv"]).starts_with("5/4"));
}

#[test]
fn stats_of_false() {
    let dir = setup();
    let out = ok(dir.path(), &["stats", "false.obdd"]);
    assert!(out.contains("nodes 0\n") && out.contains("models 0\n"), "{}", out);
}

#[test]
fn explain_and_fool() {
    let dir = setup();
    let d = dir.path();
    let out = ok(d, &["explain", "or.obdd", "--bits", "11"]);
    assert!(out.contains("cardinality 1") && out.contains("literals x0"), "{}", out);
    fs::write(d.join("x.pbm"), "P1 2 1 1 1").unwrap();
    fs::write(d.join("fill.pbm"), "P1 2 1 0 0").unwrap();
    ok(d, &["explain", "or.obdd", "x.pbm", "--fool-fill", "fill.pbm", "--fool-out", "z.pbm"]);
    let z = fs::read_to_string(d.join("z.pbm")).unwrap();
    assert_eq!(z, "P1\n2 1\n1 0\n");
    assert_eq!(ok(d, &["eval", "or.obdd", "z.pbm"]), "1\n");
}

#[test]
fn grid_outputs() {
    let dir = setup();
    let d = dir.path();
    let m = ok(d, &["marginals", "or.obdd", "--rows", "1", "--cols", "2", "--pgm", "m.pgm"]);
    assert!(m.starts_with("var,row,col,marginal\n0,0,0,0.666"), "{}", m);
    assert!(fs::read_to_string(d.join("m.pgm")).unwrap().starts_with("P2"));
    let u = ok(d, &["unate", "or.obdd", "--cols", "2", "-o", "u.csv", "--pgm", "u.pgm"]);
    assert!(u.is_empty());
    assert_eq!(fs::read_to_string(d.join("u.csv")).unwrap(), "var,row,col,unateness\n0,0,0,pos\n1,0,1,pos\n");
    assert_eq!(nnkc(d, &["marginals", "or.obdd", "--rows", "3"]).status.code(), Some(2));
}

#[test]
fn network_compilation() {
    let dir = setup();
    let d = dir.path();
    let model = r#"{"input": {"h": 2, "w": 2}, "outputs": 1,
        "layers": [{"type": "dense_step", "weights": [[1, 1, 1, 1]], "bias": [-2]}]}"#;
    fs::write(d.join("net.json"), model).unwrap();
    ok(d, &["compile-net", "net.json", "-o", "out"]);
    let stats = ok(d, &["stats", "out/output_0.obdd"]);
    assert!(stats.contains("models 11\n"), "{}", stats);
    assert_eq!(nnkc(d, &["compile-net", "net.json", "-o", "out2", "--budget", "3"]).status.code(), Some(3));
    fs::write(
        d.join("bad.json"),
        r#"{"input": {"h": 2, "w": 2}, "outputs": 1,
        "layers": [{"type": "dense_step", "weights": [[1, 1, 1]], "bias": [-2]}]}"#,
    )
    .unwrap();
    let o = nnkc(d, &["compile-net", "bad.json", "-o", "out3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("layer 0"));
}

#[test]
fn training_and_sweep() {
    let dir = setup();
    let d = dir.path();
    ok(d, &["synth", "--features", "8", "--rows", "200", "--seed", "4", "-o", "data.csv"]);
    let out = ok(d, &["train", "data.csv", "-o", "n.txt", "--epochs", "50"]);
    assert!(out.starts_with("train accuracy"));
    assert_eq!(ok(d, &["train", "data.csv", "-o", "n2.txt", "--epochs", "50"]), out);
    assert_eq!(fs::read(d.join("n.txt")).unwrap(), fs::read(d.join("n2.txt")).unwrap());
    ok(d, &["sweep", "data.csv", "--neuron", "n.txt", "--max-digits", "2", "-o", "sweep.csv"]);
    let csv = fs::read_to_string(d.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("digits,accuracy,nodes,status\n0,"));
    let tight =
        ok(d, &["sweep", "data.csv", "--neuron", "n.txt", "--min-digits", "3", "--max-digits", "3", "--budget", "5"]);
    assert!(tight.trim_end().ends_with(",,budget"), "{}", tight);
}

#[test]
fn exit_codes() {
    let dir = setup();
    let d = dir.path();
    assert_eq!(nnkc(d, &[]).status.code(), Some(1));
    assert_eq!(nnkc(d, &["eval"]).status.code(), Some(1));
    assert_eq!(nnkc(d, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(nnkc(d, &["--help"]).status.code(), Some(0));
    let missing = nnkc(d, &["eval", "nope.obdd", "--bits", "1"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(missing.stdout.is_empty() && !missing.stderr.is_empty());
    assert_eq!(nnkc(d, &["eval", "or.obdd", "--bits", "1"]).status.code(), Some(2));
    assert_eq!(
        nnkc(d, &["compile-neuron", "worked.txt", "--digits", "2", "-o", "x.obdd", "--budget", "1"]).status.code(),
        Some(3)
    );
}

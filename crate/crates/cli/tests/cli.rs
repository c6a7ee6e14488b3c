use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn lrp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrp")).args(args).output().expect("run lrp")
}

fn program(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "programs", name].iter().collect();
    p.to_str().expect("utf-8 path").to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

#[test]
fn run_prints_measures_and_result() {
    let o = lrp(&["run", &program("id.lrp")]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("mln=1 mlnall="), "{text}");
    assert!(text.contains("result: \\y. y"), "{text}");
}

#[test]
fn compile_prints_a_machine_expression() {
    let o = lrp(&["compile", &program("id.lrp")]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "letrec x = \\y. y in x x");
}

#[test]
fn trace_writes_csv_and_tikz() {
    let dir = tempfile::tempdir().unwrap();
    let o = lrp(&["trace", &program("id.lrp")]);
    assert!(stdout(&o).starts_with("i,rule,size\n1,Init,"));
    let csv = dir.path().join("trace.csv");
    let o = lrp(&["trace", &program("id.lrp"), "--trace-out", &format!("csv:{}", csv.display())]);
    assert!(o.status.success());
    assert!(fs::read_to_string(&csv).unwrap().starts_with("i,rule,size"));
    let tex = dir.path().join("trace.tex");
    let o = lrp(&["trace", &program("id.lrp"), "--trace-out", &format!("tikz:{}", tex.display())]);
    assert!(o.status.success());
    assert!(fs::read_to_string(&tex).unwrap().contains("\\begin{tikzpicture}"));
}

#[test]
fn oracle_reports_agreement() {
    let o = lrp(&["oracle", &program("id.lrp")]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("rln=1 "), "{text}");
    assert!(text.contains("adequate: mln==rln, mspmax==spmax"), "{text}");
}

#[test]
fn oracle_reports_space_disagreement() {
    let o = lrp(&["oracle", &program("counterexample.lrp")]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("not adequate: mspmax=4 spmax=3"));
}

#[test]
fn compare_orders_measures() {
    let o = lrp(&["compare", &program("id.lrp"), &program("fold.lrp")]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("rln: left < right"), "{text}");
}

#[test]
fn bench_emits_csv_per_variant() {
    let o = lrp(&["bench", "fold", "--k", "25,50"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# foldl\nk,mln,mlnall,mspmax\n25,302,"), "{text}");
    assert!(text.contains("# foldr"));
}

#[test]
fn bench_accepts_stepped_ranges() {
    let o = lrp(&["bench", "fold", "--k", "25..75:25"]);
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("75,")).count(), 3);
}

#[test]
fn errors_map_to_exit_codes() {
    assert_eq!(lrp(&["run", &program("blackhole.lrp")]).status.code(), Some(2));
    assert_eq!(lrp(&["run", &program("fold.lrp"), "--max-steps", "10"]).status.code(), Some(3));
    assert_eq!(lrp(&["run", "/nonexistent.lrp"]).status.code(), Some(1));
    assert_eq!(lrp(&["bench", "nosuch"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.lrp");
    fs::write(&bad, "main = letrec in").unwrap();
    let o = lrp(&["run", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
}

#[test]
fn custom_library_replaces_the_builtin_one() {
    let dir = tempfile::tempdir().unwrap();
    let lib = dir.path().join("lib.lrp");
    fs::write(&lib, "twice = \\f,x. f (f x);\nnot = \\b. case b of { True -> False; False -> True };\n").unwrap();
    let main = dir.path().join("main.lrp");
    fs::write(&main, "main = twice not True\n").unwrap();
    let o = lrp(&["run", main.to_str().unwrap(), "--prelude", lib.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("result: True"));
}

#[test]
fn gc_mode_and_chain_removal_flags_keep_results() {
    let eager = stdout(&lrp(&["run", &program("fold.lrp")]));
    let never = stdout(&lrp(&["run", &program("fold.lrp"), "--gc-mode", "never", "--no-screm"]));
    let mln = |s: &str| s.split_whitespace().next().unwrap().to_owned();
    assert_eq!(mln(&eager), mln(&never));
    assert_eq!(eager.lines().last(), never.lines().last());
}

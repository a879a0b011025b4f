use std::path::Path;
use std::process::{Command, Output};

fn smc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn gen(dir: &Path, family: &str, n: &str, i: &str, hatted: bool) -> String {
    let path = dir.join(format!("{}{family}{n}{i}.json", if hatted { "hat" } else { "" }));
    let path = path.to_str().unwrap().to_string();
    let mut args = vec!["gen", "--family", family, "--n", n, "--i", i, "-o", &path];
    if hatted {
        args.push("--hatted");
    }
    let o = smc(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    path
}

#[test]
fn check_verdicts_and_truth_sets() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "A", "1", "1", false);
    let b = gen(dir.path(), "B", "1", "2", false);
    let o = smc(&["check", "--model", &a, "--formula", "<+> p1", "--world", "w0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "true");
    let o = smc(&["check", "--model", &b, "--formula", "<+> p1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "{}");
}

#[test]
fn malformed_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "A", "1", "1", false);
    let o = smc(&["check", "--model", &a, "--formula", "<+> (p1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("offset 7"));
    let o = smc(&["check", "--model", "/nonexistent.json", "--formula", "p1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = smc(&["gen", "--family", "A", "--n", "2", "--i", "9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gen_writes_the_expected_model() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen(dir.path(), "A", "2", "4", false);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["worlds"].as_array().unwrap().len(), 7);
    assert_eq!(v["name"], "A2_4");
    // byte-for-byte reproducible
    let again = smc(&["gen", "--family", "A", "--n", "2", "--i", "4"]);
    assert_eq!(stdout(&again), std::fs::read_to_string(&path).unwrap());
}

#[test]
fn points_at_infinity_are_bisimilar() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "A", "1", "1", true);
    let b = gen(dir.path(), "B", "1", "2", true);
    let o = smc(&["bisim", &a, "inf", &b, "inf"]);
    assert_eq!(stdout(&o).trim(), "bisimilar");
    let o = smc(&["bisim", &a, "w0", &b, "w0"]);
    assert_eq!(stdout(&o).trim(), "not bisimilar");
}

#[test]
fn synth_finds_the_minimal_separator() {
    let o = smc(&["synth", "--left", "A1", "--right", "B1", "--ops", "lit,dia,box,and,or", "--max-size", "6"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "min=4 witness=(p1 | <> p1)");
    let o = smc(&["synth", "--left", "A1", "--right", "B1", "--max-size", "3"]);
    assert!(stdout(&o).starts_with("none"));
}

#[test]
fn synth_reports_memory_cap_with_exit_three() {
    let o = Command::new(env!("CARGO_BIN_EXE_smc"))
        .args(["synth", "--left", "A2", "--right", "B2", "--max-size", "14", "--no-quotient"])
        .env("SMC_MEM_CAP", "1K")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn translate_modes() {
    let o = smc(&["translate", "--mode", "closure-to-mu", "--formula", "<+> p1"]);
    assert_eq!(stdout(&o).trim(), "mu v0 . p1 | <> v0");
    let o = smc(&["translate", "--mode", "expand-closure", "--formula", "[+] p1"]);
    assert_eq!(stdout(&o).trim(), "p1 & [] p1");
    let o = smc(&["translate", "--mode", "scattered", "--formula", "<*>{p1} | q"]);
    assert_eq!(stdout(&o).trim(), "F | q");
    let o = smc(&["translate", "--mode", "hat", "--formula", "<*>{T}"]);
    assert_eq!(o.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let h = gen(dir.path(), "B", "1", "1", true);
    let o = smc(&["translate", "--mode", "hat", "--formula", "<*>{T} & p1", "--model", &h]);
    assert_eq!(stdout(&o).trim(), "T & p1");
    let o = smc(&["translate", "--mode", "universal", "--formula", "E p1", "--model", &h]);
    assert_eq!(stdout(&o).trim(), "F");
}

#[test]
fn meg_closes_with_formula_size_nodes() {
    let psi2 = "(p1 | <> p1) & (p2 | <>(p2 & (p1 | <> p1)))";
    let o = smc(&["meg", "--left", "A2", "--right", "B2", "--formula", psi2]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "closed nodes=14");
    let o = smc(&["meg", "--left", "A2", "--right", "B2", "--formula", "p1", "--json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn succinctness_report_passes_for_small_levels() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("rows.csv");
    let o = smc(&[
        "experiment",
        "succinctness",
        "--n",
        "1..2",
        "--class",
        "gl,tc",
        "--language",
        "dia,dia-forall",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&report).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 9);
    assert!(lines[0].starts_with("n,family_class,language,lower_bound,outcome,k,witness"));
    assert!(lines[1].starts_with("1,gl,dia,2,ExactMin,4,p1 | <> p1,"));
    let o = smc(&["experiment", "succinctness", "--n", "4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn property_suite_is_seeded() {
    let a = smc(&["experiment", "properties", "--seed", "5", "--cases", "20"]);
    let b = smc(&["experiment", "properties", "--seed", "5", "--cases", "20"]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).lines().all(|l| l.starts_with("PASS")));
}

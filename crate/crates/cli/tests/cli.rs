use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn programs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/programs")
}

fn psys(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psys"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_reproduces_both_tables() {
    let f = fixtures();
    let o = psys(&[
        "run", "--system", path(&f.join("fig1.top")), "--variant", "dynamic",
        "--commander", "3", "--squad", "1,2,3,4,5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), fs::read_to_string(f.join("table1.tsv")).unwrap());
    assert!(String::from_utf8_lossy(&o.stderr).contains("fired at step 7"));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t2.tsv");
    let o = psys(&[
        "run", "--system", path(&f.join("fig2.top")), "--variant", "static",
        "--commander", "6", "--squad", "4,5,6,7,9,10", "--trace", path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "fired at step 25");
    assert_eq!(fs::read_to_string(out).unwrap(), fs::read_to_string(f.join("table2.tsv")).unwrap());
}

#[test]
fn run_usage_errors_and_budget() {
    let f = fixtures();
    let o = psys(&["run", "--system", path(&f.join("fig1.top")), "--variant", "static", "--squad", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = psys(&[
        "run", "--system", path(&f.join("fig2.top")), "--variant", "static",
        "--commander", "6", "--squad", "4", "--max-steps", "3",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stdout(&o).lines().count(), 5);
}

#[test]
fn oracle_prints_reference_tables() {
    let f = fixtures();
    for (top, c, table) in [("fig1.top", "3", "fig1_levels.tsv"), ("fig3.top", "1", "fig3_levels.tsv")] {
        let o = psys(&["oracle", "--system", path(&f.join(top)), "--commander", c, "--brute-force"]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(stdout(&o), fs::read_to_string(f.join(table)).unwrap());
    }
    let o = psys(&["oracle", "--system", path(&f.join("fig3.top")), "--commander", "8"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_accepts_golden_traces() {
    let f = fixtures();
    for (trace, inst) in [("table1.tsv", "table1.instance"), ("table2.tsv", "table2.instance")] {
        let o = psys(&["verify", "--trace", path(&f.join(trace)), "--instance", path(&f.join(inst)), "--strict"]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }
}

#[test]
fn verify_rejects_an_early_firing_cell() {
    let f = fixtures();
    let golden = fs::read_to_string(f.join("table2.tsv")).unwrap();
    let mut lines: Vec<String> = golden.lines().map(String::from).collect();
    let col = lines[0].split('\t').position(|h| h == "sigma4").unwrap();
    let mut row: Vec<String> = lines[25].split('\t').map(String::from).collect();
    assert!(row[col].starts_with("s8"));
    row[col] = row[col].replacen("s8", "s9", 1);
    lines[25] = row.join("\t");

    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("tampered.tsv");
    fs::write(&trace, lines.join("\n") + "\n").unwrap();
    fs::copy(f.join("fig2.top"), dir.path().join("fig2.top")).unwrap();
    fs::copy(f.join("table2.instance"), dir.path().join("table2.instance")).unwrap();

    let o = psys(&["verify", "--trace", path(&trace), "--instance", path(&dir.path().join("table2.instance"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL simultaneity: cell 4"), "{}", stdout(&o));
}

#[test]
fn verify_rejects_a_mismatched_instance() {
    let f = fixtures();
    let o = psys(&["verify", "--trace", path(&f.join("table1.tsv")), "--instance", path(&f.join("table2.instance"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn lint_and_statechart() {
    let p = programs();
    let o = psys(&["lint", path(&p.join("static.rules"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("rule 8.3 may block rule 8.4"));

    let o = psys(&["statechart", path(&p.join("static.rules"))]);
    assert_eq!(stdout(&o), fs::read_to_string(fixtures().join("static_statechart.dot")).unwrap());

    let o = psys(&["statechart", path(&p.join("dynamic.rules"))]);
    let dot = stdout(&o);
    let states = dot.lines().filter(|l| l.trim_end().ends_with("\";")).count();
    assert_eq!(states, 6, "{dot}");

    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.rules");
    fs::write(&empty, "").unwrap();
    assert_eq!(psys(&["lint", path(&empty)]).status.code(), Some(2));
    assert_eq!(psys(&["statechart", path(&empty)]).status.code(), Some(2));
}

#[test]
fn fuzz_gate_and_mutation() {
    let dir = tempfile::tempdir().unwrap();
    let replay = path(dir.path());
    let o = psys(&["fuzz", "--seed", "1", "--n", "200", "--amended", "--replay-dir", replay]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("instances: 200, runs: 400, failures: 0"));

    let rules = fs::read_to_string(programs().join("static-amended.rules")).unwrap();
    let mutated: String = rules
        .lines()
        .filter(|l| l.trim() != "s2 k -> s2")
        .map(|l| format!("{l}\n"))
        .collect();
    assert_eq!(mutated.lines().count() + 1, rules.lines().count());
    let file = dir.path().join("mutant.rules");
    fs::write(&file, mutated).unwrap();
    let o = psys(&[
        "fuzz", "--seed", "1", "--n", "200", "--amended", "--variants", "static",
        "--static-rules", path(&file), "--replay-dir", replay,
    ]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    let instance = out.lines().find_map(|l| l.strip_prefix("replay: ")).unwrap();
    assert!(Path::new(instance).exists());

    assert_eq!(psys(&["fuzz", "--n", "0"]).status.code(), Some(2));
}

use std::fs;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_frank-copula");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn output_starts_with_version_config_and_seed() {
    let o = run(&[
        "bootstrap",
        "--region",
        "north",
        "--x",
        "As",
        "--y",
        "Cl",
        "--bootstrap",
        "50",
        "--seed",
        "9",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        concat!("# frank-copula ", env!("CARGO_PKG_VERSION"))
    );
    assert!(lines[1].starts_with("# config: {"));
    let json: serde_json::Value = serde_json::from_str(&lines[1]["# config: ".len()..]).unwrap();
    assert_eq!(json["command"]["bootstrap"]["bootstrap"], 50);
    assert_eq!(lines[2], "# seed: 9");
}

#[test]
fn threads_are_not_part_of_the_config_line() {
    let a = run(&[
        "correlations",
        "--region",
        "south",
        "--x",
        "Eh",
        "--y",
        "pH",
        "--threads",
        "1",
    ]);
    let b = run(&[
        "correlations",
        "--region",
        "south",
        "--x",
        "Eh",
        "--y",
        "pH",
        "--threads",
        "2",
    ]);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn paper_format_prints_three_decimals() {
    let o = run(&[
        "correlations",
        "--region",
        "north",
        "--x",
        "As",
        "--y",
        "pH",
        "--paper-format",
    ]);
    let text = stdout(&o);
    let values = text
        .lines()
        .find(|l| !l.starts_with('#') && !l.starts_with('n'))
        .unwrap();
    for v in values.split(',').skip(1) {
        assert_eq!(v.split('.').nth(1).unwrap().len(), 3, "{v}");
    }
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(
        run(&["estimate", "--region", "north"]).status.code(),
        Some(1)
    );
    let o = run(&[
        "crit-table",
        "--n-grid",
        "30",
        "--theta-grid",
        "1",
        "--reps",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&[
        "bias-mse",
        "--n-grid",
        "15",
        "--theta-grid",
        "1",
        "--estimators",
        "XYZ",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn data_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.csv");
    let o = run(&[
        "estimate",
        "--in",
        missing.to_str().unwrap(),
        "--x",
        "a",
        "--y",
        "b",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let tiny = dir.path().join("tiny.csv");
    fs::write(&tiny, "a,b\n1,2\n2,1\n").unwrap();
    let o = run(&[
        "gof",
        "--in",
        tiny.to_str().unwrap(),
        "--x",
        "a",
        "--y",
        "b",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    let o = run(&["estimate", "--region", "north", "--x", "As", "--y", "Zn"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gof_outside_the_table_needs_simulated_critical_values() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let mut body = String::from("x,y\n");
    for i in 0..12 {
        body.push_str(&format!("{},{}\n", i, (i * 7) % 12));
    }
    fs::write(&path, &body).unwrap();
    let p = path.to_str().unwrap();
    let o = run(&["gof", "--in", p, "--x", "x", "--y", "y"]);
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let o = run(&[
        "gof",
        "--in",
        p,
        "--x",
        "x",
        "--y",
        "y",
        "--crit-reps",
        "200",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn below_detection_limit_tokens_are_substituted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    fs::write(&path, "x,y\n1,<dl\n2,3\n3,5\n4,2\n5,<dl\n6,7\n").unwrap();
    let p = path.to_str().unwrap();
    let o = run(&[
        "correlations",
        "--in",
        p,
        "--x",
        "x",
        "--y",
        "y",
        "--bdl-token",
        "<dl",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "correlations",
        "--in",
        p,
        "--x",
        "x",
        "--y",
        "y",
        "--bdl-token",
        "<dl",
        "--bdl",
        "y=0.5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn out_file_is_written_whole_or_not_at_all() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("table.csv");
    let t = target.to_str().unwrap();
    let o = run(&[
        "crit-table",
        "--n-grid",
        "20",
        "--theta-grid",
        "-1,1",
        "--reps",
        "200",
        "--out",
        t,
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = fs::read_to_string(&target).unwrap();
    assert_eq!(
        text.lines().filter(|l| !l.starts_with('#')).count(),
        1 + 2 * 2
    );

    let o = run(&[
        "crit-table",
        "--n-grid",
        "20",
        "--theta-grid",
        "-1,1",
        "--reps",
        "5",
        "--out",
        t,
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(fs::read_to_string(&target).unwrap(), text);
    let leftovers: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 1);

    let nowhere = dir.path().join("missing-dir").join("x.csv");
    let o = run(&[
        "correlations",
        "--region",
        "north",
        "--x",
        "As",
        "--y",
        "Cl",
        "--out",
        nowhere.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!nowhere.exists());
}

#[test]
fn critical_table_round_trips_through_gof() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.csv");
    let o = run(&[
        "crit-table",
        "--n-grid",
        "40,50",
        "--theta-grid",
        "-10:10:5",
        "--reps",
        "300",
        "--out",
        table.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&[
        "gof",
        "--region",
        "south",
        "--x",
        "As",
        "--y",
        "Cl",
        "--table",
        table.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("reject_sn_0.95"));
}

#[test]
fn rho_curves_cover_the_grid() {
    let o = run(&["rho-curves", "--theta-grid", "-2:2:1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().any(|r| r.starts_with("0.000000,")));
}

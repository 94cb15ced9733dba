use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robust-t"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = vec![String::new()];
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                chars.next();
                fields.last_mut().unwrap().push('"');
            }
            '"' => quoted = !quoted,
            ',' if !quoted => fields.push(String::new()),
            c => fields.last_mut().unwrap().push(c),
        }
    }
    fields
}

fn csv(args: &[&str]) -> Vec<Vec<String>> {
    stdout(args).lines().map(split_csv_line).collect()
}

fn field(rows: &[Vec<String>], row: usize, name: &str) -> String {
    let col = rows[0]
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"));
    rows[row][col].clone()
}

fn num(rows: &[Vec<String>], row: usize, name: &str) -> f64 {
    field(rows, row, name).parse().unwrap()
}

#[test]
fn cdf_examples() {
    let r = csv(&["cdf", "--model", "phiG", "--x", "1"]);
    assert_eq!(num(&r, 1, "cdf"), 0.75);
    assert_eq!(field(&r, 1, "provenance"), "exact");

    let r = csv(&["cdf", "--model", "G", "--a", "0.5", "--n", "10"]);
    assert_eq!(num(&r, 1, "tail"), 0.5);

    let r = csv(&["cdf", "--model", "S", "--a", "1", "--n", "3"]);
    assert_eq!(num(&r, 1, "tail"), 0.5);
    assert_eq!(field(&r, 1, "m"), "4");
    assert_eq!(field(&r, 1, "provenance"), "exact");

    let r = csv(&["cdf", "--model", "S", "--a", "2", "--n", "9"]);
    assert_eq!(field(&r, 1, "provenance"), "bound");
    assert!((num(&r, 1, "tail") - 1.0 / 16.0).abs() < 1e-6);

    let r = csv(&["cdf", "--model", "classic", "--x", "-1", "--n", "2"]);
    assert!((num(&r, 1, "cdf") - 0.25).abs() < 1e-6);
}

#[test]
fn cdf_requires_n() {
    let out = run(&["cdf", "--model", "G", "--x", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
    assert_eq!(
        run(&["cdf", "--model", "G", "--n", "4"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["cdf", "--model", "bogus", "--x", "1"]).status.code(),
        Some(2)
    );
}

#[test]
fn critical_examples() {
    let r = csv(&["critical", "--model", "G", "--dof", "3", "--alpha", "0.025"]);
    assert!((num(&r, 1, "x") - 3.182).abs() < 1e-3);
    let r = csv(&["critical", "--model", "G", "--dof", "2", "--alpha", "0.025"]);
    assert!((num(&r, 1, "x") - 4.303).abs() < 1e-3);
    let r = csv(&["critical", "--model", "G", "--n", "3", "--alpha", "0.025"]);
    assert!((num(&r, 1, "x") - 4.303).abs() < 1e-3);
    assert_eq!(field(&r, 1, "dof"), "2");

    let r = csv(&["critical", "--model", "S", "--n", "4", "--alpha", "0.0625"]);
    assert!((num(&r, 1, "a") - 3f64.sqrt()).abs() < 1e-5);
    let r = csv(&["critical", "--model", "S", "--n", "20", "--alpha", "0.05"]);
    assert_eq!(field(&r, 1, "provenance"), "bound");
}

#[test]
fn infeasible_level_exits_3() {
    let out = run(&["critical", "--model", "S", "--n", "3", "--alpha", "0.1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("2^-3"), "{msg}");
}

#[test]
fn quantile_examples() {
    let r = csv(&["quantile", "--model", "phiG", "--p", "0.9"]);
    assert!((num(&r, 1, "x") - 0.8 * 3f64.sqrt()).abs() < 1e-5);
    let r = csv(&["quantile", "--model", "G", "--p", "0.975", "--n", "11"]);
    assert!((num(&r, 1, "x") - 2.228).abs() < 1e-3);
    let r = csv(&["quantile", "--model", "classic", "--p", "0.975", "--n", "3"]);
    assert!((num(&r, 1, "x") - 4.303).abs() < 1e-3);
    assert_eq!(
        run(&["quantile", "--model", "phiS", "--p", "0.9"])
            .status
            .code(),
        Some(2)
    );
}

const PUBLISHED_0025: [(u32, f64); 5] = [
    (2, 4.303),
    (10, 2.228),
    (25, 2.060),
    (100, 1.984),
    (1000, 1.962),
];

#[test]
fn default_table_reproduces_reference_values() {
    let r = csv(&["table"]);
    assert_eq!(r[0], ["dof", "0.125", "0.1", "0.05", "0.025", "provenance"]);
    assert_eq!(r.len(), 28);
    for (dof, want) in PUBLISHED_0025 {
        let row = r.iter().position(|row| row[0] == dof.to_string()).unwrap();
        assert!((num(&r, row, "0.025") - want).abs() <= 1e-3, "dof {dof}");
    }
    assert!((num(&r, 1, "0.125") - 1.625).abs() <= 1e-3);
}

#[test]
fn table_is_byte_stable() {
    let args = ["table", "--dofs", "2-6,100"];
    assert_eq!(stdout(&args), stdout(&args));
}

#[test]
fn empty_range_gives_header_only() {
    assert_eq!(
        stdout(&["table", "--dofs", "5-4"]),
        "dof,0.125,0.1,0.05,0.025,provenance\n"
    );
}

#[test]
fn json_matches_csv() {
    let args = ["table", "--dofs", "2-4,500", "--alphas", "0.1,0.025"];
    let rows = csv(&args);
    let mut json_args = args.to_vec();
    json_args.extend(["--format", "json"]);
    let rec: Value = serde_json::from_str(&stdout(&json_args)).unwrap();
    assert_eq!(rec["command"], "table");
    assert_eq!(rec["provenance"], "exact");
    assert!(rec["version"].is_string());
    let outputs = rec["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), rows.len() - 1);
    for (i, obj) in outputs.iter().enumerate() {
        for label in ["0.1", "0.025"] {
            assert_eq!(obj[label].as_f64().unwrap(), num(&rows, i + 1, label));
        }
    }
}

#[test]
fn s_table_leaves_infeasible_cells_empty() {
    let r = csv(&[
        "table",
        "--model",
        "S",
        "--dofs",
        "2-3",
        "--alphas",
        "0.125,0.05",
    ]);
    assert_eq!(field(&r, 1, "0.05"), "");
    assert!(!field(&r, 2, "0.125").is_empty());
}

#[test]
fn crossings_examples() {
    let r = csv(&["crossings", "--k-max", "12"]);
    assert_eq!(r.len(), 12);
    assert!((num(&r, 1, "a_star") - 1.3136).abs() < 1e-4);
    assert!((num(&r, 1, "a_star_squared") - 1.726).abs() < 1e-3);
    assert!((num(&r, 2, "a_star") - 1.4282).abs() < 1e-4);
    assert!((num(&r, 2, "a_star_squared") - 2.040).abs() < 1e-3);
    for i in 2..r.len() {
        assert!(num(&r, i, "a_star") > num(&r, i - 1, "a_star"));
        assert!(num(&r, i, "a_star") < 3f64.sqrt());
    }
}

#[test]
fn simulate_examples() {
    let r = csv(&[
        "simulate",
        "--spec",
        "constant:1",
        "--n",
        "11",
        "--alpha",
        "0.025",
        "--model",
        "classic",
        "--seed",
        "1",
    ]);
    let se = num(&r, 1, "std_error");
    assert!((num(&r, 1, "estimate") - 0.05).abs() <= 3.0 * se);
    assert_eq!(field(&r, 1, "provenance"), "monte-carlo");

    let r = csv(&[
        "simulate",
        "--spec",
        "two-point:1,10,0.5",
        "--n",
        "11",
        "--alpha",
        "0.025",
        "--model",
        "G",
        "--seed",
        "2",
    ]);
    assert_eq!(field(&r, 1, "spec"), "two-point:1,10,0.5");
    assert!((num(&r, 1, "critical_value") - 2.228).abs() < 1e-3);
    assert!(num(&r, 1, "estimate") <= 0.05 + 3.0 * num(&r, 1, "std_error"));

    let r = csv(&[
        "simulate",
        "--spec",
        "rademacher",
        "--n",
        "4",
        "--alpha",
        "0.0625",
        "--model",
        "S",
        "--seed",
        "3",
    ]);
    assert!(num(&r, 1, "estimate") <= 0.125 + 3.0 * num(&r, 1, "std_error"));
}

#[test]
fn simulate_requires_seed_and_is_reproducible() {
    assert_eq!(
        run(&[
            "simulate",
            "--spec",
            "constant:1",
            "--n",
            "5",
            "--alpha",
            "0.05"
        ])
        .status
        .code(),
        Some(2)
    );
    let args = [
        "simulate",
        "--spec",
        "student:3",
        "--n",
        "5",
        "--alpha",
        "0.05",
        "--reps",
        "20000",
        "--seed",
        "8",
        "--format",
        "json",
    ];
    assert_eq!(stdout(&args), stdout(&args));
    assert_eq!(
        run(&[
            "simulate",
            "--spec",
            "constant:-1",
            "--n",
            "5",
            "--alpha",
            "0.05",
            "--seed",
            "1"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn output_file() {
    let dir = std::env::temp_dir().join(format!("robust-t-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("crossings.csv");
    let out = run(&[
        "crossings",
        "--k-max",
        "3",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("k,a_star,a_star_squared,provenance\n"));
    assert_eq!(text.lines().count(), 3);
    std::fs::remove_dir_all(dir).unwrap();
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_supplyshock"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn toy_inputs(dir: &TempDir) -> PathBuf {
    let input = dir.path().join("in");
    let out = run(&["generate", "--toy", "--out", s(&input)]);
    assert!(out.status.success(), "{out:?}");
    input
}

fn input_args(input: &Path) -> Vec<String> {
    vec![
        "--edges".into(),
        s(&input.join("edges.csv")).into(),
        "--firms".into(),
        s(&input.join("firms.csv")).into(),
        "--min-firms".into(),
        "0".into(),
    ]
}

fn run_with(cmd: &str, input: &Path, extra: &[&str]) -> Output {
    let mut args: Vec<String> = vec![cmd.into()];
    args.extend(input_args(input));
    args.extend(extra.iter().map(|a| a.to_string()));
    bin().args(&args).output().expect("binary runs")
}

fn matrix_entry(csv: &str, row: &str, col: &str) -> f64 {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let c = header.iter().position(|h| *h == col).unwrap();
    lines
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|f| f[0] == row)
        .map(|f| f[c].parse().unwrap())
        .unwrap()
}

#[test]
fn toy_exposure_matrix() {
    let dir = TempDir::new().unwrap();
    let input = toy_inputs(&dir);
    let out = dir.path().join("out");
    let res = run_with("exposure", &input, &["--out", s(&out)]);
    assert!(res.status.success(), "{res:?}");
    let csv = fs::read_to_string(out.join("exposure_down.csv")).unwrap();
    assert!((matrix_entry(&csv, "A", "B") - 0.375).abs() < 1e-12);
    for name in [
        "exposed_value_down.csv",
        "link_count_down.csv",
        "mean_outlinks_down.csv",
        "profile.csv",
        "run.json",
    ] {
        assert!(out.join(name).exists(), "{name}");
    }
    let run_json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(run_json["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(run_json["config"]["min_firms"], 0);
    assert_eq!(
        run_json["inputs"]["edges"]["sha256"]
            .as_str()
            .unwrap()
            .len(),
        64
    );
}

#[test]
fn json_format_matrices() {
    let dir = TempDir::new().unwrap();
    let input = toy_inputs(&dir);
    let out = dir.path().join("out");
    let res = run_with("exposure", &input, &["--out", s(&out), "--format", "json"]);
    assert!(res.status.success(), "{res:?}");
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("exposure_down.json")).unwrap()).unwrap();
    assert_eq!(m["kind"], "expected");
    assert_eq!(m["direction"], "down");
    assert_eq!(m["values"][1].as_f64().unwrap(), 0.375);
}

#[test]
fn both_directions_match_separate_runs() {
    let dir = TempDir::new().unwrap();
    let input = toy_inputs(&dir);
    let both = dir.path().join("both");
    let up = dir.path().join("up");
    let down = dir.path().join("down");
    assert!(run_with(
        "exposure",
        &input,
        &["--direction", "both", "--out", s(&both)]
    )
    .status
    .success());
    assert!(
        run_with("exposure", &input, &["--direction", "up", "--out", s(&up)])
            .status
            .success()
    );
    assert!(run_with("exposure", &input, &["--out", s(&down)])
        .status
        .success());
    for kind in ["exposure", "exposed_value", "link_count", "mean_outlinks"] {
        for (dir, label) in [(&up, "up"), (&down, "down")] {
            let name = format!("{kind}_{label}.csv");
            assert_eq!(
                fs::read(both.join(&name)).unwrap(),
                fs::read(dir.join(&name)).unwrap(),
                "{name}"
            );
        }
    }
}

#[test]
fn missing_input_is_exit_2_without_outputs() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let res = run(&[
        "exposure",
        "--edges",
        s(&dir.path().join("absent.csv")),
        "--firms",
        s(&dir.path().join("absent_firms.csv")),
        "--out",
        s(&out),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("absent.csv"));
    assert!(!out.exists());
}

#[test]
fn usage_error_is_exit_2() {
    let res = run(&["exposure", "--firms", "x.csv"]);
    assert_eq!(res.status.code(), Some(2));
    let res = run(&[
        "exposure",
        "--edges",
        "a",
        "--firms",
        "b",
        "--out",
        "c",
        "--direction",
        "sideways",
    ]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn uncovered_region_lists_labels_and_writes_nothing() {
    let dir = TempDir::new().unwrap();
    let input = toy_inputs(&dir);
    let macro_path = input.join("macro.csv");
    let text = fs::read_to_string(&macro_path).unwrap();
    let kept: Vec<&str> = text.lines().filter(|l| !l.starts_with("C,")).collect();
    fs::write(&macro_path, kept.join("\n") + "\n").unwrap();
    let out = dir.path().join("out");
    let res = run_with(
        "inequality",
        &input,
        &["--macro", s(&macro_path), "--out", s(&out)],
    );
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("regions: C"));
    assert!(!out.join("report.json").exists());
}

#[test]
fn toy_inequality_report() {
    let dir = TempDir::new().unwrap();
    let input = toy_inputs(&dir);
    let out = dir.path().join("out");
    let res = run_with(
        "inequality",
        &input,
        &[
            "--macro",
            s(&input.join("macro.csv")),
            "--out",
            s(&out),
            "--direction",
            "both",
        ],
    );
    assert!(res.status.success(), "{res:?}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    for key in ["gdp", "exposure_down", "exposure_up"] {
        let g = report["gini"][key].as_f64().unwrap();
        assert!((0.0..1.0).contains(&g), "{key} {g}");
    }
    assert!(report["group_exposure"]["matrices"]["down"].is_object());
    assert!(report.get("regressions").is_none());
    assert!(out.join("group_exposure_up.csv").exists());
}

#[test]
fn inequality_without_macro_is_exit_2() {
    let dir = TempDir::new().unwrap();
    let input = toy_inputs(&dir);
    let res = run_with("inequality", &input, &["--out", s(&dir.path().join("o"))]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn chain_cascade() {
    let dir = TempDir::new().unwrap();
    let edges = dir.path().join("edges.csv");
    let firms = dir.path().join("firms.csv");
    fs::write(&edges, "supplier_id,customer_id\na,b\nb,c\n").unwrap();
    fs::write(&firms, "firm_id,region,sector\na,X,\nb,X,\nc,Y,\n").unwrap();
    let res = run(&[
        "cascade",
        "--edges",
        s(&edges),
        "--firms",
        s(&firms),
        "--min-firms",
        "0",
        "--firm",
        "a",
    ]);
    assert!(res.status.success(), "{res:?}");
    let report: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    let down = &report["cascades"]["down"];
    for f in ["a", "b", "c"] {
        assert_eq!(down["distress"][f].as_f64().unwrap(), 1.0);
    }
    assert_eq!(down["steps"], 3);
    assert_eq!(down["debt_rank"].as_f64().unwrap(), 1.0);

    let res = run(&[
        "cascade",
        "--edges",
        s(&edges),
        "--firms",
        s(&firms),
        "--min-firms",
        "0",
        "--firm",
        "zz",
    ]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn cascade_to_file() {
    let dir = TempDir::new().unwrap();
    let input = toy_inputs(&dir);
    let out = dir.path().join("c");
    let res = run_with(
        "cascade",
        &input,
        &["--firm", "f2", "--out", s(&out), "--direction", "up"],
    );
    assert!(res.status.success(), "{res:?}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("cascade.json")).unwrap()).unwrap();
    assert_eq!(
        report["cascades"]["up"]["distress"]["f2"].as_f64().unwrap(),
        1.0
    );
}

#[test]
fn generate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let res = run(&[
            "generate",
            "--firms",
            "500",
            "--regions",
            "5",
            "--seed",
            "42",
            "--out",
            s(out),
        ]);
        assert!(res.status.success(), "{res:?}");
    }
    for name in ["edges.csv", "firms.csv", "macro.csv"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap()
        );
    }
    let res = run(&[
        "generate",
        "--firms",
        "500",
        "--regions",
        "5",
        "--seed",
        "43",
        "--out",
        s(&b),
    ]);
    assert!(res.status.success());
    assert_ne!(
        fs::read(a.join("edges.csv")).unwrap(),
        fs::read(b.join("edges.csv")).unwrap()
    );
}

#[test]
fn outputs_do_not_depend_on_workers() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("in");
    let res = run(&[
        "generate",
        "--firms",
        "2000",
        "--regions",
        "8",
        "--seed",
        "3",
        "--out",
        s(&input),
    ]);
    assert!(res.status.success());
    let mut outs = Vec::new();
    for workers in ["1", "3"] {
        let out = dir.path().join(format!("w{workers}"));
        let res = run(&[
            "inequality",
            "--edges",
            s(&input.join("edges.csv")),
            "--firms",
            s(&input.join("firms.csv")),
            "--macro",
            s(&input.join("macro.csv")),
            "--direction",
            "both",
            "--workers",
            workers,
            "--out",
            s(&out),
        ]);
        assert!(res.status.success(), "{res:?}");
        outs.push(out);
    }
    for entry in fs::read_dir(&outs[0]).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(
            fs::read(outs[0].join(&name)).unwrap(),
            fs::read(outs[1].join(&name)).unwrap()
        );
    }
}

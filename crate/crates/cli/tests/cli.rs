use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const ZACHARY_OPTIMUM: f64 = 0.419_789_612_097_304_4;

fn locale(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_locale"))
        .args(args)
        .env_remove("LOCALE_VALIDATED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn zachary() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/zachary.txt")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const BARBELL: &str = "0 1\n0 2\n1 2\n3 4\n3 5\n4 5\n2 3\n";

#[test]
fn detect_zachary_report_and_partition_agree() {
    let dir = TempDir::new().unwrap();
    let part = dir.path().join("p.txt");
    let report = dir.path().join("r.json");
    let o = locale(&[
        "detect",
        "--input",
        s(&zachary()),
        "--algo",
        "locale",
        "--k",
        "8",
        "--iterations",
        "10",
        "--output",
        s(&part),
        "--report",
        s(&report),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());

    let r: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["schema"], 1);
    assert_eq!(r["dataset"]["nodes"], 34);
    assert_eq!(r["dataset"]["edges"], 78);
    assert_eq!(r["config"]["algorithm"], "locale");
    let q = r["modularity"].as_f64().unwrap();
    assert!((q - ZACHARY_OPTIMUM).abs() < 1e-9, "{q}");
    let iterations = r["iterations"].as_array().unwrap();
    assert_eq!(iterations.len(), 10);
    for (i, it) in iterations.iter().enumerate() {
        assert_eq!(it["iteration"], i);
        assert!(it["seconds"].as_f64().unwrap() >= 0.0);
        assert!(it["modularity"].as_f64().unwrap().abs() <= 1.0);
    }
    assert!(!r["trace"].as_array().unwrap().is_empty());

    let m = locale(&[
        "modularity",
        "--input",
        s(&zachary()),
        "--partition",
        s(&part),
    ]);
    assert!(m.status.success());
    let printed: f64 = stdout(&m).trim().parse().unwrap();
    assert_eq!(stdout(&m).trim(), "0.419790");
    assert!((printed - q).abs() < 1e-6);
}

#[test]
fn partition_goes_to_stdout_by_default() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "edge.txt", "5 9\n");
    let o = locale(&["detect", "--input", &input, "--algo", "louvain"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, ["5 0", "9 0"]);
    let part = write(&dir, "p.txt", &stdout(&o));
    let m = locale(&["modularity", "--input", &input, "--partition", &part]);
    assert_eq!(stdout(&m).trim(), "0.000000");
}

#[test]
fn modularity_examples() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "edge.txt", "0 1\n");
    let together = write(&dir, "a.txt", "0 0\n1 0\n");
    let apart = write(&dir, "b.txt", "0 0\n1 1\n");
    let missing = write(&dir, "c.txt", "0 0\n");
    assert_eq!(
        stdout(&locale(&[
            "modularity",
            "--input",
            &input,
            "--partition",
            &together
        ]))
        .trim(),
        "0.000000"
    );
    assert_eq!(
        stdout(&locale(&[
            "modularity",
            "--input",
            &input,
            "--partition",
            &apart
        ]))
        .trim(),
        "-0.500000"
    );
    let o = locale(&["modularity", "--input", &input, "--partition", &missing]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("does not assign node 1"));
}

#[test]
fn exit_codes() {
    let bad_flag = locale(&["detect", "--input", s(&zachary()), "--bogus"]);
    assert_eq!(bad_flag.status.code(), Some(2));
    let bad_algo = locale(&["detect", "--input", s(&zachary()), "--algo", "kmeans"]);
    assert_eq!(bad_algo.status.code(), Some(2));
    let bad_rounds = locale(&["detect", "--input", s(&zachary()), "--inner-rounds", "3"]);
    assert_eq!(bad_rounds.status.code(), Some(2));
    let zero_k = locale(&["detect", "--input", s(&zachary()), "--k", "0"]);
    assert_eq!(zero_k.status.code(), Some(2));
    let missing = locale(&["detect", "--input", "/nonexistent/graph.txt"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("cannot open"));

    let dir = TempDir::new().unwrap();
    let malformed = write(&dir, "bad.txt", "0 1\n1 x\n");
    let o = locale(&["detect", "--input", &malformed]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn oracle_barbell_and_size_limit() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "barbell.txt", BARBELL);
    let o = locale(&["oracle", "--input", &input]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("# maximum modularity 0.357143"), "{out}");
    assert_eq!(out.lines().count(), 7);

    let o = locale(&["oracle", "--input", s(&zachary())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--max-n"));
}

#[test]
fn seeded_runs_reproduce_bit_for_bit() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str| {
        let report = dir.path().join(name);
        let o = locale(&[
            "detect",
            "--input",
            s(&zachary()),
            "--seed",
            "17",
            "--iterations",
            "3",
            "--inner-rounds",
            "full",
            "--report",
            s(&report),
        ]);
        assert!(o.status.success());
        let r: Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
        let values: Vec<u64> = r["iterations"]
            .as_array()
            .unwrap()
            .iter()
            .map(|it| it["modularity"].as_f64().unwrap().to_bits())
            .collect();
        (values, stdout(&o))
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn validated_mode_reports_no_violations() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("r.json");
    let o = locale(&[
        "detect",
        "--input",
        s(&zachary()),
        "--validated",
        "--report",
        s(&report),
    ]);
    assert!(o.status.success());
    let r: Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(r["config"]["validated"], true);
    assert!(r["validation"]["checks"].as_u64().unwrap() > 0);
    assert_eq!(r["validation"]["violations"], 0);
}

#[test]
fn weighted_input_uses_third_column() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "w.txt", "0 1 5\n1 2 1\n2 3 5\n");
    let part = write(&dir, "p.txt", "0 0\n1 0\n2 1\n3 1\n");
    let plain = locale(&["modularity", "--input", &input, "--partition", &part]);
    let weighted = locale(&[
        "modularity",
        "--input",
        &input,
        "--partition",
        &part,
        "--weighted",
    ]);
    // Unweighted: path of 3 edges split in the middle, Q = 1/6.
    assert_eq!(stdout(&plain).trim(), "0.166667");
    // Weighted: 2m = 22, inner weight 10, totals 11 and 11, Q = 10/11 - 1/2.
    assert_eq!(
        stdout(&weighted).trim(),
        format!("{:.6}", 10.0 / 11.0 - 0.5)
    );
}

fn manifest(dir: &TempDir, extra: &str) -> String {
    write(dir, "barbell.txt", BARBELL);
    let text = format!(
        "seed = 3\niterations = 2\n\n[[dataset]]\nname = \"zachary\"\npath = \"{}\"\n\n\
         [[dataset]]\nname = \"barbell\"\npath = \"barbell.txt\"\n{extra}",
        s(&zachary())
    );
    write(dir, "bench.toml", &text)
}

#[test]
fn bench_table_matches_detect() {
    let dir = TempDir::new().unwrap();
    let m = manifest(&dir, "");
    let o = locale(&["bench", "--manifest", &m, "--format", "json", "--jobs", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<Value> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 12);
    let configs: Vec<&str> = rows[..3]
        .iter()
        .map(|r| r["config"].as_str().unwrap())
        .collect();
    assert_eq!(configs, ["local moves", "2 rounds", "full update"]);
    let algos: Vec<&str> = rows[3..6]
        .iter()
        .map(|r| r["algorithm"].as_str().unwrap())
        .collect();
    assert_eq!(algos, ["louvain", "leiden", "locale"]);
    assert!(rows[5]["time_ratio_to_leiden"].as_f64().unwrap() > 0.0);

    for algo in ["louvain", "leiden", "locale"] {
        let row = rows
            .iter()
            .find(|r| {
                r["dataset"] == "zachary" && r["table"] == "multilevel" && r["algorithm"] == algo
            })
            .unwrap();
        let report = dir.path().join(format!("{algo}.json"));
        let d = locale(&[
            "detect",
            "--input",
            s(&zachary()),
            "--algo",
            algo,
            "--seed",
            "3",
            "--iterations",
            "2",
            "--report",
            s(&report),
        ]);
        assert!(d.status.success());
        let r: Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
        assert_eq!(
            row["modularity"].as_f64(),
            r["modularity"].as_f64(),
            "{algo}"
        );
    }
}

#[test]
fn bench_marks_missing_datasets() {
    let dir = TempDir::new().unwrap();
    let m = manifest(
        &dir,
        "\n[[dataset]]\nname = \"dblp\"\npath = \"absent.txt\"\n",
    );
    let o = locale(&["bench", "--manifest", &m]);
    assert_eq!(o.status.code(), Some(1));
    let mut reader = csv_rows(&stdout(&o));
    let header = reader.remove(0);
    assert_eq!(header[0], "dataset");
    let status = header.iter().position(|h| h == "status").unwrap();
    let skipped: Vec<_> = reader.iter().filter(|r| r[status] == "skipped").collect();
    assert_eq!(skipped.len(), 6);
    assert!(skipped.iter().all(|r| r[0] == "dblp"));
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(str::to_owned).collect())
        .collect()
}

#[test]
fn bench_rejects_bad_manifest() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "bad.toml", "k = 0\n");
    let o = locale(&["bench", "--manifest", &m]);
    assert_eq!(o.status.code(), Some(1));
    let m = write(&dir, "typo.toml", "datasets = 3\n");
    assert_eq!(locale(&["bench", "--manifest", &m]).status.code(), Some(1));
}

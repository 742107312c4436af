use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn svrand(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svrand"))
        .args(args)
        .env_remove("SVRAND_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(o)).expect("json report")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, contents: impl AsRef<[u8]>) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, contents).unwrap();
    p
}

/// Zero-mean samples: each value followed by its negation.
fn antisymmetric_series(pairs: usize) -> String {
    let mut out = String::new();
    let mut x = 0.3711f64;
    for _ in 0..pairs {
        x = (x * 3.9 * (1.0 - x)).clamp(1e-6, 1.0 - 1e-6);
        let v = (x - 0.5) * 17.0;
        out.push_str(&format!("{v}\n{}\n", -v));
    }
    out
}

#[test]
fn zero_mean_discretizations_one_and_two_agree() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "data.txt", antisymmetric_series(5000));
    let run = |d: &str| {
        json(&svrand(&[
            "estimate", "--format", "ascii-reals", "--discretization", d, "--combiner", "exp", "--json",
            path_str(&data),
        ]))
    };
    let (a, b) = (run("1"), run("2"));
    assert_eq!(a["profile"], b["profile"]);
    assert_eq!(a["combiners"][0]["final_epsilon"], b["combiners"][0]["final_epsilon"]);
    assert_eq!(a["input"]["n"], 10000);
}

#[test]
fn fair_simulated_raw_bytes_has_small_epsilon() {
    let dir = TempDir::new().unwrap();
    let bin = dir.path().join("qrng.bin");
    let sim = svrand(&[
        "simulate", "--kind", "iid", "--epsilon", "0", "--n", "8388608", "--seed", "5", "--out",
        path_str(&bin),
    ]);
    let meta = json(&sim);
    assert_eq!(meta["bits"], 8_388_608);
    assert_eq!(fs::metadata(&bin).unwrap().len(), 1 << 20);

    let report = json(&svrand(&["estimate", "--format", "raw-bytes", "--combiner", "exp", "--json", path_str(&bin)]));
    let eps = report["combiners"][0]["final_epsilon"].as_f64().unwrap();
    assert!(eps < 0.005, "final ε {eps}");
    assert_eq!(report["profile"]["h_max"], 22);
    assert_eq!(report["input"]["discretization"], "binary");
}

#[test]
fn lines_truncates_input() {
    let dir = TempDir::new().unwrap();
    let text: String = (0..5000).map(|i| format!("{}\n", (i as f64 * 0.37).sin())).collect();
    let data = write(&dir, "data.txt", text);
    let report = json(&svrand(&["estimate", "--lines", "1000", "--json", path_str(&data)]));
    assert_eq!(report["input"]["n"], 1000);

    let pairwise = json(&svrand(&["estimate", "--lines", "1000", "--discretization", "4", "--json", path_str(&data)]));
    assert_eq!(pairwise["input"]["n"], 999);

    let bits = write(&dir, "bits.txt", "0110".repeat(100));
    let report = json(&svrand(&["estimate", "--format", "ascii01", "--lines", "64", "--json", path_str(&bits)]));
    assert_eq!(report["input"]["n"], 64);
}

#[test]
fn threads_do_not_change_output() {
    let dir = TempDir::new().unwrap();
    let bin = dir.path().join("p.bin");
    assert!(svrand(&[
        "simulate", "--kind", "pattern", "--order", "2", "--sign-table", "9", "--epsilon", "0.1", "--n", "200000",
        "--seed", "3", "--out", path_str(&bin),
    ])
    .status
    .success());
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("duration_seconds");
        v
    };
    let one = strip(json(&svrand(&["estimate", "--format", "raw-bytes", "--threads", "1", "--json", path_str(&bin)])));
    let four = strip(json(&svrand(&["estimate", "--format", "raw-bytes", "--threads", "4", "--json", path_str(&bin)])));
    assert_eq!(one, four);

    let env_run = Command::new(env!("CARGO_BIN_EXE_svrand"))
        .args(["estimate", "--format", "raw-bytes", "--json", path_str(&bin)])
        .env("SVRAND_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(strip(json(&env_run)), one);
}

#[test]
fn table_and_csv_outputs() {
    let dir = TempDir::new().unwrap();
    let bits = write(&dir, "p.txt", "01".repeat(512));
    let table = svrand(&["estimate", "--format", "ascii01", "--combiner", "exp", "--combiner", "poly:2", path_str(&bits)]);
    assert!(table.status.success());
    let text = stdout(&table);
    assert!(text.contains("0           0.000000000000000"));
    assert!(text.contains("1           0.500000000000000"));
    assert!(!text.contains("\n2           "));
    assert!(text.contains("⋮"));
    assert!(text.contains("ε exp"));
    assert!(text.contains("ε poly:2"));

    let csv = stdout(&svrand(&["estimate", "--format", "ascii01", "--csv", path_str(&bits)]));
    assert!(csv.starts_with("kind,key,value\n"));
    assert_eq!(csv.lines().filter(|l| l.starts_with("profile,")).count(), 10);
    assert!(csv.contains("final,exp,"));
}

#[test]
fn finite_size_and_history_flags() {
    let dir = TempDir::new().unwrap();
    let bits = write(&dir, "b.txt", "0110100110010110".repeat(8));
    let report = json(&svrand(&[
        "estimate", "--format", "ascii01", "--history-max", "3", "--finite-size", "--diagnostic-max", "--json",
        path_str(&bits),
    ]));
    assert_eq!(report["profile"]["h_max"], 3);
    assert_eq!(report["profile"]["mode"], "finite-size");
    assert!(report["diagnostic_max"].is_number());

    let too_long = svrand(&["estimate", "--format", "ascii01", "--history-max", "500", path_str(&bits)]);
    assert_eq!(too_long.status.code(), Some(2));
}

#[test]
fn error_exit_codes() {
    let dir = TempDir::new().unwrap();
    let bits = write(&dir, "b.txt", "0101");
    let junk = write(&dir, "junk.txt", "abc\nnan\n");
    let bad = write(&dir, "bad.txt", "01x");

    let usage = svrand(&["estimate", "--format", "ascii01", "--discretization", "2", path_str(&bits)]);
    assert_eq!(usage.status.code(), Some(1));
    assert_eq!(svrand(&["estimate", "--combiner", "poly:0", path_str(&bits)]).status.code(), Some(1));
    assert_eq!(svrand(&["nonsense"]).status.code(), Some(1));

    let no_data = svrand(&["estimate", path_str(&junk)]);
    assert_eq!(no_data.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&no_data.stderr).contains("no data"));

    let invalid = svrand(&["estimate", "--format", "ascii01", path_str(&bad)]);
    assert_eq!(invalid.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&invalid.stderr).contains("invalid character at offset 2"));

    let missing = svrand(&["estimate", path_str(&dir.path().join("absent.txt"))]);
    assert_eq!(missing.status.code(), Some(2));

    let out = dir.path().join("x.bin");
    let no_table = svrand(&["simulate", "--kind", "pattern", "--epsilon", "0.1", "--n", "10", "--out", path_str(&out)]);
    assert_eq!(no_table.status.code(), Some(1));
    let bad_eps = svrand(&["simulate", "--kind", "iid", "--epsilon", "0.7", "--n", "10", "--out", path_str(&out)]);
    assert_eq!(bad_eps.status.code(), Some(1));

    assert_eq!(svrand(&["--help"]).status.code(), Some(0));
}

#[test]
fn selftest_passes_and_is_deterministic() {
    let a = svrand(&["selftest", "--seed", "42", "--trials", "200"]);
    let b = svrand(&["selftest", "--seed", "42", "--trials", "200"]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("PASS axioms exp h_max=16"));
    assert!(text.contains("PASS counting oracle"));
    assert!(text.contains("PASS i/o round trip"));
}

#[test]
fn selftest_reports_injected_fixture() {
    let o = svrand(&["selftest", "--trials", "100", "--inject-adversarial"]);
    assert_eq!(o.status.code(), Some(3));
    let text = stdout(&o);
    assert!(text.contains("FAIL axioms increasing-weights h_max=4: A3 violated"));
}

#[test]
fn convert_formats() {
    let dir = TempDir::new().unwrap();
    let src = write(&dir, "a.txt", "0101");
    let raw = dir.path().join("a.bin");
    let meta = json(&svrand(&["convert", "--format", "ascii01", "--to", "raw-bytes", path_str(&src), path_str(&raw)]));
    assert_eq!(meta["bits"], 4);
    // 0101 packed MSB first, zero-padded: 0101_0000.
    assert_eq!(fs::read(&raw).unwrap(), vec![0x50]);

    let back = dir.path().join("b.txt");
    assert!(svrand(&[
        "convert", "--format", "raw-bytes", "--lines", "4", "--to", "ascii01", path_str(&raw), path_str(&back),
    ])
    .status
    .success());
    assert_eq!(fs::read_to_string(&back).unwrap(), "0101");

    let reals = write(&dir, "r.txt", "1\n2\n2\n1\n5\n");
    let d4 = dir.path().join("d4.txt");
    let meta = json(&svrand(&[
        "convert", "--discretization", "4", "--to", "ascii01", path_str(&reals), path_str(&d4),
    ]));
    assert_eq!(meta["bits"], 4);
    assert_eq!(fs::read_to_string(&d4).unwrap(), "0010");
}
